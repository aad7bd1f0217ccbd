//! Controversy detection for threaded conversations from local interaction
//! motifs.
//!
//! A thread is modelled three ways: the content [`ReplyTree`], its projection
//! onto users ([`ReplyGraph`]) and the global [`FollowGraph`]. From these we
//! extract baseline structural, propagation and temporal features plus dyadic
//! and triadic motif frequencies over the reply/follow overlay, and classify
//! threads with boosted decision stumps.
//!
//! Batch work (feature extraction, stump search, cross-validation folds) runs
//! on rayon when the `parallel` feature is enabled; see [`Exec`].

pub mod baseline;
pub mod boost;
pub mod dataset;
pub mod exec;
pub mod experiment;
pub mod features;
pub mod motif;
pub mod synth;
pub mod thread;
pub mod validation;

pub use baseline::{BaselineFeatures, Diagnostics};
pub use boost::{BoostModel, BoostParams, DecisionStump, Metrics};
pub use exec::Exec;
pub use features::{FeatureMask, FeatureVector, MaskName, N_SLOTS};
pub use motif::{DyadClass, MotifFeatures, PairClass, TriadGroup};
pub use thread::{FollowGraph, Label, Post, ReplyGraph, ReplyTree, Strictness};
