//! Fixed-layout feature vectors and ablation masks.
//!
//! Slot layout (part of the CSV and model file formats):
//!
//! | slots  | content |
//! |--------|---------|
//! | 0..=3  | nodes/edges of reply tree and reply graph |
//! | 4..=5  | average degree of reply tree and reply graph |
//! | 6      | average cascade depth |
//! | 7      | maximum relative degree |
//! | 8      | average inter-reply time |
//! | 9      | fraction of replies in the first hour |
//! | 10..=16| dyad frequencies A..G |
//! | 17..=36| triad group frequencies, in [`TriadGroup::all`] order |
//! | 37     | reply triangle ratio |

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::baseline::{BaselineFeatures, Diagnostics};
use crate::motif::{MotifFeatures, TriadGroup, N_DYAD_CLASSES, N_TRIAD_GROUPS};
use crate::thread::{FollowGraph, ReplyTree};

pub const N_SLOTS: usize = 38;
pub const DYAD_START: usize = 10;
pub const TRIAD_START: usize = DYAD_START + N_DYAD_CLASSES;
pub const TRIANGLE_RATIO_SLOT: usize = TRIAD_START + N_TRIAD_GROUPS;

const BASELINE_NAMES: [&str; 10] = [
    "n_nodes_tree",
    "n_edges_tree",
    "n_nodes_reply",
    "n_edges_reply",
    "avg_degree_tree",
    "avg_degree_reply",
    "avg_cascade_depth",
    "max_relative_degree",
    "avg_inter_reply_time",
    "frac_first_hour",
];

/// Names of all 38 slots, in order.
pub fn slot_names() -> &'static [String] {
    static NAMES: OnceLock<Vec<String>> = OnceLock::new();
    NAMES.get_or_init(|| {
        let mut names: Vec<String> = BASELINE_NAMES.iter().map(|s| s.to_string()).collect();
        names.extend(
            ["A", "B", "C", "D", "E", "F", "G"]
                .iter()
                .map(|c| format!("dyad_{c}")),
        );
        names.extend(
            TriadGroup::all()
                .iter()
                .map(|g| format!("triad_{}", g.code())),
        );
        names.push("triangle_ratio".to_string());
        names
    })
}

pub fn slot_index(name: &str) -> Option<usize> {
    slot_names().iter().position(|n| n == name)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeatureVector(pub [f64; N_SLOTS]);

impl FeatureVector {
    pub fn from_parts(baseline: &BaselineFeatures, motifs: &MotifFeatures) -> Self {
        let mut v = [0.0; N_SLOTS];
        v[..DYAD_START].copy_from_slice(&baseline.to_array());
        v[DYAD_START..TRIAD_START].copy_from_slice(&motifs.dyad_freq);
        v[TRIAD_START..TRIANGLE_RATIO_SLOT].copy_from_slice(&motifs.triad_freq);
        v[TRIANGLE_RATIO_SLOT] = motifs.triangle_ratio;
        FeatureVector(v)
    }

    pub fn values(&self) -> &[f64; N_SLOTS] {
        &self.0
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.0[slot]
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, slot: usize) -> &f64 {
        &self.0[slot]
    }
}

/// Everything extracted from one thread.
#[derive(Clone, Debug, PartialEq)]
pub struct ThreadFeatures {
    pub vector: FeatureVector,
    pub baseline: BaselineFeatures,
    pub motifs: MotifFeatures,
    pub diagnostics: Diagnostics,
}

impl ThreadFeatures {
    pub fn extract(tree: &ReplyTree, fg: &FollowGraph) -> Self {
        let rg = tree.project();
        let baseline = BaselineFeatures::compute(tree, &rg);
        let motifs = MotifFeatures::compute(&rg, fg);
        ThreadFeatures {
            vector: FeatureVector::from_parts(&baseline, &motifs),
            baseline,
            motifs,
            diagnostics: Diagnostics::compute(tree, &rg),
        }
    }
}

/// Set of active feature slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", try_from = "Vec<usize>")]
pub struct FeatureMask(u64);

impl FeatureMask {
    pub const EMPTY: FeatureMask = FeatureMask(0);

    pub fn from_range(range: std::ops::Range<usize>) -> Self {
        range.fold(Self::EMPTY, |m, s| m.with(s))
    }

    pub fn from_slots(slots: &[usize]) -> Self {
        slots.iter().fold(Self::EMPTY, |m, &s| m.with(s))
    }

    pub fn with(self, slot: usize) -> Self {
        assert!(slot < N_SLOTS, "slot {slot} out of range");
        FeatureMask(self.0 | (1 << slot))
    }

    pub fn contains(self, slot: usize) -> bool {
        slot < N_SLOTS && self.0 & (1 << slot) != 0
    }

    pub fn slots(self) -> Vec<usize> {
        (0..N_SLOTS).filter(|&s| self.contains(s)).collect()
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn all() -> Self {
        Self::from_range(0..N_SLOTS)
    }
}

impl From<FeatureMask> for Vec<usize> {
    fn from(m: FeatureMask) -> Self {
        m.slots()
    }
}

impl TryFrom<Vec<usize>> for FeatureMask {
    type Error = String;

    fn try_from(slots: Vec<usize>) -> Result<Self, Self::Error> {
        if let Some(bad) = slots.iter().find(|&&s| s >= N_SLOTS) {
            return Err(format!("slot {bad} out of range"));
        }
        Ok(Self::from_slots(&slots))
    }
}

/// The named feature blocks compared in the ablation experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MaskName {
    Baseline,
    BaselineDyadic,
    BaselineDyadicTriadic,
    DyadicOnly,
    All,
}

impl MaskName {
    /// The four ablation blocks, in table order.
    pub const ABLATION: [MaskName; 4] = [
        MaskName::Baseline,
        MaskName::BaselineDyadic,
        MaskName::BaselineDyadicTriadic,
        MaskName::DyadicOnly,
    ];

    pub fn mask(self) -> FeatureMask {
        match self {
            MaskName::Baseline => FeatureMask::from_range(0..DYAD_START),
            MaskName::BaselineDyadic => FeatureMask::from_range(0..TRIAD_START),
            MaskName::BaselineDyadicTriadic | MaskName::All => FeatureMask::all(),
            MaskName::DyadicOnly => FeatureMask::from_range(DYAD_START..TRIAD_START),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MaskName::Baseline => "baseline",
            MaskName::BaselineDyadic => "baseline+dyadic",
            MaskName::BaselineDyadicTriadic => "baseline+dyadic+triadic",
            MaskName::DyadicOnly => "dyadic-only",
            MaskName::All => "all",
        }
    }

    /// Table heading for this block.
    pub fn title(self) -> &'static str {
        match self {
            MaskName::Baseline => "Baseline",
            MaskName::BaselineDyadic => "Baseline + dyadic motifs",
            MaskName::BaselineDyadicTriadic => "Baseline + dyadic and triadic motifs",
            MaskName::DyadicOnly => "Dyadic motifs only",
            MaskName::All => "All features",
        }
    }
}

impl fmt::Display for MaskName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MaskName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            MaskName::Baseline,
            MaskName::BaselineDyadic,
            MaskName::BaselineDyadicTriadic,
            MaskName::DyadicOnly,
            MaskName::All,
        ]
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| format!("unknown mask `{s}`"))
    }
}
