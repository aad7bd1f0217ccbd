//! Command-line flags, the optional TOML config file and their merge.
//!
//! Precedence is flag, then `CONTROVERSY_*` environment variable, then config
//! file, then built-in default.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use controversy_motifs::boost::DEFAULT_ROUNDS;
use controversy_motifs::experiment::SubthreadScope;
use controversy_motifs::validation::DEFAULT_FOLDS;
use controversy_motifs::{MaskName, Strictness};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_K: usize = 2;

#[derive(Debug, Parser)]
#[command(
    name = "controversy",
    version,
    about = "Controversy detection in reply threads from interaction motifs"
)]
pub struct Cli {
    /// TOML file supplying defaults for any flag.
    #[arg(long, global = true, env = "CONTROVERSY_CONFIG")]
    pub config: Option<PathBuf>,
    /// Seed for every random choice (folds, synthetic corpora).
    #[arg(long, global = true, env = "CONTROVERSY_SEED")]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs everything sequentially.
    #[arg(long, global = true, env = "CONTROVERSY_JOBS")]
    pub jobs: Option<usize>,
    /// Reject malformed input lines instead of skipping them.
    #[arg(long, global = true, env = "CONTROVERSY_STRICT")]
    pub strict: bool,
    /// Log filter, e.g. `warn` or `controversy_motifs=debug`.
    #[arg(long, global = true, env = "CONTROVERSY_LOG")]
    pub log_level: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute per-thread feature vectors and diagnostics.
    Extract {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Train a boosted stump model on labelled threads.
    Train {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Per-round training report; defaults to `<model>.report.txt`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Measure accuracy by cross-validation, a saved model, or the full ablation.
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Number of cross-validation folds.
        #[arg(long, env = "CONTROVERSY_FOLDS")]
        folds: Option<usize>,
        /// Run every feature block at every user filter.
        #[arg(long, conflicts_with = "model_path")]
        ablation: bool,
    },
    /// Classify the direct-reply sub-threads of each thread.
    Subthreads {
        #[command(flatten)]
        input: InputArgs,
        /// Trained model JSON.
        #[arg(long = "model", env = "CONTROVERSY_MODEL")]
        model: Option<PathBuf>,
        /// Keep sub-threads with more than this many users.
        #[arg(long, env = "CONTROVERSY_K")]
        k: Option<usize>,
        /// Which parent threads to split.
        #[arg(long, value_enum, default_value_t = ScopeArg::NonControversial)]
        scope: ScopeArg,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Write a synthetic labelled corpus.
    Synth {
        /// Generator parameters as JSON; built-in defaults otherwise.
        #[arg(long, env = "CONTROVERSY_PARAMS")]
        params: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Threads as JSON lines.
    #[arg(long, env = "CONTROVERSY_THREADS")]
    pub threads: Option<PathBuf>,
    /// Follow arcs as `follower<TAB>followee` lines.
    #[arg(long, env = "CONTROVERSY_FOLLOWS")]
    pub follows: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Output directory, created if missing.
    #[arg(long = "out", env = "CONTROVERSY_OUT")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model JSON to write (train) or to score (evaluate).
    #[arg(long = "model", id = "model_path", env = "CONTROVERSY_MODEL")]
    pub path: Option<PathBuf>,
    /// Feature block: baseline, baseline+dyadic, baseline+dyadic+triadic, dyadic-only or all.
    #[arg(long, env = "CONTROVERSY_MASK")]
    pub mask: Option<String>,
    /// Boosting rounds.
    #[arg(long, env = "CONTROVERSY_ROUNDS")]
    pub rounds: Option<usize>,
    /// Keep threads with more than this many users.
    #[arg(long, env = "CONTROVERSY_K")]
    pub k: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    All,
    NonControversial,
}

impl From<ScopeArg> for SubthreadScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::All => SubthreadScope::All,
            ScopeArg::NonControversial => SubthreadScope::NonControversial,
        }
    }
}

/// Keys accepted in the config file; each mirrors a flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<PathBuf>,
    pub follows: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub params: Option<PathBuf>,
    pub k: Option<usize>,
    pub mask: Option<String>,
    pub rounds: Option<usize>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub strict: Option<bool>,
    pub log_level: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Settings shared by every subcommand after merging.
#[derive(Debug, Clone)]
pub struct Global {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub strictness: Strictness,
    pub log_level: String,
}

pub fn global(cli: &Cli, file: &FileConfig) -> Global {
    Global {
        seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        jobs: cli.jobs.or(file.jobs),
        strictness: if cli.strict || file.strict.unwrap_or(false) {
            Strictness::Strict
        } else {
            Strictness::Lenient
        },
        log_level: cli
            .log_level
            .clone()
            .or_else(|| file.log_level.clone())
            .unwrap_or_else(|| "warn".into()),
    }
}

pub fn required(flag: Option<&PathBuf>, file: Option<&PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or(file)
        .cloned()
        .ok_or_else(|| anyhow!("missing --{name} (or `{name}` in the config file)"))
}

pub fn mask_name(flag: Option<&String>, file: Option<&String>) -> Result<MaskName> {
    match flag.or(file) {
        Some(s) => s.parse().map_err(|e| anyhow!("{e}")),
        None => Ok(MaskName::All),
    }
}

pub fn rounds(flag: Option<usize>, file: &FileConfig) -> usize {
    flag.or(file.rounds).unwrap_or(DEFAULT_ROUNDS)
}

pub fn folds(flag: Option<usize>, file: &FileConfig) -> usize {
    flag.or(file.folds).unwrap_or(DEFAULT_FOLDS)
}

pub fn k(flag: Option<usize>, file: &FileConfig) -> usize {
    flag.or(file.k).unwrap_or(DEFAULT_K)
}
