//! Feature-block ablation across user filters, and direct-reply sub-thread
//! analysis.

use std::fmt::Write as _;
use std::io::Write;

use crate::boost::{BoostError, BoostModel, Learner, Metrics};
use crate::dataset::{build_feature_matrix, DatasetError, FeatureMatrix};
use crate::exec::Exec;
use crate::features::MaskName;
use crate::thread::{FollowGraph, Label, ReplyTree};
use crate::validation::{cross_validate, holdout, CvConfig, MetricSummary};

/// User filters reported in the ablation table.
pub const DEFAULT_FILTERS: [usize; 3] = [2, 3, 10];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Protocol {
    CrossValidation(CvConfig),
    Holdout { test_fraction: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    /// Mean over folds for cross-validation; the single split otherwise.
    pub summary: MetricSummary,
    /// Confusion counts over all held-out samples.
    pub pooled: Metrics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationCell {
    pub mask: MaskName,
    pub k: usize,
    /// `Err` holds the reason the cell could not be computed.
    pub result: Result<CellResult, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationTable {
    pub masks: Vec<MaskName>,
    pub filters: Vec<usize>,
    pub cells: Vec<AblationCell>,
}

impl AblationTable {
    pub fn cell(&self, mask: MaskName, k: usize) -> Option<&AblationCell> {
        self.cells.iter().find(|c| c.mask == mask && c.k == k)
    }

    pub fn accuracy(&self, mask: MaskName, k: usize) -> Option<f64> {
        self.cell(mask, k)?
            .result
            .as_ref()
            .ok()
            .map(|r| r.summary.accuracy)
    }

    pub fn populated(&self) -> usize {
        self.cells.iter().filter(|c| c.result.is_ok()).count()
    }

    /// Columns: mask, k, accuracy, precision, recall, f_measure, tp, fp, tn, fn.
    /// Absent cells keep their mask and k with empty metric fields.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DatasetError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "mask",
            "k",
            "accuracy",
            "precision",
            "recall",
            "f_measure",
            "tp",
            "fp",
            "tn",
            "fn",
        ])?;
        for c in &self.cells {
            let mut rec = vec![c.mask.as_str().to_owned(), c.k.to_string()];
            match &c.result {
                Ok(r) => {
                    let s = &r.summary;
                    rec.extend(
                        [s.accuracy, s.precision, s.recall, s.f_measure].map(|v| v.to_string()),
                    );
                    rec.extend(
                        [r.pooled.tp, r.pooled.fp, r.pooled.tn, r.pooled.fn_]
                            .map(|v| v.to_string()),
                    );
                }
                Err(_) => rec.extend(std::iter::repeat_n(String::new(), 8)),
            }
            out.write_record(&rec)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Aligned text table: one block per mask, one row per filter.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let rule = "-".repeat(58);
        let _ = writeln!(
            s,
            "{:<14}{:>11}{:>11}{:>11}{:>11}",
            "Filtering", "Accuracy", "Precision", "Recall", "F-measure"
        );
        for &mask in &self.masks {
            let _ = writeln!(s, "{rule}");
            let _ = writeln!(s, "{:^58}", mask.title());
            let _ = writeln!(s, "{rule}");
            for &k in &self.filters {
                let label = format!(">{k} users");
                match self.cell(mask, k).map(|c| &c.result) {
                    Some(Ok(r)) => {
                        let m = &r.summary;
                        let _ = writeln!(
                            s,
                            "{label:<14}{:>11.3}{:>11.3}{:>11.3}{:>11.3}",
                            m.accuracy, m.precision, m.recall, m.f_measure
                        );
                    }
                    Some(Err(reason)) => {
                        let _ = writeln!(s, "{label:<14}{:>44}", format!("absent ({reason})"));
                    }
                    None => {
                        let _ = writeln!(s, "{label:<14}{:>44}", "absent");
                    }
                }
            }
        }
        s
    }
}

/// Evaluates every (mask, filter) combination on the labelled rows of
/// `matrix`.
pub fn run_ablation<L: Learner>(
    learner: &L,
    matrix: &FeatureMatrix,
    masks: &[MaskName],
    filters: &[usize],
    protocol: &Protocol,
) -> AblationTable {
    let mut cells = Vec::with_capacity(masks.len() * filters.len());
    for &mask in masks {
        for &k in filters {
            let (xs, ys) = matrix.labeled(Some(k));
            let result = match protocol {
                Protocol::CrossValidation(cfg) => {
                    cross_validate(learner, &xs, &ys, mask.mask(), cfg, None).map(|r| CellResult {
                        summary: r.mean,
                        pooled: r.pooled,
                    })
                }
                Protocol::Holdout {
                    test_fraction,
                    seed,
                } => holdout(learner, &xs, &ys, mask.mask(), *test_fraction, *seed).map(|m| {
                    CellResult {
                        summary: MetricSummary {
                            accuracy: m.accuracy,
                            precision: m.precision,
                            recall: m.recall,
                            f_measure: m.f_measure,
                        },
                        pooled: m,
                    }
                }),
            };
            if let Err(e) = &result {
                log::warn!("ablation cell {mask} k={k}: {e}");
            }
            cells.push(AblationCell {
                mask,
                k,
                result: result.map_err(|e| e.to_string()),
            });
        }
    }
    AblationTable {
        masks: masks.to_vec(),
        filters: filters.to_vec(),
        cells,
    }
}

/// Which parent threads to split into sub-threads.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SubthreadScope {
    All,
    /// Threads labelled non-controversial, or unlabelled threads the model
    /// predicts as non-controversial.
    #[default]
    NonControversial,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubthreadPrediction {
    pub thread_id: String,
    pub subtree_id: String,
    pub n_users: usize,
    pub n_posts: usize,
    pub label: Label,
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeSummary {
    pub thread_id: String,
    pub qualifying: usize,
    pub controversial: usize,
}

impl TreeSummary {
    /// `None` when no sub-thread qualified.
    pub fn fraction(&self) -> Option<f64> {
        (self.qualifying > 0).then(|| self.controversial as f64 / self.qualifying as f64)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SubthreadReport {
    pub predictions: Vec<SubthreadPrediction>,
    pub per_tree: Vec<TreeSummary>,
}

impl SubthreadReport {
    /// Share of qualifying sub-threads predicted controversial; `None` when
    /// there were none.
    pub fn fraction(&self) -> Option<f64> {
        let n = self.predictions.len();
        (n > 0).then(|| {
            self.predictions
                .iter()
                .filter(|p| p.label == Label::Controversial)
                .count() as f64
                / n as f64
        })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DatasetError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "thread_id",
            "subtree_id",
            "n_users",
            "n_posts",
            "label",
            "margin",
        ])?;
        for p in &self.predictions {
            out.write_record([
                p.thread_id.clone(),
                p.subtree_id.clone(),
                p.n_users.to_string(),
                p.n_posts.to_string(),
                p.label.as_str().to_owned(),
                p.margin.to_string(),
            ])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Classifies every direct-reply sub-thread with more than `k` users.
pub fn analyze_subthreads(
    model: &BoostModel,
    trees: &[ReplyTree],
    fg: &FollowGraph,
    k: usize,
    scope: SubthreadScope,
    exec: Exec,
) -> Result<SubthreadReport, BoostError> {
    if !model.is_trained() {
        return Err(BoostError::UntrainedModel);
    }
    let mut selected: Vec<&ReplyTree> = Vec::new();
    match scope {
        SubthreadScope::All => selected.extend(trees),
        SubthreadScope::NonControversial => {
            let unlabeled: Vec<usize> = (0..trees.len())
                .filter(|&i| trees[i].label().is_none())
                .collect();
            let refs: Vec<&ReplyTree> = unlabeled.iter().map(|&i| &trees[i]).collect();
            let whole = build_feature_matrix(&refs, fg, exec);
            let mut predicted = vec![None; trees.len()];
            for (&i, d) in unlabeled.iter().zip(&whole.details) {
                predicted[i] = Some(model.predict(&d.vector)?.0);
            }
            selected.extend(
                trees
                    .iter()
                    .enumerate()
                    .filter(|(i, t)| t.label().or(predicted[*i]) == Some(Label::NonControversial))
                    .map(|(_, t)| t),
            );
        }
    }

    let mut report = SubthreadReport::default();
    for tree in selected {
        let subtrees: Vec<ReplyTree> = tree
            .direct_reply_subtrees()
            .into_iter()
            .filter(|s| s.count_users() > k)
            .collect();
        let matrix = build_feature_matrix(&subtrees, fg, exec);
        let mut summary = TreeSummary {
            thread_id: tree.thread_id().to_owned(),
            qualifying: subtrees.len(),
            controversial: 0,
        };
        for (sub, d) in subtrees.iter().zip(&matrix.details) {
            let (label, margin) = model.predict(&d.vector)?;
            if label == Label::Controversial {
                summary.controversial += 1;
            }
            report.predictions.push(SubthreadPrediction {
                thread_id: tree.thread_id().to_owned(),
                subtree_id: sub.thread_id().to_owned(),
                n_users: sub.count_users(),
                n_posts: sub.len(),
                label,
                margin,
            });
        }
        report.per_tree.push(summary);
    }
    Ok(report)
}
