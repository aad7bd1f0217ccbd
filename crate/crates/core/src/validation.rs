//! Stratified k-fold cross-validation and hold-out evaluation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::boost::{evaluate, BoostError, Learner, Metrics};
use crate::exec::Exec;
use crate::features::{FeatureMask, FeatureVector};
use crate::thread::Label;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: DEFAULT_FOLDS,
            seed: 42,
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
}

impl MetricSummary {
    fn of(m: &Metrics) -> Self {
        MetricSummary {
            accuracy: m.accuracy,
            precision: m.precision,
            recall: m.recall,
            f_measure: m.f_measure,
        }
    }

    fn as_array(&self) -> [f64; 4] {
        [self.accuracy, self.precision, self.recall, self.f_measure]
    }

    fn from_array(a: [f64; 4]) -> Self {
        MetricSummary {
            accuracy: a[0],
            precision: a[1],
            recall: a[2],
            f_measure: a[3],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    pub folds: Vec<Metrics>,
    pub mean: MetricSummary,
    /// Population standard deviation across folds.
    pub std: MetricSummary,
    /// Confusion counts summed over all held-out folds.
    pub pooled: Metrics,
}

impl CvReport {
    fn from_folds(folds: Vec<Metrics>) -> Self {
        let k = folds.len() as f64;
        let rows: Vec<[f64; 4]> = folds
            .iter()
            .map(|m| MetricSummary::of(m).as_array())
            .collect();
        let mut mean = [0.0; 4];
        for r in &rows {
            for j in 0..4 {
                mean[j] += r[j] / k;
            }
        }
        let mut var = [0.0; 4];
        for r in &rows {
            for j in 0..4 {
                var[j] += (r[j] - mean[j]).powi(2) / k;
            }
        }
        let (tp, fp, tn, fn_) = folds.iter().fold((0, 0, 0, 0), |a, m| {
            (a.0 + m.tp, a.1 + m.fp, a.2 + m.tn, a.3 + m.fn_)
        });
        CvReport {
            pooled: Metrics::from_confusion(tp, fp, tn, fn_),
            mean: MetricSummary::from_array(mean),
            std: MetricSummary::from_array(var.map(f64::sqrt)),
            folds,
        }
    }
}

fn check_class_counts(labels: &[Label], k: usize) -> Result<(), BoostError> {
    if k < 2 {
        return Err(BoostError::TooFewSamples(format!(
            "need at least 2 folds, got {k}"
        )));
    }
    for class in [Label::Controversial, Label::NonControversial] {
        let n = labels.iter().filter(|&&l| l == class).count();
        if n < k {
            return Err(BoostError::TooFewSamples(format!(
                "{n} {class} samples for {k} folds"
            )));
        }
    }
    Ok(())
}

/// Fold index of every sample. Each class is shuffled under `seed` and dealt
/// round-robin, continuing the deal across classes so fold sizes stay
/// balanced.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<usize>, BoostError> {
    check_class_counts(labels, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold = vec![0; labels.len()];
    let mut next = 0;
    for class in [Label::Controversial, Label::NonControversial] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for i in idx {
            fold[i] = next % k;
            next += 1;
        }
    }
    Ok(fold)
}

/// Fold index of every sample, keeping all samples of a group together.
/// Groups are shuffled, then placed largest-first into the emptiest fold.
pub fn group_folds(
    labels: &[Label],
    groups: &[String],
    k: usize,
    seed: u64,
) -> Result<Vec<usize>, BoostError> {
    if groups.len() != labels.len() {
        return Err(BoostError::DimensionMismatch(format!(
            "{} group ids for {} samples",
            groups.len(),
            labels.len()
        )));
    }
    check_class_counts(labels, k)?;
    let mut members: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, g) in groups.iter().enumerate() {
        members.entry(g.as_str()).or_default().push(i);
    }
    if members.len() < k {
        return Err(BoostError::TooFewSamples(format!(
            "{} groups for {k} folds",
            members.len()
        )));
    }
    let mut order: Vec<Vec<usize>> = members.into_values().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by_key(|m| std::cmp::Reverse(m.len()));
    let mut sizes = vec![0usize; k];
    let mut fold = vec![0; labels.len()];
    for m in order {
        let target = (0..k).min_by_key(|&f| (sizes[f], f)).unwrap();
        sizes[target] += m.len();
        for i in m {
            fold[i] = target;
        }
    }
    Ok(fold)
}

/// Trains on all-but-one fold and evaluates on the held-out fold, for every
/// fold. With `groups`, folds respect group boundaries.
pub fn cross_validate<L: Learner>(
    learner: &L,
    xs: &[FeatureVector],
    ys: &[Label],
    mask: FeatureMask,
    config: &CvConfig,
    groups: Option<&[String]>,
) -> Result<CvReport, BoostError> {
    if xs.len() != ys.len() {
        return Err(BoostError::DimensionMismatch(format!(
            "{} rows, {} labels",
            xs.len(),
            ys.len()
        )));
    }
    let fold_of = match groups {
        Some(g) => group_folds(ys, g, config.folds, config.seed)?,
        None => stratified_folds(ys, config.folds, config.seed)?,
    };
    let results = config.exec.map_range(config.folds, |f| {
        let (mut train_x, mut train_y, mut test_x, mut test_y) = (vec![], vec![], vec![], vec![]);
        for i in 0..xs.len() {
            if fold_of[i] == f {
                test_x.push(xs[i]);
                test_y.push(ys[i]);
            } else {
                train_x.push(xs[i]);
                train_y.push(ys[i]);
            }
        }
        let model = learner.fit(&train_x, &train_y, mask)?;
        evaluate(&model, &test_x, &test_y)
    });
    let folds = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(CvReport::from_folds(folds))
}

/// Single stratified split: `test_fraction` of each class is held out.
pub fn holdout<L: Learner>(
    learner: &L,
    xs: &[FeatureVector],
    ys: &[Label],
    mask: FeatureMask,
    test_fraction: f64,
    seed: u64,
) -> Result<Metrics, BoostError> {
    if xs.len() != ys.len() {
        return Err(BoostError::DimensionMismatch(format!(
            "{} rows, {} labels",
            xs.len(),
            ys.len()
        )));
    }
    if !(0.0..1.0).contains(&test_fraction) || test_fraction == 0.0 {
        return Err(BoostError::TooFewSamples(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut is_test = vec![false; ys.len()];
    for class in [Label::Controversial, Label::NonControversial] {
        let mut idx: Vec<usize> = (0..ys.len()).filter(|&i| ys[i] == class).collect();
        if idx.len() < 2 {
            return Err(BoostError::TooFewSamples(format!(
                "{} {class} samples",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let n_test = ((idx.len() as f64 * test_fraction).round() as usize).clamp(1, idx.len() - 1);
        for &i in &idx[..n_test] {
            is_test[i] = true;
        }
    }
    let pick = |test: bool| -> (Vec<FeatureVector>, Vec<Label>) {
        (0..xs.len())
            .filter(|&i| is_test[i] == test)
            .map(|i| (xs[i], ys[i]))
            .unzip()
    };
    let (train_x, train_y) = pick(false);
    let (test_x, test_y) = pick(true);
    let model = learner.fit(&train_x, &train_y, mask)?;
    evaluate(&model, &test_x, &test_y)
}
