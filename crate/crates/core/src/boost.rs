//! Discrete AdaBoost over decision stumps, with evaluation metrics and
//! per-slot feature importance.
//!
//! Weak learners are depth-1 stumps whose thresholds are midpoints between
//! consecutive distinct values of one masked slot. A slot holding a single
//! value therefore offers no candidate split and is never selected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Exec;
use crate::features::{slot_names, FeatureMask, FeatureVector, N_SLOTS};
use crate::thread::Label;

/// Clamp applied to the weighted error before computing a stump's weight.
pub const ERROR_EPS: f64 = 1e-10;

pub const DEFAULT_ROUNDS: usize = 100;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoostError {
    #[error("training data holds a single class")]
    DegenerateLabels,
    #[error("feature mask selects no slots")]
    EmptyMask,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("model has not been trained")]
    UntrainedModel,
    #[error("invalid model document: {0}")]
    Format(String),
}

/// Votes `polarity` when `x[slot] > threshold`, `-polarity` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionStump {
    pub slot: usize,
    pub threshold: f64,
    pub polarity: i8,
    pub alpha: f64,
}

impl DecisionStump {
    pub fn vote(&self, x: &FeatureVector) -> f64 {
        let p = f64::from(self.polarity);
        if x[self.slot] > self.threshold {
            p
        } else {
            -p
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoostParams {
    pub rounds: usize,
    pub exec: Exec,
}

impl Default for BoostParams {
    fn default() -> Self {
        BoostParams {
            rounds: DEFAULT_ROUNDS,
            exec: Exec::default(),
        }
    }
}

/// What happened in one boosting round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundTrace {
    pub round: usize,
    pub slot: usize,
    pub weighted_error: f64,
    pub alpha: f64,
    /// Training error of the ensemble after this round.
    pub train_error: f64,
    /// Running product of `2 sqrt(err (1 - err))`.
    pub error_bound: f64,
}

/// A trained (or empty) stump ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct BoostModel {
    stumps: Vec<DecisionStump>,
    mask: FeatureMask,
    n_rounds: usize,
    importance: [f64; N_SLOTS],
}

impl BoostModel {
    pub fn untrained(mask: FeatureMask) -> Self {
        BoostModel {
            stumps: Vec::new(),
            mask,
            n_rounds: 0,
            importance: [0.0; N_SLOTS],
        }
    }

    /// Assembles a model from explicit stumps; importance is derived.
    pub fn from_stumps(stumps: Vec<DecisionStump>, mask: FeatureMask, n_rounds: usize) -> Self {
        let importance = importance_of(&stumps);
        BoostModel {
            stumps,
            mask,
            n_rounds: n_rounds.max(1),
            importance,
        }
    }

    pub fn is_trained(&self) -> bool {
        self.n_rounds > 0
    }

    pub fn stumps(&self) -> &[DecisionStump] {
        &self.stumps
    }

    pub fn mask(&self) -> FeatureMask {
        self.mask
    }

    pub fn n_rounds(&self) -> usize {
        self.n_rounds
    }

    pub fn importance(&self) -> &[f64; N_SLOTS] {
        &self.importance
    }

    /// Signed ensemble score; positive means controversial.
    pub fn margin(&self, x: &FeatureVector) -> Result<f64, BoostError> {
        if !self.is_trained() {
            return Err(BoostError::UntrainedModel);
        }
        Ok(self.stumps.iter().map(|s| s.alpha * s.vote(x)).sum())
    }

    /// Label and margin. A zero margin resolves to non-controversial.
    pub fn predict(&self, x: &FeatureVector) -> Result<(Label, f64), BoostError> {
        let m = self.margin(x)?;
        Ok((Label::from_sign(m), m))
    }

    /// Active slots ranked by importance, descending; ties by slot index.
    pub fn feature_importance(&self) -> Result<Vec<(String, f64)>, BoostError> {
        if !self.is_trained() {
            return Err(BoostError::UntrainedModel);
        }
        let mut ranked: Vec<(usize, f64)> = self
            .mask
            .slots()
            .into_iter()
            .map(|s| (s, self.importance[s]))
            .collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(ranked
            .into_iter()
            .map(|(s, v)| (slot_names()[s].clone(), v))
            .collect())
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            version: MODEL_FORMAT_VERSION,
            slot_names: slot_names().to_vec(),
            mask: self.mask,
            n_rounds: self.n_rounds,
            stumps: self.stumps.clone(),
            importance: self.importance.to_vec(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, BoostError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| BoostError::Format(e.to_string()))?;
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(BoostError::Format(format!(
                "unsupported version {}",
                doc.version
            )));
        }
        if doc.slot_names != slot_names() {
            return Err(BoostError::Format(
                "slot names do not match this build".into(),
            ));
        }
        let importance: [f64; N_SLOTS] = doc
            .importance
            .try_into()
            .map_err(|_| BoostError::Format(format!("importance must have {N_SLOTS} entries")))?;
        for s in &doc.stumps {
            if s.slot >= N_SLOTS || !doc.mask.contains(s.slot) {
                return Err(BoostError::Format(format!(
                    "stump slot {} outside mask",
                    s.slot
                )));
            }
            if s.polarity.abs() != 1 || !s.alpha.is_finite() || !s.threshold.is_finite() {
                return Err(BoostError::Format("malformed stump".into()));
            }
        }
        Ok(BoostModel {
            stumps: doc.stumps,
            mask: doc.mask,
            n_rounds: doc.n_rounds,
            importance,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    slot_names: Vec<String>,
    mask: FeatureMask,
    n_rounds: usize,
    stumps: Vec<DecisionStump>,
    importance: Vec<f64>,
}

fn importance_of(stumps: &[DecisionStump]) -> [f64; N_SLOTS] {
    let mut imp = [0.0; N_SLOTS];
    for s in stumps {
        imp[s.slot] += s.alpha.abs();
    }
    let total: f64 = imp.iter().sum();
    if total > 0.0 {
        for v in &mut imp {
            *v /= total;
        }
    }
    imp
}

/// One masked slot with samples pre-sorted by value.
struct Column {
    slot: usize,
    order: Vec<u32>,
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    slot: usize,
    threshold: f64,
    polarity: i8,
    error: f64,
}

impl Column {
    /// Lowest-error split of this column; earliest threshold wins ties,
    /// then polarity +1.
    fn best_split(
        &self,
        xs: &[FeatureVector],
        signs: &[f64],
        weights: &[f64],
    ) -> Option<Candidate> {
        let (mut pos_total, mut neg_total) = (0.0, 0.0);
        for (&s, &w) in signs.iter().zip(weights) {
            if s > 0.0 {
                pos_total += w;
            } else {
                neg_total += w;
            }
        }
        let total = pos_total + neg_total;
        let (mut pos_left, mut neg_left) = (0.0, 0.0);
        let mut best: Option<Candidate> = None;
        for k in 0..self.order.len() {
            let i = self.order[k] as usize;
            if signs[i] > 0.0 {
                pos_left += weights[i];
            } else {
                neg_left += weights[i];
            }
            let Some(&next) = self.order.get(k + 1) else {
                break;
            };
            let (lo, hi) = (xs[i][self.slot], xs[next as usize][self.slot]);
            if lo == hi {
                continue;
            }
            let mut threshold = lo + (hi - lo) / 2.0;
            if threshold >= hi {
                threshold = lo;
            }
            // +1 polarity predicts positive above the threshold
            let err_pos = pos_left + (neg_total - neg_left);
            let err_neg = total - err_pos;
            for (polarity, error) in [(1i8, err_pos), (-1i8, err_neg)] {
                if best.is_none_or(|b| error < b.error) {
                    best = Some(Candidate {
                        slot: self.slot,
                        threshold,
                        polarity,
                        error,
                    });
                }
            }
        }
        best
    }
}

fn check_inputs(xs: &[FeatureVector], ys: &[Label]) -> Result<(), BoostError> {
    if xs.len() != ys.len() {
        return Err(BoostError::DimensionMismatch(format!(
            "{} feature rows but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    Ok(())
}

/// Trains a stump ensemble and returns it with a per-round trace.
pub fn train_traced(
    xs: &[FeatureVector],
    ys: &[Label],
    mask: FeatureMask,
    params: &BoostParams,
) -> Result<(BoostModel, Vec<RoundTrace>), BoostError> {
    check_inputs(xs, ys)?;
    if mask.is_empty() {
        return Err(BoostError::EmptyMask);
    }
    if xs.len() < 2 {
        return Err(BoostError::TooFewSamples(format!(
            "{} samples, need at least 2",
            xs.len()
        )));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(BoostError::DegenerateLabels);
    }
    if params.rounds == 0 {
        return Err(BoostError::TooFewSamples(
            "rounds must be at least 1".into(),
        ));
    }
    if xs.iter().any(|x| x.0.iter().any(|v| !v.is_finite())) {
        return Err(BoostError::DimensionMismatch(
            "feature values must be finite".into(),
        ));
    }

    let n = xs.len();
    let signs: Vec<f64> = ys.iter().map(|y| y.sign()).collect();
    let columns: Vec<Column> = params.exec.map(&mask.slots(), |&slot| {
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| {
            xs[a as usize][slot]
                .total_cmp(&xs[b as usize][slot])
                .then(a.cmp(&b))
        });
        Column { slot, order }
    });

    let mut weights = vec![1.0 / n as f64; n];
    let mut scores = vec![0.0; n];
    let mut stumps = Vec::new();
    let mut trace = Vec::new();
    let mut bound = 1.0;

    for round in 0..params.rounds {
        let best = params
            .exec
            .map(&columns, |c| c.best_split(xs, &signs, &weights))
            .into_iter()
            .flatten()
            .reduce(|a, b| if b.error < a.error { b } else { a });
        let Some(best) = best else { break };
        if best.error >= 0.5 - ERROR_EPS {
            break;
        }
        let err = best.error.clamp(ERROR_EPS, 1.0 - ERROR_EPS);
        let alpha = 0.5 * ((1.0 - err) / err).ln();
        let stump = DecisionStump {
            slot: best.slot,
            threshold: best.threshold,
            polarity: best.polarity,
            alpha,
        };

        let mut sum = 0.0;
        for i in 0..n {
            let h = stump.vote(&xs[i]);
            scores[i] += alpha * h;
            weights[i] *= (-alpha * signs[i] * h).exp();
            sum += weights[i];
        }
        for w in &mut weights {
            *w /= sum;
        }
        bound *= 2.0 * (err * (1.0 - err)).sqrt();
        let wrong = scores
            .iter()
            .zip(&signs)
            .filter(|(s, y)| Label::from_sign(**s).sign() != **y)
            .count();
        trace.push(RoundTrace {
            round,
            slot: best.slot,
            weighted_error: best.error,
            alpha,
            train_error: wrong as f64 / n as f64,
            error_bound: bound,
        });
        stumps.push(stump);
        if best.error <= ERROR_EPS {
            break;
        }
    }

    let importance = importance_of(&stumps);
    let model = BoostModel {
        stumps,
        mask,
        n_rounds: params.rounds,
        importance,
    };
    Ok((model, trace))
}

pub fn train(
    xs: &[FeatureVector],
    ys: &[Label],
    mask: FeatureMask,
    params: &BoostParams,
) -> Result<BoostModel, BoostError> {
    train_traced(xs, ys, mask, params).map(|(m, _)| m)
}

/// Binary classification metrics with controversial as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// False when no sample was predicted positive (precision reported as 0).
    pub precision_defined: bool,
    /// False when no positive sample exists (recall reported as 0).
    pub recall_defined: bool,
}

impl Metrics {
    pub fn from_confusion(tp: usize, fp: usize, tn: usize, fn_: usize) -> Self {
        let n = tp + fp + tn + fn_;
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f_measure = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Metrics {
            accuracy: ratio(tp + tn, n),
            precision,
            recall,
            f_measure,
            tp,
            fp,
            tn,
            fn_,
            precision_defined: tp + fp > 0,
            recall_defined: tp + fn_ > 0,
        }
    }

    pub fn from_predictions(predicted: &[Label], actual: &[Label]) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (p, a) in predicted.iter().zip(actual) {
            match (p, a) {
                (Label::Controversial, Label::Controversial) => tp += 1,
                (Label::Controversial, Label::NonControversial) => fp += 1,
                (Label::NonControversial, Label::NonControversial) => tn += 1,
                (Label::NonControversial, Label::Controversial) => fn_ += 1,
            }
        }
        Self::from_confusion(tp, fp, tn, fn_)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Anything that labels feature vectors.
pub trait Classifier: Send + Sync {
    fn predict(&self, x: &FeatureVector) -> Result<(Label, f64), BoostError>;
}

impl Classifier for BoostModel {
    fn predict(&self, x: &FeatureVector) -> Result<(Label, f64), BoostError> {
        BoostModel::predict(self, x)
    }
}

/// A training procedure producing a [`Classifier`]. Alternative learners
/// plug into cross-validation and ablation through this trait.
pub trait Learner: Sync {
    type Model: Classifier;

    fn fit(
        &self,
        xs: &[FeatureVector],
        ys: &[Label],
        mask: FeatureMask,
    ) -> Result<Self::Model, BoostError>;
}

/// The default learner: discrete AdaBoost with decision stumps.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AdaBoost {
    pub params: BoostParams,
}

impl AdaBoost {
    pub fn new(rounds: usize, exec: Exec) -> Self {
        AdaBoost {
            params: BoostParams { rounds, exec },
        }
    }
}

impl Learner for AdaBoost {
    type Model = BoostModel;

    fn fit(
        &self,
        xs: &[FeatureVector],
        ys: &[Label],
        mask: FeatureMask,
    ) -> Result<BoostModel, BoostError> {
        train(xs, ys, mask, &self.params)
    }
}

pub fn evaluate<C: Classifier + ?Sized>(
    model: &C,
    xs: &[FeatureVector],
    ys: &[Label],
) -> Result<Metrics, BoostError> {
    check_inputs(xs, ys)?;
    let predicted = xs
        .iter()
        .map(|x| model.predict(x).map(|(l, _)| l))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Metrics::from_predictions(&predicted, ys))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(values: &[(usize, f64)]) -> FeatureVector {
        let mut v = [0.0; N_SLOTS];
        for &(s, x) in values {
            v[s] = x;
        }
        FeatureVector(v)
    }

    use Label::{Controversial as C, NonControversial as N};

    #[test]
    fn separable_single_round() {
        let xs: Vec<_> = [-2.0, -1.0, 1.0, 3.0]
            .iter()
            .map(|&x| fv(&[(0, x)]))
            .collect();
        let ys = [N, N, C, C];
        let model = train(
            &xs,
            &ys,
            FeatureMask::from_slots(&[0]),
            &BoostParams {
                rounds: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(model.stumps().len(), 1);
        let s = model.stumps()[0];
        assert!(s.threshold > -1.0 && s.threshold < 1.0);
        assert_eq!(s.threshold, 0.0);
        assert_eq!(evaluate(&model, &xs, &ys).unwrap().accuracy, 1.0);
    }

    #[test]
    fn constant_slot_never_selected() {
        let xs: Vec<_> = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0]
            .iter()
            .map(|&x| fv(&[(0, 7.0), (1, x)]))
            .collect();
        let ys = [N, C, N, C, C, N];
        let model = train(
            &xs,
            &ys,
            FeatureMask::from_slots(&[0, 1]),
            &BoostParams::default(),
        )
        .unwrap();
        assert!(model.stumps().iter().all(|s| s.slot == 1));
        assert_eq!(model.importance()[0], 0.0);
    }

    #[test]
    fn all_constant_mask_predicts_negative() {
        let xs: Vec<_> = (0..5).map(|_| fv(&[(3, 1.0)])).collect();
        let ys = [C, N, N, N, C];
        let model = train(
            &xs,
            &ys,
            FeatureMask::from_slots(&[3]),
            &BoostParams::default(),
        )
        .unwrap();
        assert!(model.is_trained());
        assert!(model.stumps().is_empty());
        assert_eq!(model.predict(&xs[0]).unwrap(), (N, 0.0));
        assert_eq!(evaluate(&model, &xs, &ys).unwrap().accuracy, 0.6);
    }

    #[test]
    fn training_errors() {
        let xs = vec![fv(&[(0, 1.0)]), fv(&[(0, 2.0)])];
        let mask = FeatureMask::from_slots(&[0]);
        let p = BoostParams::default();
        assert_eq!(
            train(&xs, &[C, C], mask, &p),
            Err(BoostError::DegenerateLabels)
        );
        assert_eq!(
            train(&xs, &[C, N], FeatureMask::EMPTY, &p),
            Err(BoostError::EmptyMask)
        );
        assert!(matches!(
            train(&xs, &[C], mask, &p),
            Err(BoostError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn single_stump_predictions() {
        let stump = DecisionStump {
            slot: 4,
            threshold: 0.5,
            polarity: 1,
            alpha: 1.0,
        };
        let model = BoostModel::from_stumps(vec![stump], FeatureMask::from_slots(&[4]), 1);
        assert_eq!(model.predict(&fv(&[(4, 0.9)])).unwrap(), (C, 1.0));
        assert_eq!(model.predict(&fv(&[(4, 0.1)])).unwrap(), (N, -1.0));
        let ranking = model.feature_importance().unwrap();
        assert_eq!(ranking[0], ("avg_degree_tree".to_string(), 1.0));
    }

    #[test]
    fn untrained_model_errors() {
        let m = BoostModel::untrained(FeatureMask::all());
        assert_eq!(m.predict(&fv(&[])), Err(BoostError::UntrainedModel));
        assert_eq!(m.feature_importance(), Err(BoostError::UntrainedModel));
    }

    #[test]
    fn metrics_arithmetic() {
        let m = Metrics::from_confusion(3, 1, 5, 1);
        assert_eq!(m.accuracy, 0.8);
        assert_eq!(m.precision, 0.75);
        assert_eq!(m.recall, 0.75);
        assert_eq!(m.f_measure, 0.75);
        let none = Metrics::from_confusion(0, 0, 4, 0);
        assert!(!none.precision_defined && !none.recall_defined);
        assert_eq!(
            (none.precision, none.recall, none.f_measure, none.accuracy),
            (0.0, 0.0, 0.0, 1.0)
        );
        let perfect = Metrics::from_predictions(&[C, N, C], &[C, N, C]);
        assert_eq!(
            (
                perfect.accuracy,
                perfect.precision,
                perfect.recall,
                perfect.f_measure
            ),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn json_round_trip_and_rejects_bad_docs() {
        let stumps = vec![
            DecisionStump {
                slot: 8,
                threshold: 0.1 + 0.2,
                polarity: -1,
                alpha: 0.7,
            },
            DecisionStump {
                slot: 10,
                threshold: 1.0 / 3.0,
                polarity: 1,
                alpha: 0.3,
            },
        ];
        let m = BoostModel::from_stumps(stumps, FeatureMask::all(), 100);
        let back = BoostModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        let broken = m.to_json().replace("\"version\": 1", "\"version\": 9");
        assert!(matches!(
            BoostModel::from_json(&broken),
            Err(BoostError::Format(_))
        ));
    }
}
