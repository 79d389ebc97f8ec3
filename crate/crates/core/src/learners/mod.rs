//! Classifier portfolio searched by [`crate::automl`]: multinomial naive
//! Bayes, softmax logistic regression, one-vs-rest linear SVM and a random
//! forest, all over sparse feature rows.

mod forest;
mod linear;
mod naive_bayes;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::SentimentLabel;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, SparseVector};
use crate::num::{argmax, Scalar};

pub use forest::{DecisionTree, RandomForest};
pub use linear::{logistic_gradient, logistic_objective, LinearModel};
pub use naive_bayes::NaiveBayes;

/// Per-class scores in canonical label order. Classes the model never saw
/// score zero.
pub type ClassScores<T> = [T; SentimentLabel::COUNT];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LearnerKind {
    MultinomialNb,
    LogisticRegression,
    LinearSvm,
    RandomForest,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 4] = [
        LearnerKind::MultinomialNb,
        LearnerKind::LogisticRegression,
        LearnerKind::LinearSvm,
        LearnerKind::RandomForest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LearnerKind::MultinomialNb => "multinomial_nb",
            LearnerKind::LogisticRegression => "logistic_regression",
            LearnerKind::LinearSvm => "linear_svm",
            LearnerKind::RandomForest => "random_forest",
        }
    }

    /// Declared hyperparameter domains; used for both validation and
    /// random sampling.
    pub fn param_space(self) -> &'static [ParamSpec] {
        use ParamDomain::*;
        const NB: &[ParamSpec] = &[ParamSpec {
            name: "alpha",
            domain: LogUniform { lo: 1e-3, hi: 10.0 },
        }];
        const LINEAR: &[ParamSpec] = &[
            ParamSpec {
                name: "l2",
                domain: LogUniform { lo: 1e-6, hi: 1e-1 },
            },
            ParamSpec {
                name: "learning_rate",
                domain: LogUniform { lo: 1e-3, hi: 1.0 },
            },
            ParamSpec {
                name: "epochs",
                domain: Integer { lo: 5, hi: 200 },
            },
        ];
        const FOREST: &[ParamSpec] = &[
            ParamSpec {
                name: "n_trees",
                domain: Integer { lo: 1, hi: 100 },
            },
            ParamSpec {
                name: "max_depth",
                domain: Integer { lo: 1, hi: 50 },
            },
            ParamSpec {
                name: "max_features_exponent",
                domain: Uniform { lo: 0.2, hi: 1.0 },
            },
            ParamSpec {
                name: "min_samples_split",
                domain: Integer { lo: 2, hi: 20 },
            },
            ParamSpec {
                name: "bootstrap",
                domain: Flag,
            },
        ];
        match self {
            LearnerKind::MultinomialNb => NB,
            LearnerKind::LogisticRegression | LearnerKind::LinearSvm => LINEAR,
            LearnerKind::RandomForest => FOREST,
        }
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LearnerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown learner kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamDomain {
    LogUniform { lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
    Integer { lo: i64, hi: i64 },
    Flag,
}

impl ParamDomain {
    pub fn contains(&self, v: f64) -> bool {
        match *self {
            ParamDomain::LogUniform { lo, hi } | ParamDomain::Uniform { lo, hi } => {
                v >= lo && v <= hi
            }
            ParamDomain::Integer { lo, hi } => v.fract() == 0.0 && v >= lo as f64 && v <= hi as f64,
            ParamDomain::Flag => v == 0.0 || v == 1.0,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ParamDomain::LogUniform { lo, hi } => rng.random_range(lo.ln()..=hi.ln()).exp().clamp(lo, hi),
            ParamDomain::Uniform { lo, hi } => rng.random_range(lo..=hi),
            ParamDomain::Integer { lo, hi } => rng.random_range(lo..=hi) as f64,
            ParamDomain::Flag => f64::from(u8::from(rng.random_bool(0.5))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamSpec {
    pub name: &'static str,
    pub domain: ParamDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub l2: f64,
    pub learning_rate: f64,
    pub epochs: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Each split considers `ceil(active_features ^ exponent)` candidates;
    /// 0.5 is the usual square-root rule, 1.0 considers every feature.
    pub max_features_exponent: f64,
    pub min_samples_split: usize,
    pub bootstrap: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparams {
    MultinomialNb { alpha: f64 },
    LogisticRegression(LinearParams),
    LinearSvm(LinearParams),
    RandomForest(ForestParams),
}

impl Hyperparams {
    pub fn default_for(kind: LearnerKind) -> Self {
        let linear = LinearParams {
            l2: 1e-4,
            learning_rate: 0.1,
            epochs: 50,
        };
        match kind {
            LearnerKind::MultinomialNb => Hyperparams::MultinomialNb { alpha: 1.0 },
            LearnerKind::LogisticRegression => Hyperparams::LogisticRegression(linear),
            LearnerKind::LinearSvm => Hyperparams::LinearSvm(linear),
            LearnerKind::RandomForest => Hyperparams::RandomForest(ForestParams {
                n_trees: 50,
                max_depth: 30,
                max_features_exponent: 0.5,
                min_samples_split: 2,
                bootstrap: true,
            }),
        }
    }

    pub fn kind(&self) -> LearnerKind {
        match self {
            Hyperparams::MultinomialNb { .. } => LearnerKind::MultinomialNb,
            Hyperparams::LogisticRegression(_) => LearnerKind::LogisticRegression,
            Hyperparams::LinearSvm(_) => LearnerKind::LinearSvm,
            Hyperparams::RandomForest(_) => LearnerKind::RandomForest,
        }
    }

    /// Values in the order of [`LearnerKind::param_space`].
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Hyperparams::MultinomialNb { alpha } => vec![alpha],
            Hyperparams::LogisticRegression(p) | Hyperparams::LinearSvm(p) => {
                vec![p.l2, p.learning_rate, p.epochs as f64]
            }
            Hyperparams::RandomForest(p) => vec![
                p.n_trees as f64,
                p.max_depth as f64,
                p.max_features_exponent,
                p.min_samples_split as f64,
                f64::from(u8::from(p.bootstrap)),
            ],
        }
    }

    fn from_values(kind: LearnerKind, v: &[f64]) -> Self {
        match kind {
            LearnerKind::MultinomialNb => Hyperparams::MultinomialNb { alpha: v[0] },
            LearnerKind::LogisticRegression | LearnerKind::LinearSvm => {
                let p = LinearParams {
                    l2: v[0],
                    learning_rate: v[1],
                    epochs: v[2] as usize,
                };
                if kind == LearnerKind::LinearSvm {
                    Hyperparams::LinearSvm(p)
                } else {
                    Hyperparams::LogisticRegression(p)
                }
            }
            LearnerKind::RandomForest => Hyperparams::RandomForest(ForestParams {
                n_trees: v[0] as usize,
                max_depth: v[1] as usize,
                max_features_exponent: v[2],
                min_samples_split: v[3] as usize,
                bootstrap: v[4] != 0.0,
            }),
        }
    }

    /// Draws every parameter independently from its declared domain.
    pub fn sample<R: Rng + ?Sized>(kind: LearnerKind, rng: &mut R) -> Self {
        let values: Vec<f64> = kind.param_space().iter().map(|s| s.domain.sample(rng)).collect();
        Self::from_values(kind, &values)
    }

    pub fn validate(&self) -> Result<()> {
        for (spec, v) in self.kind().param_space().iter().zip(self.values()) {
            if !spec.domain.contains(v) {
                return Err(Error::InvalidHyperparameter {
                    name: spec.name,
                    value: v.to_string(),
                    reason: format!("outside {:?}", spec.domain),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("hyperparameters serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", tag = "type", rename_all = "snake_case")]
enum ModelParams<T: Scalar> {
    /// Single observed class.
    Constant,
    NaiveBayes(NaiveBayes<T>),
    Linear(LinearModel<T>),
    Forest(RandomForest<T>),
}

/// A fitted classifier. Internally the observed classes are numbered
/// `0..classes.len()` in canonical label order ("slots").
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainedModel<T: Scalar> {
    hyperparams: Hyperparams,
    classes: Vec<SentimentLabel>,
    dim: usize,
    fingerprint: String,
    params: ModelParams<T>,
}

pub fn train<T: Scalar>(hp: &Hyperparams, m: &FeatureMatrix<T>, seed: u64) -> Result<TrainedModel<T>> {
    hp.validate()?;
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let classes: Vec<SentimentLabel> = m.class_counts().present().collect();
    let mut slot_of = [usize::MAX; SentimentLabel::COUNT];
    for (s, l) in classes.iter().enumerate() {
        slot_of[l.index()] = s;
    }
    let targets: Vec<usize> = m.labels().iter().map(|l| slot_of[l.index()]).collect();

    let params = if classes.len() == 1 {
        ModelParams::Constant
    } else {
        let k = classes.len();
        match hp {
            Hyperparams::MultinomialNb { alpha } => {
                ModelParams::NaiveBayes(NaiveBayes::fit(m.rows(), &targets, k, m.dim(), *alpha))
            }
            Hyperparams::LogisticRegression(p) => {
                ModelParams::Linear(LinearModel::fit_logistic(m.rows(), &targets, k, m.dim(), p, seed))
            }
            Hyperparams::LinearSvm(p) => {
                ModelParams::Linear(LinearModel::fit_svm(m.rows(), &targets, k, m.dim(), p, seed))
            }
            Hyperparams::RandomForest(p) => {
                ModelParams::Forest(RandomForest::fit(m.rows(), &targets, k, m.dim(), p, seed))
            }
        }
    };
    Ok(TrainedModel {
        hyperparams: *hp,
        classes,
        dim: m.dim(),
        fingerprint: m.fingerprint().to_string(),
        params,
    })
}

impl<T: Scalar> TrainedModel<T> {
    pub fn kind(&self) -> LearnerKind {
        self.hyperparams.kind()
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    /// Observed classes in canonical order.
    pub fn classes(&self) -> &[SentimentLabel] {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn naive_bayes(&self) -> Option<&NaiveBayes<T>> {
        match &self.params {
            ModelParams::NaiveBayes(nb) => Some(nb),
            _ => None,
        }
    }

    pub fn linear(&self) -> Option<&LinearModel<T>> {
        match &self.params {
            ModelParams::Linear(l) => Some(l),
            _ => None,
        }
    }

    pub fn forest(&self) -> Option<&RandomForest<T>> {
        match &self.params {
            ModelParams::Forest(f) => Some(f),
            _ => None,
        }
    }

    fn check_dims(&self, rows: &[SparseVector<T>]) -> Result<()> {
        match rows.iter().find(|r| r.dim() != self.dim) {
            Some(r) => Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: r.dim(),
            }),
            None => Ok(()),
        }
    }

    fn slot_scores(&self, row: &SparseVector<T>) -> Vec<T> {
        match &self.params {
            ModelParams::Constant => vec![T::one()],
            ModelParams::NaiveBayes(nb) => nb.posteriors(row),
            ModelParams::Linear(l) => l.probabilities(row),
            ModelParams::Forest(f) => f.vote_fractions(row),
        }
    }

    /// Naive Bayes: posterior probabilities. Linear models: softmax of the
    /// class margins. Forest: fraction of trees voting for each class.
    pub fn predict_scores(&self, rows: &[SparseVector<T>]) -> Result<Vec<ClassScores<T>>> {
        self.check_dims(rows)?;
        Ok(rows
            .iter()
            .map(|row| {
                let mut out = [T::zero(); SentimentLabel::COUNT];
                for (slot, s) in self.slot_scores(row).into_iter().enumerate() {
                    out[self.classes[slot].index()] = s;
                }
                out
            })
            .collect())
    }

    /// Argmax of [`predict_scores`](Self::predict_scores), ties to the
    /// earlier label.
    pub fn predict(&self, rows: &[SparseVector<T>]) -> Result<Vec<SentimentLabel>> {
        Ok(self
            .predict_scores(rows)?
            .iter()
            .map(|s| SentimentLabel::from_index(argmax(s)))
            .collect())
    }

    /// Per-feature evidence for `label`; larger means more indicative.
    /// `None` when the label was not seen in training.
    ///
    /// * naive Bayes: `log P(f|c) - max_{c' != c} log P(f|c')`
    /// * linear: `w_c[f] - max_{c' != c} w_{c'}[f]`
    /// * forest: impurity-decrease importance, positive when `c` is the
    ///   class most often carrying the feature and negative otherwise
    pub fn feature_scores(&self, label: SentimentLabel) -> Option<Vec<f64>> {
        let slot = self.classes.iter().position(|&c| c == label)?;
        Some(match &self.params {
            ModelParams::Constant => vec![0.0; self.dim],
            ModelParams::NaiveBayes(nb) => nb.discriminative_scores(slot),
            ModelParams::Linear(l) => l.margin_scores(slot),
            ModelParams::Forest(f) => f.signed_importance(slot),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ModelFile {
            format: MODEL_FORMAT.to_string(),
            scalar: T::NAME.to_string(),
            model: self.clone(),
        })?)
    }

    /// Loads a model file, checking it was trained against the dictionary
    /// with `expected_fingerprint`.
    pub fn from_json(text: &str, expected_fingerprint: &str) -> Result<Self> {
        let file: ModelFile<T> = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT || file.scalar != T::NAME {
            return Err(Error::invalid(format!(
                "unsupported model file ({} / {})",
                file.format, file.scalar
            )));
        }
        if file.model.fingerprint != expected_fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: expected_fingerprint.to_string(),
                actual: file.model.fingerprint,
            });
        }
        Ok(file.model)
    }
}

const MODEL_FORMAT: &str = "sentigram-model-v1";

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct ModelFile<T: Scalar> {
    format: String,
    scalar: String,
    model: TrainedModel<T>,
}

/// Numerically stable softmax.
pub(crate) fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
