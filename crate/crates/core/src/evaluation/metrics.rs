use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::SentimentLabel;
use crate::error::{Error, Result};

const K: usize = SentimentLabel::COUNT;

/// Counts indexed `[true][predicted]` in canonical label order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; K]; K],
}

pub fn confusion_matrix(y_true: &[SentimentLabel], y_pred: &[SentimentLabel]) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (t, p) in y_true.iter().zip(y_pred) {
        cm.counts[t.index()][p.index()] += 1;
    }
    Ok(cm)
}

impl ConfusionMatrix {
    pub fn get(&self, truth: SentimentLabel, predicted: SentimentLabel) -> u64 {
        self.counts[truth.index()][predicted.index()]
    }

    /// Number of correct predictions.
    pub fn trace(&self) -> u64 {
        (0..K).map(|i| self.counts[i][i]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// True instances of `label`.
    pub fn support(&self, label: SentimentLabel) -> u64 {
        self.counts[label.index()].iter().sum()
    }

    pub fn predicted(&self, label: SentimentLabel) -> u64 {
        self.counts.iter().map(|row| row[label.index()]).sum()
    }

    pub fn transpose(&self) -> Self {
        let mut t = ConfusionMatrix::default();
        for i in 0..K {
            for j in 0..K {
                t.counts[j][i] = self.counts[i][j];
            }
        }
        t
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        for i in 0..K {
            for j in 0..K {
                self.counts[i][j] += other.counts[i][j];
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetric {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    /// False when the class has neither true instances nor predictions;
    /// such rows print as `-`.
    pub defined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub positive: ClassMetric,
    pub neutral: ClassMetric,
    pub negative: ClassMetric,
}

impl ClassMetrics {
    pub fn get(&self, label: SentimentLabel) -> &ClassMetric {
        match label {
            SentimentLabel::Positive => &self.positive,
            SentimentLabel::Neutral => &self.neutral,
            SentimentLabel::Negative => &self.negative,
        }
    }

    fn from_array(a: [ClassMetric; K]) -> Self {
        let [positive, neutral, negative] = a;
        ClassMetrics {
            positive,
            neutral,
            negative,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (SentimentLabel, &ClassMetric)> {
        SentimentLabel::ALL.into_iter().map(move |l| (l, self.get(l)))
    }

    /// Per-class arithmetic mean over the rounds where the class is
    /// defined. Supports are summed.
    pub fn mean(rounds: &[ClassMetrics]) -> Self {
        Self::from_array(SentimentLabel::ALL.map(|l| {
            let defined: Vec<&ClassMetric> = rounds.iter().map(|r| r.get(l)).filter(|m| m.defined).collect();
            let support = rounds.iter().map(|r| r.get(l).support).sum();
            if defined.is_empty() {
                return ClassMetric {
                    precision: 0.0,
                    recall: 0.0,
                    f1: 0.0,
                    support,
                    defined: false,
                };
            }
            let n = defined.len() as f64;
            ClassMetric {
                precision: defined.iter().map(|m| m.precision).sum::<f64>() / n,
                recall: defined.iter().map(|m| m.recall).sum::<f64>() / n,
                f1: defined.iter().map(|m| m.f1).sum::<f64>() / n,
                support,
                defined: true,
            }
        }))
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Precision, recall and F1 per class. Zero denominators give 0.
pub fn per_class_prf(cm: &ConfusionMatrix) -> ClassMetrics {
    ClassMetrics::from_array(SentimentLabel::ALL.map(|l| {
        let tp = cm.get(l, l);
        let support = cm.support(l);
        let predicted = cm.predicted(l);
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        ClassMetric {
            precision,
            recall,
            f1,
            support,
            defined: support > 0 || predicted > 0,
        }
    }))
}

/// Support-weighted mean F1; classes without support are left out.
pub fn weighted_f1(metrics: &ClassMetrics) -> Result<f64> {
    let supports: Vec<u64> = metrics.iter().map(|(_, m)| m.support).collect();
    let f1s: Vec<f64> = metrics.iter().map(|(_, m)| m.f1).collect();
    weighted_f1_from(&supports, &f1s)
}

pub fn weighted_f1_from(supports: &[u64], f1s: &[f64]) -> Result<f64> {
    if supports.len() != f1s.len() {
        return Err(Error::LengthMismatch {
            left: supports.len(),
            right: f1s.len(),
        });
    }
    let total: u64 = supports.iter().sum();
    if total == 0 {
        return Err(Error::invalid("weighted F1 needs at least one supported class"));
    }
    let acc: f64 = supports
        .iter()
        .zip(f1s)
        .filter(|(&s, _)| s > 0)
        .map(|(&s, &f)| s as f64 * f)
        .sum();
    Ok(acc / total as f64)
}

/// Weighted F1 straight from label sequences.
pub fn weighted_f1_score(y_true: &[SentimentLabel], y_pred: &[SentimentLabel]) -> Result<f64> {
    weighted_f1(&per_class_prf(&confusion_matrix(y_true, y_pred)?))
}

/// Renders a metric value, or `-` for an undefined class.
pub struct Cell<'a>(pub &'a ClassMetric, pub f64);

impl fmt::Display for Cell<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = f.width().unwrap_or(0);
        if self.0.defined {
            write!(f, "{:>width$.3}", self.1)
        } else {
            write!(f, "{:>width$}", "-")
        }
    }
}
