use serde::{Deserialize, Serialize};

use crate::features::SparseVector;
use crate::num::{lit, Scalar};

use super::softmax;

/// Multinomial naive Bayes with additive (Laplace/Lidstone) smoothing.
///
/// Feature values act as fractional counts. Negative values (possible with
/// negative n-gram weights) are clamped to zero both in fitting and in
/// scoring, since the multinomial likelihood needs nonnegative evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct NaiveBayes<T: Scalar> {
    class_log_prior: Vec<T>,
    /// `[slot][feature]`
    feature_log_prob: Vec<Vec<T>>,
}

impl<T: Scalar> NaiveBayes<T> {
    pub(super) fn fit(
        rows: &[SparseVector<T>],
        targets: &[usize],
        n_classes: usize,
        dim: usize,
        alpha: f64,
    ) -> Self {
        let alpha = lit::<T>(alpha);
        let mut class_count = vec![0usize; n_classes];
        let mut feature_count = vec![vec![T::zero(); dim]; n_classes];
        for (row, &c) in rows.iter().zip(targets) {
            class_count[c] += 1;
            for (f, v) in row.iter() {
                if v > T::zero() {
                    feature_count[c][f] += v;
                }
            }
        }
        let n = lit::<T>(rows.len() as f64);
        let class_log_prior = class_count
            .iter()
            .map(|&c| (lit::<T>(c as f64) / n).ln())
            .collect();
        let feature_log_prob = feature_count
            .into_iter()
            .map(|counts| {
                let total: T = counts.iter().copied().sum::<T>() + alpha * lit(dim as f64);
                let log_total = total.ln();
                counts.into_iter().map(|c| (c + alpha).ln() - log_total).collect()
            })
            .collect();
        NaiveBayes {
            class_log_prior,
            feature_log_prob,
        }
    }

    pub fn class_log_prior(&self) -> &[T] {
        &self.class_log_prior
    }

    /// `log P(feature | class)` for the class in `slot`.
    pub fn feature_log_prob(&self, slot: usize) -> &[T] {
        &self.feature_log_prob[slot]
    }

    /// Unnormalized `log P(c) + sum_f x_f log P(f|c)` per slot.
    pub fn joint_log_likelihood(&self, row: &SparseVector<T>) -> Vec<T> {
        self.class_log_prior
            .iter()
            .zip(&self.feature_log_prob)
            .map(|(&prior, flp)| {
                row.iter()
                    .filter(|(_, v)| *v > T::zero())
                    .fold(prior, |acc, (f, v)| acc + v * flp[f])
            })
            .collect()
    }

    /// Normalized log posteriors per slot.
    pub fn log_posteriors(&self, row: &SparseVector<T>) -> Vec<T> {
        let jll = self.joint_log_likelihood(row);
        let max = jll.iter().copied().fold(T::neg_infinity(), T::max);
        let lse = max + jll.iter().map(|&v| (v - max).exp()).sum::<T>().ln();
        jll.into_iter().map(|v| v - lse).collect()
    }

    pub(super) fn posteriors(&self, row: &SparseVector<T>) -> Vec<T> {
        softmax(&self.joint_log_likelihood(row))
    }

    pub(super) fn discriminative_scores(&self, slot: usize) -> Vec<f64> {
        let dim = self.feature_log_prob[slot].len();
        (0..dim)
            .map(|f| {
                let own = self.feature_log_prob[slot][f].as_f64();
                let rival = (0..self.feature_log_prob.len())
                    .filter(|&s| s != slot)
                    .map(|s| self.feature_log_prob[s][f].as_f64())
                    .fold(f64::NEG_INFINITY, f64::max);
                own - rival
            })
            .collect()
    }
}
