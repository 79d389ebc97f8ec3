use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::SparseVector;
use crate::num::{lit, Scalar};

use super::{softmax, LinearParams};

/// Relative objective change below which training stops early.
const TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearLoss {
    /// Multinomial cross-entropy over all classes jointly.
    Logistic,
    /// One binary hinge-loss classifier per class.
    Hinge,
}

/// Weight matrix plus bias, one row per observed class.
///
/// Trained by epoch-based stochastic (sub)gradient descent: every epoch
/// visits the rows in a freshly shuffled order drawn from the seed, with
/// step size `learning_rate / sqrt(1 + epoch)`. The L2 penalty is applied
/// through a shared scale factor so each step only touches the row's
/// nonzero features. The bias is not penalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LinearModel<T: Scalar> {
    loss: LinearLoss,
    weights: Vec<Vec<T>>,
    bias: Vec<T>,
    /// Full training objective after each epoch.
    objective_trace: Vec<f64>,
}

/// `(1/n) sum_i [logsumexp(z_i) - z_i[y_i]] + (l2/2) ||W||^2` with
/// `z_i = W x_i + b`.
pub fn logistic_objective<T: Scalar>(
    weights: &[Vec<T>],
    bias: &[T],
    rows: &[SparseVector<T>],
    targets: &[usize],
    l2: f64,
) -> T {
    let n = lit::<T>(rows.len() as f64);
    let data: T = rows
        .iter()
        .zip(targets)
        .map(|(x, &y)| {
            let z = margins(weights, bias, x, T::one());
            log_sum_exp(&z) - z[y]
        })
        .sum();
    data / n + lit::<T>(0.5 * l2) * squared_norm(weights)
}

/// Analytic gradient of [`logistic_objective`] as `(dW, db)`.
pub fn logistic_gradient<T: Scalar>(
    weights: &[Vec<T>],
    bias: &[T],
    rows: &[SparseVector<T>],
    targets: &[usize],
    l2: f64,
) -> (Vec<Vec<T>>, Vec<T>) {
    let n = lit::<T>(rows.len() as f64);
    let l2 = lit::<T>(l2);
    let mut gw: Vec<Vec<T>> = weights
        .iter()
        .map(|w| w.iter().map(|&v| l2 * v).collect())
        .collect();
    let mut gb = vec![T::zero(); bias.len()];
    for (x, &y) in rows.iter().zip(targets) {
        let p = softmax(&margins(weights, bias, x, T::one()));
        for (c, &pc) in p.iter().enumerate() {
            let g = (pc - if c == y { T::one() } else { T::zero() }) / n;
            gb[c] += g;
            for (f, v) in x.iter() {
                gw[c][f] += g * v;
            }
        }
    }
    (gw, gb)
}

fn margins<T: Scalar>(weights: &[Vec<T>], bias: &[T], x: &SparseVector<T>, scale: T) -> Vec<T> {
    weights
        .iter()
        .zip(bias)
        .map(|(w, &b)| scale * x.dot_dense(w) + b)
        .collect()
}

fn log_sum_exp<T: Scalar>(z: &[T]) -> T {
    let max = z.iter().copied().fold(T::neg_infinity(), T::max);
    max + z.iter().map(|&v| (v - max).exp()).sum::<T>().ln()
}

fn squared_norm<T: Scalar>(weights: &[Vec<T>]) -> T {
    weights.iter().flatten().map(|&v| v * v).sum()
}

fn hinge_objective<T: Scalar>(
    weights: &[Vec<T>],
    bias: &[T],
    scale: T,
    rows: &[SparseVector<T>],
    targets: &[usize],
    l2: f64,
) -> f64 {
    let n = rows.len() as f64;
    let mut loss = 0.0;
    for (x, &y) in rows.iter().zip(targets) {
        for (c, m) in margins(weights, bias, x, scale).into_iter().enumerate() {
            let sign = if c == y { 1.0 } else { -1.0 };
            loss += (1.0 - sign * m.as_f64()).max(0.0);
        }
    }
    let s = scale.as_f64();
    loss / n + 0.5 * l2 * s * s * squared_norm(weights).as_f64()
}

/// Shared SGD state: effective weights are `scale * raw`.
struct Sgd<T: Scalar> {
    raw: Vec<Vec<T>>,
    bias: Vec<T>,
    scale: T,
}

impl<T: Scalar> Sgd<T> {
    fn new(k: usize, dim: usize) -> Self {
        Sgd {
            raw: vec![vec![T::zero(); dim]; k],
            bias: vec![T::zero(); k],
            scale: T::one(),
        }
    }

    fn margins(&self, x: &SparseVector<T>) -> Vec<T> {
        margins(&self.raw, &self.bias, x, self.scale)
    }

    fn shrink(&mut self, factor: T) {
        self.scale *= factor;
        if self.scale < lit(1e-6) {
            self.fold_scale();
        }
    }

    fn fold_scale(&mut self) {
        let s = self.scale;
        for w in &mut self.raw {
            for v in w.iter_mut() {
                *v *= s;
            }
        }
        self.scale = T::one();
    }

    /// Adds `step * x` to class `c`'s effective weights and `step` to its bias.
    fn add(&mut self, c: usize, x: &SparseVector<T>, step: T) {
        let w = &mut self.raw[c];
        let s = step / self.scale;
        for (f, v) in x.iter() {
            w[f] += s * v;
        }
        self.bias[c] += step;
    }

    fn into_weights(mut self) -> (Vec<Vec<T>>, Vec<T>) {
        self.fold_scale();
        (self.raw, self.bias)
    }
}

fn converged(prev: f64, cur: f64) -> bool {
    (prev - cur).abs() <= TOLERANCE * prev.abs().max(1e-12)
}

impl<T: Scalar> LinearModel<T> {
    pub(super) fn fit_logistic(
        rows: &[SparseVector<T>],
        targets: &[usize],
        k: usize,
        dim: usize,
        p: &LinearParams,
        seed: u64,
    ) -> Self {
        Self::fit(LinearLoss::Logistic, rows, targets, k, dim, p, seed)
    }

    pub(super) fn fit_svm(
        rows: &[SparseVector<T>],
        targets: &[usize],
        k: usize,
        dim: usize,
        p: &LinearParams,
        seed: u64,
    ) -> Self {
        Self::fit(LinearLoss::Hinge, rows, targets, k, dim, p, seed)
    }

    fn fit(
        loss: LinearLoss,
        rows: &[SparseVector<T>],
        targets: &[usize],
        k: usize,
        dim: usize,
        p: &LinearParams,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = Sgd::new(k, dim);
        let mut order: Vec<usize> = (0..rows.len()).collect();
        let mut trace = Vec::with_capacity(p.epochs);
        let objective = |s: &Sgd<T>| match loss {
            LinearLoss::Logistic => {
                let mut w = s.raw.clone();
                for row in &mut w {
                    for v in row.iter_mut() {
                        *v *= s.scale;
                    }
                }
                logistic_objective(&w, &s.bias, rows, targets, p.l2).as_f64()
            }
            LinearLoss::Hinge => hinge_objective(&s.raw, &s.bias, s.scale, rows, targets, p.l2),
        };

        let mut prev = objective(&state);
        for epoch in 0..p.epochs {
            order.shuffle(&mut rng);
            let eta = p.learning_rate / (1.0 + epoch as f64).sqrt();
            let shrink = lit::<T>(1.0 - eta * p.l2);
            let eta = lit::<T>(eta);
            for &i in &order {
                let x = &rows[i];
                let y = targets[i];
                let z = state.margins(x);
                state.shrink(shrink);
                match loss {
                    LinearLoss::Logistic => {
                        for (c, pc) in softmax(&z).into_iter().enumerate() {
                            let g = pc - if c == y { T::one() } else { T::zero() };
                            if !g.is_zero() {
                                state.add(c, x, -eta * g);
                            }
                        }
                    }
                    LinearLoss::Hinge => {
                        for (c, m) in z.into_iter().enumerate() {
                            let sign = if c == y { T::one() } else { -T::one() };
                            if sign * m < T::one() {
                                state.add(c, x, eta * sign);
                            }
                        }
                    }
                }
            }
            let cur = objective(&state);
            trace.push(cur);
            if converged(prev, cur) {
                break;
            }
            prev = cur;
        }

        let (weights, bias) = state.into_weights();
        LinearModel {
            loss,
            weights,
            bias,
            objective_trace: trace,
        }
    }

    pub fn loss(&self) -> LinearLoss {
        self.loss
    }

    /// `[slot][feature]`
    pub fn weights(&self) -> &[Vec<T>] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn objective_trace(&self) -> &[f64] {
        &self.objective_trace
    }

    pub fn decision_function(&self, row: &SparseVector<T>) -> Vec<T> {
        margins(&self.weights, &self.bias, row, T::one())
    }

    pub(super) fn probabilities(&self, row: &SparseVector<T>) -> Vec<T> {
        softmax(&self.decision_function(row))
    }

    pub(super) fn margin_scores(&self, slot: usize) -> Vec<f64> {
        let dim = self.weights[slot].len();
        (0..dim)
            .map(|f| {
                let rival = (0..self.weights.len())
                    .filter(|&s| s != slot)
                    .map(|s| self.weights[s][f].as_f64())
                    .fold(f64::NEG_INFINITY, f64::max);
                self.weights[slot][f].as_f64() - rival
            })
            .collect()
    }
}
