use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::SparseVector;
use crate::num::{argmax, lit, Scalar};

use super::ForestParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
enum Node<T: Scalar> {
    Leaf {
        slot: usize,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: u32,
        threshold: T,
        left: u32,
        right: u32,
    },
}

/// CART classification tree with Gini impurity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DecisionTree<T: Scalar> {
    nodes: Vec<Node<T>>,
    /// Weighted impurity decrease per feature, normalized by sample weight.
    /// Emptied once a forest has pooled it.
    #[serde(skip)]
    importance: Vec<f64>,
}

/// Column-major copy of the training rows: `(row, value)` per feature.
pub(super) struct Columns<T: Scalar> {
    cols: Vec<Vec<(u32, T)>>,
}

impl<T: Scalar> Columns<T> {
    pub(super) fn new(rows: &[SparseVector<T>], dim: usize) -> Self {
        let mut cols = vec![Vec::new(); dim];
        for (r, row) in rows.iter().enumerate() {
            for (f, v) in row.iter() {
                cols[f].push((r as u32, v));
            }
        }
        Columns { cols }
    }
}

#[derive(Clone, Copy)]
struct TreeSettings {
    max_depth: usize,
    max_features_exponent: f64,
    min_samples_split: usize,
}

struct Builder<'a, T: Scalar> {
    rows: &'a [SparseVector<T>],
    columns: &'a Columns<T>,
    targets: &'a [usize],
    weight: Vec<u32>,
    k: usize,
    settings: TreeSettings,
    rng: ChaCha8Rng,
    row_stamp: Vec<u32>,
    feat_stamp: Vec<u32>,
    stamp: u32,
    nodes: Vec<Node<T>>,
    importance: Vec<f64>,
    total_weight: f64,
}

struct BestSplit<T> {
    gain: f64,
    feature: usize,
    threshold: T,
}

fn gini(counts: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / total) * (c / total)).sum::<f64>()
}

impl<'a, T: Scalar> Builder<'a, T> {
    fn class_counts(&self, members: &[u32]) -> Vec<f64> {
        let mut counts = vec![0.0; self.k];
        for &r in members {
            counts[self.targets[r as usize]] += self.weight[r as usize] as f64;
        }
        counts
    }

    fn next_stamp(&mut self) -> u32 {
        self.stamp += 1;
        self.stamp
    }

    fn grow(&mut self, members: Vec<u32>, depth: usize) -> u32 {
        let counts = self.class_counts(&members);
        let total: f64 = counts.iter().sum();
        let id = self.nodes.len() as u32;
        let leaf = Node::Leaf {
            slot: argmax(&counts),
        };
        self.nodes.push(leaf);

        let pure = counts.iter().filter(|&&c| c > 0.0).count() <= 1;
        if pure || depth >= self.settings.max_depth || total < self.settings.min_samples_split as f64 {
            return id;
        }
        let Some(best) = self.best_split(&members, &counts, total) else {
            return id;
        };

        self.importance[best.feature] += best.gain * total / self.total_weight;
        let (left, right): (Vec<u32>, Vec<u32>) = members
            .iter()
            .partition(|&&r| self.rows[r as usize].get(best.feature) <= best.threshold);
        let left_id = self.grow(left, depth + 1);
        let right_id = self.grow(right, depth + 1);
        self.nodes[id as usize] = Node::Split {
            feature: best.feature as u32,
            threshold: best.threshold,
            left: left_id,
            right: right_id,
        };
        id
    }

    fn best_split(&mut self, members: &[u32], counts: &[f64], total: f64) -> Option<BestSplit<T>> {
        // Candidate features: those nonzero in at least one member row.
        let fstamp = self.next_stamp();
        let mut active: Vec<usize> = Vec::new();
        for &r in members {
            for &f in self.rows[r as usize].indices() {
                if self.feat_stamp[f as usize] != fstamp {
                    self.feat_stamp[f as usize] = fstamp;
                    active.push(f as usize);
                }
            }
        }
        if active.is_empty() {
            return None;
        }
        active.sort_unstable();
        let m = ((active.len() as f64).powf(self.settings.max_features_exponent).ceil() as usize)
            .clamp(1, active.len());
        let (mut first, mut rest): (Vec<usize>, Vec<usize>) = if m == active.len() {
            (active, Vec::new())
        } else {
            active.shuffle(&mut self.rng);
            let rest = active.split_off(m);
            (active, rest)
        };
        first.sort_unstable();

        let rstamp = self.next_stamp();
        for &r in members {
            self.row_stamp[r as usize] = rstamp;
        }
        let parent = gini(counts, total);
        let mut best: Option<BestSplit<T>> = None;
        self.scan(&first, rstamp, counts, total, parent, &mut best);
        if best.is_none() && !rest.is_empty() {
            // No useful split among the sampled features; keep looking.
            rest.sort_unstable();
            self.scan(&rest, rstamp, counts, total, parent, &mut best);
        }
        best
    }

    fn scan(
        &self,
        features: &[usize],
        rstamp: u32,
        counts: &[f64],
        total: f64,
        parent: f64,
        best: &mut Option<BestSplit<T>>,
    ) {
        let mut entries: Vec<(T, usize, f64)> = Vec::new();
        for &f in features {
            entries.clear();
            let mut zero_counts = counts.to_vec();
            for &(r, v) in &self.columns.cols[f] {
                if self.row_stamp[r as usize] == rstamp {
                    let w = self.weight[r as usize] as f64;
                    let slot = self.targets[r as usize];
                    zero_counts[slot] -= w;
                    entries.push((v, slot, w));
                }
            }
            let zero_total: f64 = zero_counts.iter().sum();
            if zero_total > 0.0 {
                for (slot, &w) in zero_counts.iter().enumerate() {
                    if w > 0.0 {
                        entries.push((T::zero(), slot, w));
                    }
                }
            }
            entries.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));

            let mut left = vec![0.0; self.k];
            let mut left_total = 0.0;
            for i in 0..entries.len() - 1 {
                let (v, slot, w) = entries[i];
                left[slot] += w;
                left_total += w;
                let next = entries[i + 1].0;
                if next <= v {
                    continue;
                }
                let right: Vec<f64> = counts.iter().zip(&left).map(|(c, l)| c - l).collect();
                let right_total = total - left_total;
                let child = (left_total * gini(&left, left_total) + right_total * gini(&right, right_total)) / total;
                let gain = parent - child;
                if gain > 1e-12 && best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = (v + next) * lit(0.5);
                    if !(threshold >= v && threshold < next) {
                        threshold = v;
                    }
                    *best = Some(BestSplit {
                        gain,
                        feature: f,
                        threshold,
                    });
                }
            }
        }
    }
}

impl<T: Scalar> DecisionTree<T> {
    /// Fits a tree on all rows with unit weights.
    pub fn fit(
        rows: &[SparseVector<T>],
        targets: &[usize],
        n_classes: usize,
        dim: usize,
        params: &ForestParams,
        seed: u64,
    ) -> Self {
        let columns = Columns::new(rows, dim);
        Self::fit_weighted(rows, &columns, targets, n_classes, vec![1; rows.len()], params, seed)
    }

    fn fit_weighted(
        rows: &[SparseVector<T>],
        columns: &Columns<T>,
        targets: &[usize],
        k: usize,
        weight: Vec<u32>,
        params: &ForestParams,
        seed: u64,
    ) -> Self {
        let dim = columns.cols.len();
        let members: Vec<u32> = (0..rows.len() as u32).filter(|&r| weight[r as usize] > 0).collect();
        let total_weight = weight.iter().map(|&w| w as f64).sum::<f64>().max(1.0);
        let mut b = Builder {
            rows,
            columns,
            targets,
            weight,
            k,
            settings: TreeSettings {
                max_depth: params.max_depth,
                max_features_exponent: params.max_features_exponent,
                min_samples_split: params.min_samples_split,
            },
            rng: ChaCha8Rng::seed_from_u64(seed),
            row_stamp: vec![0; rows.len()],
            feat_stamp: vec![0; dim],
            stamp: 0,
            nodes: Vec::new(),
            importance: vec![0.0; dim],
            total_weight,
        };
        b.grow(members, 0);
        DecisionTree {
            nodes: b.nodes,
            importance: b.importance,
        }
    }

    pub fn predict_slot(&self, row: &SparseVector<T>) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { slot } => return *slot,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if row.get(*feature as usize) <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn importance(&self) -> &[f64] {
        &self.importance
    }
}

/// Bagged decision trees voting by majority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RandomForest<T: Scalar> {
    trees: Vec<DecisionTree<T>>,
    n_classes: usize,
    /// Mean impurity-decrease importance over trees.
    importance: Vec<f64>,
    /// Slot with the most training rows carrying each feature, or `None`.
    hit_majority: Vec<Option<usize>>,
}

impl<T: Scalar> RandomForest<T> {
    pub(super) fn fit(
        rows: &[SparseVector<T>],
        targets: &[usize],
        k: usize,
        dim: usize,
        params: &ForestParams,
        seed: u64,
    ) -> Self {
        let columns = Columns::new(rows, dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rows.len();
        let plans: Vec<(Vec<u32>, u64)> = (0..params.n_trees)
            .map(|_| {
                let weight = if params.bootstrap {
                    let mut w = vec![0u32; n];
                    for _ in 0..n {
                        w[rng.random_range(0..n)] += 1;
                    }
                    w
                } else {
                    vec![1; n]
                };
                (weight, rng.random())
            })
            .collect();
        let trees: Vec<DecisionTree<T>> = plans
            .into_par_iter()
            .map(|(weight, tree_seed)| {
                DecisionTree::fit_weighted(rows, &columns, targets, k, weight, params, tree_seed)
            })
            .collect();

        let mut trees = trees;
        let mut importance = vec![0.0; dim];
        let n_trees = trees.len() as f64;
        for t in &mut trees {
            for (acc, v) in importance.iter_mut().zip(&t.importance) {
                *acc += v / n_trees;
            }
            // Only the forest-level mean survives serialization.
            t.importance = Vec::new();
        }
        let hit_majority = columns
            .cols
            .iter()
            .map(|col| {
                if col.is_empty() {
                    return None;
                }
                let mut hits = vec![0usize; k];
                for &(r, _) in col {
                    hits[targets[r as usize]] += 1;
                }
                Some(argmax(&hits))
            })
            .collect();
        RandomForest {
            trees,
            n_classes: k,
            importance,
            hit_majority,
        }
    }

    pub fn trees(&self) -> &[DecisionTree<T>] {
        &self.trees
    }

    pub fn importance(&self) -> &[f64] {
        &self.importance
    }

    pub(super) fn vote_fractions(&self, row: &SparseVector<T>) -> Vec<T> {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict_slot(row)] += 1;
        }
        let n = self.trees.len() as f64;
        votes.into_iter().map(|v| lit(v as f64 / n)).collect()
    }

    pub(super) fn signed_importance(&self, slot: usize) -> Vec<f64> {
        self.importance
            .iter()
            .zip(&self.hit_majority)
            .map(|(&imp, maj)| match maj {
                Some(s) if *s == slot => imp,
                Some(_) => -imp,
                None => 0.0,
            })
            .collect()
    }
}
