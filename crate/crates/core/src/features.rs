//! Sparse document vectors over an n-gram dictionary, plus SMOTE
//! oversampling of training rows.

use std::collections::HashMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassCounts, SentimentLabel};
use crate::error::{Error, Result};
use crate::ngram::NGramDictionary;
use crate::num::{lit, Scalar};
use crate::preprocess::TokenSequence;

/// Sparse vector with strictly increasing indices and nonzero values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SparseVector<T: Scalar> {
    dim: usize,
    indices: Vec<u32>,
    values: Vec<T>,
}

impl<T: Scalar> SparseVector<T> {
    pub fn zeros(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds from unordered `(index, value)` pairs. Duplicate indices are
    /// summed and zeros dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, T)>) -> Result<Self> {
        let mut pairs: Vec<(usize, T)> = pairs.into_iter().collect();
        pairs.sort_by_key(|p| p.0);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values: Vec<T> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if i >= dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: i + 1,
                });
            }
            if indices.last() == Some(&(i as u32)) {
                *values.last_mut().expect("parallel to indices") += v;
            } else {
                indices.push(i as u32);
                values.push(v);
            }
        }
        let mut out = SparseVector {
            dim,
            indices,
            values,
        };
        out.drop_zeros();
        Ok(out)
    }

    pub fn from_dense(dense: &[T]) -> Self {
        let (indices, values) = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_zero())
            .map(|(i, &v)| (i as u32, v))
            .unzip();
        SparseVector {
            dim: dense.len(),
            indices,
            values,
        }
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|v| !v.is_zero()) {
            return;
        }
        let (indices, values) = self
            .indices
            .iter()
            .zip(&self.values)
            .filter(|(_, v)| !v.is_zero())
            .map(|(&i, &v)| (i, v))
            .unzip();
        self.indices = indices;
        self.values = values;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &v)| (i as usize, v))
    }

    pub fn get(&self, index: usize) -> T {
        match self.indices.binary_search(&(index as u32)) {
            Ok(p) => self.values[p],
            Err(_) => T::zero(),
        }
    }

    pub fn to_dense(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    /// Dot product with a dense slice of length `dim`.
    #[inline]
    pub fn dot_dense(&self, dense: &[T]) -> T {
        self.iter().fold(T::zero(), |acc, (i, v)| acc + v * dense[i])
    }

    pub fn squared_distance(&self, other: &Self) -> T {
        let (mut a, mut b) = (0, 0);
        let mut acc = T::zero();
        while a < self.nnz() || b < other.nnz() {
            let ia = self.indices.get(a).copied().unwrap_or(u32::MAX);
            let ib = other.indices.get(b).copied().unwrap_or(u32::MAX);
            let d = if ia == ib {
                let d = self.values[a] - other.values[b];
                a += 1;
                b += 1;
                d
            } else if ia < ib {
                a += 1;
                self.values[a - 1]
            } else {
                b += 1;
                other.values[b - 1]
            };
            acc += d * d;
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }
}

/// How a phrase's occurrence count becomes a feature value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureScheme {
    /// count x n-gram IDF weight
    #[default]
    CountXWeight,
    /// 1{count > 0} x weight
    BinaryXWeight,
    /// raw count
    Count,
}

impl std::str::FromStr for FeatureScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count_x_weight" => Ok(FeatureScheme::CountXWeight),
            "binary_x_weight" => Ok(FeatureScheme::BinaryXWeight),
            "count" => Ok(FeatureScheme::Count),
            _ => Err(Error::invalid(format!(
                "unknown feature scheme {s:?} (count_x_weight, binary_x_weight, count)"
            ))),
        }
    }
}

impl std::fmt::Display for FeatureScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureScheme::CountXWeight => "count_x_weight",
            FeatureScheme::BinaryXWeight => "binary_x_weight",
            FeatureScheme::Count => "count",
        })
    }
}

/// Contiguous occurrence counts of dictionary phrases in `ts`, keyed by
/// feature index. Overlapping occurrences all count.
pub fn phrase_counts(ts: &[String], d: &NGramDictionary) -> HashMap<usize, u64> {
    let mut counts = HashMap::new();
    for start in 0..ts.len() {
        let longest = d.max_n().min(ts.len() - start);
        for len in 1..=longest {
            if let Some(i) = d.index_of(&ts[start..start + len]) {
                *counts.entry(i).or_insert(0) += 1;
            }
        }
    }
    counts
}

pub fn vectorize<T: Scalar>(
    ts: &[String],
    d: &NGramDictionary,
    scheme: FeatureScheme,
) -> SparseVector<T> {
    let pairs = phrase_counts(ts, d).into_iter().map(|(i, c)| {
        let w = d.entry(i).weight;
        let v = match scheme {
            FeatureScheme::CountXWeight => c as f64 * w,
            FeatureScheme::BinaryXWeight => w,
            FeatureScheme::Count => c as f64,
        };
        (i, lit::<T>(v))
    });
    SparseVector::from_pairs(d.len(), pairs).expect("dictionary indices are in range")
}

/// Rows of sparse features with aligned labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct FeatureMatrix<T: Scalar> {
    dim: usize,
    rows: Vec<SparseVector<T>>,
    labels: Vec<SentimentLabel>,
    fingerprint: String,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn empty(dim: usize, fingerprint: impl Into<String>) -> Self {
        FeatureMatrix {
            dim,
            rows: Vec::new(),
            labels: Vec::new(),
            fingerprint: fingerprint.into(),
        }
    }

    /// Assembles a matrix from prepared rows. Every row must have `dim`.
    pub fn from_rows(
        dim: usize,
        rows: Vec<SparseVector<T>>,
        labels: Vec<SentimentLabel>,
        fingerprint: impl Into<String>,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: labels.len(),
            });
        }
        if let Some(r) = rows.iter().find(|r| r.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: r.dim(),
            });
        }
        Ok(FeatureMatrix {
            dim,
            rows,
            labels,
            fingerprint: fingerprint.into(),
        })
    }

    /// Vectorizes one more document against `d`, which must be the
    /// dictionary this matrix was built from.
    pub fn push_document(
        &mut self,
        ts: &[String],
        label: SentimentLabel,
        d: &NGramDictionary,
        scheme: FeatureScheme,
    ) -> Result<()> {
        if d.fingerprint() != self.fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: self.fingerprint.clone(),
                actual: d.fingerprint().to_string(),
            });
        }
        self.rows.push(vectorize(ts, d, scheme));
        self.labels.push(label);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[SparseVector<T>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &SparseVector<T> {
        &self.rows[i]
    }

    pub fn labels(&self) -> &[SentimentLabel] {
        &self.labels
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn class_counts(&self) -> ClassCounts {
        ClassCounts::from_labels(&self.labels)
    }

    /// New matrix holding the listed rows in the listed order.
    pub fn select(&self, rows: &[usize]) -> Self {
        FeatureMatrix {
            dim: self.dim,
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            fingerprint: self.fingerprint.clone(),
        }
    }

    /// Coordinate-format dump: one `row col value` line per stored value.
    pub fn write_coo<W: Write>(&self, mut w: W) -> Result<()> {
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row.iter() {
                writeln!(w, "{r} {c} {v}")?;
            }
        }
        Ok(())
    }

    /// Label sidecar for [`write_coo`](Self::write_coo): one label per line.
    pub fn write_labels<W: Write>(&self, mut w: W) -> Result<()> {
        for l in &self.labels {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }
}

pub fn vectorize_corpus<T: Scalar>(
    docs: &[TokenSequence],
    labels: &[SentimentLabel],
    d: &NGramDictionary,
    scheme: FeatureScheme,
) -> Result<FeatureMatrix<T>> {
    if docs.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: docs.len(),
            right: labels.len(),
        });
    }
    let rows = docs.par_iter().map(|ts| vectorize(ts, d, scheme)).collect();
    FeatureMatrix::from_rows(d.len(), rows, labels.to_vec(), d.fingerprint())
}

/// Grows every non-majority class to the majority count with synthetic
/// rows `x + lambda * (neighbour - x)`, `lambda ~ U[0, 1]`, where the
/// neighbour is one of the `k` nearest same-class rows by Euclidean
/// distance (ties to the lower row index). Original rows come first and are
/// untouched; synthetic rows follow, grouped by class in label order.
pub fn smote_oversample<T: Scalar>(
    m: &FeatureMatrix<T>,
    k: usize,
    seed: u64,
) -> Result<FeatureMatrix<T>> {
    if k == 0 {
        return Err(Error::invalid("SMOTE needs k >= 1"));
    }
    let counts = m.class_counts();
    let Some(majority) = counts.majority() else {
        return Ok(m.clone());
    };
    let target = counts.get(majority);

    let mut out = m.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for label in SentimentLabel::ALL {
        let have = counts.get(label);
        if have == 0 || have >= target {
            continue;
        }
        if have == 1 {
            return Err(Error::SingletonClass(label));
        }
        let members: Vec<usize> = (0..m.len()).filter(|&i| m.labels[i] == label).collect();
        let k_eff = k.min(members.len() - 1);
        let mut neighbours: HashMap<usize, Vec<usize>> = HashMap::new();
        for _ in 0..target - have {
            let base = members[rng.random_range(0..members.len())];
            let nn = neighbours
                .entry(base)
                .or_insert_with(|| nearest_same_class(m, base, &members, k_eff));
            let other = nn[rng.random_range(0..nn.len())];
            let lambda: f64 = rng.random();
            out.rows
                .push(interpolate(&m.rows[base], &m.rows[other], lit(lambda)));
            out.labels.push(label);
        }
    }
    Ok(out)
}

fn nearest_same_class<T: Scalar>(
    m: &FeatureMatrix<T>,
    base: usize,
    members: &[usize],
    k: usize,
) -> Vec<usize> {
    let mut dists: Vec<(T, usize)> = members
        .iter()
        .filter(|&&j| j != base)
        .map(|&j| (m.rows[base].squared_distance(&m.rows[j]), j))
        .collect();
    dists.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances").then(a.1.cmp(&b.1)));
    dists.into_iter().take(k).map(|(_, j)| j).collect()
}

/// `a + lambda (b - a)`, clamped per coordinate into `[min(a,b), max(a,b)]`
/// so rounding never leaves the segment's bounding box.
fn interpolate<T: Scalar>(a: &SparseVector<T>, b: &SparseVector<T>, lambda: T) -> SparseVector<T> {
    let mut pairs = Vec::with_capacity(a.nnz() + b.nnz());
    let (mut i, mut j) = (0, 0);
    while i < a.nnz() || j < b.nnz() {
        let ia = a.indices.get(i).copied().unwrap_or(u32::MAX);
        let ib = b.indices.get(j).copied().unwrap_or(u32::MAX);
        let (idx, va, vb) = if ia == ib {
            i += 1;
            j += 1;
            (ia, a.values[i - 1], b.values[j - 1])
        } else if ia < ib {
            i += 1;
            (ia, a.values[i - 1], T::zero())
        } else {
            j += 1;
            (ib, T::zero(), b.values[j - 1])
        };
        let v = (va + lambda * (vb - va)).max(va.min(vb)).min(va.max(vb));
        pairs.push((idx as usize, v));
    }
    SparseVector::from_pairs(a.dim, pairs).expect("indices come from valid vectors")
}
