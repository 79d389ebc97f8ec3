use serde::{Deserialize, Serialize};

use crate::automl::TrainedEnsemble;
use crate::corpus::SentimentLabel;
use crate::learners::TrainedModel;
use crate::ngram::NGramDictionary;
use crate::num::Scalar;

/// Anything that can score dictionary features per class.
pub trait FeatureRanking {
    /// One value per feature, larger meaning more indicative of `label`;
    /// `None` when the label was never seen.
    fn feature_ranking(&self, label: SentimentLabel) -> Option<Vec<f64>>;
}

impl<T: Scalar> FeatureRanking for TrainedModel<T> {
    fn feature_ranking(&self, label: SentimentLabel) -> Option<Vec<f64>> {
        self.feature_scores(label)
    }
}

/// Feature indices best first; ties keep dictionary order.
fn order(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Multiplicity-weighted Borda fusion of the member rankings, scaled to
/// `(0, 1]`.
impl<T: Scalar> FeatureRanking for TrainedEnsemble<T> {
    fn feature_ranking(&self, label: SentimentLabel) -> Option<Vec<f64>> {
        let mut fused: Option<Vec<f64>> = None;
        let mut weight = 0usize;
        for (model, mult) in self.members() {
            let Some(scores) = model.feature_scores(label) else {
                continue;
            };
            let d = scores.len();
            let acc = fused.get_or_insert_with(|| vec![0.0; d]);
            for (rank, f) in order(&scores).into_iter().enumerate() {
                acc[f] += (*mult * (d - rank)) as f64;
            }
            weight += mult;
        }
        fused.map(|acc| {
            let denom = (weight * acc.len().max(1)) as f64;
            acc.into_iter().map(|v| v / denom).collect()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedNgram {
    pub phrase: String,
    pub score: f64,
}

/// Top phrases per class in canonical label order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TopNgrams {
    pub positive: Vec<RankedNgram>,
    pub neutral: Vec<RankedNgram>,
    pub negative: Vec<RankedNgram>,
}

impl TopNgrams {
    pub fn get(&self, label: SentimentLabel) -> &[RankedNgram] {
        match label {
            SentimentLabel::Positive => &self.positive,
            SentimentLabel::Neutral => &self.neutral,
            SentimentLabel::Negative => &self.negative,
        }
    }

    fn get_mut(&mut self, label: SentimentLabel) -> &mut Vec<RankedNgram> {
        match label {
            SentimentLabel::Positive => &mut self.positive,
            SentimentLabel::Neutral => &mut self.neutral,
            SentimentLabel::Negative => &mut self.negative,
        }
    }

    /// Combines per-round lists by Borda points (`k - rank` for a list of
    /// length `k`), keeping the `k` best; ties go to the phrase text.
    pub fn fuse(lists: &[TopNgrams], k: usize) -> TopNgrams {
        let mut out = TopNgrams::default();
        for label in SentimentLabel::ALL {
            let mut points: std::collections::BTreeMap<&str, usize> = Default::default();
            for l in lists {
                let ranked = l.get(label);
                for (rank, r) in ranked.iter().enumerate() {
                    *points.entry(&r.phrase).or_insert(0) += ranked.len() - rank;
                }
            }
            let total = (lists.len() * k).max(1) as f64;
            let mut fused: Vec<(&str, usize)> = points.into_iter().collect();
            fused.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
            *out.get_mut(label) = fused
                .into_iter()
                .take(k)
                .map(|(p, s)| RankedNgram {
                    phrase: p.to_string(),
                    score: s as f64 / total,
                })
                .collect();
        }
        out
    }
}

/// The `k` most discriminative dictionary phrases for each class. A
/// class the model never saw gets an empty list.
pub fn top_ngrams_per_class<M: FeatureRanking + ?Sized>(model: &M, d: &NGramDictionary, k: usize) -> TopNgrams {
    let mut out = TopNgrams::default();
    if k == 0 {
        return out;
    }
    for label in SentimentLabel::ALL {
        let Some(scores) = model.feature_ranking(label) else {
            continue;
        };
        *out.get_mut(label) = order(&scores)
            .into_iter()
            .take(k)
            .map(|f| RankedNgram {
                phrase: d.entry(f).phrase_text(),
                score: scores[f],
            })
            .collect();
    }
    out
}
