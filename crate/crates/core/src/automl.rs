//! Budgeted random search over the learner portfolio, scored by
//! out-of-fold weighted F1, plus greedy ensemble selection.

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::SentimentLabel;
use crate::error::{Error, Result};
use crate::evaluation::metrics::weighted_f1_score;
use crate::features::{FeatureMatrix, SparseVector};
use crate::learners::{train, ClassScores, Hyperparams, LearnerKind, TrainedModel};
use crate::num::{argmax, lit, Scalar};

pub const DEFAULT_FOLDS: usize = 5;
pub const DEFAULT_ENSEMBLE_SIZE: usize = 10;
pub const DEFAULT_BUDGET_SECONDS: u64 = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateConfig {
    pub hyperparams: Hyperparams,
    pub seed: u64,
}

impl CandidateConfig {
    pub fn kind(&self) -> LearnerKind {
        self.hyperparams.kind()
    }
}

/// The candidate stream: one default configuration per kind, then kinds
/// and hyperparameters drawn at random. A pure function of `seed`.
pub fn candidate_sequence(seed: u64) -> impl Iterator<Item = CandidateConfig> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut defaults = LearnerKind::ALL.into_iter();
    std::iter::from_fn(move || {
        let hyperparams = match defaults.next() {
            Some(kind) => Hyperparams::default_for(kind),
            None => {
                let kind = LearnerKind::ALL[rng.random_range(0..LearnerKind::ALL.len())];
                Hyperparams::sample(kind, &mut rng)
            }
        };
        Some(CandidateConfig {
            hyperparams,
            seed: rng.random(),
        })
    })
}

fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stratified fold number for each row.
///
/// Within each class, rows are ordered by a seeded hash of their id and
/// dealt round-robin, so the assignment depends on labels, ids and seed
/// but not on row order.
pub fn stratified_folds(labels: &[SentimentLabel], ids: &[usize], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if labels.len() != ids.len() {
        return Err(Error::LengthMismatch {
            left: labels.len(),
            right: ids.len(),
        });
    }
    if folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {folds}")));
    }
    if labels.len() < folds {
        return Err(Error::DatasetTooSmall(format!(
            "{} rows cannot fill {folds} folds",
            labels.len()
        )));
    }
    let salt = mix(seed ^ 0x5eed_f01d);
    let mut assignment = vec![0; labels.len()];
    let mut offset = 0;
    for label in SentimentLabel::ALL {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&r| labels[r] == label).collect();
        members.sort_by_key(|&r| (mix(ids[r] as u64 ^ salt), ids[r]));
        for (i, &r) in members.iter().enumerate() {
            assignment[r] = (offset + i) % folds;
        }
        // Continue dealing where the previous class stopped so small
        // classes do not all land in fold 0.
        offset = (offset + members.len()) % folds;
    }
    Ok(assignment)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CandidateResult<T: Scalar> {
    pub config: CandidateConfig,
    /// Weighted F1 of the pooled out-of-fold predictions.
    pub score: f64,
    /// True when the training data holds a single class.
    pub degenerate: bool,
    /// Out-of-fold class scores, aligned with the training rows.
    pub oof: Vec<ClassScores<T>>,
}

pub fn evaluate_candidate<T: Scalar>(
    c: &CandidateConfig,
    m: &FeatureMatrix<T>,
    fold_of: &[usize],
) -> Result<CandidateResult<T>> {
    if fold_of.len() != m.len() {
        return Err(Error::LengthMismatch {
            left: fold_of.len(),
            right: m.len(),
        });
    }
    let folds = fold_of.iter().copied().max().map_or(0, |f| f + 1);
    let mut oof = vec![[T::zero(); SentimentLabel::COUNT]; m.len()];
    for f in 0..folds {
        let (held, kept): (Vec<usize>, Vec<usize>) = (0..m.len()).partition(|&r| fold_of[r] == f);
        if held.is_empty() {
            continue;
        }
        let model = train(&c.hyperparams, &m.select(&kept), c.seed)?;
        let rows: Vec<SparseVector<T>> = held.iter().map(|&r| m.row(r).clone()).collect();
        for (r, s) in held.iter().zip(model.predict_scores(&rows)?) {
            oof[*r] = s;
        }
    }
    let pred: Vec<SentimentLabel> = oof.iter().map(|s| SentimentLabel::from_index(argmax(s))).collect();
    Ok(CandidateResult {
        config: *c,
        score: weighted_f1_score(m.labels(), &pred)?,
        degenerate: m.class_counts().present().count() < 2,
        oof,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchBudget {
    pub time: Option<Duration>,
    pub max_candidates: Option<usize>,
}

impl SearchBudget {
    pub fn candidates(n: usize) -> Self {
        SearchBudget {
            time: None,
            max_candidates: Some(n),
        }
    }

    pub fn seconds(s: f64) -> Self {
        SearchBudget {
            time: Some(Duration::from_secs_f64(s)),
            max_candidates: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub folds: usize,
    pub budget: SearchBudget,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LeaderboardEntry<T: Scalar> {
    /// Position in the candidate stream.
    pub index: usize,
    #[serde(flatten)]
    pub result: CandidateResult<T>,
}

/// Evaluated candidates, best first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Leaderboard<T: Scalar> {
    entries: Vec<LeaderboardEntry<T>>,
    labels: Vec<SentimentLabel>,
    /// False when the budget ran out before every kind's default finished.
    pub complete: bool,
}

impl<T: Scalar> Leaderboard<T> {
    /// Sorts by descending score; equal scores keep stream order.
    pub fn new(mut entries: Vec<LeaderboardEntry<T>>, labels: Vec<SentimentLabel>) -> Result<Self> {
        if let Some(e) = entries.iter().find(|e| e.result.oof.len() != labels.len()) {
            return Err(Error::LengthMismatch {
                left: e.result.oof.len(),
                right: labels.len(),
            });
        }
        entries.sort_by(|a, b| b.result.score.total_cmp(&a.result.score).then(a.index.cmp(&b.index)));
        Ok(Leaderboard {
            entries,
            labels,
            complete: true,
        })
    }

    pub fn entries(&self) -> &[LeaderboardEntry<T>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> Option<&LeaderboardEntry<T>> {
        self.entries.first()
    }

    pub fn labels(&self) -> &[SentimentLabel] {
        &self.labels
    }

    /// `rank kind hyperparams score` rows; `preamble` lines are written
    /// first, each prefixed with `# `.
    pub fn write_tsv<W: Write>(&self, mut w: W, preamble: &[String]) -> Result<()> {
        for line in preamble {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "rank\tkind\thyperparams\tscore")?;
        for (rank, e) in self.entries.iter().enumerate() {
            writeln!(
                w,
                "{}\t{}\t{}\t{:.6}",
                rank + 1,
                e.result.config.kind(),
                e.result.config.hyperparams.to_json(),
                e.result.score
            )?;
        }
        Ok(())
    }
}

/// Random search. Count-capped runs evaluate the first `max_candidates`
/// of the stream in parallel and are reproducible; time-capped runs stop
/// launching batches once the budget is spent.
pub fn search<T: Scalar>(m: &FeatureMatrix<T>, ids: &[usize], opts: &SearchOptions) -> Result<Leaderboard<T>> {
    if m.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let budget = opts.budget;
    if budget.time.is_none() && budget.max_candidates.is_none() {
        return Err(Error::invalid("search needs a time budget or a candidate cap"));
    }
    if budget.time.is_some_and(|t| t.is_zero()) || budget.max_candidates == Some(0) {
        return Err(Error::invalid("search budget must be positive"));
    }
    let fold_of = stratified_folds(m.labels(), ids, opts.folds, opts.seed)?;
    let stream = candidate_sequence(opts.seed).enumerate();
    let evaluate = |(index, c): (usize, CandidateConfig)| -> Result<LeaderboardEntry<T>> {
        Ok(LeaderboardEntry {
            index,
            result: evaluate_candidate(&c, m, &fold_of)?,
        })
    };

    let n_defaults = LearnerKind::ALL.len();
    let (entries, complete) = match budget.time {
        None => {
            let cap = budget.max_candidates.unwrap_or(0);
            let candidates: Vec<_> = stream.take(cap).collect();
            let entries = candidates.into_par_iter().map(evaluate).collect::<Result<Vec<_>>>()?;
            (entries, true)
        }
        Some(limit) => {
            let start = Instant::now();
            let cap = budget.max_candidates.unwrap_or(usize::MAX);
            let mut stream = stream.take(cap);
            let mut entries = Vec::new();
            // Defaults one at a time so a tiny budget still yields something.
            for c in stream.by_ref().take(n_defaults) {
                if !entries.is_empty() && start.elapsed() >= limit {
                    break;
                }
                entries.push(evaluate(c)?);
            }
            let complete = entries.len() >= n_defaults.min(cap);
            if !complete {
                log::warn!(
                    "search budget exhausted after {} of {n_defaults} default candidates",
                    entries.len()
                );
            }
            let batch = rayon::current_num_threads().max(1);
            while complete && start.elapsed() < limit {
                let chunk: Vec<_> = stream.by_ref().take(batch).collect();
                if chunk.is_empty() {
                    break;
                }
                entries.extend(chunk.into_par_iter().map(evaluate).collect::<Result<Vec<_>>>()?);
            }
            (entries, complete)
        }
    };
    log::info!("search evaluated {} candidates", entries.len());
    let mut lb = Leaderboard::new(entries, m.labels().to_vec())?;
    lb.complete = complete;
    Ok(lb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMember {
    /// Zero-based leaderboard rank.
    pub rank: usize,
    pub config: CandidateConfig,
    pub multiplicity: usize,
}

/// Outcome of greedy selection, before refitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    /// Ordered by leaderboard rank.
    pub members: Vec<EnsembleMember>,
    /// Pooled out-of-fold weighted F1 after each step.
    pub trajectory: Vec<f64>,
}

impl EnsembleSpec {
    pub fn score(&self) -> f64 {
        self.trajectory.last().copied().unwrap_or(0.0)
    }

    pub fn size(&self) -> usize {
        self.members.iter().map(|m| m.multiplicity).sum()
    }
}

/// Weighted F1 of the multiplicity-weighted average of leaderboard
/// out-of-fold scores.
pub fn mixture_score<T: Scalar>(lb: &Leaderboard<T>, multiplicity: &[usize]) -> Result<f64> {
    let mut sum = vec![[0.0f64; SentimentLabel::COUNT]; lb.labels.len()];
    for (e, &w) in lb.entries.iter().zip(multiplicity) {
        if w > 0 {
            accumulate(&mut sum, &e.result.oof, w as f64);
        }
    }
    score_sums(&sum, &lb.labels)
}

fn accumulate<T: Scalar>(sum: &mut [[f64; SentimentLabel::COUNT]], oof: &[ClassScores<T>], w: f64) {
    for (acc, s) in sum.iter_mut().zip(oof) {
        for c in 0..SentimentLabel::COUNT {
            acc[c] += w * s[c].as_f64();
        }
    }
}

fn score_sums(sum: &[[f64; SentimentLabel::COUNT]], labels: &[SentimentLabel]) -> Result<f64> {
    let pred: Vec<SentimentLabel> = sum.iter().map(|s| SentimentLabel::from_index(argmax(s))).collect();
    weighted_f1_score(labels, &pred)
}

/// Greedy forward selection with replacement.
///
/// Each of the `size` steps adds the entry that maximizes the pooled
/// out-of-fold weighted F1 of the summed scores; ties go to the better
/// ranked entry.
pub fn ensemble_select<T: Scalar>(lb: &Leaderboard<T>, size: usize) -> Result<EnsembleSpec> {
    if lb.is_empty() {
        return Err(Error::invalid("cannot build an ensemble from an empty leaderboard"));
    }
    if size == 0 {
        return Err(Error::invalid("ensemble size must be at least 1"));
    }
    let mut counts = vec![0usize; lb.len()];
    let mut sum = vec![[0.0f64; SentimentLabel::COUNT]; lb.labels.len()];
    let mut trajectory = Vec::with_capacity(size);
    for _ in 0..size {
        let scored = lb
            .entries
            .par_iter()
            .map(|e| {
                let mut trial = sum.clone();
                accumulate(&mut trial, &e.result.oof, 1.0);
                score_sums(&trial, &lb.labels)
            })
            .collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for (i, &s) in scored.iter().enumerate() {
            if s > scored[best] {
                best = i;
            }
        }
        counts[best] += 1;
        accumulate(&mut sum, &lb.entries[best].result.oof, 1.0);
        trajectory.push(scored[best]);
    }
    let members = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(rank, &multiplicity)| EnsembleMember {
            rank,
            config: lb.entries[rank].result.config,
            multiplicity,
        })
        .collect();
    Ok(EnsembleSpec { members, trajectory })
}

/// Selected configurations refitted on the full training matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TrainedEnsemble<T: Scalar> {
    members: Vec<(TrainedModel<T>, usize)>,
    fingerprint: String,
}

pub fn fit_final<T: Scalar>(spec: &EnsembleSpec, m: &FeatureMatrix<T>) -> Result<TrainedEnsemble<T>> {
    if spec.members.is_empty() {
        return Err(Error::invalid("ensemble has no members"));
    }
    let members = spec
        .members
        .par_iter()
        .map(|mem| Ok((train(&mem.config.hyperparams, m, mem.config.seed)?, mem.multiplicity)))
        .collect::<Result<Vec<_>>>()?;
    Ok(TrainedEnsemble {
        members,
        fingerprint: m.fingerprint().to_string(),
    })
}

const ENSEMBLE_FORMAT: &str = "sentigram-ensemble-v1";

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct EnsembleFile<T: Scalar> {
    format: String,
    scalar: String,
    ensemble: TrainedEnsemble<T>,
}

impl<T: Scalar> TrainedEnsemble<T> {
    pub fn members(&self) -> &[(TrainedModel<T>, usize)] {
        &self.members
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn size(&self) -> usize {
        self.members.iter().map(|(_, c)| c).sum()
    }

    /// Multiplicity-weighted mean of the members' class scores.
    pub fn predict_scores(&self, rows: &[SparseVector<T>]) -> Result<Vec<ClassScores<T>>> {
        let mut sum = vec![[T::zero(); SentimentLabel::COUNT]; rows.len()];
        for (model, w) in &self.members {
            let w = lit::<T>(*w as f64);
            for (acc, s) in sum.iter_mut().zip(model.predict_scores(rows)?) {
                for c in 0..SentimentLabel::COUNT {
                    acc[c] += w * s[c];
                }
            }
        }
        let n = lit::<T>(self.size() as f64);
        for acc in &mut sum {
            for v in acc.iter_mut() {
                *v /= n;
            }
        }
        Ok(sum)
    }

    pub fn predict(&self, rows: &[SparseVector<T>]) -> Result<Vec<SentimentLabel>> {
        Ok(self
            .predict_scores(rows)?
            .iter()
            .map(|s| SentimentLabel::from_index(argmax(s)))
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&EnsembleFile {
            format: ENSEMBLE_FORMAT.to_string(),
            scalar: T::NAME.to_string(),
            ensemble: self.clone(),
        })?)
    }

    pub fn from_json(text: &str, expected_fingerprint: &str) -> Result<Self> {
        let file: EnsembleFile<T> = serde_json::from_str(text)?;
        if file.format != ENSEMBLE_FORMAT || file.scalar != T::NAME {
            return Err(Error::invalid(format!(
                "unsupported ensemble file ({} / {})",
                file.format, file.scalar
            )));
        }
        if file.ensemble.fingerprint != expected_fingerprint {
            return Err(Error::FingerprintMismatch {
                expected: expected_fingerprint.to_string(),
                actual: file.ensemble.fingerprint,
            });
        }
        Ok(file.ensemble)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::LinearParams;
    use SentimentLabel::*;

    /// Row `i` hits feature 0 for positives and feature 1 for negatives,
    /// plus one noise feature.
    fn planted(n_pos: usize, n_neg: usize) -> FeatureMatrix<f64> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_pos + n_neg {
            let pos = i < n_pos;
            let signal = if pos { 0 } else { 1 };
            rows.push(SparseVector::from_pairs(6, [(signal, 1.5), (2 + i % 4, 0.7)]).unwrap());
            labels.push(if pos { Positive } else { Negative });
        }
        FeatureMatrix::from_rows(6, rows, labels, "fp").unwrap()
    }

    fn ids(n: usize) -> Vec<usize> {
        (0..n).collect()
    }

    #[test]
    fn candidate_stream_starts_with_defaults() {
        let c: Vec<_> = candidate_sequence(3).take(12).collect();
        for (i, kind) in LearnerKind::ALL.into_iter().enumerate() {
            assert_eq!(c[i].hyperparams, Hyperparams::default_for(kind));
        }
        assert_eq!(c, candidate_sequence(3).take(12).collect::<Vec<_>>());
        assert!(c.iter().all(|c| c.hyperparams.validate().is_ok()));
    }

    #[test]
    fn folds_are_stratified_and_order_free() {
        let labels: Vec<_> = (0..23).map(|i| if i % 3 == 0 { Neutral } else { Positive }).collect();
        let f = stratified_folds(&labels, &ids(23), 4, 9).unwrap();
        for label in [Neutral, Positive] {
            let mut per = [0; 4];
            for r in 0..23 {
                if labels[r] == label {
                    per[f[r]] += 1;
                }
            }
            assert!(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1, "{per:?}");
        }
        let rev_labels: Vec<_> = labels.iter().rev().copied().collect();
        let rev_ids: Vec<_> = ids(23).into_iter().rev().collect();
        let g = stratified_folds(&rev_labels, &rev_ids, 4, 9).unwrap();
        for r in 0..23 {
            assert_eq!(f[r], g[22 - r]);
        }
    }

    #[test]
    fn oof_covers_each_row_once() {
        let m = planted(2, 2);
        let fold_of = stratified_folds(m.labels(), &ids(4), 2, 0).unwrap();
        let mut per = [0; 2];
        for &f in &fold_of {
            per[f] += 1;
        }
        assert_eq!(per, [2, 2]);
        let c = CandidateConfig {
            hyperparams: Hyperparams::default_for(LearnerKind::MultinomialNb),
            seed: 0,
        };
        let r = evaluate_candidate(&c, &m, &fold_of).unwrap();
        assert_eq!(r.oof.len(), 4);
        assert!(r.oof.iter().all(|s| (s.iter().sum::<f64>() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn constant_majority_on_ninety_ten() {
        // Identical rows leave only the prior, so naive Bayes predicts the
        // majority everywhere.
        let rows = vec![SparseVector::from_pairs(2, [(0, 1.0)]).unwrap(); 100];
        let labels: Vec<_> = (0..100).map(|i| if i < 90 { Negative } else { Positive }).collect();
        let m = FeatureMatrix::from_rows(2, rows, labels, "c").unwrap();
        let fold_of = stratified_folds(m.labels(), &ids(100), 5, 1).unwrap();
        let c = CandidateConfig {
            hyperparams: Hyperparams::MultinomialNb { alpha: 1.0 },
            seed: 0,
        };
        let r = evaluate_candidate(&c, &m, &fold_of).unwrap();
        let f1_major = 2.0 * 0.9 / 1.9;
        assert!((r.score - 0.9 * f1_major).abs() < 1e-12, "{}", r.score);
        assert!(!r.degenerate);
    }

    #[test]
    fn single_class_is_degenerate() {
        let rows = vec![SparseVector::from_pairs(1, [(0, 1.0)]).unwrap(); 4];
        let m = FeatureMatrix::from_rows(1, rows, vec![Neutral; 4], "c").unwrap();
        let fold_of = stratified_folds(m.labels(), &ids(4), 2, 0).unwrap();
        let c = CandidateConfig {
            hyperparams: Hyperparams::default_for(LearnerKind::LinearSvm),
            seed: 0,
        };
        let r = evaluate_candidate(&c, &m, &fold_of).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.score, 1.0);
    }

    #[test]
    fn count_capped_search_is_reproducible_and_sorted() {
        let m = planted(20, 20);
        let opts = SearchOptions {
            folds: 4,
            budget: SearchBudget::candidates(10),
            seed: 11,
        };
        let a = search(&m, &ids(40), &opts).unwrap();
        let b = search(&m, &ids(40), &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
        assert!(a.entries().windows(2).all(|w| w[0].result.score >= w[1].result.score));
        assert!(a.best().unwrap().result.score >= 0.95);
        let mut tsv = Vec::new();
        a.write_tsv(&mut tsv, &["seed 11".into()]).unwrap();
        let text = String::from_utf8(tsv).unwrap();
        assert!(text.starts_with("# seed 11\nrank\tkind\thyperparams\tscore\n1\t"));
        assert_eq!(text.lines().count(), 12);
    }

    #[test]
    fn time_budget_always_tries_defaults() {
        let m = planted(10, 10);
        let opts = SearchOptions {
            folds: 2,
            budget: SearchBudget::seconds(1e-9),
            seed: 0,
        };
        let lb = search(&m, &ids(20), &opts).unwrap();
        assert!(!lb.is_empty());
        assert_eq!(lb.complete, lb.len() >= 4);
    }

    fn fake_board(oofs: Vec<Vec<[f64; 3]>>, labels: Vec<SentimentLabel>) -> Leaderboard<f64> {
        let entries = oofs
            .into_iter()
            .enumerate()
            .map(|(index, oof)| {
                let pred: Vec<_> = oof.iter().map(|s| SentimentLabel::from_index(argmax(s))).collect();
                LeaderboardEntry {
                    index,
                    result: CandidateResult {
                        config: CandidateConfig {
                            hyperparams: Hyperparams::default_for(LearnerKind::MultinomialNb),
                            seed: index as u64,
                        },
                        score: weighted_f1_score(&labels, &pred).unwrap(),
                        degenerate: false,
                        oof,
                    },
                }
            })
            .collect();
        Leaderboard::new(entries, labels).unwrap()
    }

    #[test]
    fn dominant_model_fills_the_ensemble() {
        let labels = vec![Positive, Negative, Positive];
        let good = vec![[0.9, 0.0, 0.1], [0.2, 0.0, 0.8], [0.6, 0.0, 0.4]];
        let bad = vec![[0.1, 0.0, 0.9], [0.9, 0.0, 0.1], [0.4, 0.0, 0.6]];
        let lb = fake_board(vec![bad, good], labels);
        let spec = ensemble_select(&lb, 4).unwrap();
        assert_eq!(spec.members.len(), 1);
        assert_eq!(spec.members[0].rank, 0);
        assert_eq!(spec.members[0].multiplicity, 4);
        assert_eq!(spec.trajectory, vec![1.0; 4]);
        let one = ensemble_select(&lb, 1).unwrap();
        assert_eq!(one.members[0].config, lb.best().unwrap().result.config);
    }

    #[test]
    fn complementary_models_mix() {
        // A is sure about positives, B about negatives.
        let labels = vec![Positive, Positive, Negative, Negative];
        let a = vec![[0.9, 0.0, 0.1], [0.9, 0.0, 0.1], [0.55, 0.0, 0.45], [0.55, 0.0, 0.45]];
        let b = vec![[0.45, 0.0, 0.55], [0.45, 0.0, 0.55], [0.1, 0.0, 0.9], [0.1, 0.0, 0.9]];
        let lb = fake_board(vec![a, b], labels);
        let spec = ensemble_select(&lb, 2).unwrap();
        assert_eq!(spec.score(), 1.0);
        assert_eq!(spec.size(), 2);
        assert!(spec.trajectory.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn refit_and_reload() {
        let m = planted(10, 10);
        let spec = EnsembleSpec {
            members: vec![EnsembleMember {
                rank: 0,
                config: CandidateConfig {
                    hyperparams: Hyperparams::LogisticRegression(LinearParams {
                        l2: 1e-4,
                        learning_rate: 0.1,
                        epochs: 30,
                    }),
                    seed: 5,
                },
                multiplicity: 3,
            }],
            trajectory: vec![1.0; 3],
        };
        let e = fit_final(&spec, &m).unwrap();
        assert_eq!(e.size(), 3);
        let single = train(&spec.members[0].config.hyperparams, &m, 5).unwrap();
        let es = e.predict_scores(m.rows()).unwrap();
        let ss = single.predict_scores(m.rows()).unwrap();
        for (x, y) in es.iter().zip(&ss) {
            for c in 0..3 {
                assert!((x[c] - y[c]).abs() < 1e-12);
            }
        }
        assert_eq!(e.predict(m.rows()).unwrap(), m.labels());
        let back = TrainedEnsemble::<f64>::from_json(&e.to_json().unwrap(), "fp").unwrap();
        assert_eq!(back, e);
        assert!(TrainedEnsemble::<f64>::from_json(&e.to_json().unwrap(), "zz").is_err());
    }
}
