use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::automl::{
    ensemble_select, fit_final, search, SearchBudget, SearchOptions, TrainedEnsemble, DEFAULT_ENSEMBLE_SIZE,
    DEFAULT_FOLDS,
};
use crate::corpus::{class_distribution, stratified_shuffle_splits, ClassCounts, LabeledDataset, SentimentLabel};
use crate::error::{Error, Result};
use crate::features::{smote_oversample, vectorize_corpus, FeatureMatrix, FeatureScheme};
use crate::learners::{Hyperparams, LearnerKind};
use crate::ngram::{build_dictionary, BuildOptions, NGramDictionary, DEFAULT_MAX_N, DEFAULT_MIN_FREQ};
use crate::num::Scalar;
use crate::preprocess::{Preprocessor, StopList, TokenSequence};

use super::explain::{top_ngrams_per_class, TopNgrams};
use super::metrics::{confusion_matrix, per_class_prf, weighted_f1, ClassMetrics, ConfusionMatrix};

pub const DEFAULT_ROUNDS: usize = 10;
pub const DEFAULT_TEST_FRACTION: f64 = 0.1;
pub const DEFAULT_TOP_K: usize = 10;

/// Everything that determines an experiment besides the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub remove_stopwords: bool,
    /// Custom stop list; the built-in English list when absent.
    pub stopword_list: Option<PathBuf>,
    pub max_n: usize,
    pub min_freq: u64,
    pub scheme: FeatureScheme,
    /// SMOTE neighbour count, or `None` to skip oversampling.
    pub smote_k: Option<usize>,
    pub folds: usize,
    pub budget: SearchBudget,
    pub ensemble_size: usize,
    pub rounds: usize,
    pub test_fraction: f64,
    pub seed: u64,
    pub top_k: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            remove_stopwords: true,
            stopword_list: None,
            max_n: DEFAULT_MAX_N,
            min_freq: DEFAULT_MIN_FREQ,
            scheme: FeatureScheme::default(),
            smote_k: None,
            folds: DEFAULT_FOLDS,
            budget: SearchBudget::seconds(crate::automl::DEFAULT_BUDGET_SECONDS as f64),
            ensemble_size: DEFAULT_ENSEMBLE_SIZE,
            rounds: DEFAULT_ROUNDS,
            test_fraction: DEFAULT_TEST_FRACTION,
            seed: 0,
            top_k: DEFAULT_TOP_K,
        }
    }
}

impl PipelineConfig {
    pub fn preprocessor(&self) -> Result<Preprocessor> {
        Ok(match (self.remove_stopwords, &self.stopword_list) {
            (false, _) => Preprocessor::without_stopwords(),
            (true, None) => Preprocessor::with_builtin_stopwords(),
            (true, Some(path)) => Preprocessor::new(Some(StopList::from_file(path)?)),
        })
    }

    pub fn build_options(&self, pre: &Preprocessor) -> BuildOptions {
        BuildOptions {
            max_n: self.max_n,
            min_freq: self.min_freq,
            preprocessing: pre.describe(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ensemble_size == 0 {
            return Err(Error::invalid("ensemble size must be at least 1"));
        }
        if self.smote_k == Some(0) {
            return Err(Error::invalid("SMOTE needs k >= 1"));
        }
        if self.folds < 2 {
            return Err(Error::invalid("need at least 2 internal folds"));
        }
        BuildOptions {
            max_n: self.max_n,
            min_freq: self.min_freq,
            preprocessing: String::new(),
        }
        .validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DictionaryStats {
    pub entries: usize,
    pub corpus_size: u64,
    pub fingerprint: String,
    pub preprocessing: String,
}

impl DictionaryStats {
    pub fn of(d: &NGramDictionary) -> Self {
        DictionaryStats {
            entries: d.len(),
            corpus_size: d.corpus_size(),
            fingerprint: d.fingerprint().to_string(),
            preprocessing: d.options().preprocessing.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedMember {
    pub rank: usize,
    pub kind: LearnerKind,
    pub hyperparams: Hyperparams,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub dictionary: DictionaryStats,
    pub synthetic_rows: usize,
    pub candidates_evaluated: usize,
    pub best_candidate_score: f64,
    pub ensemble: Vec<SelectedMember>,
    pub ensemble_oof_score: f64,
    pub confusion: ConfusionMatrix,
    pub metrics: ClassMetrics,
    pub weighted_f1: f64,
    pub correct: u64,
    pub top_ngrams: TopNgrams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub dataset: String,
    pub documents: usize,
    pub class_counts: ClassCounts,
    pub config: PipelineConfig,
    pub singleton_classes: Vec<SentimentLabel>,
    pub rounds: Vec<RoundReport>,
    /// Per-class means over rounds.
    pub mean_metrics: ClassMetrics,
    /// Mean of the per-round weighted F1 values.
    pub mean_weighted_f1: f64,
    /// Correct predictions summed over all rounds' test sets.
    pub correct_predictions: u64,
    pub evaluated_predictions: u64,
    pub mean_correct_per_round: f64,
    /// Secondary: metrics of all rounds' predictions pooled together.
    pub pooled_confusion: ConfusionMatrix,
    pub pooled_metrics: ClassMetrics,
    pub pooled_weighted_f1: f64,
    pub top_ngrams: TopNgrams,
}

/// Dictionary, features and fitted ensemble from one training partition.
pub struct FittedPipeline<T: Scalar> {
    pub dictionary: NGramDictionary,
    pub train_matrix: FeatureMatrix<T>,
    pub synthetic_rows: usize,
    pub leaderboard: crate::automl::Leaderboard<T>,
    pub selection: crate::automl::EnsembleSpec,
    pub ensemble: TrainedEnsemble<T>,
}

/// Builds the dictionary on `docs`, vectorizes, optionally oversamples,
/// searches, selects and refits. `ids` identify the documents for fold
/// assignment.
pub fn fit_pipeline<T: Scalar>(
    docs: &[TokenSequence],
    labels: &[SentimentLabel],
    ids: &[usize],
    cfg: &PipelineConfig,
    pre: &Preprocessor,
    search_seed: u64,
    smote_seed: u64,
) -> Result<FittedPipeline<T>> {
    let dictionary = build_dictionary(docs, &cfg.build_options(pre))?;
    let mut train_matrix: FeatureMatrix<T> = vectorize_corpus(docs, labels, &dictionary, cfg.scheme)?;
    let mut ids = ids.to_vec();
    let original = train_matrix.len();
    if let Some(k) = cfg.smote_k {
        train_matrix = smote_oversample(&train_matrix, k, smote_seed)?;
        let next = ids.iter().max().map_or(0, |m| m + 1);
        ids.extend(next..next + train_matrix.len() - original);
    }
    let leaderboard = search(
        &train_matrix,
        &ids,
        &SearchOptions {
            folds: cfg.folds,
            budget: cfg.budget,
            seed: search_seed,
        },
    )?;
    let selection = ensemble_select(&leaderboard, cfg.ensemble_size)?;
    let ensemble = fit_final(&selection, &train_matrix)?;
    Ok(FittedPipeline {
        dictionary,
        synthetic_rows: train_matrix.len() - original,
        train_matrix,
        leaderboard,
        selection,
        ensemble,
    })
}

/// Seeds for (search, SMOTE) in each round.
pub fn round_seeds(seed: u64, rounds: usize) -> Vec<(u64, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x0e7a_1c0d_e5ee_d5a1);
    (0..rounds).map(|_| (rng.random(), rng.random())).collect()
}

/// Runs the full protocol over independent stratified rounds. Every
/// fitted artifact of a round sees only that round's training documents.
pub fn run_experiment<T: Scalar>(ds: &LabeledDataset, cfg: &PipelineConfig) -> Result<EvalReport> {
    cfg.validate()?;
    ds.check_trainable()?;
    let pre = cfg.preprocessor()?;
    let tokens: Vec<TokenSequence> = ds.documents.par_iter().map(|d| pre.process(&d.text)).collect();
    let plan = stratified_shuffle_splits(ds, cfg.rounds, cfg.test_fraction, cfg.seed)?;
    let seeds = round_seeds(cfg.seed, cfg.rounds);
    let position: std::collections::HashMap<usize, usize> =
        ds.documents.iter().enumerate().map(|(i, d)| (d.id, i)).collect();

    let rounds = plan
        .rounds
        .par_iter()
        .enumerate()
        .map(|(r, split)| {
            let pick = |ids: &[usize]| -> (Vec<TokenSequence>, Vec<SentimentLabel>) {
                ids.iter()
                    .map(|id| {
                        let i = position[id];
                        (tokens[i].clone(), ds.documents[i].label)
                    })
                    .unzip()
            };
            let (train_docs, train_labels) = pick(&split.train_ids);
            let (test_docs, test_labels) = pick(&split.test_ids);
            let (search_seed, smote_seed) = seeds[r];
            let run = || -> Result<RoundReport> {
                let fitted = fit_pipeline::<T>(
                    &train_docs,
                    &train_labels,
                    &split.train_ids,
                    cfg,
                    &pre,
                    search_seed,
                    smote_seed,
                )?;
                let test: FeatureMatrix<T> =
                    vectorize_corpus(&test_docs, &test_labels, &fitted.dictionary, cfg.scheme)?;
                let pred = fitted.ensemble.predict(test.rows())?;
                let confusion = confusion_matrix(&test_labels, &pred)?;
                let metrics = per_class_prf(&confusion);
                let lb = &fitted.leaderboard;
                Ok(RoundReport {
                    round: r,
                    train_size: train_docs.len(),
                    test_size: test_docs.len(),
                    dictionary: DictionaryStats::of(&fitted.dictionary),
                    synthetic_rows: fitted.synthetic_rows,
                    candidates_evaluated: lb.len(),
                    best_candidate_score: lb.best().map_or(0.0, |e| e.result.score),
                    ensemble: fitted
                        .selection
                        .members
                        .iter()
                        .map(|m| SelectedMember {
                            rank: m.rank,
                            kind: m.config.kind(),
                            hyperparams: m.config.hyperparams,
                            multiplicity: m.multiplicity,
                        })
                        .collect(),
                    ensemble_oof_score: fitted.selection.score(),
                    confusion,
                    metrics,
                    weighted_f1: weighted_f1(&metrics)?,
                    correct: confusion.trace(),
                    top_ngrams: top_ngrams_per_class(&fitted.ensemble, &fitted.dictionary, cfg.top_k),
                })
            };
            run().map_err(|e| Error::Round {
                round: r,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<RoundReport>>>()?;

    let per_round: Vec<ClassMetrics> = rounds.iter().map(|r| r.metrics).collect();
    let mut pooled_confusion = ConfusionMatrix::default();
    for r in &rounds {
        pooled_confusion.merge(&r.confusion);
    }
    let pooled_metrics = per_class_prf(&pooled_confusion);
    let correct_predictions: u64 = rounds.iter().map(|r| r.correct).sum();
    let n = rounds.len() as f64;
    let lists: Vec<TopNgrams> = rounds.iter().map(|r| r.top_ngrams.clone()).collect();
    Ok(EvalReport {
        dataset: ds.name.clone(),
        documents: ds.len(),
        class_counts: class_distribution(ds),
        config: cfg.clone(),
        singleton_classes: plan.singleton_classes.clone(),
        mean_metrics: ClassMetrics::mean(&per_round),
        mean_weighted_f1: rounds.iter().map(|r| r.weighted_f1).sum::<f64>() / n,
        correct_predictions,
        evaluated_predictions: pooled_confusion.total(),
        mean_correct_per_round: correct_predictions as f64 / n,
        pooled_weighted_f1: weighted_f1(&pooled_metrics)?,
        pooled_confusion,
        pooled_metrics,
        top_ngrams: TopNgrams::fuse(&lists, cfg.top_k),
        rounds,
    })
}
