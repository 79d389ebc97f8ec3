//! `sentigram`: n-gram IDF sentiment classification from the command line.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sentigram_core::automl::{SearchBudget, DEFAULT_BUDGET_SECONDS, DEFAULT_ENSEMBLE_SIZE, DEFAULT_FOLDS};
use sentigram_core::evaluation::{PipelineConfig, DEFAULT_ROUNDS, DEFAULT_TEST_FRACTION, DEFAULT_TOP_K};
use sentigram_core::features::FeatureScheme;
use sentigram_core::ngram::{DEFAULT_MAX_N, DEFAULT_MIN_FREQ};

#[derive(Parser, Debug)]
#[command(name = "sentigram", version, about = "Sentiment classification with n-gram IDF features and budgeted model search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the class distribution of a dataset.
    Stats {
        /// CSV with header `text,label`.
        #[arg(long)]
        data: PathBuf,
    },
    /// Build the n-gram dictionary over a whole dataset and write it as TSV.
    Extract(ExtractArgs),
    /// Search, select an ensemble and fit it on a whole dataset.
    Train(PipelineArgs),
    /// Run the stratified multi-round evaluation and write reports.
    Evaluate(PipelineArgs),
    /// Re-render a JSON evaluation report as a table.
    Report {
        /// `report.json` written by `evaluate`.
        #[arg(long)]
        input: PathBuf,
    },
    /// Label texts with a model written by `train`.
    Predict {
        /// Directory holding `dictionary.tsv` and `model.json`.
        #[arg(long)]
        model_dir: PathBuf,
        /// Texts to classify.
        #[arg(required = true)]
        texts: Vec<String>,
    },
}

#[derive(Args, Debug, Clone)]
struct DataArgs {
    /// CSV with header `text,label`.
    #[arg(long)]
    data: PathBuf,
    /// Directory for output artifacts.
    #[arg(long, env = "SENTIGRAM_OUTPUT_DIR", default_value = "sentigram-out")]
    output_dir: PathBuf,
}

#[derive(Args, Debug, Clone)]
struct FeatureArgs {
    /// Longest n-gram length (1-10).
    #[arg(long, default_value_t = DEFAULT_MAX_N)]
    max_n: usize,
    /// Drop n-grams seen fewer times than this.
    #[arg(long, default_value_t = DEFAULT_MIN_FREQ)]
    min_freq: u64,
    /// Keep stop words (removal is on by default).
    #[arg(long, conflicts_with = "stopwords")]
    no_stopwords: bool,
    /// Stop-word file, one word per line, `#` comments allowed. Defaults to
    /// the built-in English list.
    #[arg(long)]
    stopwords: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct ExtractArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    features: FeatureArgs,
    /// Feature value: count_x_weight, binary_x_weight or count.
    #[arg(long, default_value_t = FeatureScheme::CountXWeight)]
    scheme: FeatureScheme,
    /// Oversample minority classes in training data with SMOTE.
    #[arg(long)]
    smote: bool,
    /// SMOTE neighbour count.
    #[arg(long, default_value_t = 5)]
    smote_k: usize,
    /// Internal cross-validation folds.
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Wall-clock search budget per fit (not reproducible).
    #[arg(long, default_value_t = DEFAULT_BUDGET_SECONDS as f64)]
    budget_seconds: f64,
    /// Evaluate exactly this many candidates instead of using the time
    /// budget. Reproducible.
    #[arg(long)]
    max_candidates: Option<usize>,
    /// Greedy ensemble size.
    #[arg(long, default_value_t = DEFAULT_ENSEMBLE_SIZE)]
    ensemble_size: usize,
    /// Evaluation rounds.
    #[arg(long, default_value_t = DEFAULT_ROUNDS)]
    rounds: usize,
    /// Share of each class held out per round.
    #[arg(long, default_value_t = DEFAULT_TEST_FRACTION)]
    test_fraction: f64,
    /// Phrases listed per class in reports.
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl FeatureArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        cfg.max_n = self.max_n;
        cfg.min_freq = self.min_freq;
        cfg.remove_stopwords = !self.no_stopwords;
        cfg.stopword_list = self.stopwords.clone();
    }
}

impl PipelineArgs {
    fn pipeline(&self) -> anyhow::Result<PipelineConfig> {
        let budget = match self.max_candidates {
            Some(n) => SearchBudget::candidates(n),
            None => {
                anyhow::ensure!(
                    self.budget_seconds.is_finite() && self.budget_seconds > 0.0,
                    "--budget-seconds must be positive"
                );
                SearchBudget::seconds(self.budget_seconds)
            }
        };
        let mut cfg = PipelineConfig {
            scheme: self.scheme,
            smote_k: self.smote.then_some(self.smote_k),
            folds: self.folds,
            budget,
            ensemble_size: self.ensemble_size,
            rounds: self.rounds,
            test_fraction: self.test_fraction,
            seed: self.seed,
            top_k: self.top_k,
            ..PipelineConfig::default()
        };
        self.features.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Stats { data } => commands::stats(&data),
        Command::Extract(a) => {
            let mut cfg = PipelineConfig::default();
            a.features.apply(&mut cfg);
            commands::extract(&a.data.data, &a.data.output_dir, cfg)
        }
        Command::Train(a) => a
            .pipeline()
            .and_then(|cfg| commands::train(&a.data.data, &a.data.output_dir, cfg)),
        Command::Evaluate(a) => a
            .pipeline()
            .and_then(|cfg| commands::evaluate(&a.data.data, &a.data.output_dir, cfg)),
        Command::Report { input } => commands::report(&input),
        Command::Predict { model_dir, texts } => commands::predict(&model_dir, &texts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sentigram: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
