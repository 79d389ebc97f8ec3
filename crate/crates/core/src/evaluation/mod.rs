//! Experiment harness: metrics, per-round runs and reports.

mod experiment;
mod explain;
pub mod metrics;

use std::fmt::Write as _;

pub use experiment::{
    fit_pipeline, round_seeds, run_experiment, DictionaryStats, EvalReport, FittedPipeline, PipelineConfig,
    RoundReport, SelectedMember, DEFAULT_ROUNDS, DEFAULT_TEST_FRACTION, DEFAULT_TOP_K,
};
pub use explain::{top_ngrams_per_class, FeatureRanking, RankedNgram, TopNgrams};
pub use metrics::{
    confusion_matrix, per_class_prf, weighted_f1, weighted_f1_from, weighted_f1_score, ClassMetric, ClassMetrics,
    ConfusionMatrix,
};

use crate::corpus::SentimentLabel;
use crate::error::Result;
use metrics::Cell;

impl EvalReport {
    /// Pretty JSON. Contains no timings, so equal runs give equal bytes.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Plain-text table: one block per class with the round-averaged
    /// precision, recall and F1, followed by the secondary pooled view and
    /// the top phrases.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "dataset: {} ({} documents)", self.dataset, self.documents);
        let _ = writeln!(w, "classes: {}", self.class_counts);
        let _ = writeln!(
            w,
            "rounds: {}  test fraction: {}  seed: {}",
            self.rounds.len(),
            self.config.test_fraction,
            self.config.seed
        );
        let _ = writeln!(w);
        let _ = writeln!(
            w,
            "{:<10} {:>9} {:>9} {:>9} {:>9}",
            "class", "precision", "recall", "f1", "support"
        );
        for (label, m) in self.mean_metrics.iter() {
            let _ = writeln!(
                w,
                "{:<10} {:>9} {:>9} {:>9} {:>9}",
                label.as_str(),
                Cell(m, m.precision),
                Cell(m, m.recall),
                Cell(m, m.f1),
                self.class_counts.get(label)
            );
        }
        let _ = writeln!(w, "weighted f1 (mean over rounds): {:.3}", self.mean_weighted_f1);
        let _ = writeln!(
            w,
            "# correct prediction: {} of {} (mean per round {:.1})",
            self.correct_predictions, self.evaluated_predictions, self.mean_correct_per_round
        );
        let _ = writeln!(w);
        let _ = writeln!(w, "pooled over rounds (secondary):");
        for (label, m) in self.pooled_metrics.iter() {
            let _ = writeln!(
                w,
                "{:<10} {:>9} {:>9} {:>9} {:>9}",
                label.as_str(),
                Cell(m, m.precision),
                Cell(m, m.recall),
                Cell(m, m.f1),
                m.support
            );
        }
        let _ = writeln!(w, "weighted f1 (pooled): {:.3}", self.pooled_weighted_f1);
        let _ = writeln!(w);
        let _ = writeln!(w, "top n-grams:");
        for label in SentimentLabel::ALL {
            let phrases: Vec<String> = self
                .top_ngrams
                .get(label)
                .iter()
                .map(|r| format!("'{}'", r.phrase))
                .collect();
            let shown = if phrases.is_empty() { "-".to_string() } else { phrases.join(", ") };
            let _ = writeln!(w, "  {:<9} {}", label.as_str(), shown);
        }
        out
    }
}
