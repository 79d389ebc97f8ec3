//! Labeled datasets: CSV ingestion, class counts, and stratified
//! train/test rounds.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Three-way sentiment label. The declaration order (positive, neutral,
/// negative) is the canonical order used for matrices and tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Positive,
    Neutral,
    Negative,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Positive,
        SentimentLabel::Neutral,
        SentimentLabel::Negative,
    ];
    pub const COUNT: usize = 3;

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> SentimentLabel {
        Self::ALL[i]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::Positive => "positive",
            SentimentLabel::Neutral => "neutral",
            SentimentLabel::Negative => "negative",
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "positive" => Ok(SentimentLabel::Positive),
            "neutral" => Ok(SentimentLabel::Neutral),
            "negative" => Ok(SentimentLabel::Negative),
            _ => Err(Error::UnknownLabel(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDocument {
    pub id: usize,
    pub text: String,
    pub label: SentimentLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub name: String,
    pub documents: Vec<LabeledDocument>,
}

impl LabeledDataset {
    /// Builds a dataset from `(text, label)` pairs, assigning ids in order.
    pub fn from_pairs<S: Into<String>>(
        name: impl Into<String>,
        pairs: impl IntoIterator<Item = (S, SentimentLabel)>,
    ) -> Self {
        let documents = pairs
            .into_iter()
            .enumerate()
            .map(|(id, (text, label))| LabeledDocument {
                id,
                text: text.into(),
                label,
            })
            .collect();
        LabeledDataset {
            name: name.into(),
            documents,
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn labels(&self) -> Vec<SentimentLabel> {
        self.documents.iter().map(|d| d.label).collect()
    }

    /// Checks the minimum shape required for training.
    pub fn check_trainable(&self) -> Result<()> {
        if self.len() < 2 {
            return Err(Error::DatasetTooSmall(format!(
                "{} has {} documents, need at least 2",
                self.name,
                self.len()
            )));
        }
        let distinct = class_distribution(self).present().count();
        if distinct < 2 {
            return Err(Error::DatasetTooSmall(format!(
                "{} has {} distinct labels, need at least 2",
                self.name, distinct
            )));
        }
        Ok(())
    }
}

/// Per-label document counts in canonical label order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts(pub [usize; SentimentLabel::COUNT]);

impl ClassCounts {
    pub fn from_labels<'a>(labels: impl IntoIterator<Item = &'a SentimentLabel>) -> Self {
        let mut counts = [0; SentimentLabel::COUNT];
        for l in labels {
            counts[l.index()] += 1;
        }
        ClassCounts(counts)
    }

    pub fn get(&self, label: SentimentLabel) -> usize {
        self.0[label.index()]
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SentimentLabel, usize)> + '_ {
        SentimentLabel::ALL.iter().map(move |&l| (l, self.get(l)))
    }

    /// Labels with a nonzero count.
    pub fn present(&self) -> impl Iterator<Item = SentimentLabel> + '_ {
        self.iter().filter(|(_, c)| *c > 0).map(|(l, _)| l)
    }

    /// Largest count; ties go to the earliest label.
    pub fn majority(&self) -> Option<SentimentLabel> {
        if self.total() == 0 {
            return None;
        }
        Some(SentimentLabel::from_index(crate::num::argmax(&self.0)))
    }
}

impl Serialize for ClassCounts {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        // Canonical label order rather than alphabetical.
        let mut m = s.serialize_map(Some(SentimentLabel::COUNT))?;
        for (l, c) in self.iter() {
            m.serialize_entry(l.as_str(), &c)?;
        }
        m.end()
    }
}

impl<'de> Deserialize<'de> for ClassCounts {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let map = BTreeMap::<String, usize>::deserialize(d)?;
        let mut counts = [0; SentimentLabel::COUNT];
        for (k, v) in map {
            let l: SentimentLabel = k.parse().map_err(serde::de::Error::custom)?;
            counts[l.index()] = v;
        }
        Ok(ClassCounts(counts))
    }
}

impl fmt::Display for ClassCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "positive: {}, neutral: {}, negative: {}, sum: {}",
            self.0[0],
            self.0[1],
            self.0[2],
            self.total()
        )
    }
}

pub fn class_distribution(ds: &LabeledDataset) -> ClassCounts {
    ClassCounts::from_labels(ds.documents.iter().map(|d| &d.label))
}

/// Loads a `text,label` CSV file. The dataset is named after the file stem.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".to_string());
    read_dataset(name, file)
}

/// Parses a `text,label` CSV from any reader.
pub fn read_dataset(name: impl Into<String>, reader: impl Read) -> Result<LabeledDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);

    let headers = rdr.headers().map_err(csv_error)?.clone();
    let names: Vec<String> = headers.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
    if names != ["text", "label"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `text,label`, found `{}`", names.join(",")),
        });
    }

    let mut documents = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let text = &record[0];
        if text.trim().is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty text field".to_string(),
            });
        }
        let label = record[1].parse::<SentimentLabel>().map_err(|_| Error::Parse {
            line,
            message: format!(
                "unknown label {:?} (expected positive, neutral or negative)",
                &record[1]
            ),
        })?;
        documents.push(LabeledDocument {
            id: documents.len(),
            text: text.to_string(),
            label,
        });
    }
    Ok(LabeledDataset {
        name: name.into(),
        documents,
    })
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRound {
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub seed: u64,
    pub test_fraction: f64,
    pub rounds: Vec<SplitRound>,
    /// Classes with one member; always kept on the training side.
    pub singleton_classes: Vec<SentimentLabel>,
}

impl SplitPlan {
    /// Writes the `round,doc_id,partition` audit listing.
    pub fn write_audit<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "round,doc_id,partition")?;
        for (r, round) in self.rounds.iter().enumerate() {
            let mut rows: Vec<(usize, &str)> = round
                .train_ids
                .iter()
                .map(|&id| (id, "train"))
                .chain(round.test_ids.iter().map(|&id| (id, "test")))
                .collect();
            rows.sort_unstable();
            for (id, part) in rows {
                writeln!(w, "{r},{id},{part}")?;
            }
        }
        Ok(())
    }
}

/// Number of test items drawn from a class of `count` members.
///
/// `round(count * fraction)`, clamped so both partitions keep at least one
/// member. The clamp moves the value by at most one.
pub fn stratum_test_size(count: usize, fraction: f64) -> usize {
    if count < 2 {
        return 0;
    }
    let raw = (count as f64 * fraction).round() as usize;
    raw.clamp(1, count - 1)
}

/// Independent stratified random train/test splits.
///
/// Each round shuffles every class separately and sends
/// [`stratum_test_size`] members of it to the test side. Rounds are drawn
/// from one seeded stream, so the whole plan is a function of the inputs.
pub fn stratified_shuffle_splits(
    ds: &LabeledDataset,
    rounds: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    if rounds == 0 {
        return Err(Error::invalid("rounds must be at least 1"));
    }

    let mut strata: [Vec<usize>; SentimentLabel::COUNT] = Default::default();
    for doc in &ds.documents {
        strata[doc.label.index()].push(doc.id);
    }
    let singleton_classes: Vec<SentimentLabel> = SentimentLabel::ALL
        .into_iter()
        .filter(|l| strata[l.index()].len() == 1)
        .collect();
    for l in &singleton_classes {
        log::warn!(
            "{}: class {l} has a single document; it stays in every training partition",
            ds.name
        );
    }
    let total_test: usize = strata
        .iter()
        .map(|s| stratum_test_size(s.len(), test_fraction))
        .sum();
    if total_test == 0 {
        return Err(Error::DatasetTooSmall(format!(
            "{}: no class has the two members needed to populate both partitions",
            ds.name
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut plan_rounds = Vec::with_capacity(rounds);
    for _ in 0..rounds {
        let mut train_ids = Vec::with_capacity(ds.len());
        let mut test_ids = Vec::with_capacity(total_test);
        for members in &strata {
            let n_test = stratum_test_size(members.len(), test_fraction);
            let mut shuffled = members.clone();
            shuffled.shuffle(&mut rng);
            test_ids.extend_from_slice(&shuffled[..n_test]);
            train_ids.extend_from_slice(&shuffled[n_test..]);
        }
        train_ids.sort_unstable();
        test_ids.sort_unstable();
        plan_rounds.push(SplitRound {
            train_ids,
            test_ids,
        });
    }

    Ok(SplitPlan {
        seed,
        test_fraction,
        rounds: plan_rounds,
        singleton_classes,
    })
}
