//! N-gram dictionary: enumeration, frequency statistics, singleton pruning
//! and n-gram IDF weighting.
//!
//! For a phrase `g` over a corpus of `N` documents the weight is
//!
//! ```text
//! weight(g) = ln( N * df(g) / df(terms(g))^2 )
//! ```
//!
//! where `df(g)` counts documents containing the contiguous phrase and
//! `df(terms(g))` counts documents containing every distinct token of `g`
//! anywhere. For unigrams the two frequencies coincide and the weight is the
//! classic `ln(N / df)`. Phrases whose tokens co-occur mostly as that exact
//! phrase score high; tokens that merely share documents score low or
//! negative.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::preprocess::TokenSequence;

/// Longest supported phrase length.
pub const MAX_N_LIMIT: usize = 10;
pub const DEFAULT_MAX_N: usize = 10;
pub const DEFAULT_MIN_FREQ: u64 = 2;

const TSV_MAGIC: &str = "# ngram-dictionary v1";
const TSV_HEADER: &str = "phrase\tn\tfreq\tdf_phrase\tdf_terms\tweight";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NGramEntry {
    pub phrase: Vec<String>,
    /// Total occurrences across the corpus, overlaps included.
    pub freq: u64,
    /// Documents containing the contiguous phrase.
    pub df_phrase: u64,
    /// Documents containing every distinct token of the phrase.
    pub df_terms: u64,
    pub weight: f64,
}

impl NGramEntry {
    pub fn n(&self) -> usize {
        self.phrase.len()
    }

    pub fn phrase_text(&self) -> String {
        self.phrase.join(" ")
    }
}

/// Counts every contiguous subsequence of length `1..=max_n`.
pub fn enumerate_ngrams(ts: &[String], max_n: usize) -> HashMap<Vec<String>, u64> {
    let mut out = HashMap::new();
    for start in 0..ts.len() {
        let longest = max_n.min(ts.len() - start);
        for len in 1..=longest {
            *out.entry(ts[start..start + len].to_vec()).or_insert(0) += 1;
        }
    }
    out
}

/// `ln(N * df_phrase / df_terms^2)`.
///
/// Panics unless `1 <= df_phrase <= df_terms <= corpus_size`.
pub fn ngram_idf_weight(df_phrase: u64, df_terms: u64, corpus_size: u64) -> f64 {
    assert!(
        1 <= df_phrase && df_phrase <= df_terms && df_terms <= corpus_size,
        "n-gram IDF needs 1 <= df_phrase ({df_phrase}) <= df_terms ({df_terms}) <= N ({corpus_size})"
    );
    let num = (corpus_size as f64) * (df_phrase as f64);
    let den = (df_terms as f64) * (df_terms as f64);
    (num / den).ln()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub max_n: usize,
    pub min_freq: u64,
    /// Description of the upstream normalization, e.g. `stopwords:en-v1`.
    pub preprocessing: String,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_n: DEFAULT_MAX_N,
            min_freq: DEFAULT_MIN_FREQ,
            preprocessing: "unspecified".to_string(),
        }
    }
}

impl BuildOptions {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_N_LIMIT).contains(&self.max_n) {
            return Err(Error::invalid(format!(
                "max_n must lie in 1..={MAX_N_LIMIT}, got {}",
                self.max_n
            )));
        }
        if self.min_freq == 0 {
            return Err(Error::invalid("min_freq must be at least 1"));
        }
        if self.preprocessing.contains('\n') {
            return Err(Error::invalid("preprocessing description must be one line"));
        }
        Ok(())
    }
}

/// The learned feature space. Entries are held in canonical order:
/// descending weight, then ascending phrase text. Entry position is the
/// feature index.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramDictionary {
    corpus_size: u64,
    options: BuildOptions,
    entries: Vec<NGramEntry>,
    index: HashMap<Vec<String>, usize>,
    fingerprint: String,
    provenance: Option<String>,
}

#[derive(Default)]
struct PhraseStats {
    freq: u64,
    df: u64,
    last_doc: usize,
}

pub fn build_dictionary(docs: &[TokenSequence], options: &BuildOptions) -> Result<NGramDictionary> {
    options.validate()?;
    if docs.is_empty() {
        return Err(Error::invalid("cannot build a dictionary from zero documents"));
    }

    // Intern tokens so phrase keys are small integer slices.
    let mut vocab: HashMap<&str, u32> = HashMap::new();
    let mut words: Vec<&str> = Vec::new();
    let encoded: Vec<Vec<u32>> = docs
        .iter()
        .map(|d| {
            d.iter()
                .map(|t| {
                    *vocab.entry(t.as_str()).or_insert_with(|| {
                        words.push(t.as_str());
                        (words.len() - 1) as u32
                    })
                })
                .collect()
        })
        .collect();

    let mut postings: Vec<Vec<u32>> = vec![Vec::new(); words.len()];
    let mut stats: HashMap<Vec<u32>, PhraseStats> = HashMap::new();
    for (doc_id, doc) in encoded.iter().enumerate() {
        for &tok in doc {
            let list = &mut postings[tok as usize];
            if list.last() != Some(&(doc_id as u32)) {
                list.push(doc_id as u32);
            }
        }
        for start in 0..doc.len() {
            let longest = options.max_n.min(doc.len() - start);
            for len in 1..=longest {
                let key = &doc[start..start + len];
                let s = match stats.get_mut(key) {
                    Some(s) => s,
                    None => stats.entry(key.to_vec()).or_default(),
                };
                s.freq += 1;
                if s.df == 0 || s.last_doc != doc_id {
                    s.df += 1;
                    s.last_doc = doc_id;
                }
            }
        }
    }

    let n_docs = docs.len() as u64;
    let mut entries: Vec<NGramEntry> = stats
        .into_iter()
        .filter(|(_, s)| s.freq >= options.min_freq)
        .map(|(key, s)| {
            let df_terms = if key.len() == 1 {
                s.df
            } else {
                terms_document_frequency(&key, &postings)
            };
            NGramEntry {
                phrase: key.iter().map(|&t| words[t as usize].to_string()).collect(),
                freq: s.freq,
                df_phrase: s.df,
                df_terms,
                weight: ngram_idf_weight(s.df, df_terms, n_docs),
            }
        })
        .collect();
    sort_canonical(&mut entries);

    Ok(NGramDictionary::assemble(n_docs, options.clone(), entries, None))
}

/// Number of documents holding every distinct token of `phrase`.
fn terms_document_frequency(phrase: &[u32], postings: &[Vec<u32>]) -> u64 {
    let mut distinct = phrase.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let mut lists: Vec<&[u32]> = distinct.iter().map(|&t| postings[t as usize].as_slice()).collect();
    lists.sort_by_key(|l| l.len());
    let (shortest, rest) = lists.split_first().expect("phrase is non-empty");
    shortest
        .iter()
        .filter(|doc| rest.iter().all(|l| l.binary_search(doc).is_ok()))
        .count() as u64
}

fn sort_canonical(entries: &mut [NGramEntry]) {
    entries.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then_with(|| a.phrase_text().cmp(&b.phrase_text()))
    });
}

fn compute_fingerprint(corpus_size: u64, options: &BuildOptions, entries: &[NGramEntry]) -> String {
    let mut h = Sha256::new();
    h.update(format!(
        "N={corpus_size};max_n={};min_freq={};pre={}\n",
        options.max_n, options.min_freq, options.preprocessing
    ));
    for e in entries {
        h.update(format!(
            "{}\t{}\t{}\t{}\n",
            e.phrase_text(),
            e.freq,
            e.df_phrase,
            e.df_terms
        ));
    }
    let digest = h.finalize();
    let mut hex = String::with_capacity(32);
    for b in &digest[..16] {
        let _ = write!(hex, "{b:02x}");
    }
    hex
}

impl NGramDictionary {
    fn assemble(
        corpus_size: u64,
        options: BuildOptions,
        entries: Vec<NGramEntry>,
        provenance: Option<String>,
    ) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.phrase.clone(), i))
            .collect();
        let fingerprint = compute_fingerprint(corpus_size, &options, &entries);
        NGramDictionary {
            corpus_size,
            options,
            entries,
            index,
            fingerprint,
            provenance,
        }
    }

    pub fn corpus_size(&self) -> u64 {
        self.corpus_size
    }

    pub fn max_n(&self) -> usize {
        self.options.max_n
    }

    pub fn min_freq(&self) -> u64 {
        self.options.min_freq
    }

    pub fn options(&self) -> &BuildOptions {
        &self.options
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[NGramEntry] {
        &self.entries
    }

    pub fn entry(&self, index: usize) -> &NGramEntry {
        &self.entries[index]
    }

    /// Feature index of a phrase, if it survived pruning.
    pub fn index_of(&self, phrase: &[String]) -> Option<usize> {
        self.index.get(phrase).copied()
    }

    pub fn get(&self, phrase: &[&str]) -> Option<&NGramEntry> {
        let key: Vec<String> = phrase.iter().map(|s| s.to_string()).collect();
        self.index_of(&key).map(|i| &self.entries[i])
    }

    /// Hash of the build settings and every entry's statistics.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn provenance(&self) -> Option<&str> {
        self.provenance.as_deref()
    }

    /// Attaches a one-line note (e.g. the run configuration) that is written
    /// with the export. It does not affect the fingerprint.
    pub fn set_provenance(&mut self, note: Option<String>) {
        self.provenance = note.map(|n| n.replace('\n', " "));
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{TSV_MAGIC}")?;
        writeln!(w, "# corpus_size: {}", self.corpus_size)?;
        writeln!(w, "# max_n: {}", self.options.max_n)?;
        writeln!(w, "# min_freq: {}", self.options.min_freq)?;
        writeln!(w, "# preprocessing: {}", self.options.preprocessing)?;
        writeln!(w, "# fingerprint: {}", self.fingerprint)?;
        if let Some(p) = &self.provenance {
            writeln!(w, "# provenance: {p}")?;
        }
        writeln!(w, "{TSV_HEADER}")?;
        for e in &self.entries {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{:.6}",
                e.phrase_text(),
                e.n(),
                e.freq,
                e.df_phrase,
                e.df_terms,
                e.weight
            )?;
        }
        Ok(())
    }

    pub fn to_tsv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("dictionary export is UTF-8")
    }

    /// Reads an export back. Weights are recomputed from the stored
    /// statistics and must agree with the printed six-decimal values.
    pub fn read_tsv<R: BufRead>(r: R) -> Result<Self> {
        let mut meta: HashMap<String, String> = HashMap::new();
        let mut entries = Vec::new();
        let mut saw_magic = false;
        let mut saw_header = false;

        for (i, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = i as u64 + 1;
            let perr = |message: String| Error::Parse {
                line: lineno,
                message,
            };
            if !saw_header {
                if line == TSV_MAGIC {
                    saw_magic = true;
                } else if let Some(rest) = line.strip_prefix("# ") {
                    let (k, v) = rest
                        .split_once(": ")
                        .ok_or_else(|| perr(format!("malformed metadata line {line:?}")))?;
                    meta.insert(k.to_string(), v.to_string());
                } else if line == TSV_HEADER {
                    saw_header = true;
                } else {
                    return Err(perr(format!("unexpected line before header: {line:?}")));
                }
                continue;
            }

            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 6 {
                return Err(perr(format!("expected 6 columns, found {}", cols.len())));
            }
            let phrase: Vec<String> = cols[0].split(' ').map(str::to_string).collect();
            let num = |s: &str, what: &str| {
                s.parse::<u64>()
                    .map_err(|_| perr(format!("bad {what} value {s:?}")))
            };
            let n = num(cols[1], "n")?;
            if n as usize != phrase.len() || phrase.iter().any(|t| t.is_empty()) {
                return Err(perr(format!("phrase {:?} does not have {n} tokens", cols[0])));
            }
            entries.push(NGramEntry {
                phrase,
                freq: num(cols[2], "freq")?,
                df_phrase: num(cols[3], "df_phrase")?,
                df_terms: num(cols[4], "df_terms")?,
                weight: f64::NAN,
            });
            let printed = cols[5];
            let e = entries.last_mut().expect("just pushed");
            e.weight = checked_weight(e, meta_u64(&meta, "corpus_size")?)
                .map_err(perr)?;
            if format!("{:.6}", e.weight) != printed {
                return Err(perr(format!(
                    "weight {printed} disagrees with statistics (expected {:.6})",
                    e.weight
                )));
            }
        }

        if !saw_magic || !saw_header {
            return Err(Error::Parse {
                line: 0,
                message: "not an n-gram dictionary export".to_string(),
            });
        }
        let corpus_size = meta_u64(&meta, "corpus_size")?;
        let options = BuildOptions {
            max_n: meta_u64(&meta, "max_n")? as usize,
            min_freq: meta_u64(&meta, "min_freq")?,
            preprocessing: meta
                .get("preprocessing")
                .cloned()
                .ok_or_else(|| missing_meta("preprocessing"))?,
        };
        options.validate()?;
        sort_canonical(&mut entries);
        let mut seen = std::collections::HashSet::new();
        for e in &entries {
            if !seen.insert(&e.phrase) {
                return Err(Error::invalid(format!("duplicate phrase {:?}", e.phrase_text())));
            }
        }
        let dict = Self::assemble(corpus_size, options, entries, meta.get("provenance").cloned());
        if let Some(fp) = meta.get("fingerprint") {
            if fp != &dict.fingerprint {
                return Err(Error::FingerprintMismatch {
                    expected: fp.clone(),
                    actual: dict.fingerprint.clone(),
                });
            }
        }
        Ok(dict)
    }
}

fn missing_meta(key: &str) -> Error {
    Error::Parse {
        line: 0,
        message: format!("missing `# {key}:` metadata"),
    }
}

fn meta_u64(meta: &HashMap<String, String>, key: &str) -> Result<u64> {
    let v = meta.get(key).ok_or_else(|| missing_meta(key))?;
    v.parse().map_err(|_| Error::Parse {
        line: 0,
        message: format!("bad {key} value {v:?}"),
    })
}

fn checked_weight(e: &NGramEntry, corpus_size: u64) -> std::result::Result<f64, String> {
    if !(1 <= e.df_phrase && e.df_phrase <= e.df_terms && e.df_terms <= corpus_size) {
        return Err(format!(
            "statistics violate 1 <= df_phrase <= df_terms <= N for {:?}",
            e.phrase_text()
        ));
    }
    if e.freq < e.df_phrase {
        return Err(format!("freq below df_phrase for {:?}", e.phrase_text()));
    }
    if e.n() == 1 && e.df_phrase != e.df_terms {
        return Err(format!("unigram {:?} has df_phrase != df_terms", e.phrase_text()));
    }
    Ok(ngram_idf_weight(e.df_phrase, e.df_terms, corpus_size))
}
