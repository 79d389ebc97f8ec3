//! Text normalization: character filtering, whitespace tokenization and
//! stop-word removal.

use std::collections::HashSet;
use std::ops::Deref;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");
pub const BUILTIN_STOPLIST_TAG: &str = "en-v1";

/// Ordered tokens over `[a-z0-9]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSequence(Vec<String>);

impl TokenSequence {
    /// Wraps tokens that are already normalized. Debug builds check the
    /// alphabet.
    pub fn new(tokens: Vec<String>) -> Self {
        debug_assert!(tokens
            .iter()
            .all(|t| !t.is_empty() && t.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())));
        TokenSequence(tokens)
    }

    pub fn from_words(words: &[&str]) -> Self {
        Self::new(words.iter().map(|w| w.to_string()).collect())
    }

    pub fn into_inner(self) -> Vec<String> {
        self.0
    }
}

impl Deref for TokenSequence {
    type Target = [String];

    fn deref(&self) -> &[String] {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopList {
    words: HashSet<String>,
    source_tag: String,
}

impl StopList {
    /// The list shipped with the crate.
    pub fn english() -> Self {
        Self::parse(BUILTIN_STOPWORDS, BUILTIN_STOPLIST_TAG)
    }

    /// One word per line; `#` starts a comment; blank lines ignored.
    pub fn parse(text: &str, source_tag: impl Into<String>) -> Self {
        let words = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| l.to_ascii_lowercase())
            .collect();
        StopList {
            words,
            source_tag: source_tag.into(),
        }
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text, format!("file:{}", path.display())))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.words.contains(token)
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Replaces every character outside `[A-Za-z0-9]` with one space.
pub fn clean_text(raw: &str) -> String {
    raw.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { ' ' })
        .collect()
}

pub fn tokenize(clean: &str) -> TokenSequence {
    TokenSequence(
        clean
            .split_whitespace()
            .map(|t| t.to_ascii_lowercase())
            .collect(),
    )
}

pub fn remove_stopwords(ts: &TokenSequence, sl: &StopList) -> TokenSequence {
    TokenSequence(ts.iter().filter(|t| !sl.contains(t)).cloned().collect())
}

/// The full normalization pipeline with an optional stop list.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    stoplist: Option<StopList>,
}

impl Preprocessor {
    pub fn new(stoplist: Option<StopList>) -> Self {
        Preprocessor { stoplist }
    }

    pub fn with_builtin_stopwords() -> Self {
        Self::new(Some(StopList::english()))
    }

    pub fn without_stopwords() -> Self {
        Self::new(None)
    }

    pub fn process(&self, raw: &str) -> TokenSequence {
        let tokens = tokenize(&clean_text(raw));
        match &self.stoplist {
            Some(sl) => remove_stopwords(&tokens, sl),
            None => tokens,
        }
    }

    /// Stable description of the settings, fed into dictionary fingerprints.
    pub fn describe(&self) -> String {
        match &self.stoplist {
            Some(sl) => format!("stopwords:{}", sl.source_tag()),
            None => "stopwords:off".to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cleaning_examples() {
        assert_eq!(clean_text("doesn't work :("), "doesn t work   ");
        assert_eq!(clean_text("abc123"), "abc123");
        assert_eq!(clean_text("@#$%"), "    ");
        assert!(tokenize(&clean_text("@#$%")).is_empty());
        // Non-ASCII letters count as foreign characters.
        assert_eq!(clean_text("café"), "caf ");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Does N T Work"), TokenSequence::from_words(&["does", "n", "t", "work"]));
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("a  b"), TokenSequence::from_words(&["a", "b"]));
    }

    #[test]
    fn stopword_examples() {
        let sl = StopList::parse("this\nis # comment\n\n", "test");
        assert_eq!(sl.len(), 2);
        let ts = TokenSequence::from_words(&["this", "is", "awesome"]);
        assert_eq!(remove_stopwords(&ts, &sl), TokenSequence::from_words(&["awesome"]));
        assert!(remove_stopwords(&TokenSequence::default(), &sl).is_empty());
        let bug = TokenSequence::from_words(&["bug"]);
        assert_eq!(remove_stopwords(&bug, &sl), bug);
    }

    #[test]
    fn builtin_list_is_normalized() {
        let sl = StopList::english();
        assert_eq!(sl.source_tag(), BUILTIN_STOPLIST_TAG);
        assert!(sl.contains("the"));
        assert!(!sl.contains("bug"));
        for w in &sl.words {
            assert_eq!(tokenize(&clean_text(w)).len(), 1, "{w}");
        }
    }

    #[test]
    fn pipeline_matches_table_style_phrases() {
        let p = Preprocessor::without_stopwords();
        assert_eq!(
            p.process("Doesn't work!"),
            TokenSequence::from_words(&["doesn", "t", "work"])
        );
        let p = Preprocessor::with_builtin_stopwords();
        assert_eq!(p.process("This is awesome"), TokenSequence::from_words(&["awesome"]));
        assert_eq!(p.describe(), "stopwords:en-v1");
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(s in "\\PC*") {
            let once = clean_text(&s);
            prop_assert_eq!(clean_text(&once), once);
        }

        #[test]
        fn tokens_stay_in_alphabet(s in "\\PC*") {
            for t in tokenize(&clean_text(&s)).iter() {
                prop_assert!(!t.is_empty());
                prop_assert!(t.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit()));
            }
        }

        #[test]
        fn stop_removal_is_subsequence(words in prop::collection::vec("[a-e]{1,2}", 0..30)) {
            let ts = TokenSequence(words);
            let sl = StopList::parse("a\nb\ncd", "t");
            let out = remove_stopwords(&ts, &sl);
            let mut it = ts.iter();
            for t in out.iter() {
                prop_assert!(it.any(|x| x == t));
            }
        }
    }
}
