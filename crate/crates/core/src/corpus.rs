//! Monolingual gold-text ingestion: normalization, loading and filtering.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

/// Languages the dataset factory knows how to handle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lang {
    Hi,
    Mr,
    Brx,
    Ne,
    Gom,
    Sa,
}

impl Lang {
    pub const ALL: [Lang; 6] = [Lang::Hi, Lang::Mr, Lang::Brx, Lang::Ne, Lang::Gom, Lang::Sa];

    pub fn as_str(self) -> &'static str {
        match self {
            Lang::Hi => "hi",
            Lang::Mr => "mr",
            Lang::Brx => "brx",
            Lang::Ne => "ne",
            Lang::Gom => "gom",
            Lang::Sa => "sa",
        }
    }
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Lang {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Lang::ALL
            .iter()
            .copied()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| CorpusError::UnknownLang(s.to_string()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("unsupported language tag `{0}` (expected one of hi, mr, brx, ne, gom, sa)")]
    UnknownLang(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not valid UTF-8 (first invalid byte at offset {offset})")]
    InvalidUtf8 { path: PathBuf, offset: usize },
    #[error("invalid filter rules: {0}")]
    InvalidRules(String),
}

/// A normalized gold sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub id: u64,
    pub lang: Lang,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub lang: Lang,
    pub sentences: Vec<Sentence>,
}

impl Corpus {
    /// Builds a corpus from raw lines, normalizing each and numbering the
    /// survivors from zero. Lines that normalize to nothing are dropped.
    pub fn from_lines<'a>(lang: Lang, lines: impl IntoIterator<Item = &'a str>) -> Corpus {
        let sentences = lines
            .into_iter()
            .filter_map(normalize_sentence)
            .enumerate()
            .map(|(i, text)| Sentence {
                id: i as u64,
                lang,
                text,
            })
            .collect();
        Corpus { lang, sentences }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().map(|s| s.text.as_str())
    }
}

/// Whitespace-collapsed, control-free, NFC text. May be empty.
pub fn normalize_text(raw: &str) -> String {
    let cleaned: String = raw
        .chars()
        .filter_map(|c| {
            if c.is_whitespace() {
                Some(' ')
            } else if c.is_control() {
                None
            } else {
                Some(c)
            }
        })
        .collect();
    let composed: String = cleaned.nfc().collect();
    let mut out = String::with_capacity(composed.len());
    for word in composed.split(' ').filter(|w| !w.is_empty()) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Normalizes one raw line into sentence text, or `None` when nothing is left.
pub fn normalize_sentence(raw: &str) -> Option<String> {
    let text = normalize_text(raw);
    (!text.is_empty()).then_some(text)
}

/// One input line that did not become a sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    /// 1-based line number in the source file.
    pub line: usize,
    pub reason: &'static str,
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub skipped: Vec<SkippedLine>,
}

impl LoadedCorpus {
    /// Plain-text sidecar listing rejected lines, one `line<TAB>reason` per row.
    pub fn skipped_report(&self) -> String {
        self.skipped
            .iter()
            .map(|s| format!("{}\t{}\n", s.line, s.reason))
            .collect()
    }
}

/// Reads a newline-delimited UTF-8 file into a normalized corpus.
pub fn load_corpus(path: &Path, lang: Lang) -> Result<LoadedCorpus, CorpusError> {
    let bytes = std::fs::read(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CorpusError::InvalidUtf8 {
        path: path.to_path_buf(),
        offset: e.valid_up_to(),
    })?;
    let mut sentences = Vec::new();
    let mut skipped = Vec::new();
    // `lines` treats a trailing newline as a terminator, not an extra empty line.
    for (i, line) in text.lines().enumerate() {
        match normalize_sentence(line) {
            Some(text) => sentences.push(Sentence {
                id: sentences.len() as u64,
                lang,
                text,
            }),
            None => skipped.push(SkippedLine {
                line: i + 1,
                reason: "empty after normalization",
            }),
        }
    }
    Ok(LoadedCorpus {
        corpus: Corpus { lang, sentences },
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterRules {
    /// Inclusive bounds on the sentence length in codepoints.
    pub min_len: usize,
    pub max_len: usize,
    /// Minimum share of non-space codepoints in U+0900..=U+097F.
    pub devanagari_ratio: f64,
}

impl Default for FilterRules {
    fn default() -> Self {
        FilterRules {
            min_len: 1,
            max_len: 500,
            devanagari_ratio: 0.5,
        }
    }
}

impl FilterRules {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.min_len > self.max_len {
            return Err(CorpusError::InvalidRules(format!(
                "min_len {} exceeds max_len {}",
                self.min_len, self.max_len
            )));
        }
        if !(0.0..=1.0).contains(&self.devanagari_ratio) {
            return Err(CorpusError::InvalidRules(format!(
                "devanagari_ratio {} outside [0, 1]",
                self.devanagari_ratio
            )));
        }
        Ok(())
    }

    pub fn accepts(&self, text: &str) -> bool {
        let len = text.chars().count();
        len >= self.min_len && len <= self.max_len && devanagari_ratio(text) >= self.devanagari_ratio
    }
}

pub fn is_devanagari(c: char) -> bool {
    ('\u{0900}'..='\u{097F}').contains(&c)
}

/// Share of non-space codepoints that fall in the Devanagari block.
pub fn devanagari_ratio(text: &str) -> f64 {
    let (mut total, mut deva) = (0usize, 0usize);
    for c in text.chars().filter(|c| !c.is_whitespace()) {
        total += 1;
        deva += usize::from(is_devanagari(c));
    }
    if total == 0 {
        0.0
    } else {
        deva as f64 / total as f64
    }
}

/// Keeps exactly the sentences that satisfy every rule, in order.
pub fn filter_corpus(corpus: &Corpus, rules: &FilterRules) -> Result<Corpus, CorpusError> {
    rules.validate()?;
    Ok(Corpus {
        lang: corpus.lang,
        sentences: corpus
            .sentences
            .iter()
            .filter(|s| rules.accepts(&s.text))
            .cloned()
            .collect(),
    })
}
