//! Character n-gram language model with add-k smoothing.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::Corpus;
use crate::textfmt::{decode_char, encode_char};

pub const DEFAULT_ORDER: usize = 5;
pub const DEFAULT_LM_SMOOTHING: f64 = 0.01;
const FORMAT_TAG: &str = "ROUNDTRIP-CHARLM";
const FORMAT_VERSION: u32 = 1;
const BOS: &str = "<s>";
const EOS: &str = "</s>";

#[derive(Debug, thiserror::Error)]
pub enum LmError {
    #[error("cannot train a language model on an empty corpus")]
    EmptyCorpus,
    #[error("n-gram order must be at least 1 (got {0})")]
    InvalidOrder(usize),
    #[error("invalid smoothing constant {0} (must be finite and >= 0)")]
    InvalidSmoothing(f64),
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A symbol of the padded sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Bos,
    Eos,
    Char(char),
}

fn encode_sym(s: Sym) -> String {
    match s {
        Sym::Bos => BOS.to_string(),
        Sym::Eos => EOS.to_string(),
        Sym::Char(c) => encode_char(c),
    }
}

fn decode_sym(field: &str) -> Option<Sym> {
    match field {
        BOS => Some(Sym::Bos),
        EOS => Some(Sym::Eos),
        _ => decode_char(field).map(Sym::Char),
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct HistoryCounts {
    total: u64,
    next: HashMap<Sym, u64>,
}

/// P(w | h) = (c(h, w) + k) / (c(h) + k·(|V| + 1)) over V ∪ {end}, with
/// histories of exactly `order - 1` symbols, padded on the left with start
/// symbols.
#[derive(Debug, Clone, PartialEq)]
pub struct CharLm {
    order: usize,
    k: f64,
    vocab: BTreeSet<char>,
    table: HashMap<Vec<Sym>, HistoryCounts>,
}

impl CharLm {
    pub fn train<'a>(
        texts: impl IntoIterator<Item = &'a str>,
        order: usize,
        k: f64,
    ) -> Result<CharLm, LmError> {
        if order < 1 {
            return Err(LmError::InvalidOrder(order));
        }
        if !k.is_finite() || k < 0.0 {
            return Err(LmError::InvalidSmoothing(k));
        }
        let mut lm = CharLm {
            order,
            k,
            vocab: BTreeSet::new(),
            table: HashMap::new(),
        };
        let mut seen = false;
        for text in texts {
            seen = true;
            let mut history = vec![Sym::Bos; order - 1];
            for sym in text.chars().map(Sym::Char).chain([Sym::Eos]) {
                if let Sym::Char(c) = sym {
                    lm.vocab.insert(c);
                }
                lm.add(&history, sym, 1);
                if order > 1 {
                    history.remove(0);
                    history.push(sym);
                }
            }
        }
        if !seen {
            return Err(LmError::EmptyCorpus);
        }
        Ok(lm)
    }

    fn add(&mut self, history: &[Sym], next: Sym, count: u64) {
        let entry = self.table.entry(history.to_vec()).or_default();
        entry.total += count;
        *entry.next.entry(next).or_default() += count;
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothing_k(&self) -> f64 {
        self.k
    }

    pub fn vocab(&self) -> impl Iterator<Item = char> + '_ {
        self.vocab.iter().copied()
    }

    pub fn in_vocab(&self, c: char) -> bool {
        self.vocab.contains(&c)
    }

    /// P(next | history). `history` must hold `order - 1` symbols.
    pub fn prob(&self, history: &[Sym], next: Sym) -> f64 {
        debug_assert_eq!(history.len(), self.order - 1);
        match next {
            Sym::Bos => return 0.0,
            Sym::Char(c) if !self.in_vocab(c) => return 0.0,
            _ => {}
        }
        let outcomes = (self.vocab.len() + 1) as f64;
        let (count, total) = match self.table.get(history) {
            Some(h) => (h.next.get(&next).copied().unwrap_or(0), h.total),
            None => (0, 0),
        };
        let denom = total as f64 + self.k * outcomes;
        if denom <= 0.0 {
            return 0.0;
        }
        (count as f64 + self.k) / denom
    }

    /// ln P(next | the text ending in `tail`). Only the last `order - 1`
    /// characters of `tail` are used; shorter tails are padded with start
    /// symbols. `None` asks for the end symbol.
    pub fn ln_next(&self, tail: &[char], next: Option<char>) -> f64 {
        let h = self.order - 1;
        let used = &tail[tail.len().saturating_sub(h)..];
        let pad = h - used.len();
        let fill = |buf: &mut [Sym]| {
            buf[..pad].fill(Sym::Bos);
            for (slot, &c) in buf[pad..].iter_mut().zip(used) {
                *slot = Sym::Char(c);
            }
        };
        let next = next.map_or(Sym::Eos, Sym::Char);
        let mut stack = [Sym::Bos; 8];
        if h <= stack.len() {
            fill(&mut stack[..h]);
            self.prob(&stack[..h], next).ln()
        } else {
            let mut history = vec![Sym::Bos; h];
            fill(&mut history);
            self.prob(&history, next).ln()
        }
    }

    /// Sum of conditional log-probabilities of the characters of `text`
    /// followed by the end symbol.
    pub fn logprob(&self, text: &str) -> f64 {
        let chars: Vec<char> = text.chars().collect();
        let mut lp = 0.0;
        for i in 0..=chars.len() {
            lp += self.ln_next(&chars[..i], chars.get(i).copied());
        }
        lp
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_TAG}\t{FORMAT_VERSION}\t{}\t{}", self.order, self.k);
        for &c in &self.vocab {
            let _ = writeln!(out, "V\t{}", encode_char(c));
        }
        let sorted: BTreeMap<&Vec<Sym>, &HistoryCounts> = self.table.iter().collect();
        for (history, counts) in sorted {
            let h: Vec<String> = history.iter().map(|&s| encode_sym(s)).collect();
            let next: BTreeMap<&Sym, &u64> = counts.next.iter().collect();
            for (sym, n) in next {
                let _ = writeln!(out, "N\t{}\t{}\t{n}", h.join(" "), encode_sym(*sym));
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<CharLm, LmError> {
        let err = |line: usize, message: &str| LmError::Parse {
            line,
            message: message.to_string(),
        };
        let mut lines = text.lines().enumerate();
        let header = lines.next().map(|(_, l)| l).ok_or_else(|| err(1, "missing header"))?;
        let fields: Vec<&str> = header.split('\t').collect();
        if fields.len() != 4 || fields[0] != FORMAT_TAG {
            return Err(err(1, "not a character LM file"));
        }
        if fields[1] != FORMAT_VERSION.to_string() {
            return Err(err(1, &format!("unsupported version {}", fields[1])));
        }
        let order: usize = fields[2].parse().map_err(|_| err(1, "bad order"))?;
        let k: f64 = fields[3].parse().map_err(|_| err(1, "bad smoothing constant"))?;
        if order < 1 {
            return Err(LmError::InvalidOrder(order));
        }
        if !k.is_finite() || k < 0.0 {
            return Err(LmError::InvalidSmoothing(k));
        }
        let mut lm = CharLm {
            order,
            k,
            vocab: BTreeSet::new(),
            table: HashMap::new(),
        };
        for (i, line) in lines {
            let n = i + 1;
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["V", c] => {
                    lm.vocab.insert(decode_char(c).ok_or_else(|| err(n, "bad character"))?);
                }
                ["N", history, next, count] => {
                    let history: Vec<Sym> = if history.is_empty() {
                        Vec::new()
                    } else {
                        history
                            .split(' ')
                            .map(decode_sym)
                            .collect::<Option<_>>()
                            .ok_or_else(|| err(n, "bad history"))?
                    };
                    if history.len() != order - 1 {
                        return Err(err(n, "history length does not match order"));
                    }
                    let next = decode_sym(next).ok_or_else(|| err(n, "bad symbol"))?;
                    let count: u64 = count.parse().map_err(|_| err(n, "bad count"))?;
                    lm.add(&history, next, count);
                }
                _ => return Err(err(n, "unrecognized row")),
            }
        }
        Ok(lm)
    }

    pub fn save(&self, path: &Path) -> Result<(), LmError> {
        crate::io::write_string_atomic(path, &self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<CharLm, LmError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

pub fn train_char_lm(corpus: &Corpus, order: usize, k: f64) -> Result<CharLm, LmError> {
    if corpus.is_empty() {
        return Err(LmError::EmptyCorpus);
    }
    CharLm::train(corpus.texts(), order, k)
}

pub fn lm_logprob(lm: &CharLm, text: &str) -> f64 {
    lm.logprob(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bigram_hand_count() {
        let lm = CharLm::train(["ab"], 2, 0.0).unwrap();
        assert_eq!(lm.prob(&[Sym::Char('a')], Sym::Char('b')), 1.0);
        assert_eq!(lm.prob(&[Sym::Bos], Sym::Char('a')), 1.0);
        assert_eq!(lm.prob(&[Sym::Char('b')], Sym::Eos), 1.0);
        assert_eq!(lm.logprob("ab"), 0.0);
        assert_eq!(lm.logprob("ba"), f64::NEG_INFINITY);
    }

    #[test]
    fn smoothed_bigram_hand_values() {
        // Trained on "ab" x 3 with k = 0.01; V = {a, b}, three outcomes.
        let lm = CharLm::train(["ab", "ab", "ab"], 2, 0.01).unwrap();
        let big: f64 = (3.0 + 0.01) / (3.0 + 0.03);
        let small: f64 = 0.01 / (3.0 + 0.03);
        let ab = 3.0 * big.ln();
        let ba = 3.0 * small.ln();
        assert!((lm.logprob("ab") - ab).abs() < 1e-12);
        assert!((lm.logprob("ba") - ba).abs() < 1e-12);
        assert!(lm.logprob("ab") > lm.logprob("ba"));
        // empty string: end straight after the start symbol
        assert!((lm.logprob("") - small.ln()).abs() < 1e-12);
    }

    #[test]
    fn unigram_ignores_history() {
        let lm = CharLm::train(["aab"], 1, 0.0).unwrap();
        assert!((lm.logprob("a") - (0.5f64.ln() + 0.25f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn empty_corpus_and_bad_order_fail() {
        assert!(matches!(CharLm::train(Vec::<&str>::new(), 3, 0.1), Err(LmError::EmptyCorpus)));
        assert!(matches!(CharLm::train(["a"], 0, 0.1), Err(LmError::InvalidOrder(0))));
        assert!(matches!(CharLm::train(["a"], 2, -1.0), Err(LmError::InvalidSmoothing(_))));
    }

    #[test]
    fn text_format_round_trips() {
        let lm = CharLm::train(["कि ताब", "a\tb", "<s>"], 3, 0.5).unwrap();
        let back = CharLm::from_text(&lm.to_text()).unwrap();
        assert_eq!(back, lm);
        assert!(matches!(CharLm::from_text("nonsense"), Err(LmError::Parse { line: 1, .. })));
        let bad = format!("{FORMAT_TAG}\t1\t2\t0.1\nN\ta b\tc\t1\n");
        assert!(matches!(CharLm::from_text(&bad), Err(LmError::Parse { line: 2, .. })));
    }

    proptest! {
        #[test]
        fn conditionals_sum_to_one(
            texts in proptest::collection::vec("[abc ]{0,8}", 1..6),
            order in 1usize..5,
            k in 0.001f64..2.0,
            history in proptest::collection::vec(prop_oneof![Just(Sym::Bos), Just(Sym::Char('a')), Just(Sym::Char('c')), Just(Sym::Char('z'))], 4),
        ) {
            let lm = CharLm::train(texts.iter().map(String::as_str), order, k).unwrap();
            let h = &history[..order - 1];
            let total: f64 = lm.vocab().map(|c| lm.prob(h, Sym::Char(c))).sum::<f64>() + lm.prob(h, Sym::Eos);
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn in_vocab_strings_have_finite_logprob(
            texts in proptest::collection::vec("[abc]{1,8}", 1..6),
            probe in "[abc]{0,10}",
        ) {
            let lm = CharLm::train(texts.iter().map(String::as_str), 3, 0.1).unwrap();
            let probe: String = probe.chars().filter(|&c| lm.in_vocab(c)).collect();
            prop_assert!(lm.logprob(&probe).is_finite());
            let chars: Vec<char> = probe.chars().collect();
            for i in 0..=chars.len() {
                prop_assert!(lm.ln_next(&chars[..i], chars.get(i).copied()) <= 0.0);
            }
        }
    }
}
