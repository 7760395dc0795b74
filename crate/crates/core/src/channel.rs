//! The OCR channel: character confusion statistics learned from aligned
//! `<gold, ocr>` pairs.
//!
//! Each gold character is either deleted or emitted as some character
//! (itself included). Between gold characters, and before the first and
//! after the last, sit insertion slots; a slot holds a geometric number of
//! inserted characters, each drawn from a shared insertion distribution.
//! Counts are kept as weights so hand-specified noise models and learned
//! ones share one representation and one file format.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::edit::{self, AlignOp};
use crate::pipeline::PairSet;
use crate::textfmt::{decode_char, encode_char};

pub const DEFAULT_SMOOTHING: f64 = 0.01;
const FORMAT_TAG: &str = "ROUNDTRIP-CONFUSION";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ChannelError {
    #[error("no characters observed; cannot build a confusion model")]
    EmptyAlphabet,
    #[error("invalid smoothing constant {0} (must be finite and >= 0)")]
    InvalidSmoothing(f64),
    #[error("invalid noise parameters: {0}")]
    InvalidNoise(String),
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Minimal-cost character alignment of gold onto OCR output.
pub fn align_pair(gold: &str, ocr: &str) -> Vec<AlignOp<char>> {
    let g: Vec<char> = gold.chars().collect();
    let o: Vec<char> = ocr.chars().collect();
    edit::align(&g, &o)
}

/// Raw confusion weights. Merging is associative, so counting can be split
/// across threads freely.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfusionCounts {
    alphabet: BTreeSet<char>,
    sub: BTreeMap<char, BTreeMap<char, f64>>,
    del: BTreeMap<char, f64>,
    ins: BTreeMap<char, f64>,
    /// Number of slot terminations: one per insertion slot.
    slots: f64,
}

impl ConfusionCounts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_char(&mut self, c: char) {
        self.alphabet.insert(c);
    }

    pub fn add_sub(&mut self, gold: char, emitted: char, weight: f64) {
        self.alphabet.insert(gold);
        self.alphabet.insert(emitted);
        *self.sub.entry(gold).or_default().entry(emitted).or_default() += weight;
    }

    pub fn add_del(&mut self, gold: char, weight: f64) {
        self.alphabet.insert(gold);
        *self.del.entry(gold).or_default() += weight;
    }

    pub fn add_ins(&mut self, emitted: char, weight: f64) {
        self.alphabet.insert(emitted);
        *self.ins.entry(emitted).or_default() += weight;
    }

    pub fn add_slots(&mut self, weight: f64) {
        self.slots += weight;
    }

    /// Counts one aligned pair.
    pub fn add_pair(&mut self, gold: &str, ocr: &str) {
        let ops = align_pair(gold, ocr);
        let mut gold_len = 0usize;
        for op in ops {
            match op {
                AlignOp::Match(c) => {
                    self.add_sub(c, c, 1.0);
                    gold_len += 1;
                }
                AlignOp::Substitute {
                    reference,
                    hypothesis,
                } => {
                    self.add_sub(reference, hypothesis, 1.0);
                    gold_len += 1;
                }
                AlignOp::Delete(c) => {
                    self.add_del(c, 1.0);
                    gold_len += 1;
                }
                AlignOp::Insert(c) => self.add_ins(c, 1.0),
            }
        }
        self.add_slots((gold_len + 1) as f64);
    }

    pub fn merge(mut self, other: ConfusionCounts) -> ConfusionCounts {
        self.alphabet.extend(other.alphabet);
        for (g, row) in other.sub {
            let mine = self.sub.entry(g).or_default();
            for (e, w) in row {
                *mine.entry(e).or_default() += w;
            }
        }
        for (g, w) in other.del {
            *self.del.entry(g).or_default() += w;
        }
        for (e, w) in other.ins {
            *self.ins.entry(e).or_default() += w;
        }
        self.slots += other.slots;
        self
    }

    pub fn sub_weight(&self, gold: char, emitted: char) -> f64 {
        self.sub
            .get(&gold)
            .and_then(|row| row.get(&emitted))
            .copied()
            .unwrap_or(0.0)
    }

    /// Total weight of gold `c` aligned to anything (deletion included).
    pub fn gold_weight(&self, c: char) -> f64 {
        self.sub.get(&c).map_or(0.0, |r| r.values().sum::<f64>()) + self.del.get(&c).copied().unwrap_or(0.0)
    }

    /// Normalizes the weights with add-`k` smoothing over the observed alphabet.
    pub fn finalize(self, k: f64) -> Result<ConfusionModel, ChannelError> {
        if !k.is_finite() || k < 0.0 {
            return Err(ChannelError::InvalidSmoothing(k));
        }
        if self.alphabet.is_empty() {
            return Err(ChannelError::EmptyAlphabet);
        }
        let a = self.alphabet.len() as f64;
        let row_totals = self
            .alphabet
            .iter()
            .map(|&g| (g, self.gold_weight(g) + k * (a + 1.0)))
            .filter(|&(_, t)| t > 0.0)
            .collect();
        let ins_weight: f64 = self.ins.values().sum();
        let p_ins = if ins_weight + self.slots > 0.0 {
            ins_weight / (ins_weight + self.slots)
        } else {
            0.0
        };
        Ok(ConfusionModel {
            k,
            row_totals,
            ins_total: ins_weight + k * a,
            p_ins,
            counts: self,
        })
    }
}

/// A normalized confusion channel. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionModel {
    k: f64,
    counts: ConfusionCounts,
    row_totals: HashMap<char, f64>,
    ins_total: f64,
    p_ins: f64,
}

impl ConfusionModel {
    /// A channel that copies every character of `alphabet` unchanged.
    pub fn identity(alphabet: impl IntoIterator<Item = char>) -> Result<Self, ChannelError> {
        Self::uniform(alphabet, 0.0, 0.0, 0.0)
    }

    /// Every character is deleted with `p_del`, replaced by a uniformly chosen
    /// other character with `p_sub`, and each slot gains an insertion
    /// (uniform over the alphabet) with `p_ins`.
    pub fn uniform(
        alphabet: impl IntoIterator<Item = char>,
        p_sub: f64,
        p_del: f64,
        p_ins: f64,
    ) -> Result<Self, ChannelError> {
        let alphabet: BTreeSet<char> = alphabet.into_iter().collect();
        let probs_ok = [p_sub, p_del, p_ins].iter().all(|p| (0.0..=1.0).contains(p));
        if !probs_ok || p_sub + p_del > 1.0 || p_ins >= 1.0 {
            return Err(ChannelError::InvalidNoise(format!(
                "need 0 <= p_sub, p_del, p_sub + p_del <= 1 and 0 <= p_ins < 1 (got {p_sub}, {p_del}, {p_ins})"
            )));
        }
        if alphabet.is_empty() {
            return Err(ChannelError::EmptyAlphabet);
        }
        if p_sub > 0.0 && alphabet.len() < 2 {
            return Err(ChannelError::InvalidNoise(
                "substitution needs at least two characters".into(),
            ));
        }
        let mut counts = ConfusionCounts::new();
        let others = (alphabet.len() - 1).max(1) as f64;
        for &g in &alphabet {
            counts.add_char(g);
            if p_sub + p_del < 1.0 {
                counts.add_sub(g, g, 1.0 - p_sub - p_del);
            }
            if p_sub > 0.0 {
                for &e in alphabet.iter().filter(|&&e| e != g) {
                    counts.add_sub(g, e, p_sub / others);
                }
            }
            if p_del > 0.0 {
                counts.add_del(g, p_del);
            }
            if p_ins > 0.0 {
                counts.add_ins(g, p_ins / alphabet.len() as f64);
            }
        }
        counts.add_slots(1.0 - p_ins);
        counts.finalize(0.0)
    }

    pub fn smoothing_k(&self) -> f64 {
        self.k
    }

    pub fn alphabet(&self) -> impl Iterator<Item = char> + '_ {
        self.counts.alphabet.iter().copied()
    }

    pub fn in_alphabet(&self, c: char) -> bool {
        self.counts.alphabet.contains(&c)
    }

    pub fn counts(&self) -> &ConfusionCounts {
        &self.counts
    }

    /// True when `gold` has a normalized emission distribution.
    pub fn has_row(&self, gold: char) -> bool {
        self.row_totals.contains_key(&gold)
    }

    /// P(emitted | gold), identity included.
    pub fn sub_prob(&self, gold: char, emitted: char) -> f64 {
        match self.row_totals.get(&gold) {
            Some(total) if self.in_alphabet(emitted) => {
                (self.counts.sub_weight(gold, emitted) + self.k) / total
            }
            _ => 0.0,
        }
    }

    /// P(deleted | gold).
    pub fn del_prob(&self, gold: char) -> f64 {
        match self.row_totals.get(&gold) {
            Some(total) => (self.counts.del.get(&gold).copied().unwrap_or(0.0) + self.k) / total,
            None => 0.0,
        }
    }

    /// Probability that an insertion slot continues with one more character.
    pub fn p_ins(&self) -> f64 {
        self.p_ins
    }

    /// Distribution of inserted characters.
    pub fn ins_prob(&self, emitted: char) -> f64 {
        if self.ins_total <= 0.0 || !self.in_alphabet(emitted) {
            return 0.0;
        }
        (self.counts.ins.get(&emitted).copied().unwrap_or(0.0) + self.k) / self.ins_total
    }

    pub fn ln_sub(&self, gold: char, emitted: char) -> f64 {
        self.sub_prob(gold, emitted).ln()
    }

    pub fn ln_del(&self, gold: char) -> f64 {
        self.del_prob(gold).ln()
    }

    /// Log-probability of closing an insertion slot.
    pub fn ln_slot_end(&self) -> f64 {
        (1.0 - self.p_ins).ln()
    }

    /// Log-probability of one inserted `emitted` inside a slot.
    pub fn ln_insert(&self, emitted: char) -> f64 {
        self.p_ins.ln() + self.ins_prob(emitted).ln()
    }

    /// Serializes to the tab-separated count table.
    pub fn to_text(&self) -> String {
        let c = &self.counts;
        let mut out = String::new();
        let _ = writeln!(out, "{FORMAT_TAG}\t{FORMAT_VERSION}\t{}\t{}", c.alphabet.len(), self.k);
        let _ = writeln!(out, "SLOTS\t{}", c.slots);
        for &ch in &c.alphabet {
            let _ = writeln!(out, "CHAR\t{}", encode_char(ch));
        }
        for (&g, row) in &c.sub {
            for (&e, w) in row {
                let _ = writeln!(out, "SUB\t{}\t{}\t{}", encode_char(g), encode_char(e), w);
            }
        }
        for (&g, w) in &c.del {
            let _ = writeln!(out, "DEL\t{}\t{}", encode_char(g), w);
        }
        for (&e, w) in &c.ins {
            let _ = writeln!(out, "INS\t{}\t{}", encode_char(e), w);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, ChannelError> {
        let err = |line: usize, message: String| ChannelError::Parse { line, message };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let h: Vec<&str> = header.split('\t').collect();
        if h.len() != 4 || h[0] != FORMAT_TAG {
            return Err(err(1, format!("expected `{FORMAT_TAG}` header")));
        }
        if h[1] != FORMAT_VERSION.to_string() {
            return Err(err(1, format!("unsupported version {} (expected {FORMAT_VERSION})", h[1])));
        }
        let alphabet_size: usize = h[2].parse().map_err(|_| err(1, "bad alphabet size".into()))?;
        let k: f64 = h[3].parse().map_err(|_| err(1, "bad smoothing constant".into()))?;
        let mut counts = ConfusionCounts::new();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            let ch = |i: usize| {
                f.get(i)
                    .and_then(|s| decode_char(s))
                    .ok_or_else(|| err(n, format!("bad character field {}", i + 1)))
            };
            let num = |i: usize| {
                f.get(i)
                    .and_then(|s| s.parse::<f64>().ok())
                    .filter(|w| w.is_finite() && *w >= 0.0)
                    .ok_or_else(|| err(n, format!("bad weight field {}", i + 1)))
            };
            match (f[0], f.len()) {
                ("SLOTS", 2) => counts.add_slots(num(1)?),
                ("CHAR", 2) => counts.add_char(ch(1)?),
                ("SUB", 4) => counts.add_sub(ch(1)?, ch(2)?, num(3)?),
                ("DEL", 3) => counts.add_del(ch(1)?, num(2)?),
                ("INS", 3) => counts.add_ins(ch(1)?, num(2)?),
                _ => return Err(err(n, format!("unrecognized row `{line}`"))),
            }
        }
        if counts.alphabet.len() != alphabet_size {
            return Err(err(
                1,
                format!("header declares {alphabet_size} characters, file has {}", counts.alphabet.len()),
            ));
        }
        counts.finalize(k)
    }

    pub fn save(&self, path: &Path) -> Result<(), ChannelError> {
        crate::io::write_string_atomic(path, &self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ChannelError> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Counts every pair's alignment and normalizes with add-`k` smoothing.
pub fn build_confusion(pairs: &PairSet, k: f64) -> Result<ConfusionModel, ChannelError> {
    build_confusion_from(pairs.pairs.par_iter().map(|p| (p.gold.as_str(), p.ocr.as_str())), k)
}

pub fn build_confusion_from<'a>(
    pairs: impl ParallelIterator<Item = (&'a str, &'a str)>,
    k: f64,
) -> Result<ConfusionModel, ChannelError> {
    pairs
        .fold(ConfusionCounts::new, |mut acc, (gold, ocr)| {
            acc.add_pair(gold, ocr);
            acc
        })
        .reduce(ConfusionCounts::new, ConfusionCounts::merge)
        .finalize(k)
}

/// Log P(ocr | gold) along the minimal-cost alignment. Impossible paths give
/// negative infinity.
pub fn channel_logprob(gold: &str, ocr: &str, model: &ConfusionModel) -> f64 {
    let mut lp = 0.0;
    for op in align_pair(gold, ocr) {
        lp += match op {
            AlignOp::Match(c) => model.ln_slot_end() + model.ln_sub(c, c),
            AlignOp::Substitute {
                reference,
                hypothesis,
            } => model.ln_slot_end() + model.ln_sub(reference, hypothesis),
            AlignOp::Delete(c) => model.ln_slot_end() + model.ln_del(c),
            AlignOp::Insert(c) => model.ln_insert(c),
        };
    }
    lp + model.ln_slot_end()
}
