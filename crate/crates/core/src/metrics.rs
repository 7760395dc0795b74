//! Character and word error rates, corpus reports and per-font breakdowns.
//!
//! CER = (S + D + I) / N over characters and WER = (S + D + I) / W over
//! whitespace-separated words, where N and W are reference lengths. Corpus
//! figures are micro-averaged: edits and reference lengths are summed over
//! all pairs before dividing.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use unicode_segmentation::UnicodeSegmentation;

use crate::edit;
use crate::pipeline::{PairSet, Prediction};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("reference is empty; the error rate is undefined")]
    EmptyReference,
    #[error("prediction ids do not line up with the dataset: {0}")]
    Misaligned(String),
    #[error("no pairs to report on")]
    NoPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Char,
    Word,
}

/// What counts as one character.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CharMode {
    /// Unicode scalar values of the NFC text.
    #[default]
    Codepoint,
    /// Extended grapheme clusters of the NFC text.
    Grapheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditOpsCount {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
    pub unit: Unit,
}

impl EditOpsCount {
    pub fn zero(unit: Unit) -> Self {
        EditOpsCount {
            substitutions: 0,
            deletions: 0,
            insertions: 0,
            ref_len: 0,
            unit,
        }
    }

    pub fn edits(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    pub fn rate(&self) -> Result<f64, MetricError> {
        if self.ref_len == 0 {
            return Err(MetricError::EmptyReference);
        }
        Ok(self.edits() as f64 / self.ref_len as f64)
    }

    fn accumulate(&mut self, other: &EditOpsCount) {
        self.substitutions += other.substitutions;
        self.deletions += other.deletions;
        self.insertions += other.insertions;
        self.ref_len += other.ref_len;
    }
}

/// Edit operation counts between two unit sequences.
pub fn edit_ops<T: PartialEq + Clone>(reference: &[T], hyp: &[T], unit: Unit) -> EditOpsCount {
    let (substitutions, deletions, insertions) = edit::count_ops(reference, hyp);
    EditOpsCount {
        substitutions,
        deletions,
        insertions,
        ref_len: reference.len(),
        unit,
    }
}

fn char_units(text: &str, mode: CharMode) -> Vec<String> {
    let nfc: String = text.nfc().collect();
    match mode {
        CharMode::Codepoint => nfc.chars().map(String::from).collect(),
        CharMode::Grapheme => nfc.graphemes(true).map(String::from).collect(),
    }
}

pub fn char_ops(reference: &str, hyp: &str, mode: CharMode) -> EditOpsCount {
    if mode == CharMode::Codepoint {
        let r: Vec<char> = reference.nfc().collect();
        let h: Vec<char> = hyp.nfc().collect();
        return edit_ops(&r, &h, Unit::Char);
    }
    edit_ops(&char_units(reference, mode), &char_units(hyp, mode), Unit::Char)
}

pub fn word_ops(reference: &str, hyp: &str) -> EditOpsCount {
    let r: Vec<&str> = reference.split_whitespace().collect();
    let h: Vec<&str> = hyp.split_whitespace().collect();
    edit_ops(&r, &h, Unit::Word)
}

/// Character error rate over codepoints. May exceed 1.0.
pub fn cer(reference: &str, hyp: &str) -> Result<f64, MetricError> {
    char_ops(reference, hyp, CharMode::Codepoint).rate()
}

pub fn cer_with(reference: &str, hyp: &str, mode: CharMode) -> Result<f64, MetricError> {
    char_ops(reference, hyp, mode).rate()
}

/// Word error rate over whitespace tokens.
pub fn wer(reference: &str, hyp: &str) -> Result<f64, MetricError> {
    word_ops(reference, hyp).rate()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    pub id: u64,
    pub font_id: String,
    pub chars: EditOpsCount,
    pub words: EditOpsCount,
    pub cer: f64,
    pub wer: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FontRow {
    pub font_id: String,
    pub cer: f64,
    pub pairs: usize,
    pub ref_chars: usize,
    pub char_edits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub char_mode: CharMode,
    /// Scored pairs. Pairs with an empty gold side are excluded.
    pub pair_count: usize,
    pub excluded_empty_gold: usize,
    pub chars: EditOpsCount,
    pub words: EditOpsCount,
    pub corpus_cer: f64,
    pub corpus_wer: f64,
    pub per_font: Vec<FontRow>,
    pub per_pair: Vec<PairScore>,
}

/// Scores every pair's OCR side against gold, or the supplied predictions
/// when given (matched to pairs by id).
pub fn corpus_report(
    pairs: &PairSet,
    predictions: Option<&[Prediction]>,
    mode: CharMode,
) -> Result<MetricReport, MetricError> {
    let lookup = match predictions {
        Some(preds) => Some(align_predictions(pairs, preds)?),
        None => None,
    };
    let mut chars = EditOpsCount::zero(Unit::Char);
    let mut words = EditOpsCount::zero(Unit::Word);
    let mut fonts: BTreeMap<&str, EditOpsCount> = BTreeMap::new();
    let mut font_pairs: BTreeMap<&str, usize> = BTreeMap::new();
    let mut per_pair = Vec::with_capacity(pairs.pairs.len());
    let mut excluded = 0;
    for pair in &pairs.pairs {
        let hyp = match &lookup {
            Some(map) => map[&pair.id],
            None => pair.ocr.as_str(),
        };
        let c = char_ops(&pair.gold, hyp, mode);
        let w = word_ops(&pair.gold, hyp);
        let (Ok(pair_cer), Ok(pair_wer)) = (c.rate(), w.rate()) else {
            excluded += 1;
            continue;
        };
        chars.accumulate(&c);
        words.accumulate(&w);
        fonts
            .entry(pair.font_id.as_str())
            .or_insert_with(|| EditOpsCount::zero(Unit::Char))
            .accumulate(&c);
        *font_pairs.entry(pair.font_id.as_str()).or_default() += 1;
        per_pair.push(PairScore {
            id: pair.id,
            font_id: pair.font_id.clone(),
            chars: c,
            words: w,
            cer: pair_cer,
            wer: pair_wer,
        });
    }
    let mut per_font: Vec<FontRow> = fonts
        .into_iter()
        .map(|(font, ops)| FontRow {
            font_id: font.to_string(),
            cer: ops.rate().unwrap_or(0.0),
            pairs: font_pairs[font],
            ref_chars: ops.ref_len,
            char_edits: ops.edits(),
        })
        .collect();
    sort_rows(&mut per_font);
    Ok(MetricReport {
        char_mode: mode,
        pair_count: per_pair.len(),
        excluded_empty_gold: excluded,
        corpus_cer: chars.rate().unwrap_or(0.0),
        corpus_wer: words.rate().unwrap_or(0.0),
        chars,
        words,
        per_font,
        per_pair,
    })
}

fn align_predictions<'a>(
    pairs: &PairSet,
    preds: &'a [Prediction],
) -> Result<HashMap<u64, &'a str>, MetricError> {
    let mut map = HashMap::with_capacity(preds.len());
    for p in preds {
        if map.insert(p.id, p.prediction.as_str()).is_some() {
            return Err(MetricError::Misaligned(format!("duplicate prediction id {}", p.id)));
        }
    }
    if let Some(missing) = pairs.pairs.iter().find(|p| !map.contains_key(&p.id)) {
        return Err(MetricError::Misaligned(format!("no prediction for pair id {}", missing.id)));
    }
    if map.len() != pairs.pairs.len() {
        return Err(MetricError::Misaligned(format!(
            "{} predictions for {} pairs",
            map.len(),
            pairs.pairs.len()
        )));
    }
    Ok(map)
}

fn sort_rows(rows: &mut [FontRow]) {
    rows.sort_by(|a, b| a.cer.total_cmp(&b.cer).then_with(|| a.font_id.cmp(&b.font_id)));
}

/// The font whose CER sits closest to the average over fonts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearestFont {
    pub font_id: String,
    pub cer: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FontReport {
    /// One row per font, ascending by CER then font id.
    pub rows: Vec<FontRow>,
    /// Unweighted mean of the per-font CERs.
    pub average_cer: f64,
    pub nearest: NearestFont,
}

// Distances closer than this are treated as ties and resolved by font id.
const TIE_EPS: f64 = 1e-12;

/// Per-font CER table plus the font nearest to the all-font average.
pub fn font_report(pairs: &PairSet) -> Result<FontReport, MetricError> {
    let report = corpus_report(pairs, None, CharMode::Codepoint)?;
    font_report_from_rows(report.per_font)
}

pub fn font_report_from_rows(mut rows: Vec<FontRow>) -> Result<FontReport, MetricError> {
    if rows.is_empty() {
        return Err(MetricError::NoPairs);
    }
    sort_rows(&mut rows);
    let average_cer = rows.iter().map(|r| r.cer).sum::<f64>() / rows.len() as f64;
    let mut best: Option<&FontRow> = None;
    for row in &rows {
        let d = (row.cer - average_cer).abs();
        best = match best {
            None => Some(row),
            Some(b) => {
                let bd = (b.cer - average_cer).abs();
                if d < bd - TIE_EPS || ((d - bd).abs() <= TIE_EPS && row.font_id < b.font_id) {
                    Some(row)
                } else {
                    Some(b)
                }
            }
        };
    }
    let best = best.expect("rows is non-empty");
    let nearest = NearestFont {
        font_id: best.font_id.clone(),
        cer: best.cer,
        distance: (best.cer - average_cer).abs(),
    };
    Ok(FontReport {
        rows,
        average_cer,
        nearest,
    })
}

/// Percentage with two decimals, the way result tables print error rates.
pub fn percent(rate: f64) -> String {
    format!("{:.2}%", rate * 100.0)
}

impl MetricReport {
    /// Human-readable summary table.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "pairs: {} (excluded, empty gold: {})  char unit: {:?}\n",
            self.pair_count, self.excluded_empty_gold, self.char_mode
        ));
        out.push_str(&format!(
            "corpus CER: {}  (S={} D={} I={} N={})\n",
            percent(self.corpus_cer),
            self.chars.substitutions,
            self.chars.deletions,
            self.chars.insertions,
            self.chars.ref_len
        ));
        out.push_str(&format!(
            "corpus WER: {}  (S={} D={} I={} W={})\n",
            percent(self.corpus_wer),
            self.words.substitutions,
            self.words.deletions,
            self.words.insertions,
            self.words.ref_len
        ));
        if !self.per_font.is_empty() {
            out.push_str("font\tCER\tpairs\n");
            for row in &self.per_font {
                out.push_str(&format!("{}\t{}\t{}\n", row.font_id, percent(row.cer), row.pairs));
            }
        }
        out
    }
}

impl FontReport {
    pub fn render_table(&self) -> String {
        let mut out = String::from("font\tCER\tpairs\n");
        for row in &self.rows {
            out.push_str(&format!("{}\t{}\t{}\n", row.font_id, percent(row.cer), row.pairs));
        }
        out.push_str(&format!(
            "average CER over fonts: {}\nnearest to average: {} ({}, distance {})\n",
            percent(self.average_cer),
            self.nearest.font_id,
            percent(self.nearest.cer),
            percent(self.nearest.distance)
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_reference_is_an_error_not_a_number() {
        assert_eq!(cer("", "abc"), Err(MetricError::EmptyReference));
        assert_eq!(cer("", ""), Err(MetricError::EmptyReference));
        assert_eq!(wer("   ", "a"), Err(MetricError::EmptyReference));
    }

    #[test]
    fn all_deletions_give_exactly_one() {
        assert_eq!(cer("अब चलो", ""), Ok(1.0));
        assert_eq!(wer("a b c", ""), Ok(1.0));
    }

    #[test]
    fn cer_can_exceed_one() {
        assert_eq!(cer("a", "xyz"), Ok(3.0));
    }

    #[test]
    fn grapheme_mode_counts_clusters() {
        // "कि" is two codepoints but one grapheme cluster.
        assert_eq!(char_ops("कि", "क", CharMode::Codepoint).edits(), 1);
        assert_eq!(char_ops("कि", "क", CharMode::Codepoint).ref_len, 2);
        let g = char_ops("कि", "क", CharMode::Grapheme);
        assert_eq!((g.substitutions, g.ref_len), (1, 1));
    }

    #[test]
    fn codepoints_are_compared_after_composition() {
        assert_eq!(cer("\u{0929}", "\u{0928}\u{093C}"), Ok(0.0));
    }

    #[test]
    fn percent_has_two_decimals() {
        assert_eq!(percent(0.0225), "2.25%");
        assert_eq!(percent(0.0), "0.00%");
    }
}
