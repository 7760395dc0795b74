//! Noisy-channel beam decoding.
//!
//! The search walks the OCR string left to right. A hypothesis is a gold
//! prefix plus the channel path that explains the OCR prefix consumed so
//! far. Hypotheses with the same LM context and the same edit count in the
//! current token have identical futures, so only the best one is kept
//! (with near ties, see `NEAR_TIE`).

use std::cmp::Ordering;
use std::collections::HashMap;

use super::lm::CharLm;
use super::CorrectorConfig;
use crate::channel::ConfusionModel;

#[derive(Debug, Clone)]
struct Hyp {
    text: Vec<char>,
    score: f64,
    edits: usize,
}

/// Shorter first, then lexicographic. Unlike plain lexicographic order this
/// survives appending a common suffix, so recombination and the final pick
/// agree on ties.
pub(crate) fn shortlex(a: &[char], b: &[char]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| a.cmp(b))
}

fn better(a: &Hyp, b: &Hyp) -> bool {
    match a.score.partial_cmp(&b.score) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Less) => false,
        _ => shortlex(&a.text, &b.text) == Ordering::Less,
    }
}

type Key = (Vec<char>, usize);

// Scores closer than this are not merged. Paths whose totals could round
// to the same value then all reach the final tie-break.
const NEAR_TIE: f64 = 1e-9;

struct Layer {
    ctx: usize,
    states: HashMap<Key, Vec<Hyp>>,
}

impl Layer {
    fn new(ctx: usize) -> Self {
        Layer {
            ctx,
            states: HashMap::new(),
        }
    }

    fn offer(&mut self, hyp: Hyp) {
        if !hyp.score.is_finite() {
            return;
        }
        let key = (hyp.text[hyp.text.len().saturating_sub(self.ctx)..].to_vec(), hyp.edits);
        let list = self.states.entry(key).or_default();
        if let Some(same) = list.iter_mut().find(|h| h.text == hyp.text) {
            if hyp.score > same.score {
                *same = hyp;
            }
        } else {
            list.push(hyp);
        }
        let top = list.iter().map(|h| h.score).fold(f64::NEG_INFINITY, f64::max);
        list.retain(|h| h.score >= top - NEAR_TIE);
    }

    fn hyps(&self) -> impl Iterator<Item = &Hyp> {
        self.states.values().flatten()
    }

    fn into_sorted(self) -> Vec<Hyp> {
        let mut v: Vec<Hyp> = self.states.into_values().flatten().collect();
        v.sort_by(|a, b| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then_with(|| shortlex(&a.text, &b.text))
        });
        v
    }
}

/// A decoder bound to one channel, LM and configuration.
pub struct Decoder<'a> {
    channel: &'a ConfusionModel,
    lm: &'a CharLm,
    cfg: CorrectorConfig,
    /// Gold characters the channel can emit from.
    golds: Vec<char>,
    slot_end: f64,
}

impl<'a> Decoder<'a> {
    pub fn new(channel: &'a ConfusionModel, lm: &'a CharLm, cfg: &CorrectorConfig) -> Self {
        let golds = channel.alphabet().filter(|&g| channel.has_row(g)).collect();
        Decoder {
            channel,
            lm,
            cfg: CorrectorConfig {
                beam_width: cfg.beam_width.max(1),
                top_k: cfg.top_k.max(1),
                ..cfg.clone()
            },
            golds,
            slot_end: channel.ln_slot_end(),
        }
    }

    fn lm_term(&self, tail: &[char], next: Option<char>) -> f64 {
        if self.cfg.lambda == 0.0 {
            0.0
        } else {
            self.cfg.lambda * self.lm.ln_next(tail, next)
        }
    }

    /// Appends gold `g` explained by channel log-probability `chan`.
    fn extend(&self, hyp: &Hyp, g: char, chan: f64, edits: usize) -> Hyp {
        let score = hyp.score + chan + self.lm_term(&hyp.text, Some(g));
        let mut text = Vec::with_capacity(hyp.text.len() + 1);
        text.extend_from_slice(&hyp.text);
        text.push(g);
        Hyp { text, score, edits }
    }

    /// The `top_k` best of `options`, best first, ties to the smaller char.
    fn top_k(&self, mut options: Vec<(char, Hyp)>) -> impl Iterator<Item = Hyp> {
        options.retain(|(_, h)| h.score.is_finite());
        options.sort_by(|(ga, a), (gb, b)| {
            b.score
                .partial_cmp(&a.score)
                .unwrap_or(Ordering::Equal)
                .then(ga.cmp(gb))
        });
        options.truncate(self.cfg.top_k);
        options.into_iter().map(|(_, h)| h)
    }

    /// Adds gold-deletion extensions within one layer. Every deletion costs
    /// one edit, so expanding by ascending edit count reaches a fixpoint.
    fn close_deletions(&self, layer: &mut Layer) {
        for e in 0..self.cfg.max_edits_per_token {
            let frontier: Vec<Hyp> = layer
                .hyps()
                .filter(|h| h.edits == e)
                .cloned()
                .collect();
            for hyp in frontier {
                let options = self
                    .golds
                    .iter()
                    .map(|&g| {
                        let chan = self.slot_end + self.channel.ln_del(g);
                        (g, self.extend(&hyp, g, chan, e + 1))
                    })
                    .collect();
                for h in self.top_k(options) {
                    layer.offer(h);
                }
            }
        }
    }

    /// Keeps the `width` best; also reports whether anything was cut.
    fn prune(&self, layer: Layer, width: usize) -> (Vec<Hyp>, bool) {
        let mut v = layer.into_sorted();
        let cut = v.len() > width;
        v.truncate(width);
        (v, cut)
    }

    fn step(&self, beam: &[Hyp], o: char) -> Layer {
        let mut next = Layer::new(self.lm.order() - 1);
        let cap = self.cfg.max_edits_per_token;
        for hyp in beam {
            if !self.channel.in_alphabet(o) {
                // Outside the channel: copied through, scored by the LM
                // only when it knows the character.
                let lm = if self.lm.in_vocab(o) { self.lm_term(&hyp.text, Some(o)) } else { 0.0 };
                let mut text = hyp.text.clone();
                text.push(o);
                next.offer(Hyp {
                    text,
                    score: hyp.score + lm,
                    edits: hyp.edits,
                });
                continue;
            }
            let options = self
                .golds
                .iter()
                .filter_map(|&g| {
                    let edits = hyp.edits + usize::from(g != o);
                    if edits > cap {
                        return None;
                    }
                    let edits = if g == o && g == ' ' { 0 } else { edits };
                    let chan = self.slot_end + self.channel.ln_sub(g, o);
                    Some((g, self.extend(hyp, g, chan, edits)))
                })
                .collect();
            for h in self.top_k(options) {
                next.offer(h);
            }
            if hyp.edits < cap {
                next.offer(Hyp {
                    text: hyp.text.clone(),
                    score: hyp.score + self.channel.ln_insert(o),
                    edits: hyp.edits + 1,
                });
            }
        }
        self.close_deletions(&mut next);
        next
    }

    /// One left-to-right pass keeping `width` hypotheses per step.
    fn search(&self, ocr: &[char], width: usize) -> (Option<Hyp>, bool) {
        let mut start = Layer::new(self.lm.order() - 1);
        start.offer(Hyp {
            text: Vec::new(),
            score: 0.0,
            edits: 0,
        });
        self.close_deletions(&mut start);
        let (mut beam, mut cut) = self.prune(start, width);
        for &o in ocr {
            let (next, c) = self.prune(self.step(&beam, o), width);
            beam = next;
            cut |= c;
            if beam.is_empty() {
                return (None, cut);
            }
        }
        let mut best: Option<Hyp> = None;
        for h in beam {
            let score = h.score + self.slot_end + self.lm_term(&h.text, None);
            let h = Hyp { score, ..h };
            if h.score.is_finite() && best.as_ref().is_none_or(|b| better(&h, b)) {
                best = Some(h);
            }
        }
        (best, cut)
    }

    /// Best hypothesis and its score, or `None` when every path is impossible.
    ///
    /// Passes run at widths 1, 2, ... up to the beam width and the best
    /// result wins, so a wider beam never scores lower. A pass that prunes
    /// nothing is exact and ends the loop early.
    pub fn decode_scored(&self, ocr: &str) -> Option<(String, f64)> {
        let ocr: Vec<char> = ocr.chars().collect();
        let mut best: Option<Hyp> = None;
        for width in 1..=self.cfg.beam_width {
            let (found, cut) = self.search(&ocr, width);
            if let Some(h) = found {
                if best.as_ref().is_none_or(|b| better(&h, b)) {
                    best = Some(h);
                }
            }
            if !cut {
                break;
            }
        }
        best.map(|h| (h.text.into_iter().collect(), h.score))
    }

    /// Corrected text; the input itself when it is empty or no hypothesis
    /// survives.
    pub fn decode(&self, ocr: &str) -> String {
        if ocr.is_empty() {
            return String::new();
        }
        self.decode_scored(ocr)
            .map(|(t, _)| t)
            .unwrap_or_else(|| ocr.to_string())
    }
}

/// argmax over gold T of channel log P(ocr | T) + λ·LM log P(T), by beam search.
pub fn beam_decode(ocr: &str, channel: &ConfusionModel, lm: &CharLm, cfg: &CorrectorConfig) -> String {
    Decoder::new(channel, lm, cfg).decode(ocr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(beam_width: usize, lambda: f64) -> CorrectorConfig {
        CorrectorConfig {
            beam_width,
            lambda,
            ..CorrectorConfig::default()
        }
    }

    #[test]
    fn identity_channel_returns_input() {
        let channel = ConfusionModel::identity("abc ".chars()).unwrap();
        let lm = CharLm::train(["cab cab", "abc"], 3, 0.1).unwrap();
        for text in ["abc", "cba ab", "", "aaa"] {
            assert_eq!(beam_decode(text, &channel, &lm, &cfg(8, 1.0)), text);
        }
    }

    #[test]
    fn lm_fixes_a_likely_substitution() {
        let channel = ConfusionModel::uniform("abc".chars(), 0.1, 0.0, 0.0).unwrap();
        let lm = CharLm::train(["abcabc"; 20], 3, 0.01).unwrap();
        assert_eq!(beam_decode("abcbbc", &channel, &lm, &cfg(8, 1.0)), "abcabc");
        // without the LM the channel prefers copying
        assert_eq!(beam_decode("abcbbc", &channel, &lm, &cfg(8, 0.0)), "abcbbc");
    }

    #[test]
    fn unknown_characters_pass_through() {
        let channel = ConfusionModel::uniform("ab".chars(), 0.1, 0.0, 0.0).unwrap();
        let lm = CharLm::train(["abab"; 5], 2, 0.01).unwrap();
        assert_eq!(beam_decode("ab€b", &channel, &lm, &cfg(4, 1.0)), "ab€b");
    }

    #[test]
    fn edit_cap_resets_at_spaces() {
        // Three substitutions in one token exceed the cap; split by a space
        // they do not.
        let channel = ConfusionModel::uniform("ab ".chars(), 0.2, 0.0, 0.0).unwrap();
        let lm = CharLm::train(["aaa"; 30], 4, 0.001).unwrap();
        let one = beam_decode("bbb", &channel, &lm, &cfg(16, 1.0));
        assert!(one.chars().filter(|&c| c == 'b').count() >= 1);
        let lm2 = CharLm::train(["aa a"; 30], 4, 0.001).unwrap();
        assert_eq!(beam_decode("bb b", &channel, &lm2, &cfg(16, 1.0)), "aa a");
    }

    #[test]
    fn shortlex_is_suffix_stable() {
        let a: Vec<char> = "b".chars().collect();
        let b: Vec<char> = "ab".chars().collect();
        assert_eq!(shortlex(&a, &b), Ordering::Less);
        let (mut a2, mut b2) = (a.clone(), b.clone());
        a2.push('c');
        b2.push('c');
        assert_eq!(shortlex(&a2, &b2), Ordering::Less);
    }
}
