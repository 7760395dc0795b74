use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use super::{OcrEngine, OcrError, OcrRequest, RecognizedText};
use crate::channel::ConfusionModel;
use crate::seed;

pub const SIMULATED_ENGINE_ID: &str = "simulated";

/// Precomputed cumulative tables for drawing from a confusion model.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    /// Per gold character: outcomes (None = deleted) with cumulative mass.
    rows: HashMap<char, Vec<(Option<char>, f64)>>,
    p_ins: f64,
    insertions: Vec<(char, f64)>,
}

fn draw<T: Copy>(table: &[(T, f64)], u: f64) -> Option<T> {
    if table.is_empty() {
        return None;
    }
    let i = table.partition_point(|&(_, cum)| cum <= u);
    Some(table[i.min(table.len() - 1)].0)
}

impl NoiseSampler {
    pub fn new(model: &ConfusionModel) -> Self {
        let alphabet: Vec<char> = model.alphabet().collect();
        let mut rows = HashMap::new();
        for &g in alphabet.iter().filter(|&&g| model.has_row(g)) {
            let mut cum = 0.0;
            let mut row = Vec::with_capacity(alphabet.len() + 1);
            let p_del = model.del_prob(g);
            if p_del > 0.0 {
                cum += p_del;
                row.push((None, cum));
            }
            for &e in &alphabet {
                let p = model.sub_prob(g, e);
                if p > 0.0 {
                    cum += p;
                    row.push((Some(e), cum));
                }
            }
            rows.insert(g, row);
        }
        let mut cum = 0.0;
        let insertions = alphabet
            .iter()
            .filter_map(|&e| {
                let p = model.ins_prob(e);
                (p > 0.0).then(|| {
                    cum += p;
                    (e, cum)
                })
            })
            .collect();
        NoiseSampler {
            rows,
            p_ins: model.p_ins(),
            insertions,
        }
    }

    fn insert_slot(&self, rng: &mut impl Rng, out: &mut String) {
        if self.p_ins <= 0.0 || self.insertions.is_empty() {
            return;
        }
        while rng.random::<f64>() < self.p_ins {
            if let Some(c) = draw(&self.insertions, rng.random::<f64>()) {
                out.push(c);
            }
        }
    }

    /// Corrupts `text` character by character. Characters without a channel
    /// row pass through unchanged. The result is not normalized.
    pub fn corrupt(&self, text: &str, rng: &mut impl Rng) -> String {
        let mut out = String::with_capacity(text.len() + 8);
        self.insert_slot(rng, &mut out);
        for c in text.chars() {
            match self.rows.get(&c) {
                Some(row) => {
                    if let Some(Some(e)) = draw(row, rng.random::<f64>()) {
                        out.push(e);
                    }
                }
                None => out.push(c),
            }
            self.insert_slot(rng, &mut out);
        }
        out
    }
}

/// Runs `text` through the noise channel with a generator seeded by `seed`.
pub fn simulate_ocr(text: &str, noise: &ConfusionModel, seed: u64) -> RecognizedText {
    let sampler = NoiseSampler::new(noise);
    let mut rng = seed::rng(seed);
    RecognizedText::new(&sampler.corrupt(text, &mut rng), SIMULATED_ENGINE_ID)
}

/// Stand-in OCR engine: corrupts the gold text instead of reading pixels.
/// Each (sentence, font) cell gets its own generator derived from the
/// engine seed, so results do not depend on execution order.
#[derive(Debug, Clone)]
pub struct SimulatedEngine {
    seed: u64,
    default: NoiseSampler,
    per_font: BTreeMap<String, NoiseSampler>,
}

impl SimulatedEngine {
    pub fn new(noise: &ConfusionModel, seed: u64) -> Self {
        SimulatedEngine {
            seed,
            default: NoiseSampler::new(noise),
            per_font: BTreeMap::new(),
        }
    }

    /// Uses a different noise model for one font id.
    pub fn with_font_noise(mut self, font_id: impl Into<String>, noise: &ConfusionModel) -> Self {
        self.per_font.insert(font_id.into(), NoiseSampler::new(noise));
        self
    }

    pub fn cell_seed(&self, sentence_id: u64, font_id: &str) -> u64 {
        seed::derive_seed(
            self.seed,
            &[b"ocr-cell", &sentence_id.to_le_bytes(), font_id.as_bytes()],
        )
    }
}

impl OcrEngine for SimulatedEngine {
    fn engine_id(&self) -> String {
        SIMULATED_ENGINE_ID.to_string()
    }

    fn needs_image(&self) -> bool {
        false
    }

    fn recognize(&self, req: &OcrRequest<'_>) -> Result<RecognizedText, OcrError> {
        let sampler = self.per_font.get(req.font_id).unwrap_or(&self.default);
        let mut rng = seed::rng(self.cell_seed(req.sentence_id, req.font_id));
        Ok(RecognizedText::new(
            &sampler.corrupt(req.text, &mut rng),
            SIMULATED_ENGINE_ID,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ConfusionCounts;
    use proptest::prelude::*;

    #[test]
    fn zero_noise_is_identity() {
        let m = ConfusionModel::identity("अबचलो ".chars()).unwrap();
        assert_eq!(simulate_ocr("अब चलो", &m, 3).text, "अब चलो");
    }

    #[test]
    fn forced_substitution() {
        let mut c = ConfusionCounts::new();
        c.add_sub('a', 'b', 1.0);
        c.add_sub('b', 'b', 1.0);
        c.add_slots(1.0);
        let m = c.finalize(0.0).unwrap();
        assert_eq!(simulate_ocr("aaa", &m, 11).text, "bbb");
    }

    #[test]
    fn same_seed_same_output() {
        let m = ConfusionModel::uniform("abcdef".chars(), 0.3, 0.1, 0.1).unwrap();
        let text = "abc def fed cba abc";
        assert_eq!(simulate_ocr(text, &m, 42), simulate_ocr(text, &m, 42));
        assert_ne!(simulate_ocr(text, &m, 42).text, simulate_ocr(text, &m, 43).text);
    }

    #[test]
    fn substitution_rate_matches_within_ten_percent() {
        let alphabet: Vec<char> = ('\u{0915}'..='\u{0939}').collect();
        let m = ConfusionModel::uniform(alphabet.iter().copied(), 0.05, 0.0, 0.0).unwrap();
        let sampler = NoiseSampler::new(&m);
        let mut rng = seed::rng(5);
        let text: String = (0..100_000).map(|i| alphabet[i % alphabet.len()]).collect();
        let out = sampler.corrupt(&text, &mut rng);
        let diffs = text.chars().zip(out.chars()).filter(|(a, b)| a != b).count();
        let rate = diffs as f64 / 100_000.0;
        assert!((rate - 0.05).abs() <= 0.005, "rate {rate}");
    }

    #[test]
    fn engine_cells_are_order_independent() {
        let m = ConfusionModel::uniform("abc".chars(), 0.4, 0.0, 0.0).unwrap();
        let engine = SimulatedEngine::new(&m, 9);
        let req = |id, font| OcrRequest {
            sentence_id: id,
            font_id: font,
            lang: crate::Lang::Hi,
            text: "abcabcabcabc",
            image: None,
            image_path: None,
        };
        let first = engine.recognize(&req(1, "f")).unwrap();
        let _ = engine.recognize(&req(2, "g")).unwrap();
        assert_eq!(engine.recognize(&req(1, "f")).unwrap(), first);
    }

    proptest! {
        #[test]
        fn no_insertions_or_deletions_preserves_length(text in "[abcd]{0,60}", seed in any::<u64>()) {
            let m = ConfusionModel::uniform("abcd".chars(), 0.5, 0.0, 0.0).unwrap();
            let out = simulate_ocr(&text, &m, seed);
            prop_assert_eq!(out.text.chars().count(), text.chars().count());
        }
    }
}
