//! Shared inputs for the benchmarks: a deterministic Devanagari-ish corpus
//! and the models trained on it.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roundtrip_core::*;

const CONSONANTS: &str = "कखगघचजटडतदनपबमयरलवसह";
const MATRAS: &str = "ािीुूेैोौ";

/// `count` sentences of 4 to 10 pseudo-words, same output for the same seed.
pub fn sentences(count: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let consonants: Vec<char> = CONSONANTS.chars().collect();
    let matras: Vec<char> = MATRAS.chars().collect();
    let words: Vec<String> = (0..200)
        .map(|_| {
            (0..rng.random_range(1..4))
                .map(|_| {
                    let mut s = consonants[rng.random_range(0..consonants.len())].to_string();
                    if rng.random_bool(0.6) {
                        s.push(matras[rng.random_range(0..matras.len())]);
                    }
                    s
                })
                .collect()
        })
        .collect();
    (0..count)
        .map(|_| {
            let n = rng.random_range(4..=10);
            // squaring skews draws toward the front, a rough Zipf
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    words[((u * u) * words.len() as f64) as usize].as_str()
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

pub struct Workload {
    pub corpus: Corpus,
    pub pairs: PairSet,
    pub channel: ConfusionModel,
    pub lm: CharLm,
}

/// Corpus, 5% substitution pairs, and the channel and LM trained on them.
pub fn workload(count: usize) -> Workload {
    let texts = sentences(count, 11);
    let corpus = Corpus::from_lines(Lang::Hi, texts.iter().map(String::as_str));
    let alphabet: BTreeSet<char> = texts.iter().flat_map(|s| s.chars()).collect();
    let noise = ConfusionModel::uniform(alphabet, 0.05, 0.0, 0.0).unwrap();
    let engine = SimulatedEngine::new(&noise, 5);
    let pairs = simulate_pairs(&corpus, &["bench".to_string()], &engine, &GenerateOptions::default())
        .unwrap()
        .pairs;
    let channel = build_confusion(&pairs, channel::DEFAULT_SMOOTHING).unwrap();
    let lm = train_char_lm(&corpus, 3, 0.01).unwrap();
    Workload {
        corpus,
        pairs,
        channel,
        lm,
    }
}

/// A font from the core test fixtures.
pub fn fixture_font(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/fonts").join(name)
}
