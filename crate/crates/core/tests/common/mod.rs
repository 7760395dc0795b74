//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::Rng;
use roundtrip_core::{
    seed, CharLm, ConfusionCounts, ConfusionModel, Corpus, CorrectorConfig, Lang, OcrPair, PairSet,
    Provenance,
};

pub fn fixture_font(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures/fonts")
        .join(name)
}

pub fn pair_set(pairs: &[(&str, &str, &str)]) -> PairSet {
    let pairs = pairs
        .iter()
        .enumerate()
        .map(|(i, (font, gold, ocr))| OcrPair {
            id: i as u64,
            sentence_id: i as u64,
            lang: Lang::Hi,
            font_id: font.to_string(),
            gold: gold.to_string(),
            ocr: ocr.to_string(),
        })
        .collect();
    PairSet::new(Lang::Hi, pairs, Provenance::default())
}

// ---- edit distance ----

/// Edit operation counts (S, D, I) by plain recursion over suffix-free
/// prefixes, memoized. At each cell the options are tried in the order
/// diagonal, deletion, insertion and the first optimal one is taken, walking
/// back from the end of both sequences.
pub fn oracle_ops<T: PartialEq>(r: &[T], h: &[T]) -> (usize, usize, usize) {
    fn dist<T: PartialEq>(r: &[T], h: &[T], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == 0 {
            return j;
        }
        if j == 0 {
            return i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let diag = dist(r, h, i - 1, j - 1, memo) + usize::from(r[i - 1] != h[j - 1]);
        let del = dist(r, h, i - 1, j, memo) + 1;
        let ins = dist(r, h, i, j - 1, memo) + 1;
        let d = diag.min(del).min(ins);
        memo.insert((i, j), d);
        d
    }
    let mut memo = HashMap::new();
    let (mut i, mut j) = (r.len(), h.len());
    let (mut s, mut d, mut n) = (0, 0, 0);
    while i > 0 || j > 0 {
        let here = dist(r, h, i, j, &mut memo);
        if i > 0 && j > 0 && dist(r, h, i - 1, j - 1, &mut memo) + usize::from(r[i - 1] != h[j - 1]) == here {
            s += usize::from(r[i - 1] != h[j - 1]);
            i -= 1;
            j -= 1;
        } else if i > 0 && dist(r, h, i - 1, j, &mut memo) + 1 == here {
            d += 1;
            i -= 1;
        } else {
            n += 1;
            j -= 1;
        }
    }
    (s, d, n)
}

/// Levenshtein distance by unmemoized recursion; only for short inputs.
pub fn naive_distance(a: &[char], b: &[char]) -> usize {
    match (a.split_last(), b.split_last()) {
        (None, _) => b.len(),
        (_, None) => a.len(),
        (Some((x, ra)), Some((y, rb))) => (naive_distance(ra, rb) + usize::from(x != y))
            .min(naive_distance(ra, b) + 1)
            .min(naive_distance(a, rb) + 1),
    }
}

pub fn random_string(rng: &mut impl Rng, alphabet: &[char], max_len: usize) -> String {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

// ---- corrector ----

pub fn shortlex(a: &str, b: &str) -> Ordering {
    a.chars().count().cmp(&b.chars().count()).then_with(|| a.cmp(b))
}

/// All strings over `alphabet` reachable from `s` by at most `radius`
/// single-character edits.
pub fn neighbourhood(s: &str, alphabet: &[char], radius: usize) -> BTreeSet<String> {
    let mut all: BTreeSet<String> = [s.to_string()].into();
    let mut frontier = all.clone();
    for _ in 0..radius {
        let mut next = BTreeSet::new();
        for w in &frontier {
            let c: Vec<char> = w.chars().collect();
            for i in 0..=c.len() {
                for &x in alphabet {
                    let mut v = c.clone();
                    v.insert(i, x);
                    next.insert(v.into_iter().collect::<String>());
                }
                if i < c.len() {
                    let mut v = c.clone();
                    v.remove(i);
                    next.insert(v.into_iter().collect::<String>());
                    for &x in alphabet {
                        let mut v = c.clone();
                        v[i] = x;
                        next.insert(v.into_iter().collect::<String>());
                    }
                }
            }
        }
        all.extend(next.iter().cloned());
        frontier = next;
    }
    all
}

/// Best score over every channel path that turns `gold` into `ocr` with at
/// most `cap` edits, plus the LM score of `gold`. Terms are added left to
/// right in path order.
pub fn path_score(gold: &str, ocr: &str, channel: &ConfusionModel, lm: &CharLm, lambda: f64, cap: usize) -> f64 {
    let g: Vec<char> = gold.chars().collect();
    let o: Vec<char> = ocr.chars().collect();
    let lm_term = |i: usize, next: Option<char>| {
        if lambda == 0.0 {
            0.0
        } else {
            lambda * lm.ln_next(&g[..i], next)
        }
    };
    let slot_end = channel.ln_slot_end();
    let mut best = f64::NEG_INFINITY;
    // depth-first over (i, j, edits, score)
    let mut stack = vec![(0usize, 0usize, 0usize, 0.0f64)];
    while let Some((i, j, e, score)) = stack.pop() {
        if !score.is_finite() {
            continue;
        }
        if i == g.len() && j == o.len() {
            let total = score + slot_end + lm_term(i, None);
            if total > best {
                best = total;
            }
        }
        if i < g.len() && j < o.len() {
            let edit = usize::from(g[i] != o[j]);
            if e + edit <= cap {
                let chan = slot_end + channel.ln_sub(g[i], o[j]);
                stack.push((i + 1, j + 1, e + edit, score + chan + lm_term(i, Some(g[i]))));
            }
        }
        if i < g.len() && e < cap {
            let chan = slot_end + channel.ln_del(g[i]);
            stack.push((i + 1, j, e + 1, score + chan + lm_term(i, Some(g[i]))));
        }
        if j < o.len() && e < cap {
            stack.push((i, j + 1, e + 1, score + channel.ln_insert(o[j])));
        }
    }
    best
}

/// Exhaustive noisy-channel argmax over the radius-2 neighbourhood; ties go
/// to the shortlex-smaller candidate. `None` when nothing scores finitely.
pub fn exhaustive_decode(
    ocr: &str,
    alphabet: &[char],
    channel: &ConfusionModel,
    lm: &CharLm,
    cfg: &CorrectorConfig,
) -> Option<(String, f64)> {
    let mut best: Option<(String, f64)> = None;
    for cand in neighbourhood(ocr, alphabet, 2) {
        let s = path_score(&cand, ocr, channel, lm, cfg.lambda, cfg.max_edits_per_token);
        if !s.is_finite() {
            continue;
        }
        let replace = match &best {
            None => true,
            Some((b, bs)) => s > *bs || (s == *bs && shortlex(&cand, b) == Ordering::Less),
        };
        if replace {
            best = Some((cand, s));
        }
    }
    best
}

/// A random channel over `alphabet` with some zero cells.
pub fn random_channel(rng: &mut impl Rng, alphabet: &[char]) -> ConfusionModel {
    let mut counts = ConfusionCounts::new();
    for &g in alphabet {
        counts.add_sub(g, g, rng.random_range(5.0..20.0));
        for &e in alphabet.iter().filter(|&&e| e != g) {
            if rng.random_bool(0.7) {
                counts.add_sub(g, e, rng.random_range(0.0..3.0));
            }
        }
        if rng.random_bool(0.6) {
            counts.add_del(g, rng.random_range(0.0..2.0));
        }
        if rng.random_bool(0.6) {
            counts.add_ins(g, rng.random_range(0.0..2.0));
        }
    }
    counts.add_slots(rng.random_range(10.0..40.0));
    let k = *[0.0, 0.01, 0.3].choose(rng).unwrap();
    counts.finalize(k).unwrap()
}

pub fn random_lm(rng: &mut impl Rng, alphabet: &[char]) -> CharLm {
    let texts: Vec<String> = (0..rng.random_range(3..12))
        .map(|_| random_string(rng, alphabet, 8))
        .collect();
    let order = rng.random_range(1..=3);
    let k = *[0.01, 0.1, 1.0].choose(rng).unwrap();
    CharLm::train(texts.iter().map(String::as_str), order, k).unwrap()
}

// ---- synthetic Devanagari-like corpus ----

const CONSONANTS: std::ops::RangeInclusive<u32> = 0x0915..=0x0939;
const MATRAS: [char; 8] = ['\u{093E}', '\u{093F}', '\u{0940}', '\u{0941}', '\u{0942}', '\u{0947}', '\u{0948}', '\u{094B}'];

/// A word list of consonant(+matra) syllables.
pub fn synthetic_lexicon(seed_value: u64, size: usize) -> Vec<String> {
    let mut rng = seed::rng(seed_value);
    let consonants: Vec<char> = CONSONANTS.filter_map(char::from_u32).collect();
    let mut seen = BTreeSet::new();
    let mut words = Vec::new();
    while words.len() < size {
        let syllables = rng.random_range(1..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(*consonants.choose(&mut rng).unwrap());
            if rng.random_bool(0.6) {
                w.push(*MATRAS.choose(&mut rng).unwrap());
            }
        }
        if seen.insert(w.clone()) {
            words.push(w);
        }
    }
    words
}

/// Sentences of Zipf-distributed words from `lexicon`.
pub fn synthetic_sentences(lexicon: &[String], count: usize, seed_value: u64) -> Vec<String> {
    let mut rng = seed::rng(seed_value);
    let weights: Vec<f64> = (1..=lexicon.len()).map(|r| 1.0 / r as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cumulative.push(acc);
    }
    (0..count)
        .map(|_| {
            let n = rng.random_range(4..=10);
            (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    let idx = cumulative.partition_point(|&c| c < u).min(lexicon.len() - 1);
                    lexicon[idx].as_str()
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

pub fn corpus_of(sentences: &[String]) -> Corpus {
    Corpus::from_lines(Lang::Hi, sentences.iter().map(String::as_str))
}
