mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use roundtrip_core::*;

const ABC: [char; 3] = ['a', 'b', 'c'];

fn oracle_cfg(lambda: f64) -> CorrectorConfig {
    CorrectorConfig {
        beam_width: 64,
        lambda,
        max_edits_per_token: 2,
        top_k: 3,
    }
}

#[test]
fn exhaustive_oracle_on_random_instances() {
    let mut rng = seed::rng(31337);
    for case in 0..500 {
        let channel = random_channel(&mut rng, &ABC);
        let lm = random_lm(&mut rng, &ABC);
        let cfg = oracle_cfg([0.0, 0.3, 1.0, 3.0][rng.random_range(0..4)]);
        let ocr = random_string(&mut rng, &ABC, 6);
        // Empty input is returned as is rather than decoded.
        let want = if ocr.is_empty() {
            String::new()
        } else {
            exhaustive_decode(&ocr, &ABC, &channel, &lm, &cfg).map_or(ocr.clone(), |w| w.0)
        };
        assert_eq!(beam_decode(&ocr, &channel, &lm, &cfg), want, "case {case}, ocr {ocr:?}");
    }
}

#[test]
fn decoder_score_matches_oracle_score() {
    let mut rng = seed::rng(4);
    for _ in 0..200 {
        let channel = random_channel(&mut rng, &ABC);
        let lm = random_lm(&mut rng, &ABC);
        let cfg = oracle_cfg(1.0);
        let ocr = random_string(&mut rng, &ABC, 5);
        let got = Decoder::new(&channel, &lm, &cfg).decode_scored(&ocr);
        let want = exhaustive_decode(&ocr, &ABC, &channel, &lm, &cfg);
        assert_eq!(got.map(|g| g.1.to_bits()), want.map(|w| w.1.to_bits()), "{ocr:?}");
    }
}

#[test]
fn empty_input_is_returned_unchanged() {
    let channel = ConfusionModel::uniform(ABC, 0.1, 0.1, 0.1).unwrap();
    let lm = CharLm::train(["abc"], 2, 0.1).unwrap();
    assert_eq!(beam_decode("", &channel, &lm, &CorrectorConfig::default()), "");
}

#[test]
fn impossible_input_is_returned_unchanged() {
    // k = 0 LM that has never seen `c`: every hypothesis containing it has
    // zero probability and edits cannot remove three of them.
    let channel = ConfusionModel::identity(ABC).unwrap();
    let lm = CharLm::train(["ab"], 2, 0.0).unwrap();
    assert_eq!(beam_decode("ccc", &channel, &lm, &CorrectorConfig::default()), "ccc");
}

#[test]
fn beam_width_one_is_greedy() {
    // One hypothesis survives each step: the greedy choice.
    let channel = ConfusionModel::uniform(ABC, 0.2, 0.0, 0.0).unwrap();
    let lm = CharLm::train(["ab"; 10], 3, 0.01).unwrap();
    let cfg = CorrectorConfig {
        beam_width: 1,
        ..CorrectorConfig::default()
    };
    let greedy = Decoder::new(&channel, &lm, &cfg);
    assert_eq!(greedy.decode("cb"), beam_decode("cb", &channel, &lm, &cfg));
    assert_eq!(greedy.decode("cb"), "ab");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn identity_channel_copies(text in "[abc ]{0,12}", lambda in 0.0f64..3.0) {
        let channel = ConfusionModel::identity(['a', 'b', 'c', ' ']).unwrap();
        let lm = CharLm::train(["abc cab", "bca"], 3, 0.1).unwrap();
        let cfg = CorrectorConfig { lambda, ..CorrectorConfig::default() };
        prop_assert_eq!(beam_decode(&text, &channel, &lm, &cfg), text);
    }

    #[test]
    fn lambda_zero_with_copy_dominant_channel_copies(text in "[abc]{1,10}") {
        let channel = ConfusionModel::uniform(ABC, 0.1, 0.05, 0.05).unwrap();
        let lm = CharLm::train(["aaaa"], 3, 0.1).unwrap();
        let cfg = CorrectorConfig { lambda: 0.0, ..CorrectorConfig::default() };
        prop_assert_eq!(beam_decode(&text, &channel, &lm, &cfg), text);
    }

    #[test]
    fn output_stays_within_known_characters(
        seed_value in any::<u64>(),
        text in "[abcxyz ]{0,12}",
    ) {
        let mut rng = seed::rng(seed_value);
        let channel = random_channel(&mut rng, &ABC);
        let lm = random_lm(&mut rng, &['a', 'b', 'c', 'd']);
        let out = beam_decode(&text, &channel, &lm, &CorrectorConfig::default());
        let allowed: BTreeSet<char> = channel.alphabet().chain(lm.vocab()).chain(text.chars()).collect();
        prop_assert!(out.chars().all(|c| allowed.contains(&c)), "{:?} -> {:?}", text, out);
        // characters unknown to both models are copied, never invented
        let known: BTreeSet<char> = channel.alphabet().chain(lm.vocab()).collect();
        let unknown_in = text.chars().filter(|c| !known.contains(c)).collect::<String>();
        let unknown_out = out.chars().filter(|c| !known.contains(c)).collect::<String>();
        prop_assert_eq!(unknown_in, unknown_out);
    }

    #[test]
    fn wider_beams_never_score_lower(seed_value in any::<u64>(), text in "[abc]{1,8}") {
        let mut rng = seed::rng(seed_value);
        let channel = random_channel(&mut rng, &ABC);
        let lm = random_lm(&mut rng, &ABC);
        let mut last = f64::NEG_INFINITY;
        for beam_width in [1, 2, 3, 4, 8, 16, 64] {
            let cfg = CorrectorConfig { beam_width, ..CorrectorConfig::default() };
            let score = Decoder::new(&channel, &lm, &cfg)
                .decode_scored(&text)
                .map_or(f64::NEG_INFINITY, |(_, s)| s);
            prop_assert!(score >= last, "beam {} scored {} after {}", beam_width, score, last);
            last = score;
        }
    }
}
