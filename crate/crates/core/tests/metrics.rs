mod common;

use common::*;
use proptest::prelude::*;
use roundtrip_core::metrics::{char_ops, percent};
use roundtrip_core::pipeline::Prediction;
use roundtrip_core::*;

fn chars(s: &str) -> Vec<char> {
    s.chars().collect()
}

#[test]
fn oracle_agrees_with_naive_recursion_on_short_pairs() {
    let mut rng = seed::rng(9);
    for _ in 0..300 {
        let a = chars(&random_string(&mut rng, &['a', 'b', 'c', 'd'], 6));
        let b = chars(&random_string(&mut rng, &['a', 'b', 'c', 'd'], 6));
        let (s, d, i) = oracle_ops(&a, &b);
        assert_eq!(s + d + i, naive_distance(&a, &b));
        assert_eq!(edit_ops(&a, &b, Unit::Char).edits(), naive_distance(&a, &b));
    }
}

#[test]
fn micro_average_differs_from_mean_of_pairs() {
    // (edits, N) = (1, 2) and (1, 8): micro 2/10, mean of rates 0.3125.
    let set = pair_set(&[("f", "ab", "xb"), ("f", "abcdefgh", "abcdefgx")]);
    let r = corpus_report(&set, None, CharMode::Codepoint).unwrap();
    assert!((r.corpus_cer - 0.2).abs() < 1e-12);
    let set = pair_set(&[("f", "abcd", "abcx"), ("f", "abcd", "xyzd")]);
    let r = corpus_report(&set, None, CharMode::Codepoint).unwrap();
    assert!((r.corpus_cer - 0.5).abs() < 1e-12);
}

#[test]
fn predictions_replace_ocr_and_must_align() {
    let set = pair_set(&[("f", "ab", "xx"), ("g", "cd", "cd")]);
    let perfect: Vec<Prediction> = set
        .pairs
        .iter()
        .map(|p| Prediction {
            id: p.id,
            prediction: p.gold.clone(),
        })
        .collect();
    let r = corpus_report(&set, Some(&perfect), CharMode::Codepoint).unwrap();
    assert_eq!(r.corpus_cer, 0.0);
    assert_eq!(r.corpus_wer, 0.0);
    assert!(matches!(
        corpus_report(&set, Some(&perfect[..1]), CharMode::Codepoint),
        Err(MetricError::Misaligned(_))
    ));
}

#[test]
fn empty_gold_pairs_are_excluded_and_counted() {
    let set = pair_set(&[("f", "", "x"), ("f", "ab", "ab")]);
    let r = corpus_report(&set, None, CharMode::Codepoint).unwrap();
    assert_eq!((r.pair_count, r.excluded_empty_gold), (1, 1));
    assert_eq!(r.corpus_cer, 0.0);
}

#[test]
fn grapheme_mode_counts_clusters() {
    // कि is one grapheme cluster and two codepoints.
    let cp = char_ops("कि", "कु", CharMode::Codepoint);
    let gr = char_ops("कि", "कु", CharMode::Grapheme);
    assert_eq!((cp.edits(), cp.ref_len), (1, 2));
    assert_eq!((gr.edits(), gr.ref_len), (1, 1));
    let r = corpus_report(&pair_set(&[("f", "कि", "कु")]), None, CharMode::Grapheme).unwrap();
    assert_eq!(r.char_mode, CharMode::Grapheme);
    assert_eq!(r.corpus_cer, 1.0);
}

#[test]
fn single_font_report_matches_corpus() {
    let set = pair_set(&[("only", "abcd", "abxd"), ("only", "ab", "ab")]);
    let corpus = corpus_report(&set, None, CharMode::Codepoint).unwrap();
    let fonts = font_report(&set).unwrap();
    assert_eq!(fonts.rows.len(), 1);
    assert_eq!(fonts.rows[0].cer, corpus.corpus_cer);
    assert_eq!(fonts.nearest.font_id, "only");
    assert_eq!(percent(corpus.corpus_cer), "16.67%");
}

proptest! {
    #[test]
    fn identity_and_all_deletions(s in "[a-dक-ङ ]{1,20}") {
        let s = normalize_text(&s);
        prop_assume!(!s.is_empty());
        prop_assert_eq!(cer(&s, &s).unwrap(), 0.0);
        prop_assert_eq!(cer(&s, "").unwrap(), 1.0);
    }

    #[test]
    fn distance_is_tiebreak_independent(a in "[abcd]{0,12}", b in "[abcd]{0,12}") {
        let (a, b) = (chars(&a), chars(&b));
        let (s, d, i) = oracle_ops(&a, &b);
        let ops = edit_ops(&a, &b, Unit::Char);
        prop_assert_eq!(ops.edits(), s + d + i);
        // swapping roles swaps deletions and insertions in the total
        prop_assert_eq!(edit_ops(&b, &a, Unit::Char).edits(), ops.edits());
    }

    #[test]
    fn concatenated_sets_sum_their_counts(
        left in proptest::collection::vec(("[ab ]{1,8}", "[ab ]{0,8}"), 1..6),
        right in proptest::collection::vec(("[ab ]{1,8}", "[ab ]{0,8}"), 1..6),
    ) {
        let to_set = |v: &[(String, String)]| {
            let rows: Vec<(&str, &str, &str)> = v.iter().map(|(g, o)| ("f", g.as_str(), o.as_str())).collect();
            pair_set(&rows)
        };
        let mut joined: Vec<(String, String)> = left.clone();
        joined.extend(right.iter().cloned());
        let (l, r, j) = (to_set(&left), to_set(&right), to_set(&joined));
        let report = |s: &PairSet| corpus_report(s, None, CharMode::Codepoint).unwrap();
        let (rl, rr, rj) = (report(&l), report(&r), report(&j));
        prop_assert_eq!(rj.chars.edits(), rl.chars.edits() + rr.chars.edits());
        prop_assert_eq!(rj.chars.ref_len, rl.chars.ref_len + rr.chars.ref_len);
        prop_assert_eq!(rj.words.edits(), rl.words.edits() + rr.words.edits());
    }
}
