//! ROUGE fixtures with hand-counted n-grams and LCS tables, symmetry
//! properties, and the cosine gold-summary filter over toy vectors.

use std::collections::BTreeMap;

use proptest::prelude::*;

use veracity_core::corpus::{EmbeddingTable, Vocabulary};
use veracity_core::rouge::{
    build_gold_summary, build_gold_summary_tfidf, evaluate_summaries, rouge_l, rouge_n, score_pair,
    RougeError,
};
use veracity_core::tensor::Tensor;

fn tokens(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

#[test]
fn identical_texts_score_one() {
    let t = tokens(&["the", "cat", "sat"]);
    for n in 1..=2 {
        let s = rouge_n(&t, &t, n).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
    }
    let s = rouge_l(&t, &t).unwrap();
    assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
}

#[test]
fn disjoint_vocabularies_score_zero() {
    let a = tokens(&["alpha", "beta"]);
    let b = tokens(&["gamma", "delta"]);
    for n in 1..=2 {
        let s = rouge_n(&a, &b, n).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
    }
    assert_eq!(rouge_l(&a, &b).unwrap().f1, 0.0);
}

// Hand count: unigram overlap {the, cat} = 2 of 3; bigram overlap
// {the·cat} = 1 of 2.
#[test]
fn cat_sat_cat_ran_fixture() {
    let candidate = tokens(&["the", "cat", "sat"]);
    let reference = tokens(&["the", "cat", "ran"]);
    let r1 = rouge_n(&candidate, &reference, 1).unwrap();
    assert!((r1.recall - 2.0 / 3.0).abs() < 1e-12);
    assert!((r1.precision - 2.0 / 3.0).abs() < 1e-12);
    let r2 = rouge_n(&candidate, &reference, 2).unwrap();
    assert!((r2.recall - 0.5).abs() < 1e-12);
}

#[test]
fn clipping_counts_repeated_ngrams() {
    // candidate repeats "cat" three times; reference has it once
    let candidate = tokens(&["cat", "cat", "cat"]);
    let reference = tokens(&["cat", "dog"]);
    let r1 = rouge_n(&candidate, &reference, 1).unwrap();
    assert!((r1.recall - 0.5).abs() < 1e-12);
    assert!((r1.precision - 1.0 / 3.0).abs() < 1e-12);
}

// LCS DP table for "a b c d" vs "a c b d" peaks at 3 ("a b d" / "a c d").
#[test]
fn lcs_fixtures() {
    let s = rouge_l(
        &tokens(&["a", "b", "c", "d"]),
        &tokens(&["a", "c", "b", "d"]),
    )
    .unwrap();
    assert!((s.recall - 0.75).abs() < 1e-12);
    assert!((s.precision - 0.75).abs() < 1e-12);

    // reversed sequence of distinct tokens shares an LCS of exactly 1
    let s = rouge_l(&tokens(&["x", "y", "z"]), &tokens(&["z", "y", "x"])).unwrap();
    assert!((s.recall - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn empty_reference_is_an_error() {
    let c = tokens(&["something"]);
    assert!(matches!(rouge_n(&c, &[], 1), Err(RougeError::Undefined(_))));
    assert!(matches!(rouge_l(&c, &[]), Err(RougeError::Undefined(_))));
    assert!(matches!(rouge_n(&c, &c, 3), Err(RougeError::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    // swapping candidate and reference exchanges precision and recall
    #[test]
    fn swap_symmetry(
        a in prop::collection::vec("[a-d]", 1..12),
        b in prop::collection::vec("[a-d]", 1..12)
    ) {
        for n in 1..=2usize {
            if a.len() >= n && b.len() >= n {
                let fwd = rouge_n(&a, &b, n).unwrap();
                let rev = rouge_n(&b, &a, n).unwrap();
                prop_assert!((fwd.precision - rev.recall).abs() < 1e-12);
                prop_assert!((fwd.recall - rev.precision).abs() < 1e-12);
            }
        }
        let fwd = rouge_l(&a, &b).unwrap();
        let rev = rouge_l(&b, &a).unwrap();
        prop_assert!((fwd.precision - rev.recall).abs() < 1e-12);
        prop_assert!((fwd.recall - rev.precision).abs() < 1e-12);
    }

    // All scores stay in [0, 1]. (ROUGE-1 recall does NOT dominate
    // ROUGE-2 recall in general: with clipped counts, candidate
    // [a,b,c,a] vs reference [b,c,a,b] scores 3/4 on unigrams but 3/3
    // on bigrams. Only range and identity properties hold.)
    #[test]
    fn range_properties(
        a in prop::collection::vec("[a-e]", 2..15),
        b in prop::collection::vec("[a-e]", 2..15)
    ) {
        let report = score_pair(&a, &b).unwrap();
        for s in [report.rouge1, report.rouge2, report.rouge_l] {
            prop_assert!((0.0..=1.0).contains(&s.precision));
            prop_assert!((0.0..=1.0).contains(&s.recall));
            prop_assert!((0.0..=1.0).contains(&s.f1));
        }
    }
}

// Toy 4-dimensional table: claim is all "sun"; "sun moon" sits at 45°
// (cosine ≈ 0.707, kept); "moon" alone is orthogonal (cosine 0,
// dropped); "void" has the zero vector (cosine undefined, dropped).
#[test]
fn gold_summary_matches_hand_cosines() {
    let vocab = Vocabulary::from_tokens(
        ["sun", "moon", "void", "star"]
            .iter()
            .map(|s| s.to_string()),
    );
    let dim = 4;
    let mut data = vec![0.0; vocab.len() * dim];
    let mut set = |token: &str, v: [f64; 4]| {
        let row = vocab.lookup(token);
        data[row * dim..(row + 1) * dim].copy_from_slice(&v);
    };
    set("sun", [1.0, 0.0, 0.0, 0.0]);
    set("moon", [0.0, 1.0, 0.0, 0.0]);
    set("star", [1.0, 0.0, 0.0, 0.0]);
    set("void", [0.0, 0.0, 0.0, 0.0]);
    let table =
        EmbeddingTable::from_tensor(Tensor::new(vec![vocab.len(), dim], data).unwrap(), false);

    let claim = tokens(&["sun"]);
    let description = "sun moon. moon. void. star sun.";
    let gold = build_gold_summary(&claim, description, &table, &vocab, 0.4).unwrap();
    // sentence 0: mean (0.5, 0.5, 0, 0), cosine 1/√2 ≈ 0.707 → kept
    // sentence 1: cosine 0 → filtered
    // sentence 2: zero vector → dropped as undefined
    // sentence 3: mean (1, 0, 0, 0), cosine 1 → kept
    assert_eq!(gold.kept, vec![0, 3]);
    assert_eq!(gold.dropped_undefined, vec![2]);
    assert_eq!(gold.text, "sun moon. star sun.");
}

#[test]
fn gold_summary_keeps_identical_sentence() {
    let vocab = Vocabulary::from_tokens(["solar", "farm"].iter().map(|s| s.to_string()));
    let table = EmbeddingTable::random(&vocab, 6, 3);
    let claim = tokens(&["solar", "farm"]);
    let gold = build_gold_summary(&claim, "solar farm.", &table, &vocab, 0.4).unwrap();
    assert_eq!(gold.kept, vec![0]);
}

#[test]
fn tfidf_gold_filter_needs_no_embeddings() {
    let claim = tokens(&["solar", "farm", "output"]);
    let description = "the solar farm output grew. unrelated advertising banner text.";
    let gold = build_gold_summary_tfidf(&claim, description, 0.4).unwrap();
    assert_eq!(gold.kept, vec![0]);
    assert!(gold.text.starts_with("the solar farm"));

    // an identical sentence scores cosine 1 regardless of idf weights
    let gold = build_gold_summary_tfidf(&claim, "solar farm output.", 0.99).unwrap();
    assert_eq!(gold.kept, vec![0]);
}

#[test]
fn corpus_evaluation_aggregates_and_guards_ids() {
    let mut system = BTreeMap::new();
    let mut gold = BTreeMap::new();
    // claim a: identical (f1 = 1); claim b: disjoint (f1 = 0) → mean 0.5
    system.insert("a".to_string(), tokens(&["same", "words"]));
    gold.insert("a".to_string(), tokens(&["same", "words"]));
    system.insert("b".to_string(), tokens(&["left", "text"]));
    gold.insert("b".to_string(), tokens(&["right", "tokens"]));
    let corpus = evaluate_summaries(&system, &gold).unwrap();
    assert!((corpus.aggregate.rouge1.f1 - 0.5).abs() < 1e-12);
    assert!((corpus.aggregate.rouge_l.f1 - 0.5).abs() < 1e-12);
    assert_eq!(corpus.per_claim.len(), 2);

    // single claim: the aggregate equals that claim's score
    let mut one_system = BTreeMap::new();
    let mut one_gold = BTreeMap::new();
    one_system.insert("a".to_string(), tokens(&["the", "cat", "sat"]));
    one_gold.insert("a".to_string(), tokens(&["the", "cat", "ran"]));
    let single = evaluate_summaries(&one_system, &one_gold).unwrap();
    assert_eq!(
        single.aggregate.rouge1.recall,
        single.per_claim["a"].rouge1.recall
    );

    gold.remove("b");
    match evaluate_summaries(&system, &gold) {
        Err(RougeError::IdMismatch { missing }) => assert_eq!(missing, vec!["b".to_string()]),
        other => panic!("expected id mismatch, got {other:?}"),
    }
}
