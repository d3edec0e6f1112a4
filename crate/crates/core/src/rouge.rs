//! ROUGE-1/2/L scoring and gold-summary construction from fact-check
//! descriptions.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{split_sentences, tokenize, EmbeddingTable, Vocabulary};

#[derive(Debug, Error)]
pub enum RougeError {
    #[error("undefined score: {0}")]
    Undefined(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("claim ids do not match; missing: {missing:?}")]
    IdMismatch { missing: Vec<String> },
    #[error("claim {0} has no description; gold summary unavailable")]
    GoldUnavailable(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    fn from_counts(overlap: f64, candidate_total: f64, reference_total: f64) -> Self {
        let precision = if candidate_total > 0.0 {
            overlap / candidate_total
        } else {
            0.0
        };
        let recall = if reference_total > 0.0 {
            overlap / reference_total
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self {
            precision,
            recall,
            f1,
        }
    }
}

/// Clipped n-gram overlap (n ∈ {1, 2}): recall against reference
/// n-grams, precision against candidate n-grams.
pub fn rouge_n(
    candidate: &[String],
    reference: &[String],
    n: usize,
) -> Result<RougeScore, RougeError> {
    if !(1..=2).contains(&n) {
        return Err(RougeError::Config(format!("n must be 1 or 2, got {n}")));
    }
    if reference.len() < n {
        return Err(RougeError::Undefined(format!("reference has no {n}-grams")));
    }
    fn grams<'a>(tokens: &'a [String], n: usize) -> HashMap<Vec<&'a str>, usize> {
        let mut counts: HashMap<Vec<&'a str>, usize> = HashMap::new();
        if tokens.len() >= n {
            for window in tokens.windows(n) {
                let key: Vec<&str> = window.iter().map(String::as_str).collect();
                *counts.entry(key).or_default() += 1;
            }
        }
        counts
    }
    let cand = grams(candidate, n);
    let reference_counts = grams(reference, n);
    let overlap: usize = cand
        .iter()
        .map(|(g, &c)| c.min(*reference_counts.get(g).unwrap_or(&0)))
        .sum();
    let candidate_total = candidate.len().saturating_sub(n - 1);
    let reference_total = reference.len() - (n - 1);
    Ok(RougeScore::from_counts(
        overlap as f64,
        candidate_total as f64,
        reference_total as f64,
    ))
}

/// Longest-common-subsequence overlap: recall `LCS/|ref|`, precision
/// `LCS/|cand|`.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> Result<RougeScore, RougeError> {
    if reference.is_empty() {
        return Err(RougeError::Undefined("empty reference".into()));
    }
    let lcs = lcs_length(candidate, reference);
    Ok(RougeScore::from_counts(
        lcs as f64,
        candidate.len() as f64,
        reference.len() as f64,
    ))
}

fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut current = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            current[j + 1] = if ai == bj {
                prev[j] + 1
            } else {
                current[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut current);
    }
    prev[b.len()]
}

/// How claim and description sentences are vectorized for the gold
/// cosine filter.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoldVector {
    /// Mean of word embeddings.
    Embedding,
    /// Sparse tf-idf bags over the claim + description sentences.
    Tfidf,
}

impl std::str::FromStr for GoldVector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embedding" => Ok(GoldVector::Embedding),
            "tfidf" => Ok(GoldVector::Tfidf),
            other => Err(format!(
                "unknown gold_vector {other:?}; valid: embedding, tfidf"
            )),
        }
    }
}

/// Gold summary built from a fact-check description: keep the sentences
/// whose mean-embedding cosine with the claim reaches the threshold,
/// in original order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoldSummary {
    pub text: String,
    pub kept: Vec<usize>,
    /// Sentence indices dropped because their embedding was zero
    /// (cosine undefined).
    pub dropped_undefined: Vec<usize>,
}

pub fn build_gold_summary(
    claim_tokens: &[String],
    description: &str,
    embeddings: &EmbeddingTable,
    vocab: &Vocabulary,
    threshold: f64,
) -> Result<GoldSummary, RougeError> {
    let sentences = split_sentences(description);
    if sentences.is_empty() {
        return Err(RougeError::Undefined("description has no sentences".into()));
    }
    let ids =
        |tokens: &[String]| -> Vec<usize> { tokens.iter().map(|t| vocab.lookup(t)).collect() };
    let claim_vec = embeddings.mean_vector(&ids(claim_tokens));
    let mut kept = Vec::new();
    let mut dropped_undefined = Vec::new();
    let mut kept_text = Vec::new();
    for (i, sentence) in sentences.iter().enumerate() {
        let tokens = tokenize(sentence);
        let sentence_vec = embeddings.mean_vector(&ids(&tokens));
        match (&claim_vec, sentence_vec) {
            (Some(c), Some(s)) => {
                if cosine(c, &s) >= threshold {
                    kept.push(i);
                    kept_text.push(sentence.clone());
                }
            }
            _ => dropped_undefined.push(i),
        }
    }
    Ok(GoldSummary {
        text: kept_text.join(" "),
        kept,
        dropped_undefined,
    })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// TF-IDF variant of the gold filter: claim and sentences become sparse
/// tf-idf bags (idf over the claim plus the description sentences) and
/// the same cosine threshold applies. No embeddings needed.
pub fn build_gold_summary_tfidf(
    claim_tokens: &[String],
    description: &str,
    threshold: f64,
) -> Result<GoldSummary, RougeError> {
    let sentences = split_sentences(description);
    if sentences.is_empty() {
        return Err(RougeError::Undefined("description has no sentences".into()));
    }
    let sentence_tokens: Vec<Vec<String>> = sentences.iter().map(|s| tokenize(s)).collect();
    let mut units: Vec<&[String]> = vec![claim_tokens];
    units.extend(sentence_tokens.iter().map(|t| t.as_slice()));

    let mut document_frequency: BTreeMap<&str, usize> = BTreeMap::new();
    for unit in &units {
        let mut seen: Vec<&str> = unit.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for token in seen {
            *document_frequency.entry(token).or_default() += 1;
        }
    }
    let n = units.len() as f64;
    fn weigh<'a>(
        tokens: &'a [String],
        document_frequency: &BTreeMap<&str, usize>,
        n: f64,
    ) -> BTreeMap<&'a str, f64> {
        let mut tf: BTreeMap<&'a str, f64> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.as_str()).or_default() += 1.0;
        }
        for (token, value) in tf.iter_mut() {
            let df = document_frequency[*token] as f64;
            *value *= ((n + 1.0) / (df + 1.0)).ln() + 1.0;
        }
        tf
    }
    let sparse_cosine = |a: &BTreeMap<&str, f64>, b: &BTreeMap<&str, f64>| -> Option<f64> {
        let dot: f64 = a.iter().filter_map(|(t, x)| b.get(t).map(|y| x * y)).sum();
        let na: f64 = a.values().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.values().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            None
        } else {
            Some(dot / (na * nb))
        }
    };

    let claim_bag = weigh(claim_tokens, &document_frequency, n);
    let mut kept = Vec::new();
    let mut dropped_undefined = Vec::new();
    let mut kept_text = Vec::new();
    for (i, tokens) in sentence_tokens.iter().enumerate() {
        let bag = weigh(tokens, &document_frequency, n);
        match sparse_cosine(&claim_bag, &bag) {
            Some(similarity) if similarity >= threshold => {
                kept.push(i);
                kept_text.push(sentences[i].clone());
            }
            Some(_) => {}
            None => dropped_undefined.push(i),
        }
    }
    Ok(GoldSummary {
        text: kept_text.join(" "),
        kept,
        dropped_undefined,
    })
}

/// All three metrics for one candidate/reference pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RougeReport {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    pub rouge_l: RougeScore,
}

pub fn score_pair(candidate: &[String], reference: &[String]) -> Result<RougeReport, RougeError> {
    Ok(RougeReport {
        rouge1: rouge_n(candidate, reference, 1)?,
        rouge2: rouge_n(candidate, reference, 2)?,
        rouge_l: rouge_l(candidate, reference)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusRouge {
    /// Macro averages over claims (precision, recall, and f1 averaged
    /// independently).
    pub aggregate: RougeReport,
    pub per_claim: BTreeMap<String, RougeReport>,
}

/// Macro-averaged corpus scores. The system and gold maps must cover
/// exactly the same claim ids.
pub fn evaluate_summaries(
    system: &BTreeMap<String, Vec<String>>,
    gold: &BTreeMap<String, Vec<String>>,
) -> Result<CorpusRouge, RougeError> {
    let missing: Vec<String> = system
        .keys()
        .filter(|id| !gold.contains_key(*id))
        .chain(gold.keys().filter(|id| !system.contains_key(*id)))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(RougeError::IdMismatch { missing });
    }
    if system.is_empty() {
        return Err(RougeError::Undefined("no claims to evaluate".into()));
    }
    let mut per_claim = BTreeMap::new();
    for (id, candidate) in system {
        let reference = &gold[id];
        per_claim.insert(id.clone(), score_pair(candidate, reference)?);
    }
    let mean = |extract: &dyn Fn(&RougeReport) -> RougeScore| -> RougeScore {
        let n = per_claim.len() as f64;
        let mut p = 0.0;
        let mut r = 0.0;
        let mut f = 0.0;
        for report in per_claim.values() {
            let s = extract(report);
            p += s.precision;
            r += s.recall;
            f += s.f1;
        }
        RougeScore {
            precision: p / n,
            recall: r / n,
            f1: f / n,
        }
    };
    Ok(CorpusRouge {
        aggregate: RougeReport {
            rouge1: mean(&|r| r.rouge1),
            rouge2: mean(&|r| r.rouge2),
            rouge_l: mean(&|r| r.rouge_l),
        },
        per_claim,
    })
}
