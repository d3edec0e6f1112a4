//! Topic-diversified extractive summarization: cost scoring from
//! attention and topic signals, greedy minimum-cost set cover over the
//! dominant topics, and an Okapi BM25 comparator.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::AttentionExport;
use crate::corpus::ClaimInstance;
use crate::topic::TopicAssignment;

#[derive(Debug, Error)]
pub enum SummarizeError {
    #[error("config error: {0}")]
    Config(String),
    #[error("input error: {0}")]
    Input(String),
    #[error("no candidate sentence covers topic {topic}")]
    Infeasible { topic: usize },
}

/// How a sentence's covered-topic set is derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverageMode {
    /// A sentence covers exactly its dominant topic.
    Dominant,
    /// A sentence covers its dominant topic plus every topic whose
    /// probability reaches τ.
    Multi,
}

impl fmt::Display for CoverageMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoverageMode::Dominant => write!(f, "dominant"),
            CoverageMode::Multi => write!(f, "multi"),
        }
    }
}

impl FromStr for CoverageMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dominant" => Ok(CoverageMode::Dominant),
            "multi" => Ok(CoverageMode::Multi),
            other => Err(format!(
                "unknown coverage mode {other:?}; valid modes: dominant, multi"
            )),
        }
    }
}

/// How the per-sentence word-attention signal is reduced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordWeightMode {
    /// Mean over the sentence's real tokens (a raw sum of softmax
    /// weights is always 1 and carries no signal).
    Mean,
    /// The literal sum.
    Sum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummarizerConfig {
    /// Trade-off between the topic score and the attention scores.
    pub lambda: f64,
    pub coverage: CoverageMode,
    /// Multi-mode probability threshold for covering a topic.
    pub tau: f64,
    pub word_weight: WordWeightMode,
    /// A sentence is a candidate when its fused sentence-level weight is
    /// at least `relevance_factor / k_real` (above-baseline attention).
    pub relevance_factor: f64,
    /// Optional cap on summary length (sentences).
    pub max_sentences: Option<usize>,
}

impl Default for SummarizerConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            coverage: CoverageMode::Dominant,
            tau: 0.2,
            word_weight: WordWeightMode::Mean,
            relevance_factor: 0.5,
            max_sentences: None,
        }
    }
}

impl SummarizerConfig {
    pub fn validate(&self) -> Result<(), SummarizeError> {
        if !(0.0..=1.0).contains(&self.lambda) {
            return Err(SummarizeError::Config(format!(
                "lambda must be in [0, 1], got {}",
                self.lambda
            )));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(SummarizeError::Config(format!(
                "tau must be in [0, 1], got {}",
                self.tau
            )));
        }
        Ok(())
    }
}

/// One scored candidate sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateSentence {
    pub doc_index: usize,
    pub sentence_index: usize,
    pub text: String,
    pub tokens: Vec<String>,
    /// Reduced word-level attention signal.
    pub word_attention: f64,
    /// Fused sentence-level attention weight.
    pub sentence_attention: f64,
    pub topic: TopicAssignment,
    pub score: f64,
    pub cost: f64,
    /// Topics this sentence covers under the active coverage mode.
    pub covers: Vec<usize>,
}

impl CandidateSentence {
    pub fn id(&self) -> String {
        format!("d{}:s{}", self.doc_index, self.sentence_index)
    }
}

/// Score every relevant sentence of a claim: `score = λθ + (1−λ)(W_wa +
/// W_sa)`, `cost = 1/score`. Sentences below the relevance threshold or
/// with vanishing score are excluded (the latter reported back).
pub fn score_sentences(
    claim: &ClaimInstance,
    exports: &[AttentionExport],
    assignments: &[Vec<TopicAssignment>],
    config: &SummarizerConfig,
) -> Result<(Vec<CandidateSentence>, Vec<String>), SummarizeError> {
    config.validate()?;
    if exports.len() != claim.documents.len() || assignments.len() != claim.documents.len() {
        return Err(SummarizeError::Input(format!(
            "claim {}: {} documents but {} attention exports and {} assignment groups",
            claim.claim_id,
            claim.documents.len(),
            exports.len(),
            assignments.len()
        )));
    }
    let mut candidates = Vec::new();
    let mut dropped = Vec::new();
    for (doc_index, (doc, export)) in claim.documents.iter().zip(exports).enumerate() {
        let k_real = export.sentence.fused.len();
        if k_real == 0 {
            continue;
        }
        let threshold = config.relevance_factor / k_real as f64;
        for (sentence_index, word_level) in export.words.iter().enumerate() {
            let sentence_attention = export.sentence.fused[sentence_index];
            if sentence_attention < threshold {
                continue;
            }
            let real_tokens = word_level.fused.len();
            if real_tokens == 0 {
                continue;
            }
            let sum: f64 = word_level.fused.iter().sum();
            let word_attention = match config.word_weight {
                WordWeightMode::Mean => sum / real_tokens as f64,
                WordWeightMode::Sum => sum,
            };
            let assignment = assignments[doc_index][sentence_index].clone();
            let score = config.lambda * assignment.theta
                + (1.0 - config.lambda) * (word_attention + sentence_attention);
            let sentence = &doc.sentences[sentence_index];
            if score <= 1e-9 {
                dropped.push(format!(
                    "claim {} d{doc_index}:s{sentence_index}: score {score:.3e} too small, excluded",
                    claim.claim_id
                ));
                continue;
            }
            let covers = covered_topics(&assignment, config);
            candidates.push(CandidateSentence {
                doc_index,
                sentence_index,
                text: sentence.text.clone(),
                tokens: sentence.tokens.clone(),
                word_attention,
                sentence_attention,
                topic: assignment,
                score,
                cost: 1.0 / score,
                covers,
            });
        }
    }
    Ok((candidates, dropped))
}

fn covered_topics(assignment: &TopicAssignment, config: &SummarizerConfig) -> Vec<usize> {
    match config.coverage {
        CoverageMode::Dominant => vec![assignment.dominant],
        CoverageMode::Multi => {
            // the dominant topic is always covered, so feasibility over
            // the dominant-topic universe is preserved
            let mut set: BTreeSet<usize> = assignment
                .distribution
                .iter()
                .enumerate()
                .filter(|(_, &p)| p >= config.tau)
                .map(|(t, _)| t)
                .collect();
            set.insert(assignment.dominant);
            set.into_iter().collect()
        }
    }
}

/// The universe the cover must hit: dominant topics present among the
/// candidates.
pub fn dominant_topic_set(candidates: &[CandidateSentence]) -> BTreeSet<usize> {
    candidates.iter().map(|c| c.topic.dominant).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub id: String,
    pub ratio: f64,
    pub new_topics: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryResult {
    /// Selected sentences in selection order.
    pub selected: Vec<CandidateSentence>,
    pub covered_topics: Vec<usize>,
    pub total_cost: f64,
    pub steps: Vec<SelectionStep>,
}

/// Greedy weighted set cover: repeatedly take the candidate minimizing
/// `cost / (newly covered topics)` until the whole universe is covered.
/// Ties break toward lower cost, then lexicographic sentence id.
pub fn greedy_cover(
    candidates: &[CandidateSentence],
    universe: &BTreeSet<usize>,
    max_sentences: Option<usize>,
) -> Result<SummaryResult, SummarizeError> {
    if candidates.is_empty() {
        return Err(SummarizeError::Input("no candidate sentences".into()));
    }
    for &topic in universe {
        if !candidates.iter().any(|c| c.covers.contains(&topic)) {
            return Err(SummarizeError::Infeasible { topic });
        }
    }

    let mut covered: BTreeSet<usize> = BTreeSet::new();
    let mut selected_idx: BTreeSet<usize> = BTreeSet::new();
    let mut selected = Vec::new();
    let mut steps = Vec::new();
    let mut total_cost = 0.0;

    while &covered != universe {
        if let Some(cap) = max_sentences {
            if selected.len() >= cap {
                break;
            }
        }
        let mut best: Option<(f64, f64, String, usize, Vec<usize>)> = None;
        for (i, candidate) in candidates.iter().enumerate() {
            if selected_idx.contains(&i) {
                continue;
            }
            let new_topics: Vec<usize> = candidate
                .covers
                .iter()
                .copied()
                .filter(|t| universe.contains(t) && !covered.contains(t))
                .collect();
            if new_topics.is_empty() {
                continue;
            }
            let ratio = candidate.cost / new_topics.len() as f64;
            let key = (ratio, candidate.cost, candidate.id(), i, new_topics);
            let better = match &best {
                None => true,
                Some((r, c, id, _, _)) => (key.0, key.1, key.2.as_str()) < (*r, *c, id.as_str()),
            };
            if better {
                best = Some(key);
            }
        }
        let (ratio, _, id, index, new_topics) =
            best.expect("universe is coverable, so a candidate always remains");
        covered.extend(new_topics.iter().copied());
        total_cost += candidates[index].cost;
        selected_idx.insert(index);
        selected.push(candidates[index].clone());
        steps.push(SelectionStep {
            id,
            ratio,
            new_topics,
        });
    }

    Ok(SummaryResult {
        selected,
        covered_topics: covered.into_iter().collect(),
        total_cost,
        steps,
    })
}

/// Okapi BM25 ranking of sentences against the claim, `k1 = 1.2`,
/// `b = 0.75`, with the `ln(1 + (N − df + 0.5)/(df + 0.5))` idf. Returns
/// `(candidate index, score)` in descending score order, ties by index.
pub fn bm25_rank(query: &[String], sentences: &[&[String]]) -> Vec<(usize, f64)> {
    const K1: f64 = 1.2;
    const B: f64 = 0.75;
    let n = sentences.len();
    if n == 0 {
        return Vec::new();
    }
    let avg_len: f64 = sentences.iter().map(|s| s.len() as f64).sum::<f64>() / n as f64;

    let mut query_terms: Vec<&String> = query.iter().collect();
    query_terms.sort();
    query_terms.dedup();

    let mut scores = vec![0.0f64; n];
    for term in query_terms {
        let df = sentences
            .iter()
            .filter(|s| s.iter().any(|t| t == term))
            .count() as f64;
        if df == 0.0 {
            continue;
        }
        let idf = (1.0 + (n as f64 - df + 0.5) / (df + 0.5)).ln();
        for (i, sentence) in sentences.iter().enumerate() {
            let tf = sentence.iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let norm =
                tf * (K1 + 1.0) / (tf + K1 * (1.0 - B + B * sentence.len() as f64 / avg_len));
            scores[i] += idf * norm;
        }
    }
    let mut ranked: Vec<(usize, f64)> = scores.into_iter().enumerate().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    ranked
}

/// Top-n BM25 selection over candidate sentences, claim as the query.
pub fn bm25_summary(
    claim_tokens: &[String],
    candidates: &[CandidateSentence],
    top_n: usize,
) -> Result<Vec<CandidateSentence>, SummarizeError> {
    if top_n == 0 {
        return Err(SummarizeError::Config("top_n must be at least 1".into()));
    }
    let token_lists: Vec<&[String]> = candidates.iter().map(|c| c.tokens.as_slice()).collect();
    let ranked = bm25_rank(claim_tokens, &token_lists);
    Ok(ranked
        .into_iter()
        .take(top_n)
        .map(|(i, _)| candidates[i].clone())
        .collect())
}

/// One sentence ranked by the BM25 comparator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedSentence {
    pub doc_index: usize,
    pub sentence_index: usize,
    pub text: String,
    pub tokens: Vec<String>,
    pub score: f64,
}

/// The standalone BM25 baseline: rank every sentence of the claim's
/// documents against the claim and keep the top n.
pub fn bm25_baseline(
    claim: &ClaimInstance,
    top_n: usize,
) -> Result<Vec<RankedSentence>, SummarizeError> {
    if top_n == 0 {
        return Err(SummarizeError::Config("top_n must be at least 1".into()));
    }
    let mut sentences = Vec::new();
    for (doc_index, doc) in claim.documents.iter().enumerate() {
        for (sentence_index, sentence) in doc.sentences.iter().enumerate() {
            sentences.push(RankedSentence {
                doc_index,
                sentence_index,
                text: sentence.text.clone(),
                tokens: sentence.tokens.clone(),
                score: 0.0,
            });
        }
    }
    let token_lists: Vec<&[String]> = sentences.iter().map(|s| s.tokens.as_slice()).collect();
    let ranked = bm25_rank(&claim.claim_tokens, &token_lists);
    Ok(ranked
        .into_iter()
        .take(top_n)
        .map(|(i, score)| RankedSentence {
            score,
            ..sentences[i].clone()
        })
        .collect())
}

/// Reading-order rendering shared by system and baseline summaries.
pub fn render_ranked(selected: &[RankedSentence]) -> String {
    let mut ordered: Vec<&RankedSentence> = selected.iter().collect();
    ordered.sort_by_key(|c| (c.doc_index, c.sentence_index));
    ordered
        .iter()
        .map(|c| format!("[d{}] {}", c.doc_index, c.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Render selected sentences in reading order — by (document, sentence
/// index) — one per line, prefixed with the source document.
pub fn render_summary(selected: &[CandidateSentence]) -> String {
    let mut ordered: Vec<&CandidateSentence> = selected.iter().collect();
    ordered.sort_by_key(|c| (c.doc_index, c.sentence_index));
    ordered
        .iter()
        .map(|c| format!("[d{}] {}", c.doc_index, c.text))
        .collect::<Vec<_>>()
        .join("\n")
}
