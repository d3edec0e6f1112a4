//! Serializable prediction and attention reports — the explainability
//! surface consumed by inspection tooling and the summarizer.

use serde::{Deserialize, Serialize};

/// Attention weights of one level, truncated to real (unmasked)
/// positions. Mechanism vectors are absent in baseline mode; β is
/// present only under Atop fusion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelExport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claim: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub title: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub self_attention: Option<Vec<f64>>,
    pub fused: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
}

/// Per-document attention: sentence-level weights plus one word-level
/// export per real sentence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttentionExport {
    pub sentence: LevelExport,
    pub words: Vec<LevelExport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassProbabilities {
    #[serde(rename = "true")]
    pub true_class: f64,
    #[serde(rename = "false")]
    pub false_class: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DocumentReport {
    pub doc_index: usize,
    pub source_domain: String,
    pub logits: Vec<f64>,
    pub attention: AttentionExport,
}

/// One claim's prediction with its attention exports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub claim_id: String,
    pub predicted_label: String,
    pub probabilities: ClassProbabilities,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gold_label: Option<String>,
    pub documents: Vec<DocumentReport>,
}
