//! Model hyperparameters and their defaults.

use serde::{Deserialize, Serialize};

use crate::attention::FusionMode;
use crate::tensor::{ClipMode, OptimizerKind};

/// How per-document outputs combine into a claim-level prediction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregate {
    /// Mean of per-document logits (permutation-invariant over documents).
    Logits,
    /// Mean of per-document vectors, classified once.
    Vectors,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    /// GRU hidden size per direction, both levels.
    pub hidden_size: usize,
    pub embedding_size: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    /// Validation loss must improve by at least this much to count.
    pub min_delta: f64,
    /// Maximum sentences per document (k).
    pub max_sentences: usize,
    /// Maximum tokens per sentence, claim, and title (l).
    pub max_tokens: usize,
    pub fusion: FusionMode,
    pub source_embeddings: bool,
    pub source_dim: usize,
    pub seed: u64,
    pub word_bidirectional: bool,
    pub self_attention_context: bool,
    pub trainable_embeddings: bool,
    pub aggregate: Aggregate,
    pub optimizer: OptimizerKind,
    pub clip_mode: ClipMode,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            hidden_size: 200,
            embedding_size: 200,
            learning_rate: 0.001,
            batch_size: 64,
            clip_norm: 5.0,
            max_epochs: 50,
            patience: 5,
            min_delta: 1e-5,
            max_sentences: 35,
            max_tokens: 45,
            fusion: FusionMode::Atop,
            source_embeddings: false,
            source_dim: 100,
            seed: 7,
            word_bidirectional: true,
            self_attention_context: false,
            trainable_embeddings: false,
            aggregate: Aggregate::Logits,
            optimizer: OptimizerKind::Adam,
            clip_mode: ClipMode::GlobalNorm,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positives = [
            ("hidden_size", self.hidden_size),
            ("embedding_size", self.embedding_size),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
            ("patience", self.patience),
            ("max_sentences", self.max_sentences),
            ("max_tokens", self.max_tokens),
            ("source_dim", self.source_dim),
        ];
        for (name, value) in positives {
            if value == 0 {
                return Err(format!("{name} must be positive"));
            }
        }
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err("learning_rate must be positive".into());
        }
        if !self.clip_norm.is_finite() || self.clip_norm <= 0.0 {
            return Err("clip_norm must be positive".into());
        }
        if !self.min_delta.is_finite() || self.min_delta < 0.0 {
            return Err("min_delta must be nonnegative".into());
        }
        Ok(())
    }

    /// Width of the word-level hidden states.
    pub fn word_width(&self) -> usize {
        if self.word_bidirectional {
            2 * self.hidden_size
        } else {
            self.hidden_size
        }
    }

    /// Width of the sentence-level hidden states (always bidirectional).
    pub fn sentence_width(&self) -> usize {
        2 * self.hidden_size
    }

    /// Width of the vector entering the classification layer.
    pub fn doc_width(&self) -> usize {
        self.sentence_width()
            + if self.source_embeddings {
                self.source_dim
            } else {
                0
            }
    }

    /// FNV-1a over the canonical JSON rendering; stored in checkpoints to
    /// detect config/checkpoint mismatches.
    pub fn fingerprint(&self) -> u64 {
        let json = serde_json::to_string(self).expect("config serializes");
        let mut hash: u64 = 0xcbf29ce484222325;
        for b in json.as_bytes() {
            hash ^= *b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
        hash
    }
}
