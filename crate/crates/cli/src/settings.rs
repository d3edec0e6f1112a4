//! Flat key-value run configuration: defaults, config-file parsing, and
//! flag overrides (flags win). Every key has a documented default and
//! unknown keys are rejected.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use veracity_core::attention::FusionMode;
use veracity_core::classifier::{Aggregate, ModelConfig};
use veracity_core::rouge::GoldVector;
use veracity_core::summarize::{CoverageMode, SummarizerConfig, WordWeightMode};
use veracity_core::tensor::{ClipMode, OptimizerKind};
use veracity_core::topic::{LdaConfig, LdaUnit};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BaselineMode {
    None,
    Bm25,
}

impl FromStr for BaselineMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(BaselineMode::None),
            "bm25" => Ok(BaselineMode::Bm25),
            other => Err(format!(
                "unknown baseline {other:?}; valid baselines: none, bm25"
            )),
        }
    }
}

/// Resolved settings for a run. The model, topic-model, and summarizer
/// configurations plus the handful of pipeline-level knobs.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub model: ModelConfig,
    pub lda: LdaConfig,
    pub summarizer: SummarizerConfig,
    pub baseline: BaselineMode,
    /// Fixed BM25 summary length; when unset the baseline is
    /// length-matched to the system summary per claim.
    pub top_n: Option<usize>,
    pub gold_threshold: f64,
    pub gold_vector: GoldVector,
    pub lda_unit: LdaUnit,
    pub train_frac: f64,
    pub val_frac: f64,
    /// Whether `trainable_embeddings` was set explicitly (otherwise it
    /// defaults by embedding source: trainable when randomly
    /// initialized, frozen when loaded from a vectors file).
    pub trainable_embeddings_explicit: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            lda: LdaConfig::default(),
            summarizer: SummarizerConfig::default(),
            baseline: BaselineMode::None,
            top_n: None,
            gold_threshold: 0.4,
            gold_vector: GoldVector::Embedding,
            lda_unit: LdaUnit::Sentence,
            train_frac: 0.7,
            val_frac: 0.15,
            trainable_embeddings_explicit: false,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| CliError::Usage(format!("bad value for {key}: {e}")))
}

impl Settings {
    /// Apply one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "hidden_size" => self.model.hidden_size = parse(key, value)?,
            "embedding_size" => self.model.embedding_size = parse(key, value)?,
            "learning_rate" => self.model.learning_rate = parse(key, value)?,
            "batch_size" => self.model.batch_size = parse(key, value)?,
            "clip_norm" => self.model.clip_norm = parse(key, value)?,
            "max_epochs" => self.model.max_epochs = parse(key, value)?,
            "patience" => self.model.patience = parse(key, value)?,
            "min_delta" => self.model.min_delta = parse(key, value)?,
            "max_sentences" => self.model.max_sentences = parse(key, value)?,
            "max_tokens" => self.model.max_tokens = parse(key, value)?,
            "fusion" => self.model.fusion = FusionMode::from_str(value).map_err(CliError::Usage)?,
            "source_embeddings" => self.model.source_embeddings = parse(key, value)?,
            "source_dim" => self.model.source_dim = parse(key, value)?,
            "seed" => {
                self.model.seed = parse(key, value)?;
                self.lda.seed = veracity_core::derive_seed(self.model.seed, "lda");
            }
            "word_bidirectional" => self.model.word_bidirectional = parse(key, value)?,
            "self_attention_context" => self.model.self_attention_context = parse(key, value)?,
            "trainable_embeddings" => {
                self.model.trainable_embeddings = parse(key, value)?;
                self.trainable_embeddings_explicit = true;
            }
            "aggregate" => {
                self.model.aggregate = match value {
                    "logits" => Aggregate::Logits,
                    "vectors" => Aggregate::Vectors,
                    other => {
                        return Err(CliError::Usage(format!(
                            "unknown aggregate {other:?}; valid: logits, vectors"
                        )))
                    }
                }
            }
            "optimizer" => {
                self.model.optimizer = match value {
                    "adam" => OptimizerKind::Adam,
                    "sgd" => OptimizerKind::Sgd,
                    other => {
                        return Err(CliError::Usage(format!(
                            "unknown optimizer {other:?}; valid: adam, sgd"
                        )))
                    }
                }
            }
            "clip_mode" => {
                self.model.clip_mode = match value {
                    "global_norm" => ClipMode::GlobalNorm,
                    "value" => ClipMode::Value,
                    other => {
                        return Err(CliError::Usage(format!(
                            "unknown clip_mode {other:?}; valid: global_norm, value"
                        )))
                    }
                }
            }
            "lda_topics" => self.lda.topics = parse(key, value)?,
            "lda_iterations" => self.lda.iterations = parse(key, value)?,
            "lda_alpha" => self.lda.alpha = Some(parse(key, value)?),
            "lda_beta" => self.lda.beta = parse(key, value)?,
            "lambda" => self.summarizer.lambda = parse(key, value)?,
            "coverage" => {
                self.summarizer.coverage = CoverageMode::from_str(value).map_err(CliError::Usage)?
            }
            "tau" => self.summarizer.tau = parse(key, value)?,
            "word_weight" => {
                self.summarizer.word_weight = match value {
                    "mean" => WordWeightMode::Mean,
                    "sum" => WordWeightMode::Sum,
                    other => {
                        return Err(CliError::Usage(format!(
                            "unknown word_weight {other:?}; valid: mean, sum"
                        )))
                    }
                }
            }
            "relevance_factor" => self.summarizer.relevance_factor = parse(key, value)?,
            "summary_max_sentences" => self.summarizer.max_sentences = Some(parse(key, value)?),
            "baseline" => self.baseline = BaselineMode::from_str(value).map_err(CliError::Usage)?,
            "top_n" => self.top_n = Some(parse(key, value)?),
            "gold_threshold" => self.gold_threshold = parse(key, value)?,
            "gold_vector" => {
                self.gold_vector = GoldVector::from_str(value).map_err(CliError::Usage)?
            }
            "lda_unit" => self.lda_unit = LdaUnit::from_str(value).map_err(CliError::Usage)?,
            "train_frac" => self.train_frac = parse(key, value)?,
            "val_frac" => self.val_frac = parse(key, value)?,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown configuration key {other:?} (see config.snapshot for valid keys)"
                )))
            }
        }
        Ok(())
    }

    /// Load `key = value` lines from a config file. `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let content = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read config {}: {e}", path.display())))?;
        for (i, line) in content.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!(
                    "{}:{}: expected key = value, got {line:?}",
                    path.display(),
                    i + 1
                ))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_pairs(&mut self, pairs: &[String]) -> Result<(), CliError> {
        for pair in pairs {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set expects key=value, got {pair:?}")))?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    /// Render every resolved key, loadable back as a config file.
    pub fn snapshot(&self) -> String {
        let mut pairs: BTreeMap<&str, String> = BTreeMap::new();
        let m = &self.model;
        pairs.insert("hidden_size", m.hidden_size.to_string());
        pairs.insert("embedding_size", m.embedding_size.to_string());
        pairs.insert("learning_rate", format!("{}", m.learning_rate));
        pairs.insert("batch_size", m.batch_size.to_string());
        pairs.insert("clip_norm", format!("{}", m.clip_norm));
        pairs.insert("max_epochs", m.max_epochs.to_string());
        pairs.insert("patience", m.patience.to_string());
        pairs.insert("min_delta", format!("{}", m.min_delta));
        pairs.insert("max_sentences", m.max_sentences.to_string());
        pairs.insert("max_tokens", m.max_tokens.to_string());
        pairs.insert("fusion", m.fusion.to_string());
        pairs.insert("source_embeddings", m.source_embeddings.to_string());
        pairs.insert("source_dim", m.source_dim.to_string());
        pairs.insert("seed", m.seed.to_string());
        pairs.insert("word_bidirectional", m.word_bidirectional.to_string());
        pairs.insert(
            "self_attention_context",
            m.self_attention_context.to_string(),
        );
        pairs.insert("trainable_embeddings", m.trainable_embeddings.to_string());
        pairs.insert(
            "aggregate",
            match m.aggregate {
                Aggregate::Logits => "logits".into(),
                Aggregate::Vectors => "vectors".into(),
            },
        );
        pairs.insert(
            "optimizer",
            match m.optimizer {
                OptimizerKind::Adam => "adam".into(),
                OptimizerKind::Sgd => "sgd".into(),
            },
        );
        pairs.insert(
            "clip_mode",
            match m.clip_mode {
                ClipMode::GlobalNorm => "global_norm".into(),
                ClipMode::Value => "value".into(),
            },
        );
        pairs.insert("lda_topics", self.lda.topics.to_string());
        pairs.insert("lda_iterations", self.lda.iterations.to_string());
        if let Some(alpha) = self.lda.alpha {
            pairs.insert("lda_alpha", format!("{alpha}"));
        }
        pairs.insert("lda_beta", format!("{}", self.lda.beta));
        pairs.insert("lambda", format!("{}", self.summarizer.lambda));
        pairs.insert("coverage", self.summarizer.coverage.to_string());
        pairs.insert("tau", format!("{}", self.summarizer.tau));
        pairs.insert(
            "word_weight",
            match self.summarizer.word_weight {
                WordWeightMode::Mean => "mean".into(),
                WordWeightMode::Sum => "sum".into(),
            },
        );
        pairs.insert(
            "relevance_factor",
            format!("{}", self.summarizer.relevance_factor),
        );
        if let Some(cap) = self.summarizer.max_sentences {
            pairs.insert("summary_max_sentences", cap.to_string());
        }
        pairs.insert(
            "baseline",
            match self.baseline {
                BaselineMode::None => "none".into(),
                BaselineMode::Bm25 => "bm25".into(),
            },
        );
        if let Some(n) = self.top_n {
            pairs.insert("top_n", n.to_string());
        }
        pairs.insert("gold_threshold", format!("{}", self.gold_threshold));
        pairs.insert(
            "gold_vector",
            match self.gold_vector {
                GoldVector::Embedding => "embedding".into(),
                GoldVector::Tfidf => "tfidf".into(),
            },
        );
        pairs.insert(
            "lda_unit",
            match self.lda_unit {
                LdaUnit::Sentence => "sentence".into(),
                LdaUnit::Document => "document".into(),
            },
        );
        pairs.insert("train_frac", format!("{}", self.train_frac));
        pairs.insert("val_frac", format!("{}", self.val_frac));

        let mut out = String::new();
        for (key, value) in pairs {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }
}
