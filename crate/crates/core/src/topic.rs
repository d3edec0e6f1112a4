//! Latent Dirichlet Allocation over candidate sentences via collapsed
//! Gibbs sampling. Each sentence is treated as one document; reserved
//! vocabulary indices (padding, unknown) never enter the counts.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::UNK_INDEX;

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("config error: {0}")]
    Config(String),
    #[error("model file error on {path}: {message}")]
    File { path: String, message: String },
}

/// What counts as one "document" when fitting: individual sentences (the
/// scoring unit) or whole evidence documents, with sentences folded in
/// afterwards either way.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LdaUnit {
    Sentence,
    Document,
}

impl std::str::FromStr for LdaUnit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sentence" => Ok(LdaUnit::Sentence),
            "document" => Ok(LdaUnit::Document),
            other => Err(format!(
                "unknown lda_unit {other:?}; valid units: sentence, document"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LdaConfig {
    pub topics: usize,
    pub iterations: usize,
    /// Document-topic prior; defaults to 50/K when unset.
    pub alpha: Option<f64>,
    /// Topic-word prior.
    pub beta: f64,
    pub seed: u64,
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self {
            topics: 10,
            iterations: 500,
            alpha: None,
            beta: 0.01,
            seed: 7,
        }
    }
}

/// Per-sentence topic outcome: full distribution, its argmax, and the
/// dominant-topic probability θ_s.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub distribution: Vec<f64>,
    pub dominant: usize,
    pub theta: f64,
    /// How many of the sentence's tokens the model could use. Zero means
    /// the assignment fell back to the uniform distribution.
    pub in_vocab_tokens: usize,
}

const LDA_MAGIC: &[u8; 4] = b"VLDA";
const LDA_VERSION: u32 = 1;

/// Fitted topic model: smoothed topic-word counts plus the priors and
/// provenance needed to fold new sentences in.
#[derive(Clone, Debug, PartialEq)]
pub struct LdaModel {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
    vocab_size: usize,
    vocab_fingerprint: u64,
    topic_word: Vec<u32>,
    topic_totals: Vec<u32>,
}

impl LdaModel {
    /// Collapsed Gibbs sampling over the sentences (token-index lists).
    pub fn fit(
        sentences: &[Vec<usize>],
        vocab_size: usize,
        vocab_fingerprint: u64,
        config: &LdaConfig,
    ) -> Result<LdaModel, TopicError> {
        let k = config.topics;
        if k < 2 {
            return Err(TopicError::Config(format!(
                "at least 2 topics required, got {k}"
            )));
        }
        let docs: Vec<Vec<usize>> = sentences
            .iter()
            .map(|s| {
                s.iter()
                    .copied()
                    .filter(|&w| w > UNK_INDEX && w < vocab_size)
                    .collect::<Vec<usize>>()
            })
            .filter(|s| !s.is_empty())
            .collect();
        if docs.len() < k {
            return Err(TopicError::Config(format!(
                "need at least {k} usable sentences, got {}",
                docs.len()
            )));
        }
        let alpha = config.alpha.unwrap_or(50.0 / k as f64);
        let beta = config.beta;
        let word_types = (vocab_size - 2) as f64;

        let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
        let mut doc_topic = vec![0u32; docs.len() * k];
        let mut topic_word = vec![0u32; k * vocab_size];
        let mut topic_totals = vec![0u32; k];
        let mut assignments: Vec<Vec<usize>> = docs
            .iter()
            .map(|doc| doc.iter().map(|_| rng.random_range(0..k)).collect())
            .collect();
        for (d, doc) in docs.iter().enumerate() {
            for (t, &w) in doc.iter().enumerate() {
                let z = assignments[d][t];
                doc_topic[d * k + z] += 1;
                topic_word[z * vocab_size + w] += 1;
                topic_totals[z] += 1;
            }
        }

        let mut weights = vec![0.0f64; k];
        for _ in 0..config.iterations {
            for (d, doc) in docs.iter().enumerate() {
                for (t, &w) in doc.iter().enumerate() {
                    let z = assignments[d][t];
                    doc_topic[d * k + z] -= 1;
                    topic_word[z * vocab_size + w] -= 1;
                    topic_totals[z] -= 1;

                    let mut total = 0.0;
                    for (topic, weight) in weights.iter_mut().enumerate() {
                        let dt = doc_topic[d * k + topic] as f64 + alpha;
                        let tw = topic_word[topic * vocab_size + w] as f64 + beta;
                        let tt = topic_totals[topic] as f64 + word_types * beta;
                        *weight = dt * tw / tt;
                        total += *weight;
                    }
                    let mut target = rng.random::<f64>() * total;
                    let mut chosen = k - 1;
                    for (topic, &weight) in weights.iter().enumerate() {
                        target -= weight;
                        if target <= 0.0 {
                            chosen = topic;
                            break;
                        }
                    }

                    assignments[d][t] = chosen;
                    doc_topic[d * k + chosen] += 1;
                    topic_word[chosen * vocab_size + w] += 1;
                    topic_totals[chosen] += 1;
                }
            }
        }

        Ok(LdaModel {
            topics: k,
            alpha,
            beta,
            seed: config.seed,
            vocab_size,
            vocab_fingerprint,
            topic_word,
            topic_totals,
        })
    }

    pub fn vocab_fingerprint(&self) -> u64 {
        self.vocab_fingerprint
    }

    /// Fold a sentence in: topic-word counts stay fixed, a short Gibbs
    /// pass runs over the sentence's own tokens. Deterministic for a
    /// given model and token sequence. Sentences with no usable token
    /// get the uniform distribution and dominant topic 0.
    pub fn assign(&self, tokens: &[usize]) -> TopicAssignment {
        let k = self.topics;
        let words: Vec<usize> = tokens
            .iter()
            .copied()
            .filter(|&w| w > UNK_INDEX && w < self.vocab_size)
            .collect();
        if words.is_empty() {
            return TopicAssignment {
                distribution: vec![1.0 / k as f64; k],
                dominant: 0,
                theta: 1.0 / k as f64,
                in_vocab_tokens: 0,
            };
        }

        let mut rng = ChaCha12Rng::seed_from_u64(self.seed ^ fnv_tokens(&words));
        let word_types = (self.vocab_size - 2) as f64;
        let mut local = vec![0u32; k];
        let mut z: Vec<usize> = words.iter().map(|_| rng.random_range(0..k)).collect();
        for &topic in &z {
            local[topic] += 1;
        }
        let mut weights = vec![0.0f64; k];
        for _ in 0..20 {
            for (t, &w) in words.iter().enumerate() {
                local[z[t]] -= 1;
                let mut total = 0.0;
                for (topic, weight) in weights.iter_mut().enumerate() {
                    let dt = local[topic] as f64 + self.alpha;
                    let tw = self.topic_word[topic * self.vocab_size + w] as f64 + self.beta;
                    let tt = self.topic_totals[topic] as f64 + word_types * self.beta;
                    *weight = dt * tw / tt;
                    total += *weight;
                }
                let mut target = rng.random::<f64>() * total;
                let mut chosen = k - 1;
                for (topic, &weight) in weights.iter().enumerate() {
                    target -= weight;
                    if target <= 0.0 {
                        chosen = topic;
                        break;
                    }
                }
                z[t] = chosen;
                local[chosen] += 1;
            }
        }

        let denom = words.len() as f64 + k as f64 * self.alpha;
        let distribution: Vec<f64> = local
            .iter()
            .map(|&c| (c as f64 + self.alpha) / denom)
            .collect();
        let dominant = distribution
            .iter()
            .enumerate()
            .max_by(|(i, a), (j, b)| a.partial_cmp(b).unwrap().then(j.cmp(i)))
            .map(|(i, _)| i)
            .unwrap_or(0);
        TopicAssignment {
            theta: distribution[dominant],
            distribution,
            dominant,
            in_vocab_tokens: words.len(),
        }
    }

    // ── persistence ────────────────────────────────────────────────

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TopicError> {
        let path = path.as_ref();
        let err = |message: String| TopicError::File {
            path: path.display().to_string(),
            message,
        };
        let file = File::create(path).map_err(|e| err(e.to_string()))?;
        let mut w = BufWriter::new(file);
        (|| -> std::io::Result<()> {
            w.write_all(LDA_MAGIC)?;
            w.write_all(&LDA_VERSION.to_le_bytes())?;
            w.write_all(&(self.topics as u32).to_le_bytes())?;
            w.write_all(&self.alpha.to_le_bytes())?;
            w.write_all(&self.beta.to_le_bytes())?;
            w.write_all(&self.seed.to_le_bytes())?;
            w.write_all(&(self.vocab_size as u32).to_le_bytes())?;
            w.write_all(&self.vocab_fingerprint.to_le_bytes())?;
            for &c in &self.topic_word {
                w.write_all(&c.to_le_bytes())?;
            }
            for &c in &self.topic_totals {
                w.write_all(&c.to_le_bytes())?;
            }
            Ok(())
        })()
        .map_err(|e| err(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LdaModel, TopicError> {
        let path = path.as_ref();
        let err = |message: String| TopicError::File {
            path: path.display().to_string(),
            message,
        };
        let file = File::open(path).map_err(|e| err(e.to_string()))?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| err(e.to_string()))?;
        if &magic != LDA_MAGIC {
            return Err(err("not a topic model file (bad magic)".into()));
        }
        let version = read_u32(&mut r).map_err(|e| err(e.to_string()))?;
        if version != LDA_VERSION {
            return Err(err(format!("unsupported topic model version {version}")));
        }
        let topics = read_u32(&mut r).map_err(|e| err(e.to_string()))? as usize;
        let alpha = read_f64(&mut r).map_err(|e| err(e.to_string()))?;
        let beta = read_f64(&mut r).map_err(|e| err(e.to_string()))?;
        let seed = read_u64(&mut r).map_err(|e| err(e.to_string()))?;
        let vocab_size = read_u32(&mut r).map_err(|e| err(e.to_string()))? as usize;
        let vocab_fingerprint = read_u64(&mut r).map_err(|e| err(e.to_string()))?;
        let mut topic_word = vec![0u32; topics * vocab_size];
        let mut buf = [0u8; 4];
        for c in topic_word.iter_mut() {
            r.read_exact(&mut buf).map_err(|e| err(e.to_string()))?;
            *c = u32::from_le_bytes(buf);
        }
        let mut topic_totals = vec![0u32; topics];
        for c in topic_totals.iter_mut() {
            r.read_exact(&mut buf).map_err(|e| err(e.to_string()))?;
            *c = u32::from_le_bytes(buf);
        }
        Ok(LdaModel {
            topics,
            alpha,
            beta,
            seed,
            vocab_size,
            vocab_fingerprint,
            topic_word,
            topic_totals,
        })
    }
}

fn fnv_tokens(tokens: &[usize]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &t in tokens {
        for b in (t as u64).to_le_bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x100000001b3);
        }
    }
    hash
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> std::io::Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}
