//! Claim-correctness prediction: parameter construction, the full
//! hierarchical forward pass, training, metrics, and reports.

mod config;
mod metrics;
mod report;
mod train;

pub use config::{Aggregate, ModelConfig};
pub use metrics::{classification_metrics, ClassReport, ClassificationMetrics};
pub use report::{
    AttentionExport, ClassProbabilities, DocumentReport, LevelExport, PredictionReport,
};
pub use train::{train, EpochRecord, TrainOutcome};

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::attention::{attend_level, pool, AttentionOutput, FusionMode, LevelVars, MechanismVars};
use crate::corpus::{
    index_tokens, pad_and_index, ClaimInstance, EmbeddingTable, Label, PaddedDocument, Vocabulary,
};
use crate::derive_seed;
use crate::encoder::{encode_document, DocumentEncoding, GruVars};
use crate::tensor::{
    read_tensor_section, write_tensor_section, ParamSet, Tape, Tensor, TensorError, Var,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("checkpoint error on {path}: {message}")]
    Checkpoint { path: String, message: String },
}

const MODEL_MAGIC: &[u8; 4] = b"VMDL";
const MODEL_VERSION: u32 = 1;

/// A trained (or freshly initialized) model: config, vocabulary, source
/// domain index, and every parameter tensor.
#[derive(Clone, Debug)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    /// Sorted source domains seen at training time; index 0 is reserved
    /// for unseen domains.
    pub domains: Vec<String>,
    pub params: ParamSet,
}

impl Model {
    /// Initialize parameters: uniform Glorot for weight matrices, zeros
    /// for biases, the supplied table for embeddings.
    pub fn new(
        config: ModelConfig,
        vocab: Vocabulary,
        domains: Vec<String>,
        embeddings: &EmbeddingTable,
    ) -> Result<Self, ModelError> {
        config.validate().map_err(ModelError::Input)?;
        if embeddings.dim() != config.embedding_size {
            return Err(ModelError::Input(format!(
                "embedding table dimension {} does not match configured embedding_size {}",
                embeddings.dim(),
                config.embedding_size
            )));
        }
        if embeddings.matrix().dims2().0 != vocab.len() {
            return Err(ModelError::Input(format!(
                "embedding table has {} rows for a vocabulary of {}",
                embeddings.matrix().dims2().0,
                vocab.len()
            )));
        }

        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, "params"));
        let mut params = ParamSet::new();
        params.insert("embedding", embeddings.matrix().clone());

        let e = config.embedding_size;
        let h = config.hidden_size;
        let word_width = config.word_width();
        let sent_width = config.sentence_width();
        let k = config.max_sentences;
        let l = config.max_tokens;

        let gru = |params: &mut ParamSet, prefix: &str, input: usize, rng: &mut ChaCha12Rng| {
            for gate in ["update", "reset", "cand"] {
                params.insert(format!("{prefix}.{gate}_x"), glorot(input, h, rng));
                params.insert(format!("{prefix}.{gate}_h"), glorot(h, h, rng));
                params.insert(format!("{prefix}.{gate}_b"), Tensor::zeros(1, h));
            }
        };
        gru(&mut params, "word_fwd", e, &mut rng);
        if config.word_bidirectional {
            gru(&mut params, "word_bwd", e, &mut rng);
        }
        gru(&mut params, "sent_fwd", word_width, &mut rng);
        gru(&mut params, "sent_bwd", word_width, &mut rng);

        match config.fusion {
            FusionMode::ConcatBaseline => {
                params.insert("attn_word.concat_w", glorot(e + e, 1, &mut rng));
                params.insert("attn_word.concat_b", Tensor::zeros(1, 1));
                params.insert("attn_sent.concat_w", glorot(e + word_width, 1, &mut rng));
                params.insert("attn_sent.concat_b", Tensor::zeros(1, 1));
            }
            FusionMode::Average | FusionMode::Atop => {
                for (level, hidden) in [("attn_word", word_width), ("attn_sent", sent_width)] {
                    for mech in ["claim", "title", "self"] {
                        params.insert(format!("{level}.{mech}_w"), glorot(hidden, e, &mut rng));
                        params.insert(format!("{level}.{mech}_b"), Tensor::zeros(1, e));
                    }
                    if config.self_attention_context {
                        params.insert(format!("{level}.self_ctx"), glorot(e, 1, &mut rng));
                    }
                }
                if config.fusion == FusionMode::Atop {
                    params.insert("attn_word.atop_w", glorot(3 * l, 3, &mut rng));
                    params.insert("attn_word.atop_b", Tensor::zeros(1, 3));
                    params.insert("attn_sent.atop_w", glorot(3 * k, 3, &mut rng));
                    params.insert("attn_sent.atop_b", Tensor::zeros(1, 3));
                }
            }
        }

        params.insert("classifier.w", glorot(config.doc_width(), 2, &mut rng));
        params.insert("classifier.b", Tensor::zeros(1, 2));
        if config.source_embeddings {
            params.insert(
                "source_embedding",
                glorot(domains.len() + 1, config.source_dim, &mut rng),
            );
        }

        Ok(Self {
            config,
            vocab,
            domains,
            params,
        })
    }

    pub fn domain_index(&self, domain: &str) -> usize {
        match self.domains.binary_search_by(|d| d.as_str().cmp(domain)) {
            Ok(i) => i + 1,
            Err(_) => 0,
        }
    }

    /// Index and pad one claim against this model's vocabulary and
    /// geometry.
    pub fn prepare_claim(&self, instance: &ClaimInstance) -> Result<PreparedClaim, ModelError> {
        if instance.documents.is_empty() {
            return Err(ModelError::Input(format!(
                "claim {} has no documents",
                instance.claim_id
            )));
        }
        let k = self.config.max_sentences;
        let l = self.config.max_tokens;
        let docs = instance
            .documents
            .iter()
            .map(|doc| PreparedDocument {
                padded: pad_and_index(doc, &self.vocab, k, l),
                title_ids: index_tokens(&doc.title, &self.vocab, l),
                domain_index: self.domain_index(&doc.source_domain),
                source_domain: doc.source_domain.clone(),
            })
            .collect();
        Ok(PreparedClaim {
            claim_id: instance.claim_id.clone(),
            claim_ids: index_tokens(&instance.claim_tokens, &self.vocab, l),
            label: Some(instance.label),
            docs,
        })
    }

    /// Record every parameter on a tape. With `trainable` set, parameters
    /// participate in backward (embeddings only when configured to train).
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> BoundModel {
        let mut binder = Binder {
            model: self,
            trainable,
            names: Vec::new(),
        };

        let emb = binder.leaf(tape, "embedding");
        let word_fwd = binder.gru(tape, "word_fwd");
        let word_bwd = self
            .config
            .word_bidirectional
            .then(|| binder.gru(tape, "word_bwd"));
        let sent_fwd = binder.gru(tape, "sent_fwd");
        let sent_bwd = binder.gru(tape, "sent_bwd");
        let word_attn = binder.level(tape, "attn_word");
        let sent_attn = binder.level(tape, "attn_sent");
        let cls_w = binder.leaf(tape, "classifier.w");
        let cls_b = binder.leaf(tape, "classifier.b");
        let source = self
            .config
            .source_embeddings
            .then(|| binder.leaf(tape, "source_embedding"));

        BoundModel {
            emb,
            word_fwd,
            word_bwd,
            sent_fwd,
            sent_bwd,
            word_attn,
            sent_attn,
            cls_w,
            cls_b,
            source,
            trainable: binder.names,
        }
    }

    /// Full forward pass for one claim: encode each document, attend,
    /// pool, classify, aggregate.
    pub fn forward_claim(
        &self,
        tape: &mut Tape,
        bound: &BoundModel,
        prepared: &PreparedClaim,
    ) -> Result<ClaimForward, ModelError> {
        if prepared.docs.is_empty() {
            return Err(ModelError::Input(format!(
                "claim {} has no documents",
                prepared.claim_id
            )));
        }
        let claim_guide = guide_vector(
            tape,
            bound.emb,
            &prepared.claim_ids,
            self.config.embedding_size,
        )?;
        let mut docs = Vec::with_capacity(prepared.docs.len());
        for doc in &prepared.docs {
            docs.push(self.forward_document(tape, bound, doc, claim_guide)?);
        }

        let logits = match self.config.aggregate {
            Aggregate::Logits => {
                let rows: Vec<Var> = docs.iter().map(|d| d.logits).collect();
                let stacked = tape.concat_rows(&rows)?;
                tape.mean_rows(stacked)
            }
            Aggregate::Vectors => {
                let rows: Vec<Var> = docs.iter().map(|d| d.doc_vector).collect();
                let stacked = tape.concat_rows(&rows)?;
                let mean = tape.mean_rows(stacked);
                let raw = tape.matmul(mean, bound.cls_w)?;
                tape.add(raw, bound.cls_b)?
            }
        };
        let probabilities = tape.softmax_rows(logits);
        Ok(ClaimForward {
            logits,
            probabilities,
            docs,
        })
    }

    fn forward_document(
        &self,
        tape: &mut Tape,
        bound: &BoundModel,
        doc: &PreparedDocument,
        claim_guide: Var,
    ) -> Result<DocForward, ModelError> {
        let title_guide =
            guide_vector(tape, bound.emb, &doc.title_ids, self.config.embedding_size)?;
        let encoding = encode_document(
            tape,
            &doc.padded,
            bound.emb,
            &bound.word_fwd,
            bound.word_bwd.as_ref(),
            &bound.sent_fwd,
            &bound.sent_bwd,
            &bound.word_attn,
            claim_guide,
            title_guide,
            self.config.hidden_size,
        )?;
        let sentence_mask: Vec<bool> = (0..self.config.max_sentences)
            .map(|j| j < doc.padded.real_sentences)
            .collect();
        let sentence_attention = attend_level(
            tape,
            encoding.sentence_hidden,
            encoding.sentence_vectors,
            claim_guide,
            title_guide,
            &bound.sent_attn,
            &sentence_mask,
        )?;
        let pooled = pool(tape, encoding.sentence_hidden, sentence_attention.fused)?;
        let doc_vector = match bound.source {
            Some(table) => {
                let row = tape.gather_rows(table, &[doc.domain_index])?;
                tape.concat_cols(&[pooled, row])?
            }
            None => pooled,
        };
        let raw = tape.matmul(doc_vector, bound.cls_w)?;
        let logits = tape.add(raw, bound.cls_b)?;
        Ok(DocForward {
            encoding,
            sentence_attention,
            doc_vector,
            logits,
        })
    }

    /// Cross-entropy over a batch of prepared claims (labels required).
    pub fn batch_loss(
        &self,
        tape: &mut Tape,
        bound: &BoundModel,
        batch: &[PreparedClaim],
    ) -> Result<Var, ModelError> {
        let mut rows = Vec::with_capacity(batch.len());
        let mut labels = Vec::with_capacity(batch.len());
        for claim in batch {
            let label = claim.label.ok_or_else(|| {
                ModelError::Input(format!("claim {} has no label", claim.claim_id))
            })?;
            let fwd = self.forward_claim(tape, bound, claim)?;
            rows.push(fwd.logits);
            labels.push(label.class_index());
        }
        let logits = tape.concat_rows(&rows)?;
        Ok(tape.cross_entropy_with_logits(logits, &labels)?)
    }

    /// Predict one claim, producing the serializable report with
    /// attention exports.
    pub fn predict(&self, instance: &ClaimInstance) -> Result<PredictionReport, ModelError> {
        let prepared = self.prepare_claim(instance)?;
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let forward = self.forward_claim(&mut tape, &bound, &prepared)?;

        let probs = tape.value(forward.probabilities).data();
        let (false_p, true_p) = (probs[0], probs[1]);
        let predicted = if true_p > false_p {
            Label::True
        } else {
            Label::False
        };

        let documents = prepared
            .docs
            .iter()
            .zip(&forward.docs)
            .enumerate()
            .map(|(i, (pdoc, fdoc))| DocumentReport {
                doc_index: i,
                source_domain: pdoc.source_domain.clone(),
                logits: tape.value(fdoc.logits).data().to_vec(),
                attention: export_attention(&tape, fdoc, &pdoc.padded),
            })
            .collect();

        Ok(PredictionReport {
            claim_id: prepared.claim_id.clone(),
            predicted_label: predicted.to_string(),
            probabilities: ClassProbabilities {
                true_class: true_p,
                false_class: false_p,
            },
            gold_label: prepared.label.map(|l| l.to_string()),
            documents,
        })
    }

    /// Mean cross-entropy and (gold, predicted) pairs over a labeled set.
    pub fn evaluate_loss(
        &self,
        instances: &[ClaimInstance],
    ) -> Result<(f64, Vec<(Label, Label)>), ModelError> {
        if instances.is_empty() {
            return Err(ModelError::Input("empty evaluation split".into()));
        }
        let mut total = 0.0;
        let mut pairs = Vec::with_capacity(instances.len());
        for instance in instances {
            let prepared = self.prepare_claim(instance)?;
            let mut tape = Tape::new();
            let bound = self.bind(&mut tape, false);
            let forward = self.forward_claim(&mut tape, &bound, &prepared)?;
            let loss =
                tape.cross_entropy_with_logits(forward.logits, &[instance.label.class_index()])?;
            total += tape.value(loss).data()[0];
            let probs = tape.value(forward.probabilities).data();
            let predicted = if probs[1] > probs[0] {
                Label::True
            } else {
                Label::False
            };
            pairs.push((instance.label, predicted));
        }
        Ok((total / instances.len() as f64, pairs))
    }

    // ── persistence ────────────────────────────────────────────────

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        let path = path.as_ref();
        let err = |message: String| ModelError::Checkpoint {
            path: path.display().to_string(),
            message,
        };
        let file = File::create(path).map_err(|e| err(e.to_string()))?;
        let mut w = BufWriter::new(file);
        let write = |w: &mut BufWriter<File>, bytes: &[u8]| -> Result<(), ModelError> {
            w.write_all(bytes).map_err(|e| err(e.to_string()))
        };
        write(&mut w, MODEL_MAGIC)?;
        write(&mut w, &MODEL_VERSION.to_le_bytes())?;
        let config_json = serde_json::to_vec(&self.config).expect("config serializes");
        write(&mut w, &(config_json.len() as u32).to_le_bytes())?;
        write(&mut w, &config_json)?;
        let write_strings = |w: &mut BufWriter<File>, items: &[String]| -> Result<(), ModelError> {
            w.write_all(&(items.len() as u32).to_le_bytes())
                .map_err(|e| err(e.to_string()))?;
            for s in items {
                w.write_all(&(s.len() as u32).to_le_bytes())
                    .map_err(|e| err(e.to_string()))?;
                w.write_all(s.as_bytes()).map_err(|e| err(e.to_string()))?;
            }
            Ok(())
        };
        let vocab_tokens: Vec<String> = self.vocab.tokens()[2..].to_vec();
        write_strings(&mut w, &vocab_tokens)?;
        write_strings(&mut w, &self.domains)?;
        write_tensor_section(&mut w, &self.params).map_err(|e| err(e.to_string()))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Model, ModelError> {
        let path = path.as_ref();
        let err = |message: String| ModelError::Checkpoint {
            path: path.display().to_string(),
            message,
        };
        let file = File::open(path).map_err(|e| err(e.to_string()))?;
        let mut r = BufReader::new(file);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|e| err(e.to_string()))?;
        if &magic != MODEL_MAGIC {
            return Err(err("not a model checkpoint (bad magic)".into()));
        }
        let version = read_u32(&mut r).map_err(|e| err(e.to_string()))?;
        if version != MODEL_VERSION {
            return Err(err(format!("unsupported model version {version}")));
        }
        let config_len = read_u32(&mut r).map_err(|e| err(e.to_string()))? as usize;
        let mut config_json = vec![0u8; config_len];
        r.read_exact(&mut config_json)
            .map_err(|e| err(e.to_string()))?;
        let config: ModelConfig =
            serde_json::from_slice(&config_json).map_err(|e| err(e.to_string()))?;
        let read_strings = |r: &mut BufReader<File>| -> Result<Vec<String>, ModelError> {
            let count = read_u32(r).map_err(|e| err(e.to_string()))? as usize;
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let len = read_u32(r).map_err(|e| err(e.to_string()))? as usize;
                let mut bytes = vec![0u8; len];
                r.read_exact(&mut bytes).map_err(|e| err(e.to_string()))?;
                out.push(String::from_utf8(bytes).map_err(|e| err(e.to_string()))?);
            }
            Ok(out)
        };
        let vocab_tokens = read_strings(&mut r)?;
        let domains = read_strings(&mut r)?;
        let params = read_tensor_section(&mut r).map_err(|e| err(e.to_string()))?;
        Ok(Model {
            config,
            vocab: Vocabulary::from_tokens(vocab_tokens.into_iter()),
            domains,
            params,
        })
    }
}

fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

struct Binder<'a> {
    model: &'a Model,
    trainable: bool,
    names: Vec<(String, Var)>,
}

impl Binder<'_> {
    fn leaf(&mut self, tape: &mut Tape, name: &str) -> Var {
        let tensor = self
            .model
            .params
            .get(name)
            .unwrap_or_else(|| panic!("parameter {name} exists"))
            .clone();
        let train_this =
            self.trainable && (name != "embedding" || self.model.config.trainable_embeddings);
        if train_this {
            let var = tape.leaf(tensor.with_grad());
            self.names.push((name.to_string(), var));
            var
        } else {
            tape.constant(tensor)
        }
    }

    fn gru(&mut self, tape: &mut Tape, prefix: &str) -> GruVars {
        GruVars {
            w_update: self.leaf(tape, &format!("{prefix}.update_x")),
            u_update: self.leaf(tape, &format!("{prefix}.update_h")),
            b_update: self.leaf(tape, &format!("{prefix}.update_b")),
            w_reset: self.leaf(tape, &format!("{prefix}.reset_x")),
            u_reset: self.leaf(tape, &format!("{prefix}.reset_h")),
            b_reset: self.leaf(tape, &format!("{prefix}.reset_b")),
            w_cand: self.leaf(tape, &format!("{prefix}.cand_x")),
            u_cand: self.leaf(tape, &format!("{prefix}.cand_h")),
            b_cand: self.leaf(tape, &format!("{prefix}.cand_b")),
        }
    }

    fn mechanism(&mut self, tape: &mut Tape, prefix: &str, name: &str, ctx: bool) -> MechanismVars {
        MechanismVars {
            w: self.leaf(tape, &format!("{prefix}.{name}_w")),
            b: self.leaf(tape, &format!("{prefix}.{name}_b")),
            ctx: if ctx {
                Some(self.leaf(tape, &format!("{prefix}.self_ctx")))
            } else {
                None
            },
        }
    }

    fn level(&mut self, tape: &mut Tape, prefix: &str) -> LevelVars {
        match self.model.config.fusion {
            FusionMode::ConcatBaseline => LevelVars::ConcatBaseline {
                w: self.leaf(tape, &format!("{prefix}.concat_w")),
                b: self.leaf(tape, &format!("{prefix}.concat_b")),
            },
            mode => {
                let claim = self.mechanism(tape, prefix, "claim", false);
                let title = self.mechanism(tape, prefix, "title", false);
                let self_attn = self.mechanism(
                    tape,
                    prefix,
                    "self",
                    self.model.config.self_attention_context,
                );
                let atop = if mode == FusionMode::Atop {
                    Some((
                        self.leaf(tape, &format!("{prefix}.atop_w")),
                        self.leaf(tape, &format!("{prefix}.atop_b")),
                    ))
                } else {
                    None
                };
                LevelVars::Guided {
                    claim,
                    title,
                    self_attn,
                    atop,
                }
            }
        }
    }
}

/// Everything bound onto one tape for a forward pass.
pub struct BoundModel {
    pub emb: Var,
    pub word_fwd: GruVars,
    pub word_bwd: Option<GruVars>,
    pub sent_fwd: GruVars,
    pub sent_bwd: GruVars,
    pub word_attn: LevelVars,
    pub sent_attn: LevelVars,
    pub cls_w: Var,
    pub cls_b: Var,
    pub source: Option<Var>,
    /// Trainable (name, var) pairs for gradient extraction.
    pub trainable: Vec<(String, Var)>,
}

#[derive(Clone, Debug)]
pub struct PreparedDocument {
    pub padded: PaddedDocument,
    pub title_ids: Vec<usize>,
    pub domain_index: usize,
    pub source_domain: String,
}

#[derive(Clone, Debug)]
pub struct PreparedClaim {
    pub claim_id: String,
    pub claim_ids: Vec<usize>,
    pub label: Option<Label>,
    pub docs: Vec<PreparedDocument>,
}

pub struct DocForward {
    pub encoding: DocumentEncoding,
    pub sentence_attention: AttentionOutput,
    pub doc_vector: Var,
    pub logits: Var,
}

pub struct ClaimForward {
    pub logits: Var,
    pub probabilities: Var,
    pub docs: Vec<DocForward>,
}

/// Sum of the word embeddings of a token-id sequence, `1×E`; zero when
/// the sequence is empty.
fn guide_vector(
    tape: &mut Tape,
    embeddings: Var,
    ids: &[usize],
    dim: usize,
) -> Result<Var, TensorError> {
    if ids.is_empty() {
        return Ok(tape.constant(Tensor::zeros(1, dim)));
    }
    let rows = tape.gather_rows(embeddings, ids)?;
    Ok(tape.sum_rows(rows))
}

fn glorot(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> Tensor {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data: Vec<f64> = (0..rows * cols)
        .map(|_| rng.random_range(-limit..limit))
        .collect();
    Tensor::new(vec![rows, cols], data).expect("glorot shape")
}

fn export_level(tape: &Tape, output: &AttentionOutput, real: usize) -> LevelExport {
    let column = |v: Var| -> Vec<f64> { tape.value(v).data()[..real].to_vec() };
    let (claim, title, self_attention) = match output.parts {
        Some((c, t, s)) => (Some(column(c)), Some(column(t)), Some(column(s))),
        None => (None, None, None),
    };
    LevelExport {
        claim,
        title,
        self_attention,
        fused: column(output.fused),
        beta: output.beta.map(|b| tape.value(b).data().to_vec()),
    }
}

fn export_attention(tape: &Tape, doc: &DocForward, padded: &PaddedDocument) -> AttentionExport {
    let sentence = export_level(tape, &doc.sentence_attention, padded.real_sentences);
    let words = doc
        .encoding
        .word_attention
        .iter()
        .take(padded.real_sentences)
        .enumerate()
        .map(|(j, attention)| {
            let attention = attention.as_ref().expect("real sentence has attention");
            export_level(tape, attention, padded.real_tokens[j])
        })
        .collect();
    AttentionExport { sentence, words }
}
