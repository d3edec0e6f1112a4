//! Mini-batch training with gradient clipping and early stopping on
//! validation loss.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use super::{classification_metrics, Model, ModelConfig, ModelError, PreparedClaim};
use crate::corpus::{ClaimInstance, EmbeddingTable, Vocabulary, PAD_INDEX};
use crate::derive_seed;
use crate::tensor::{clip_and_step, OptimizerState, Tape};

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_macro_f1: f64,
}

pub struct TrainOutcome {
    /// Model with the best-validation parameters restored.
    pub model: Model,
    pub log: Vec<EpochRecord>,
    pub stopped_early: bool,
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

/// Train a fresh model on the given splits. The vocabulary and embedding
/// table are built by the caller (from the training split or a vectors
/// file); source domains are collected from the training documents.
pub fn train(
    train_set: &[ClaimInstance],
    val_set: &[ClaimInstance],
    vocab: Vocabulary,
    embeddings: &EmbeddingTable,
    config: ModelConfig,
) -> Result<TrainOutcome, ModelError> {
    if train_set.is_empty() {
        return Err(ModelError::Input("empty training split".into()));
    }
    if val_set.is_empty() {
        return Err(ModelError::Input("empty validation split".into()));
    }

    let mut domains: Vec<String> = train_set
        .iter()
        .flat_map(|c| c.documents.iter().map(|d| d.source_domain.clone()))
        .collect();
    domains.sort();
    domains.dedup();

    let mut model = Model::new(config, vocab, domains, embeddings)?;
    let config = model.config.clone();

    let prepared: Vec<PreparedClaim> = train_set
        .iter()
        .map(|c| model.prepare_claim(c))
        .collect::<Result<_, _>>()?;

    let mut optimizer =
        OptimizerState::new(config.optimizer, config.learning_rate, config.clip_norm)
            .with_clip_mode(config.clip_mode);
    let mut shuffle_rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, "shuffle"));

    let embedding_cols = config.embedding_size;
    let mut log = Vec::new();
    let mut best_val_loss = f64::INFINITY;
    let mut best_params = model.params.clone();
    let mut best_epoch = 0;
    let mut stalled = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.max_epochs {
        let mut order: Vec<usize> = (0..prepared.len()).collect();
        order.shuffle(&mut shuffle_rng);

        let mut epoch_loss = 0.0;
        for batch_indices in order.chunks(config.batch_size) {
            let batch: Vec<PreparedClaim> =
                batch_indices.iter().map(|&i| prepared[i].clone()).collect();
            let mut tape = Tape::new();
            let bound = model.bind(&mut tape, true);
            let loss = model.batch_loss(&mut tape, &bound, &batch)?;
            epoch_loss += tape.value(loss).data()[0] * batch.len() as f64;

            let grads = tape.backward(loss);
            let mut grad_map: BTreeMap<String, Vec<f64>> = BTreeMap::new();
            for (name, var) in &bound.trainable {
                if let Some(g) = grads.get(*var) {
                    let mut g = g.to_vec();
                    if name == "embedding" {
                        // PAD row stays zero
                        for x in
                            &mut g[PAD_INDEX * embedding_cols..(PAD_INDEX + 1) * embedding_cols]
                        {
                            *x = 0.0;
                        }
                    }
                    grad_map.insert(name.clone(), g);
                }
            }
            clip_and_step(&mut model.params, grad_map, &mut optimizer)?;
        }
        let train_loss = epoch_loss / prepared.len() as f64;

        let (val_loss, pairs) = model.evaluate_loss(val_set)?;
        let val_macro_f1 = classification_metrics(&pairs).macro_f1;
        log.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            val_macro_f1,
        });

        if best_val_loss - val_loss >= config.min_delta {
            best_val_loss = val_loss;
            best_params = model.params.clone();
            best_epoch = epoch;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= config.patience {
                stopped_early = true;
                break;
            }
        }
    }

    model.params = best_params;
    Ok(TrainOutcome {
        model,
        log,
        stopped_early,
        best_epoch,
        best_val_loss,
    })
}
