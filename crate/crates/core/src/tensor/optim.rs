//! Named parameter storage and the gradient-clipping optimizer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Tensor, TensorError};

/// Ordered collection of named parameter tensors. Iteration order is
/// insertion order, which keeps checkpoints and gradient norms stable
/// across runs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    entries: Vec<(String, Tensor)>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) {
        let name = name.into();
        debug_assert!(self.get(&name).is_none(), "duplicate parameter name {name}");
        self.entries.push((name, tensor));
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.entries
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClipMode {
    /// Scale all gradients so their global L2 norm is at most the limit.
    GlobalNorm,
    /// Clamp each gradient entry into `[-limit, limit]`.
    Value,
}

/// Optimizer state: learning rate, clip limit, and per-parameter moment
/// buffers (Adam only).
#[derive(Clone, Debug)]
pub struct OptimizerState {
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub kind: OptimizerKind,
    pub clip_mode: ClipMode,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first_moment: BTreeMap<String, Vec<f64>>,
    second_moment: BTreeMap<String, Vec<f64>>,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind, learning_rate: f64, clip_norm: f64) -> Self {
        Self {
            learning_rate,
            clip_norm,
            kind,
            clip_mode: ClipMode::GlobalNorm,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first_moment: BTreeMap::new(),
            second_moment: BTreeMap::new(),
        }
    }

    pub fn with_clip_mode(mut self, mode: ClipMode) -> Self {
        self.clip_mode = mode;
        self
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }
}

/// Global L2 norm across all gradient buffers.
pub fn global_norm(grads: &BTreeMap<String, Vec<f64>>) -> f64 {
    grads
        .values()
        .flat_map(|g| g.iter())
        .map(|&x| x * x)
        .sum::<f64>()
        .sqrt()
}

/// Clip gradients per the optimizer's clip mode, then apply one update
/// step to every parameter that has a gradient.
pub fn clip_and_step(
    params: &mut ParamSet,
    mut grads: BTreeMap<String, Vec<f64>>,
    state: &mut OptimizerState,
) -> Result<(), TensorError> {
    for (name, g) in &grads {
        match params.get(name) {
            None => {
                return Err(TensorError::Input(format!(
                    "gradient for unknown parameter {name}"
                )))
            }
            Some(p) if p.numel() != g.len() => {
                return Err(TensorError::Dimension(format!(
                    "gradient size {} does not match parameter {name} ({})",
                    g.len(),
                    p.numel()
                )))
            }
            _ => {}
        }
        if !g.iter().all(|x| x.is_finite()) {
            return Err(TensorError::NonFinite {
                op: "clip_and_step",
            });
        }
    }

    match state.clip_mode {
        ClipMode::GlobalNorm => {
            let norm = global_norm(&grads);
            if norm > state.clip_norm {
                let scale = state.clip_norm / norm;
                for g in grads.values_mut() {
                    for x in g.iter_mut() {
                        *x *= scale;
                    }
                }
            }
        }
        ClipMode::Value => {
            let limit = state.clip_norm;
            for g in grads.values_mut() {
                for x in g.iter_mut() {
                    *x = x.clamp(-limit, limit);
                }
            }
        }
    }

    state.step += 1;
    let t = state.step;
    for (name, g) in &grads {
        let param = params.get_mut(name).expect("validated above");
        match state.kind {
            OptimizerKind::Sgd => {
                for (p, &gi) in param.data_mut().iter_mut().zip(g) {
                    *p -= state.learning_rate * gi;
                }
            }
            OptimizerKind::Adam => {
                let m = state
                    .first_moment
                    .entry(name.clone())
                    .or_insert_with(|| vec![0.0; g.len()]);
                let v = state
                    .second_moment
                    .entry(name.clone())
                    .or_insert_with(|| vec![0.0; g.len()]);
                let b1 = state.beta1;
                let b2 = state.beta2;
                let bias1 = 1.0 - b1.powi(t as i32);
                let bias2 = 1.0 - b2.powi(t as i32);
                for ((p, &gi), (mi, vi)) in param
                    .data_mut()
                    .iter_mut()
                    .zip(g)
                    .zip(m.iter_mut().zip(v.iter_mut()))
                {
                    *mi = b1 * *mi + (1.0 - b1) * gi;
                    *vi = b2 * *vi + (1.0 - b2) * gi * gi;
                    let m_hat = *mi / bias1;
                    let v_hat = *vi / bias2;
                    *p -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
                }
            }
        }
    }
    Ok(())
}
