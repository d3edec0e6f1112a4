//! Claim-driven, title-driven, and self-attention at word and sentence
//! level, plus the two fusion schemes (average and attention-on-top) and
//! the concatenation baseline they replace.
//!
//! Every mechanism produces a probability column over positions: scores of
//! masked positions are forced to negative infinity before the softmax, so
//! padding receives exactly zero weight. Guide vectors (summed claim or
//! title embeddings) live in embedding space; the score projection maps
//! hidden states into that space before the dot product.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::tensor::{Tape, TensorError, Var};

/// How the three attention mechanisms are combined, or whether the
/// concatenation baseline replaces them entirely.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    Average,
    Atop,
    ConcatBaseline,
}

impl FusionMode {
    pub const ALL: [FusionMode; 3] = [
        FusionMode::Average,
        FusionMode::Atop,
        FusionMode::ConcatBaseline,
    ];
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            FusionMode::Average => "average",
            FusionMode::Atop => "atop",
            FusionMode::ConcatBaseline => "concat_baseline",
        };
        write!(f, "{name}")
    }
}

impl FromStr for FusionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "average" => Ok(FusionMode::Average),
            "atop" => Ok(FusionMode::Atop),
            "concat_baseline" => Ok(FusionMode::ConcatBaseline),
            other => Err(format!(
                "unknown fusion mode {other:?}; valid modes: average, atop, concat_baseline"
            )),
        }
    }
}

/// Parameters of one scoring mechanism: the hidden→embedding projection
/// and its bias, plus the optional learned context vector for the
/// self-attention variant.
#[derive(Clone, Copy, Debug)]
pub struct MechanismVars {
    pub w: Var,
    pub b: Var,
    pub ctx: Option<Var>,
}

/// Bound attention parameters for one level (word or sentence).
#[derive(Clone, Debug)]
pub enum LevelVars {
    Guided {
        claim: MechanismVars,
        title: MechanismVars,
        self_attn: MechanismVars,
        /// `(w, b)` of the fusion scorer; `None` means average fusion.
        atop: Option<(Var, Var)>,
    },
    ConcatBaseline {
        w: Var,
        b: Var,
    },
}

/// Attention weights produced for one level.
#[derive(Clone, Debug)]
pub struct AttentionOutput {
    /// The three mechanism outputs (claim, title, self), absent in
    /// baseline mode.
    pub parts: Option<(Var, Var, Var)>,
    /// Fused probability column over positions.
    pub fused: Var,
    /// Atop mixing coefficients, a `1×3` probability row.
    pub beta: Option<Var>,
}

/// Guide-scored attention: `score_p = tanh(h_p W + b) · guide`, masked
/// softmax over positions. `hidden` is `n×H`, `guide` is `1×E`, `w` maps
/// `H → E`.
pub fn guided_attention(
    tape: &mut Tape,
    hidden: Var,
    guide: Var,
    w: Var,
    b: Var,
    mask: &[bool],
) -> Result<Var, TensorError> {
    let projected = tape.matmul(hidden, w)?;
    let shifted = tape.add_row(projected, b)?;
    let u = tape.tanh(shifted);
    let guide_col = tape.transpose(guide);
    let scores = tape.matmul(u, guide_col)?;
    tape.masked_softmax_col(scores, mask)
}

/// Self-attention: `score_p` is the sum of the components of
/// `tanh(h_p W + b)`, or its dot with a learned context vector when one
/// is supplied.
pub fn self_attention(
    tape: &mut Tape,
    hidden: Var,
    mech: &MechanismVars,
    mask: &[bool],
) -> Result<Var, TensorError> {
    let projected = tape.matmul(hidden, mech.w)?;
    let shifted = tape.add_row(projected, mech.b)?;
    let u = tape.tanh(shifted);
    let scores = match mech.ctx {
        Some(ctx) => tape.matmul(u, ctx)?,
        None => tape.sum_cols(u),
    };
    tape.masked_softmax_col(scores, mask)
}

/// The concatenation baseline: the guide is repeated and concatenated
/// with each position's representation, then scored by a dense layer.
/// `positions` is `n×D`, `w` maps `E+D → 1`.
pub fn concat_baseline_attention(
    tape: &mut Tape,
    positions: Var,
    guide: Var,
    w: Var,
    b: Var,
    mask: &[bool],
) -> Result<Var, TensorError> {
    let (n, _) = tape.value(positions).dims2();
    let tiled = tape.repeat_rows(guide, n)?;
    let joined = tape.concat_cols(&[tiled, positions])?;
    let raw = tape.matmul(joined, w)?;
    let shifted = tape.add_row(raw, b)?;
    let scores = tape.tanh(shifted);
    tape.masked_softmax_col(scores, mask)
}

/// Elementwise mean of three probability columns of equal length.
pub fn fuse_average(tape: &mut Tape, a: Var, b: Var, c: Var) -> Result<Var, TensorError> {
    let ab = tape.add(a, b)?;
    let abc = tape.add(ab, c)?;
    Ok(tape.affine(abc, 1.0 / 3.0, 0.0))
}

/// Attention on top of attention: score the concatenated weight vectors,
/// softmax into mixing coefficients β, and blend. Returns the fused
/// column and β (`1×3`).
pub fn fuse_atop(
    tape: &mut Tape,
    a: Var,
    b: Var,
    c: Var,
    w: Var,
    bias: Var,
) -> Result<(Var, Var), TensorError> {
    let rows = [tape.transpose(a), tape.transpose(b), tape.transpose(c)];
    let concatenated = tape.concat_cols(&rows)?;
    let raw = tape.matmul(concatenated, w)?;
    let shifted = tape.add(raw, bias)?;
    let u = tape.tanh(shifted);
    let beta = tape.softmax_rows(u);
    let stacked = tape.concat_rows(&rows)?;
    let fused_row = tape.matmul(beta, stacked)?;
    let fused = tape.transpose(fused_row);
    Ok((fused, beta))
}

/// Weighted sum of hidden rows: `weightsᵀ · hidden`, a `1×H` row.
pub fn pool(tape: &mut Tape, hidden: Var, weights: Var) -> Result<Var, TensorError> {
    let row = tape.transpose(weights);
    tape.matmul(row, hidden)
}

/// Run one level's attention end to end: the three mechanisms plus
/// fusion, or the baseline. `baseline_positions` holds the per-position
/// representations Eq-style concatenation scores against (embeddings at
/// the word level, pooled sentence vectors at the sentence level).
pub fn attend_level(
    tape: &mut Tape,
    hidden: Var,
    baseline_positions: Var,
    claim_guide: Var,
    title_guide: Var,
    vars: &LevelVars,
    mask: &[bool],
) -> Result<AttentionOutput, TensorError> {
    match vars {
        LevelVars::ConcatBaseline { w, b } => {
            let fused =
                concat_baseline_attention(tape, baseline_positions, claim_guide, *w, *b, mask)?;
            Ok(AttentionOutput {
                parts: None,
                fused,
                beta: None,
            })
        }
        LevelVars::Guided {
            claim,
            title,
            self_attn,
            atop,
        } => {
            let alpha_claim = guided_attention(tape, hidden, claim_guide, claim.w, claim.b, mask)?;
            let alpha_title = guided_attention(tape, hidden, title_guide, title.w, title.b, mask)?;
            let alpha_self = self_attention(tape, hidden, self_attn, mask)?;
            let (fused, beta) = match atop {
                None => (
                    fuse_average(tape, alpha_claim, alpha_title, alpha_self)?,
                    None,
                ),
                Some((w, b)) => {
                    let (fused, beta) =
                        fuse_atop(tape, alpha_claim, alpha_title, alpha_self, *w, *b)?;
                    (fused, Some(beta))
                }
            };
            Ok(AttentionOutput {
                parts: Some((alpha_claim, alpha_title, alpha_self)),
                fused,
                beta,
            })
        }
    }
}
