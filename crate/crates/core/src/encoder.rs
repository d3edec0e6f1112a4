//! Hierarchical sequence encoding: a GRU over the words of each sentence
//! and a bidirectional GRU over attention-pooled sentence vectors.
//!
//! Padding never enters a recurrence. Only real tokens are stepped
//! through, and padded grid positions hold zero vectors in the outputs,
//! so appending padding cannot change a document's representation.

use crate::attention::{attend_level, pool, AttentionOutput, LevelVars};
use crate::corpus::PaddedDocument;
use crate::tensor::{Tape, Tensor, TensorError, Var};

/// Bound parameters of one GRU cell: update gate `z`, reset gate `r`,
/// and candidate state.
#[derive(Clone, Copy, Debug)]
pub struct GruVars {
    pub w_update: Var,
    pub u_update: Var,
    pub b_update: Var,
    pub w_reset: Var,
    pub u_reset: Var,
    pub b_reset: Var,
    pub w_cand: Var,
    pub u_cand: Var,
    pub b_cand: Var,
}

/// One GRU step:
/// `z = σ(xW_z + hU_z + b_z)`, `r = σ(xW_r + hU_r + b_r)`,
/// `h̃ = tanh(xW_h + (r⊙h)U_h + b_h)`, `h' = (1−z)⊙h + z⊙h̃`.
///
/// The candidate is tanh-bounded and mixed convexly with the previous
/// state, so every coordinate stays inside (−1, 1).
pub fn gru_step(tape: &mut Tape, cell: &GruVars, x: Var, h: Var) -> Result<Var, TensorError> {
    let zx = tape.matmul(x, cell.w_update)?;
    let zh = tape.matmul(h, cell.u_update)?;
    let z_raw = tape.add(zx, zh)?;
    let z_raw = tape.add(z_raw, cell.b_update)?;
    let z = tape.sigmoid(z_raw);

    let rx = tape.matmul(x, cell.w_reset)?;
    let rh = tape.matmul(h, cell.u_reset)?;
    let r_raw = tape.add(rx, rh)?;
    let r_raw = tape.add(r_raw, cell.b_reset)?;
    let r = tape.sigmoid(r_raw);

    let gated = tape.mul(r, h)?;
    let cx = tape.matmul(x, cell.w_cand)?;
    let ch = tape.matmul(gated, cell.u_cand)?;
    let c_raw = tape.add(cx, ch)?;
    let c_raw = tape.add(c_raw, cell.b_cand)?;
    let candidate = tape.tanh(c_raw);

    let keep = tape.affine(z, -1.0, 1.0);
    let kept = tape.mul(keep, h)?;
    let updated = tape.mul(z, candidate)?;
    tape.add(kept, updated)
}

/// Run a (bi)directional GRU over a sequence of `1×I` inputs, starting
/// from zero state. Returns one `1×H` (or `1×2H` when bidirectional)
/// state per input position.
pub fn encode_sequence(
    tape: &mut Tape,
    forward: &GruVars,
    backward: Option<&GruVars>,
    inputs: &[Var],
    hidden_size: usize,
) -> Result<Vec<Var>, TensorError> {
    let zero = tape.constant(Tensor::zeros(1, hidden_size));
    let mut fwd_states = Vec::with_capacity(inputs.len());
    let mut h = zero;
    for &x in inputs {
        h = gru_step(tape, forward, x, h)?;
        fwd_states.push(h);
    }
    let Some(backward) = backward else {
        return Ok(fwd_states);
    };
    let mut bwd_states = vec![zero; inputs.len()];
    let mut h = zero;
    for (i, &x) in inputs.iter().enumerate().rev() {
        h = gru_step(tape, backward, x, h)?;
        bwd_states[i] = h;
    }
    fwd_states
        .into_iter()
        .zip(bwd_states)
        .map(|(f, b)| tape.concat_cols(&[f, b]))
        .collect()
}

/// Encode the real tokens of one sentence. `token_ids` must already be
/// truncated to the real length; returns one word state per token.
pub fn encode_sentence(
    tape: &mut Tape,
    forward: &GruVars,
    backward: Option<&GruVars>,
    embeddings: Var,
    token_ids: &[usize],
    hidden_size: usize,
) -> Result<Vec<Var>, TensorError> {
    let sentence = tape.gather_rows(embeddings, token_ids)?;
    let inputs: Result<Vec<Var>, _> = (0..token_ids.len())
        .map(|t| tape.gather_rows(sentence, &[t]))
        .collect();
    encode_sequence(tape, forward, backward, &inputs?, hidden_size)
}

/// Everything the rest of the model needs from one encoded document.
pub struct DocumentEncoding {
    /// Per sentence (`k` entries): `l×Hw` word states, zero rows at
    /// padded positions.
    pub word_hidden: Vec<Var>,
    /// Word-level attention per sentence; `None` for padded sentences.
    pub word_attention: Vec<Option<AttentionOutput>>,
    /// `k×Hw` attention-pooled sentence vectors, zero rows when padded.
    pub sentence_vectors: Var,
    /// `k×Hs` bidirectional sentence states, zero rows when padded.
    pub sentence_hidden: Var,
}

/// Encode a padded document: word GRU per sentence, word-level fused
/// attention pooling each sentence into its vector, and the sentence
/// GRU over those vectors.
#[allow(clippy::too_many_arguments)]
pub fn encode_document(
    tape: &mut Tape,
    padded: &PaddedDocument,
    embeddings: Var,
    word_forward: &GruVars,
    word_backward: Option<&GruVars>,
    sent_forward: &GruVars,
    sent_backward: &GruVars,
    word_attention_vars: &LevelVars,
    claim_guide: Var,
    title_guide: Var,
    hidden_size: usize,
) -> Result<DocumentEncoding, TensorError> {
    let k = padded.grid.len();
    let l = padded.grid.first().map_or(0, |row| row.len());
    let word_width = if word_backward.is_some() {
        2 * hidden_size
    } else {
        hidden_size
    };

    let zero_word_row = tape.constant(Tensor::zeros(1, word_width));
    let mut word_hidden = Vec::with_capacity(k);
    let mut word_attention = Vec::with_capacity(k);
    let mut sentence_rows = Vec::with_capacity(padded.real_sentences);

    for j in 0..k {
        if j >= padded.real_sentences {
            let rows = vec![zero_word_row; l];
            word_hidden.push(tape.concat_rows(&rows)?);
            word_attention.push(None);
            continue;
        }
        let n_real = padded.real_tokens[j];
        let states = encode_sentence(
            tape,
            word_forward,
            word_backward,
            embeddings,
            &padded.grid[j][..n_real],
            hidden_size,
        )?;
        let mut rows = states;
        rows.resize(l, zero_word_row);
        let hidden = tape.concat_rows(&rows)?;

        let positions = tape.gather_rows(embeddings, &padded.grid[j])?;
        let attention = attend_level(
            tape,
            hidden,
            positions,
            claim_guide,
            title_guide,
            word_attention_vars,
            &padded.mask[j],
        )?;
        let pooled = pool(tape, hidden, attention.fused)?;

        word_hidden.push(hidden);
        word_attention.push(Some(attention));
        sentence_rows.push(pooled);
    }

    let sentence_states = encode_sequence(
        tape,
        sent_forward,
        Some(sent_backward),
        &sentence_rows,
        hidden_size,
    )?;

    let zero_sentence_vec = tape.constant(Tensor::zeros(1, word_width));
    let zero_sentence_state = tape.constant(Tensor::zeros(1, 2 * hidden_size));
    let mut vector_rows = sentence_rows;
    vector_rows.resize(k, zero_sentence_vec);
    let mut state_rows = sentence_states;
    state_rows.resize(k, zero_sentence_state);

    Ok(DocumentEncoding {
        word_hidden,
        word_attention,
        sentence_vectors: tape.concat_rows(&vector_rows)?,
        sentence_hidden: tape.concat_rows(&state_rows)?,
    })
}
