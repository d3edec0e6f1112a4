//! Encoder checks against an independent scalar-loop GRU reference, plus
//! masking and boundedness properties.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use veracity_core::attention::{LevelVars, MechanismVars};
use veracity_core::corpus::{pad_and_index, EvidenceDocument, Vocabulary};
use veracity_core::encoder::{
    encode_document, encode_sentence, encode_sequence, gru_step, GruVars,
};
use veracity_core::tensor::{Tape, Tensor, Var};

/// Plain-loop GRU over `Vec<f64>`, written independently of the tape.
struct ScalarGru {
    input: usize,
    hidden: usize,
    // row-major [input][hidden] and [hidden][hidden]
    wz: Vec<f64>,
    uz: Vec<f64>,
    bz: Vec<f64>,
    wr: Vec<f64>,
    ur: Vec<f64>,
    br: Vec<f64>,
    wc: Vec<f64>,
    uc: Vec<f64>,
    bc: Vec<f64>,
}

impl ScalarGru {
    fn step(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let (i_n, h_n) = (self.input, self.hidden);
        let gate = |w: &[f64], u: &[f64], b: &[f64], squash: fn(f64) -> f64, gated: &[f64]| {
            (0..h_n)
                .map(|j| {
                    let mut s = b[j];
                    for i in 0..i_n {
                        s += x[i] * w[i * h_n + j];
                    }
                    for i in 0..h_n {
                        s += gated[i] * u[i * h_n + j];
                    }
                    squash(s)
                })
                .collect::<Vec<f64>>()
        };
        let sigmoid = |v: f64| 1.0 / (1.0 + (-v).exp());
        let z = gate(&self.wz, &self.uz, &self.bz, sigmoid, h);
        let r = gate(&self.wr, &self.ur, &self.br, sigmoid, h);
        let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
        let c = gate(&self.wc, &self.uc, &self.bc, f64::tanh, &rh);
        (0..h_n)
            .map(|j| (1.0 - z[j]) * h[j] + z[j] * c[j])
            .collect()
    }

    fn run(&self, inputs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut h = vec![0.0; self.hidden];
        let mut out = Vec::new();
        for x in inputs {
            h = self.step(x, &h);
            out.push(h.clone());
        }
        out
    }
}

fn random_cell(
    tape: &mut Tape,
    input: usize,
    hidden: usize,
    rng: &mut ChaCha12Rng,
) -> (GruVars, ScalarGru) {
    let mut mat = |rows: usize, cols: usize| -> (Var, Vec<f64>) {
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(-0.8..0.8))
            .collect();
        let var = tape.constant(Tensor::new(vec![rows, cols], data.clone()).unwrap());
        (var, data)
    };
    let (w_update, wz) = mat(input, hidden);
    let (u_update, uz) = mat(hidden, hidden);
    let (b_update, bz) = mat(1, hidden);
    let (w_reset, wr) = mat(input, hidden);
    let (u_reset, ur) = mat(hidden, hidden);
    let (b_reset, br) = mat(1, hidden);
    let (w_cand, wc) = mat(input, hidden);
    let (u_cand, uc) = mat(hidden, hidden);
    let (b_cand, bc) = mat(1, hidden);
    (
        GruVars {
            w_update,
            u_update,
            b_update,
            w_reset,
            u_reset,
            b_reset,
            w_cand,
            u_cand,
            b_cand,
        },
        ScalarGru {
            input,
            hidden,
            wz,
            uz,
            bz,
            wr,
            ur,
            br,
            wc,
            uc,
            bc,
        },
    )
}

fn zero_cell(tape: &mut Tape, input: usize, hidden: usize) -> GruVars {
    let mut zero = |rows, cols| tape.constant(Tensor::zeros(rows, cols));
    GruVars {
        w_update: zero(input, hidden),
        u_update: zero(hidden, hidden),
        b_update: zero(1, hidden),
        w_reset: zero(input, hidden),
        u_reset: zero(hidden, hidden),
        b_reset: zero(1, hidden),
        w_cand: zero(input, hidden),
        u_cand: zero(hidden, hidden),
        b_cand: zero(1, hidden),
    }
}

#[test]
fn zero_weights_zero_state_stay_zero() {
    let mut tape = Tape::new();
    let cell = zero_cell(&mut tape, 3, 4);
    let x = tape.constant(Tensor::new(vec![1, 3], vec![0.7, -0.2, 0.1]).unwrap());
    let h = tape.constant(Tensor::zeros(1, 4));
    let next = gru_step(&mut tape, &cell, x, h).unwrap();
    assert_eq!(tape.value(next).data(), &[0.0; 4]);
}

#[test]
fn closed_update_gate_keeps_previous_state() {
    let mut rng = ChaCha12Rng::seed_from_u64(2);
    let mut tape = Tape::new();
    let (mut cell, _) = random_cell(&mut tape, 3, 4, &mut rng);
    // force z = σ(−1000) = 0 exactly
    cell.w_update = tape.constant(Tensor::zeros(3, 4));
    cell.u_update = tape.constant(Tensor::zeros(4, 4));
    cell.b_update = tape.constant(Tensor::new(vec![1, 4], vec![-1e3; 4]).unwrap());
    let x = tape.constant(Tensor::new(vec![1, 3], vec![0.3, 0.9, -0.5]).unwrap());
    let h_prev = Tensor::new(vec![1, 4], vec![0.1, -0.2, 0.3, -0.4]).unwrap();
    let h = tape.constant(h_prev.clone());
    let next = gru_step(&mut tape, &cell, x, h).unwrap();
    assert_eq!(tape.value(next).data(), h_prev.data());
}

#[test]
fn two_steps_match_scalar_reference() {
    let mut rng = ChaCha12Rng::seed_from_u64(3);
    let mut tape = Tape::new();
    let (cell, oracle) = random_cell(&mut tape, 4, 3, &mut rng);
    let inputs: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();

    let expected = oracle.run(&inputs);

    let mut h = tape.constant(Tensor::zeros(1, 3));
    for (t, x) in inputs.iter().enumerate() {
        let xv = tape.constant(Tensor::new(vec![1, 4], x.clone()).unwrap());
        h = gru_step(&mut tape, &cell, xv, h).unwrap();
        for (got, want) in tape.value(h).data().iter().zip(&expected[t]) {
            assert!((got - want).abs() < 1e-12, "step {t}: {got} vs {want}");
        }
    }
}

#[test]
fn bidirectional_sentence_matches_composed_oracles() {
    let mut rng = ChaCha12Rng::seed_from_u64(5);
    let mut tape = Tape::new();
    let (fwd, fwd_oracle) = random_cell(&mut tape, 3, 2, &mut rng);
    let (bwd, bwd_oracle) = random_cell(&mut tape, 3, 2, &mut rng);

    let embeddings: Vec<Vec<f64>> = (0..6)
        .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let emb_flat: Vec<f64> = embeddings.iter().flatten().copied().collect();
    let emb = tape.constant(Tensor::new(vec![6, 3], emb_flat).unwrap());

    let ids = [4usize, 1, 5];
    let states = encode_sentence(&mut tape, &fwd, Some(&bwd), emb, &ids, 2).unwrap();

    let inputs: Vec<Vec<f64>> = ids.iter().map(|&i| embeddings[i].clone()).collect();
    let f = fwd_oracle.run(&inputs);
    let reversed: Vec<Vec<f64>> = inputs.iter().rev().cloned().collect();
    let mut b = bwd_oracle.run(&reversed);
    b.reverse();

    for (t, state) in states.iter().enumerate() {
        let got = tape.value(*state).data();
        let want: Vec<f64> = f[t].iter().chain(&b[t]).copied().collect();
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }
}

#[test]
fn palindrome_with_tied_cells_is_symmetric() {
    let mut rng = ChaCha12Rng::seed_from_u64(8);
    let mut tape = Tape::new();
    let (cell, _) = random_cell(&mut tape, 2, 3, &mut rng);

    let a = tape.constant(Tensor::new(vec![1, 2], vec![0.4, -0.6]).unwrap());
    let b = tape.constant(Tensor::new(vec![1, 2], vec![-0.1, 0.8]).unwrap());
    let inputs = vec![a, b, a]; // palindrome

    let states = encode_sequence(&mut tape, &cell, Some(&cell), &inputs, 3).unwrap();
    let n = inputs.len();
    for i in 0..n {
        let row_i = tape.value(states[i]).data();
        let row_mirror = tape.value(states[n - 1 - i]).data();
        let forward_i = &row_i[..3];
        let backward_mirror = &row_mirror[3..];
        for (f, bk) in forward_i.iter().zip(backward_mirror) {
            assert!((f - bk).abs() < 1e-12);
        }
    }
}

#[test]
fn hidden_states_stay_inside_unit_interval() {
    let mut rng = ChaCha12Rng::seed_from_u64(13);
    let mut tape = Tape::new();
    let (cell, _) = random_cell(&mut tape, 3, 5, &mut rng);
    let mut h = tape.constant(Tensor::zeros(1, 5));
    for _ in 0..50 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-3.0..3.0)).collect();
        let xv = tape.constant(Tensor::new(vec![1, 3], x).unwrap());
        h = gru_step(&mut tape, &cell, xv, h).unwrap();
        assert!(tape.value(h).data().iter().all(|v| v.abs() < 1.0));
    }
}

// ── document-level checks ───────────────────────────────────────────

fn doc_from(body: &str) -> EvidenceDocument {
    EvidenceDocument::from_raw("title words", body, "x.example").unwrap()
}

struct DocSetup {
    tape: Tape,
    emb: Var,
    word_fwd: GruVars,
    word_bwd: GruVars,
    sent_fwd: GruVars,
    sent_bwd: GruVars,
    attn: LevelVars,
    claim_guide: Var,
    title_guide: Var,
}

fn setup(vocab_len: usize, e: usize, h: usize, seed: u64) -> DocSetup {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut tape = Tape::new();
    let mut emb_data = vec![0.0; vocab_len * e];
    for x in emb_data.iter_mut().skip(e) {
        *x = rng.random_range(-1.0..1.0);
    }
    let emb = tape.constant(Tensor::new(vec![vocab_len, e], emb_data).unwrap());
    let (word_fwd, _) = random_cell(&mut tape, e, h, &mut rng);
    let (word_bwd, _) = random_cell(&mut tape, e, h, &mut rng);
    let (sent_fwd, _) = random_cell(&mut tape, 2 * h, h, &mut rng);
    let (sent_bwd, _) = random_cell(&mut tape, 2 * h, h, &mut rng);
    let mech = |rng: &mut ChaCha12Rng, tape: &mut Tape| MechanismVars {
        w: {
            let data: Vec<f64> = (0..2 * h * e)
                .map(|_| rng.random_range(-0.5..0.5))
                .collect();
            tape.constant(Tensor::new(vec![2 * h, e], data).unwrap())
        },
        b: tape.constant(Tensor::zeros(1, e)),
        ctx: None,
    };
    let attn = LevelVars::Guided {
        claim: mech(&mut rng, &mut tape),
        title: mech(&mut rng, &mut tape),
        self_attn: mech(&mut rng, &mut tape),
        atop: None,
    };
    let claim_data: Vec<f64> = (0..e).map(|_| rng.random_range(-1.0..1.0)).collect();
    let claim_guide = tape.constant(Tensor::new(vec![1, e], claim_data).unwrap());
    let title_data: Vec<f64> = (0..e).map(|_| rng.random_range(-1.0..1.0)).collect();
    let title_guide = tape.constant(Tensor::new(vec![1, e], title_data).unwrap());
    DocSetup {
        tape,
        emb,
        word_fwd,
        word_bwd,
        sent_fwd,
        sent_bwd,
        attn,
        claim_guide,
        title_guide,
    }
}

fn encode(
    setup: &mut DocSetup,
    doc: &EvidenceDocument,
    vocab: &Vocabulary,
    k: usize,
    l: usize,
    h: usize,
) -> veracity_core::encoder::DocumentEncoding {
    let padded = pad_and_index(doc, vocab, k, l);
    encode_document(
        &mut setup.tape,
        &padded,
        setup.emb,
        &setup.word_fwd,
        Some(&setup.word_bwd),
        &setup.sent_fwd,
        &setup.sent_bwd,
        &setup.attn,
        setup.claim_guide,
        setup.title_guide,
        h,
    )
    .unwrap()
}

#[test]
fn single_word_document_has_one_nonzero_row() {
    let vocab = Vocabulary::from_tokens(["only"].iter().map(|s| s.to_string()));
    let mut s = setup(vocab.len(), 4, 3, 21);
    let doc = doc_from("only.");
    let enc = encode(&mut s, &doc, &vocab, 3, 4, 3);

    let word0 = s.tape.value(enc.word_hidden[0]);
    assert!(word0.row(0).iter().any(|&x| x != 0.0));
    for r in 1..4 {
        assert!(word0.row(r).iter().all(|&x| x == 0.0));
    }
    let sent = s.tape.value(enc.sentence_hidden);
    assert!(sent.row(0).iter().any(|&x| x != 0.0));
    for r in 1..3 {
        assert!(sent.row(r).iter().all(|&x| x == 0.0));
    }
}

#[test]
fn identical_documents_encode_identically() {
    let vocab = Vocabulary::from_tokens(
        ["alpha", "beta", "gamma", "delta"]
            .iter()
            .map(|s| s.to_string()),
    );
    let doc = doc_from("alpha beta gamma. delta alpha.");
    let mut s = setup(vocab.len(), 4, 3, 33);
    let enc_a = encode(&mut s, &doc, &vocab, 4, 6, 3);
    let enc_b = encode(&mut s, &doc, &vocab, 4, 6, 3);
    assert_eq!(
        s.tape.value(enc_a.sentence_hidden).data(),
        s.tape.value(enc_b.sentence_hidden).data()
    );
}

// Growing the padded geometry (more pad rows and columns) must not move
// the representation of the real content.
#[test]
fn padding_never_changes_the_representation() {
    let vocab = Vocabulary::from_tokens(
        ["alpha", "beta", "gamma", "delta", "eps"]
            .iter()
            .map(|s| s.to_string()),
    );
    let doc = doc_from("alpha beta. gamma delta eps.");
    let mut s = setup(vocab.len(), 4, 3, 55);
    let small = encode(&mut s, &doc, &vocab, 3, 5, 3);
    let large = encode(&mut s, &doc, &vocab, 7, 9, 3);

    let small_sent = s.tape.value(small.sentence_hidden);
    let large_sent = s.tape.value(large.sentence_hidden);
    for r in 0..2 {
        for (a, b) in small_sent.row(r).iter().zip(large_sent.row(r)) {
            assert!((a - b).abs() < 1e-12, "row {r}: {a} vs {b}");
        }
    }
    for r in 2..7 {
        assert!(large_sent.row(r).iter().all(|&x| x == 0.0));
    }

    let small_fused = small.word_attention[0].as_ref().unwrap().fused;
    let large_fused = large.word_attention[0].as_ref().unwrap().fused;
    let small_w = s.tape.value(small_fused);
    let large_w = s.tape.value(large_fused);
    for t in 0..2 {
        assert!((small_w.data()[t] - large_w.data()[t]).abs() < 1e-12);
    }
    // every padded position carries exactly zero weight
    assert!(large_w.data()[2..].iter().all(|&x| x == 0.0));
}
