//! Attention fixtures (independent scalar traces) and normalization /
//! fusion properties.

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use veracity_core::attention::{
    concat_baseline_attention, fuse_atop, fuse_average, guided_attention, pool, self_attention,
    MechanismVars,
};
use veracity_core::gradcheck::{finite_difference, max_relative_error};
use veracity_core::tensor::{ParamSet, Tape, Tensor, Var};

fn constant(tape: &mut Tape, rows: usize, cols: usize, data: Vec<f64>) -> Var {
    tape.constant(Tensor::new(vec![rows, cols], data).unwrap())
}

#[test]
fn zero_parameters_give_uniform_weights() {
    let mut tape = Tape::new();
    let hidden = constant(&mut tape, 3, 2, vec![0.4, -0.2, 0.9, 0.1, -0.5, 0.3]);
    let guide = constant(&mut tape, 1, 2, vec![1.0, -1.0]);
    let w = tape.constant(Tensor::zeros(2, 2));
    let b = tape.constant(Tensor::zeros(1, 2));
    let alpha = guided_attention(&mut tape, hidden, guide, w, b, &[true; 3]).unwrap();
    for &v in tape.value(alpha).data() {
        assert!((v - 1.0 / 3.0).abs() < 1e-15);
    }
}

#[test]
fn single_unmasked_position_takes_all_weight() {
    let mut tape = Tape::new();
    let hidden = constant(&mut tape, 3, 2, vec![0.4, -0.2, 0.9, 0.1, -0.5, 0.3]);
    let guide = constant(&mut tape, 1, 2, vec![0.3, 0.7]);
    let w = constant(&mut tape, 2, 2, vec![0.1, -0.2, 0.5, 0.4]);
    let b = constant(&mut tape, 1, 2, vec![0.05, -0.05]);
    let alpha = guided_attention(&mut tape, hidden, guide, w, b, &[false, true, false]).unwrap();
    assert_eq!(tape.value(alpha).data(), &[0.0, 1.0, 0.0]);
}

// Fixture: tanh/dot/softmax trace recomputed with explicit scalar
// arithmetic, independent of the tape.
#[test]
fn guided_attention_matches_hand_trace() {
    let hidden: [[f64; 2]; 3] = [[0.2, 0.4], [-0.3, 0.1], [0.0, -0.2]];
    let guide: [f64; 2] = [1.0, 2.0];
    // W = I₂, b = (0.5, −0.5): u_p = tanh(h_p + b)
    let scores: Vec<f64> = hidden
        .iter()
        .map(|h| {
            let u0 = (h[0] + 0.5).tanh();
            let u1 = (h[1] - 0.5).tanh();
            u0 * guide[0] + u1 * guide[1]
        })
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let expected: Vec<f64> = exps.iter().map(|e| e / total).collect();

    let mut tape = Tape::new();
    let h = constant(&mut tape, 3, 2, hidden.iter().flatten().copied().collect());
    let g = constant(&mut tape, 1, 2, guide.to_vec());
    let w = constant(&mut tape, 2, 2, vec![1.0, 0.0, 0.0, 1.0]);
    let b = constant(&mut tape, 1, 2, vec![0.5, -0.5]);
    let alpha = guided_attention(&mut tape, h, g, w, b, &[true; 3]).unwrap();
    for (got, want) in tape.value(alpha).data().iter().zip(&expected) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
}

#[test]
fn self_attention_matches_hand_trace() {
    let hidden: [[f64; 2]; 3] = [[0.6, -0.1], [-0.4, 0.5], [0.2, 0.2]];
    let w: [[f64; 2]; 2] = [[0.3, -0.2], [0.1, 0.4]];
    let b: [f64; 2] = [0.05, -0.1];
    // score_p = Σ_e tanh(h_p W + b)_e
    let scores: Vec<f64> = hidden
        .iter()
        .map(|h| {
            let u0 = (h[0] * w[0][0] + h[1] * w[1][0] + b[0]).tanh();
            let u1 = (h[0] * w[0][1] + h[1] * w[1][1] + b[1]).tanh();
            u0 + u1
        })
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let expected: Vec<f64> = exps.iter().map(|e| e / total).collect();

    let mut tape = Tape::new();
    let h = constant(&mut tape, 3, 2, hidden.iter().flatten().copied().collect());
    let mech = MechanismVars {
        w: constant(&mut tape, 2, 2, vec![0.3, -0.2, 0.1, 0.4]),
        b: constant(&mut tape, 1, 2, b.to_vec()),
        ctx: None,
    };
    let alpha = self_attention(&mut tape, h, &mech, &[true; 3]).unwrap();
    for (got, want) in tape.value(alpha).data().iter().zip(&expected) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn concat_baseline_matches_hand_trace() {
    let claim = [0.5, -0.5];
    let positions = [[0.2, 0.8], [-0.6, 0.1]];
    let w = [0.2, -0.1, 0.3, 0.4];
    let bias = 0.1;
    let scores: Vec<f64> = positions
        .iter()
        .map(|d| {
            let joined = [claim[0], claim[1], d[0], d[1]];
            let raw: f64 = joined.iter().zip(&w).map(|(x, wi)| x * wi).sum();
            (raw + bias).tanh()
        })
        .collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let expected: Vec<f64> = exps.iter().map(|e| e / total).collect();

    let mut tape = Tape::new();
    let pos = constant(
        &mut tape,
        2,
        2,
        positions.iter().flatten().copied().collect(),
    );
    let g = constant(&mut tape, 1, 2, claim.to_vec());
    let wv = constant(&mut tape, 4, 1, w.to_vec());
    let bv = constant(&mut tape, 1, 1, vec![bias]);
    let alpha = concat_baseline_attention(&mut tape, pos, g, wv, bv, &[true; 2]).unwrap();
    for (got, want) in tape.value(alpha).data().iter().zip(&expected) {
        assert!((got - want).abs() < 1e-12);
    }

    let mut tape = Tape::new();
    let pos = constant(
        &mut tape,
        2,
        2,
        positions.iter().flatten().copied().collect(),
    );
    let g = constant(&mut tape, 1, 2, claim.to_vec());
    let w0 = tape.constant(Tensor::zeros(4, 1));
    let b0 = tape.constant(Tensor::zeros(1, 1));
    let uniform = concat_baseline_attention(&mut tape, pos, g, w0, b0, &[true; 2]).unwrap();
    assert_eq!(tape.value(uniform).data(), &[0.5, 0.5]);
}

#[test]
fn fuse_average_fixture_cases() {
    let mut tape = Tape::new();
    // three identical vectors come back unchanged
    let v = constant(&mut tape, 2, 1, vec![0.3, 0.7]);
    let fused = fuse_average(&mut tape, v, v, v).unwrap();
    for (got, want) in tape.value(fused).data().iter().zip([0.3, 0.7]) {
        assert!((got - want).abs() < 1e-15);
    }

    let a = constant(&mut tape, 2, 1, vec![1.0, 0.0]);
    let b = constant(&mut tape, 2, 1, vec![0.0, 1.0]);
    let c = constant(&mut tape, 2, 1, vec![0.5, 0.5]);
    let fused = fuse_average(&mut tape, a, b, c).unwrap();
    for (got, want) in tape.value(fused).data().iter().zip([0.5, 0.5]) {
        assert!((got - want).abs() < 1e-15);
    }
}

#[test]
fn atop_on_identical_vectors_returns_them() {
    let mut rng = ChaCha12Rng::seed_from_u64(4);
    let mut tape = Tape::new();
    let v = constant(&mut tape, 3, 1, vec![0.2, 0.5, 0.3]);
    let w_data: Vec<f64> = (0..27).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w = constant(&mut tape, 9, 3, w_data);
    let b_data: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b = constant(&mut tape, 1, 3, b_data);
    let (fused, beta) = fuse_atop(&mut tape, v, v, v, w, b).unwrap();
    for (got, want) in tape.value(fused).data().iter().zip([0.2, 0.5, 0.3]) {
        assert!((got - want).abs() < 1e-12);
    }
    let beta_values = tape.value(beta).data();
    assert!((beta_values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn atop_fixture_matches_hand_trace() {
    let a = [0.6, 0.4];
    let b = [0.3, 0.7];
    let c = [0.5, 0.5];
    let w: Vec<f64> = vec![
        0.2, -0.3, 0.1, //
        0.4, 0.0, -0.2, //
        -0.1, 0.5, 0.3, //
        0.2, 0.2, -0.4, //
        0.0, -0.1, 0.6, //
        0.3, 0.1, 0.0,
    ];
    let bias = [0.05, -0.05, 0.1];
    // u = tanh(α_con W + b), β = softmax(u), fused = β₁a + β₂b + β₃c
    let con = [a[0], a[1], b[0], b[1], c[0], c[1]];
    let mut u = [0.0f64; 3];
    for (j, out) in u.iter_mut().enumerate() {
        let mut s = bias[j];
        for (i, &x) in con.iter().enumerate() {
            s += x * w[i * 3 + j];
        }
        *out = s.tanh();
    }
    let max = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = u.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let beta: Vec<f64> = exps.iter().map(|e| e / total).collect();
    let expected: Vec<f64> = (0..2)
        .map(|i| beta[0] * a[i] + beta[1] * b[i] + beta[2] * c[i])
        .collect();

    let mut tape = Tape::new();
    let av = constant(&mut tape, 2, 1, a.to_vec());
    let bv = constant(&mut tape, 2, 1, b.to_vec());
    let cv = constant(&mut tape, 2, 1, c.to_vec());
    let wv = constant(&mut tape, 6, 3, w);
    let biasv = constant(&mut tape, 1, 3, bias.to_vec());
    let (fused, beta_var) = fuse_atop(&mut tape, av, bv, cv, wv, biasv).unwrap();
    for (got, want) in tape.value(fused).data().iter().zip(&expected) {
        assert!((got - want).abs() < 1e-12);
    }
    for (got, want) in tape.value(beta_var).data().iter().zip(&beta) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn pool_fixture_cases() {
    let mut tape = Tape::new();
    let hidden = constant(&mut tape, 3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    // one-hot picks a row
    let one_hot = constant(&mut tape, 3, 1, vec![0.0, 1.0, 0.0]);
    let row = pool(&mut tape, hidden, one_hot).unwrap();
    assert_eq!(tape.value(row).data(), &[3.0, 4.0]);
    // uniform weights give the mean of rows
    let uniform = constant(&mut tape, 3, 1, vec![1.0 / 3.0; 3]);
    let mean = pool(&mut tape, hidden, uniform).unwrap();
    for (got, want) in tape.value(mean).data().iter().zip([3.0, 4.0]) {
        assert!((got - want).abs() < 1e-12);
    }
    // hand-computed weighted sum
    let weights = constant(&mut tape, 3, 1, vec![0.2, 0.3, 0.5]);
    let pooled = pool(&mut tape, hidden, weights).unwrap();
    let expected = [
        0.2 * 1.0 + 0.3 * 3.0 + 0.5 * 5.0,
        0.2 * 2.0 + 0.3 * 4.0 + 0.5 * 6.0,
    ];
    for (got, want) in tape.value(pooled).data().iter().zip(expected) {
        assert!((got - want).abs() < 1e-12);
    }
}

// Mechanism outputs and average fusion commute with permuting positions.
// (The Atop scorer deliberately sees positions through learned weights,
// so it is not permutation-equivariant in general.)
#[test]
fn mechanisms_and_average_fusion_are_permutation_equivariant() {
    let mut rng = ChaCha12Rng::seed_from_u64(77);
    let n = 5;
    let e = 3;
    let h = 4;
    let hidden_data: Vec<f64> = (0..n * h).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w_data: Vec<f64> = (0..h * e).map(|_| rng.random_range(-1.0..1.0)).collect();
    let b_data: Vec<f64> = (0..e).map(|_| rng.random_range(-1.0..1.0)).collect();
    let guide_data: Vec<f64> = (0..e).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mask = [true, true, false, true, true];
    let perm = [3usize, 0, 4, 2, 1];

    let run = |order: &[usize]| -> Vec<f64> {
        let mut tape = Tape::new();
        let hidden_perm: Vec<f64> = order
            .iter()
            .flat_map(|&i| hidden_data[i * h..(i + 1) * h].to_vec())
            .collect();
        let mask_perm: Vec<bool> = order.iter().map(|&i| mask[i]).collect();
        let hidden = constant(&mut tape, n, h, hidden_perm);
        let guide = constant(&mut tape, 1, e, guide_data.clone());
        let w = constant(&mut tape, h, e, w_data.clone());
        let b = constant(&mut tape, 1, e, b_data.clone());
        let alpha_c = guided_attention(&mut tape, hidden, guide, w, b, &mask_perm).unwrap();
        let alpha_t = guided_attention(&mut tape, hidden, guide, w, b, &mask_perm).unwrap();
        let mech = MechanismVars { w, b, ctx: None };
        let alpha_s = self_attention(&mut tape, hidden, &mech, &mask_perm).unwrap();
        let fused = fuse_average(&mut tape, alpha_c, alpha_t, alpha_s).unwrap();
        tape.value(fused).data().to_vec()
    };

    let identity: Vec<usize> = (0..n).collect();
    let base = run(&identity);
    let permuted = run(&perm);
    for (spot, &src) in perm.iter().enumerate() {
        assert!((permuted[spot] - base[src]).abs() < 1e-12);
    }
}

#[test]
fn gradients_flow_into_every_attention_parameter() {
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let (n, h, e) = (4, 3, 2);
    let mut params = ParamSet::new();
    let mut add = |name: &str, rows: usize, cols: usize, rng: &mut ChaCha12Rng| {
        let data: Vec<f64> = (0..rows * cols)
            .map(|_| rng.random_range(-0.9..0.9))
            .collect();
        params.insert(
            name,
            Tensor::new(vec![rows, cols], data).unwrap().with_grad(),
        );
    };
    add("cw", h, e, &mut rng);
    add("cb", 1, e, &mut rng);
    add("tw", h, e, &mut rng);
    add("tb", 1, e, &mut rng);
    add("sw", h, e, &mut rng);
    add("sb", 1, e, &mut rng);
    add("aw", 3 * n, 3, &mut rng);
    add("ab", 1, 3, &mut rng);

    let hidden_data: Vec<f64> = (0..n * h).map(|_| rng.random_range(-1.0..1.0)).collect();
    let guide_data: Vec<f64> = (0..e).map(|_| rng.random_range(-1.0..1.0)).collect();
    let probe: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let mask = [true, true, true, false];

    type Out = (Tape, Var, Vec<(String, Var)>);
    let run = |p: &ParamSet| -> Out {
        let mut tape = Tape::new();
        let mut vars = Vec::new();
        let mut leaf = |tape: &mut Tape, name: &str| -> Var {
            let v = tape.leaf(p.get(name).unwrap().clone());
            vars.push((name.to_string(), v));
            v
        };
        let cw = leaf(&mut tape, "cw");
        let cb = leaf(&mut tape, "cb");
        let tw = leaf(&mut tape, "tw");
        let tb = leaf(&mut tape, "tb");
        let sw = leaf(&mut tape, "sw");
        let sb = leaf(&mut tape, "sb");
        let aw = leaf(&mut tape, "aw");
        let ab = leaf(&mut tape, "ab");

        let hidden = constant(&mut tape, n, h, hidden_data.clone());
        let guide = constant(&mut tape, 1, e, guide_data.clone());
        let alpha_c = guided_attention(&mut tape, hidden, guide, cw, cb, &mask).unwrap();
        let alpha_t = guided_attention(&mut tape, hidden, guide, tw, tb, &mask).unwrap();
        let mech = MechanismVars {
            w: sw,
            b: sb,
            ctx: None,
        };
        let alpha_s = self_attention(&mut tape, hidden, &mech, &mask).unwrap();
        let (fused, _) = fuse_atop(&mut tape, alpha_c, alpha_t, alpha_s, aw, ab).unwrap();
        // probe projection makes the loss sensitive to each position
        let probe_var = constant(&mut tape, 1, n, probe.clone());
        let loss = tape.matmul(probe_var, fused).unwrap();
        (tape, loss, vars)
    };

    let numeric = finite_difference(&params, 1e-5, |p| {
        let (tape, loss, _) = run(p);
        tape.value(loss).data()[0]
    });
    let (tape, loss, vars) = run(&params);
    let grads = tape.backward(loss);
    let mut analytic = BTreeMap::new();
    let mut nonzero = 0;
    for (name, var) in vars {
        let g = grads.get(var).expect("gradient exists").to_vec();
        if g.iter().any(|&x| x != 0.0) {
            nonzero += 1;
        }
        analytic.insert(name, g);
    }
    assert_eq!(nonzero, 8, "every attention parameter receives gradient");
    let (worst, at) = max_relative_error(&analytic, &numeric);
    assert!(
        worst < 1e-4,
        "attention gradient mismatch {worst:.2e} at {at}"
    );
}

fn simplex(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3..1.0f64, n).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    // closure of averaging over the simplex
    #[test]
    fn average_of_simplex_triples_is_on_the_simplex(
        a in simplex(6), b in simplex(6), c in simplex(6)
    ) {
        let mut tape = Tape::new();
        let av = constant(&mut tape, 6, 1, a);
        let bv = constant(&mut tape, 6, 1, b);
        let cv = constant(&mut tape, 6, 1, c);
        let fused = fuse_average(&mut tape, av, bv, cv).unwrap();
        let values = tape.value(fused).data();
        prop_assert!(values.iter().all(|&v| v >= 0.0));
        prop_assert!((values.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    // Atop with zero parameters degenerates to the average exactly
    #[test]
    fn atop_with_zero_parameters_equals_average(
        a in simplex(5), b in simplex(5), c in simplex(5)
    ) {
        let mut tape = Tape::new();
        let av = constant(&mut tape, 5, 1, a);
        let bv = constant(&mut tape, 5, 1, b);
        let cv = constant(&mut tape, 5, 1, c);
        let w = tape.constant(Tensor::zeros(15, 3));
        let bias = tape.constant(Tensor::zeros(1, 3));
        let (atop, beta) = fuse_atop(&mut tape, av, bv, cv, w, bias).unwrap();
        let average = fuse_average(&mut tape, av, bv, cv).unwrap();
        for (x, y) in tape.value(atop).data().iter().zip(tape.value(average).data()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        for &component in tape.value(beta).data() {
            prop_assert!((component - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    // every mechanism: probability vector over unmasked, exact zero on masked
    #[test]
    fn attention_weights_are_masked_probability_vectors(
        seed in 0u64..1000,
        mask in prop::collection::vec(prop::bool::ANY, 4..9)
    ) {
        prop_assume!(mask.iter().any(|&m| m));
        let n = mask.len();
        let (h, e) = (3, 2);
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mut tape = Tape::new();
        let hidden_data: Vec<f64> = (0..n * h).map(|_| rng.random_range(-2.0..2.0)).collect();
        let hidden = constant(&mut tape, n, h, hidden_data);
        let guide_data: Vec<f64> = (0..e).map(|_| rng.random_range(-2.0..2.0)).collect();
        let guide = constant(&mut tape, 1, e, guide_data);
        let w_data: Vec<f64> = (0..h * e).map(|_| rng.random_range(-2.0..2.0)).collect();
        let w = constant(&mut tape, h, e, w_data);
        let b_data: Vec<f64> = (0..e).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b = constant(&mut tape, 1, e, b_data);

        let alpha_c = guided_attention(&mut tape, hidden, guide, w, b, &mask).unwrap();
        let mech = MechanismVars { w, b, ctx: None };
        let alpha_s = self_attention(&mut tape, hidden, &mech, &mask).unwrap();
        let aw_data: Vec<f64> = (0..3 * n * 3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let aw = constant(&mut tape, 3 * n, 3, aw_data);
        let ab_data: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ab = constant(&mut tape, 1, 3, ab_data);
        let (fused, _) = fuse_atop(&mut tape, alpha_c, alpha_c, alpha_s, aw, ab).unwrap();

        for var in [alpha_c, alpha_s, fused] {
            let values = tape.value(var).data();
            let mut sum = 0.0;
            for (i, &v) in values.iter().enumerate() {
                if mask[i] {
                    prop_assert!(v >= 0.0);
                    sum += v;
                } else {
                    prop_assert!(v == 0.0, "masked position {i} got weight {v}");
                }
            }
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }
    }
}
