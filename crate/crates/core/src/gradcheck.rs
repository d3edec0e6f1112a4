//! Central finite differences over a parameter set.
//!
//! This is the independent oracle used to verify the tape's reverse-mode
//! gradients. It never touches the backward pass: it re-runs the supplied
//! forward closure with perturbed parameters.

use std::collections::BTreeMap;

use crate::tensor::ParamSet;

/// Central-difference gradient of `f` with respect to every entry of
/// every parameter: `(f(θ+ε) − f(θ−ε)) / 2ε`.
pub fn finite_difference<F>(params: &ParamSet, eps: f64, f: F) -> BTreeMap<String, Vec<f64>>
where
    F: Fn(&ParamSet) -> f64,
{
    let mut out = BTreeMap::new();
    let mut work = params.clone();
    let names: Vec<String> = params.iter().map(|(n, _)| n.to_string()).collect();
    for name in names {
        let numel = params.get(&name).expect("known name").numel();
        let mut grad = vec![0.0; numel];
        for (i, slot) in grad.iter_mut().enumerate() {
            let original = work.get(&name).unwrap().data()[i];
            work.get_mut(&name).unwrap().data_mut()[i] = original + eps;
            let plus = f(&work);
            work.get_mut(&name).unwrap().data_mut()[i] = original - eps;
            let minus = f(&work);
            work.get_mut(&name).unwrap().data_mut()[i] = original;
            *slot = (plus - minus) / (2.0 * eps);
        }
        out.insert(name, grad);
    }
    out
}

/// Relative error between two gradient values; near-zero pairs compare
/// as exactly equal.
pub fn relative_error(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs();
    if diff < 1e-10 {
        return 0.0;
    }
    diff / a.abs().max(b.abs())
}

/// Largest relative error between an analytic gradient map and a
/// finite-difference one. A parameter missing on one side counts as an
/// all-zero gradient (the loss does not touch it).
pub fn max_relative_error(
    analytic: &BTreeMap<String, Vec<f64>>,
    numeric: &BTreeMap<String, Vec<f64>>,
) -> (f64, String) {
    let mut worst: f64 = 0.0;
    let mut worst_name = String::new();
    let names: std::collections::BTreeSet<&String> =
        analytic.keys().chain(numeric.keys()).collect();
    for name in names {
        let len = analytic
            .get(name)
            .or_else(|| numeric.get(name))
            .map_or(0, Vec::len);
        let zeros = vec![0.0; len];
        let a = analytic.get(name).map_or(zeros.as_slice(), Vec::as_slice);
        let n = numeric.get(name).map_or(zeros.as_slice(), Vec::as_slice);
        for (i, (&x, &y)) in a.iter().zip(n).enumerate() {
            let err = relative_error(x, y);
            if err > worst {
                worst = err;
                worst_name = format!("{name}[{i}]");
            }
        }
    }
    (worst, worst_name)
}
