//! Central-difference gradient oracle.
//!
//! This path is the independent check for the tape: it never touches the
//! reverse-mode machinery, only repeated forward evaluations in `f64`.

use crate::params::ParamSet;
use crate::tensor::Tensor;

/// Central differences `(f(p + eps e) - f(p - eps e)) / (2 eps)` for every
/// parameter coordinate. `f` must be deterministic (dropout disabled,
/// fixed seeds).
pub fn finite_difference<F>(f: F, params: &ParamSet<f64>, eps: f64) -> ParamSet<f64>
where
    F: Fn(&ParamSet<f64>) -> f64,
{
    let mut grads = params.zeros_like();
    let mut work = params.clone();
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in &names {
        let len = params.get(name).unwrap().len();
        for i in 0..len {
            let orig = work.get(name).unwrap().data[i];
            work.get_mut(name).unwrap().data[i] = orig + eps;
            let plus = f(&work);
            work.get_mut(name).unwrap().data[i] = orig - eps;
            let minus = f(&work);
            work.get_mut(name).unwrap().data[i] = orig;
            grads.get_mut(name).unwrap().data[i] = (plus - minus) / (2.0 * eps);
        }
    }
    grads
}

/// Norm-wise relative error between two gradient tensors:
/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn relative_error(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    assert_eq!(a.shape, b.shape, "relative_error: shape mismatch");
    let mut diff = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.data.iter().zip(&b.data) {
        diff += (x - y) * (x - y);
        na += x * x;
        nb += y * y;
    }
    let denom = na.max(nb).sqrt();
    if denom < 1e-12 {
        return 0.0;
    }
    diff.sqrt() / denom
}

/// Largest per-tensor [`relative_error`] between two aligned sets.
pub fn max_relative_error(a: &ParamSet<f64>, b: &ParamSet<f64>) -> f64 {
    let mut worst = 0.0f64;
    for (name, ta) in a.iter() {
        let tb = b
            .get(name)
            .unwrap_or_else(|| panic!("max_relative_error: {name} missing from rhs"));
        worst = worst.max(relative_error(ta, tb));
    }
    worst
}
