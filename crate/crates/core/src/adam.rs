//! Adam parameter updates with bias correction, plus global-norm clipping.

use crate::params::ParamSet;
use crate::tensor::{cast, Scalar};

/// Optimizer state: one first/second moment tensor per parameter, aligned
/// by name with the parameter set it was created from.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    first_moment: ParamSet<T>,
    second_moment: ParamSet<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamSet<T>) -> Self {
        AdamState {
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
        }
    }
}

/// One Adam update in place. `grads` must be aligned with `params`
/// (same names, same shapes).
pub fn adam_step<T: Scalar>(
    params: &mut ParamSet<T>,
    grads: &ParamSet<T>,
    state: &mut AdamState<T>,
    lr: f64,
) {
    assert!(lr > 0.0, "adam_step: learning rate must be positive");
    state.step += 1;
    let b1: T = cast(state.beta1);
    let b2: T = cast(state.beta2);
    let eps: T = cast(state.epsilon);
    let one = T::one();
    let bc1: T = cast(1.0 - state.beta1.powi(state.step as i32));
    let bc2: T = cast(1.0 - state.beta2.powi(state.step as i32));
    let lr_t: T = cast(lr);

    for (name, p) in params.iter_mut() {
        let g = grads
            .get(name)
            .unwrap_or_else(|| panic!("adam_step: missing gradient for {name}"));
        assert_eq!(
            g.shape, p.shape,
            "adam_step: gradient shape {:?} does not match parameter {name} {:?}",
            g.shape, p.shape
        );
        let m = state.first_moment.get_mut(name).expect("aligned state");
        let v = state.second_moment.get_mut(name).expect("aligned state");
        for i in 0..p.data.len() {
            let gi = g.data[i];
            m.data[i] = b1 * m.data[i] + (one - b1) * gi;
            v.data[i] = b2 * v.data[i] + (one - b2) * gi * gi;
            let m_hat = m.data[i] / bc1;
            let v_hat = v.data[i] / bc2;
            p.data[i] = p.data[i] - lr_t * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

/// Scale all gradients so their global L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm<T: Scalar>(grads: &mut ParamSet<T>, max_norm: f64) -> f64 {
    let mut sq = 0.0f64;
    for (_, g) in grads.iter() {
        for &x in &g.data {
            let x = x.to_f64().unwrap();
            sq += x * x;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale: T = cast(max_norm / norm);
        for (_, g) in grads.iter_mut() {
            for x in g.data.iter_mut() {
                *x = *x * scale;
            }
        }
    }
    norm
}
