//! ADAM with decoupled weight decay on the flat parameter view.

use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        AdamState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One update: θ ← θ − lr·m̂/(√v̂+ε) − lr·λ·θ. The decay term is
/// decoupled from the moment estimates. Non-finite gradients abort the
/// step with the parameters untouched.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    weight_decay: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::Dimension(format!(
            "adam: {} params, {} grads, state for {}",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if let Some(at) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite gradient {} at coordinate {at}; step aborted",
            grads[at]
        )));
    }
    state.t += 1;
    let bc1 = 1.0 - BETA1.powi(state.t as i32);
    let bc2 = 1.0 - BETA2.powi(state.t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = BETA1 * state.m[i] + (1.0 - BETA1) * g;
        state.v[i] = BETA2 * state.v[i] + (1.0 - BETA2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * (m_hat / (v_hat.sqrt() + EPSILON)) + lr * weight_decay * params[i];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_without_decay_leaves_params_unchanged() {
        let mut p = vec![1.0, -2.0, 0.5];
        let g = vec![0.0; 3];
        let mut state = AdamState::new(3);
        adam_step(&mut p, &g, &mut state, 0.1, 0.0).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn first_step_moves_by_roughly_the_learning_rate() {
        // Hand arithmetic: at t=1, m̂ = g and v̂ = g², so m̂/√v̂ = sign(g).
        let mut p = vec![1.0];
        let g = vec![1.0];
        let mut state = AdamState::new(1);
        adam_step(&mut p, &g, &mut state, 0.1, 0.0).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-8, "{}", p[0]);
    }

    #[test]
    fn zero_gradient_with_decay_is_a_pure_shrink() {
        let mut p = vec![2.0, -4.0];
        let g = vec![0.0; 2];
        let mut state = AdamState::new(2);
        let (lr, wd) = (0.05, 0.1);
        adam_step(&mut p, &g, &mut state, lr, wd).unwrap();
        assert!((p[0] - 2.0 * (1.0 - lr * wd)).abs() < 1e-15);
        assert!((p[1] - -4.0 * (1.0 - lr * wd)).abs() < 1e-15);
    }

    #[test]
    fn non_finite_gradients_abort_without_touching_params() {
        let mut p = vec![1.0];
        let g = vec![f64::NAN];
        let mut state = AdamState::new(1);
        let before = p.clone();
        assert!(matches!(
            adam_step(&mut p, &g, &mut state, 0.1, 0.0),
            Err(Error::Numeric(_))
        ));
        assert_eq!(p, before);
        assert_eq!(state.step_count(), 0);
    }

    #[test]
    fn descends_a_quadratic() {
        // Minimize (θ−3)²; 300 steps from 0 should land near 3.
        let mut p = vec![0.0];
        let mut state = AdamState::new(1);
        for _ in 0..300 {
            let g = vec![2.0 * (p[0] - 3.0)];
            adam_step(&mut p, &g, &mut state, 0.05, 0.0).unwrap();
        }
        assert!((p[0] - 3.0).abs() < 0.05, "{}", p[0]);
    }
}
