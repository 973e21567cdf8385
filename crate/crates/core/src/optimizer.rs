//! Adam with optional restriction to a subset of parameters.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OptimizerError {
    #[error("length mismatch: state {state}, parameters {params}, gradient {grad}")]
    LengthMismatch { state: usize, params: usize, grad: usize },
    #[error("active range {start}..{end} exceeds {len} parameters")]
    RangeOutOfBounds { start: usize, end: usize, len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Indices updated by a step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ActiveSet {
    All,
    Ranges(Vec<Range<usize>>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    /// Shared step counter, advanced once per call regardless of the active set.
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self { config, step: 0, m: vec![0.0; len], v: vec![0.0; len] }
    }
}

/// One Adam update. Parameters and moments outside `active` are untouched.
pub fn adam_step(
    state: &mut AdamState,
    theta: &mut [f64],
    grad: &[f64],
    active: &ActiveSet,
) -> Result<(), OptimizerError> {
    let n = state.m.len();
    if theta.len() != n || grad.len() != n {
        return Err(OptimizerError::LengthMismatch { state: n, params: theta.len(), grad: grad.len() });
    }
    let ranges = match active {
        ActiveSet::All => vec![0..n],
        ActiveSet::Ranges(r) => {
            if let Some(bad) = r.iter().find(|r| r.end > n || r.start > r.end) {
                return Err(OptimizerError::RangeOutOfBounds { start: bad.start, end: bad.end, len: n });
            }
            r.clone()
        }
    };
    state.step += 1;
    let AdamConfig { learning_rate, beta1, beta2, epsilon } = state.config;
    let t = state.step as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for range in ranges {
        for i in range {
            let g = grad[i];
            state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
            state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
            let m_hat = state.m[i] / c1;
            let v_hat = state.v[i] / c2;
            theta[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_parameters() {
        let mut s = AdamState::new(3, AdamConfig::default());
        let mut theta = vec![1.0, -2.0, 3.0];
        adam_step(&mut s, &mut theta, &[0.0; 3], &ActiveSet::All).unwrap();
        assert_eq!(theta, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut s = AdamState::new(2, AdamConfig::default());
        let mut theta = vec![0.0, 0.0];
        adam_step(&mut s, &mut theta, &[5.0, -0.01], &ActiveSet::All).unwrap();
        assert!((theta[0] + 1e-3).abs() < 1e-9);
        assert!((theta[1] - 1e-3).abs() < 1e-6);
    }

    #[test]
    fn inactive_indices_are_frozen() {
        let mut s = AdamState::new(4, AdamConfig::default());
        let mut theta = vec![1.0; 4];
        let active = ActiveSet::Ranges(vec![1..2, 3..4]);
        adam_step(&mut s, &mut theta, &[1.0; 4], &active).unwrap();
        assert_eq!((theta[0], theta[2]), (1.0, 1.0));
        assert_eq!((s.m[0], s.v[2]), (0.0, 0.0));
        assert!(theta[1] < 1.0 && theta[3] < 1.0);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn length_mismatch_is_reported() {
        let mut s = AdamState::new(2, AdamConfig::default());
        let mut theta = vec![0.0; 3];
        assert_eq!(
            adam_step(&mut s, &mut theta, &[0.0; 3], &ActiveSet::All),
            Err(OptimizerError::LengthMismatch { state: 2, params: 3, grad: 3 })
        );
        let mut theta = vec![0.0; 2];
        assert!(adam_step(&mut s, &mut theta, &[0.0; 2], &ActiveSet::Ranges(vec![1..5])).is_err());
    }

    #[test]
    fn descends_on_a_quadratic() {
        let mut s = AdamState::new(5, AdamConfig::default());
        let mut theta = vec![1.0; 5];
        let f = |t: &[f64]| t.iter().map(|x| x * x).sum::<f64>();
        let mut last = f(&theta);
        for _ in 0..100 {
            let g: Vec<f64> = theta.iter().map(|x| 2.0 * x).collect();
            adam_step(&mut s, &mut theta, &g, &ActiveSet::All).unwrap();
            let now = f(&theta);
            assert!(now < last);
            last = now;
        }
    }

    #[test]
    fn deterministic() {
        let run = || {
            let mut s = AdamState::new(3, AdamConfig::default());
            let mut theta = vec![0.3, -0.2, 0.1];
            for k in 0..10 {
                let g: Vec<f64> = theta.iter().map(|x: &f64| x.sin() + k as f64 * 0.01).collect();
                adam_step(&mut s, &mut theta, &g, &ActiveSet::All).unwrap();
            }
            (s, theta)
        };
        assert_eq!(run(), run());
    }
}
