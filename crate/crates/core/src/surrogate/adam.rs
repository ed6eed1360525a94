use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::config("adam.lr", "must be positive"));
        }
        for (name, b) in [("adam.beta1", self.beta1), ("adam.beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::config(name, "must lie in [0, 1)"));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("adam.eps", "must be positive"));
        }
        Ok(())
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update; advances `state.t` first.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &AdamConfig) {
    assert_eq!(params.len(), grads.len());
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let step = cfg.lr / c1;
    let root_c2 = c2.sqrt();
    params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
        .for_each(|((p, &g), (m, v))| {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            *p -= step * *m / (v.sqrt() / root_c2 + cfg.eps);
        });
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Textbook form with explicit bias-corrected moments.
    fn naive_step(
        p: &mut [f64],
        g: &[f64],
        m: &mut [f64],
        v: &mut [f64],
        t: u64,
        cfg: &AdamConfig,
    ) {
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let mhat = m[i] / (1.0 - cfg.beta1.powi(t as i32));
            let vhat = v[i] / (1.0 - cfg.beta2.powi(t as i32));
            p[i] -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
        }
    }

    #[test]
    fn zero_gradient_keeps_params_and_decays_moments() {
        let cfg = AdamConfig::default();
        let mut p = vec![1.0, -2.0];
        let mut s = AdamState::new(2);
        s.m = vec![0.5, 0.1];
        s.v = vec![0.2, 0.3];
        s.t = 3;
        adam_step(&mut p, &[0.0, 0.0], &mut s, &cfg);
        assert!((s.m[0] - 0.45).abs() < 1e-15);
        assert!((s.v[1] - 0.2997).abs() < 1e-15);
        // A stale first moment still moves parameters; with zero moments they stay.
        let mut q = vec![1.0, -2.0];
        let mut z = AdamState::new(2);
        adam_step(&mut q, &[0.0, 0.0], &mut z, &cfg);
        assert_eq!(q, vec![1.0, -2.0]);
        assert_eq!(z.t, 1);
    }

    #[test]
    fn first_step_is_signed_learning_rate() {
        let cfg = AdamConfig::default();
        let g = [3.0, -0.02, 1e-3];
        let mut p = vec![0.0; 3];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &g, &mut s, &cfg);
        for (pi, gi) in p.iter().zip(&g) {
            // mhat = g, vhat = g^2 at t = 1.
            let expect = -cfg.lr * gi / (gi.abs() + cfg.eps);
            assert!((pi - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn matches_textbook_loop() {
        let cfg = AdamConfig {
            lr: 0.01,
            ..Default::default()
        };
        let n = 17;
        let mut p: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut q = p.clone();
        let mut s = AdamState::new(n);
        let (mut m, mut v) = (vec![0.0; n], vec![0.0; n]);
        for t in 1..=25u64 {
            let g: Vec<f64> = (0..n)
                .map(|i| ((i as f64) * 0.7 + t as f64).cos())
                .collect();
            adam_step(&mut p, &g, &mut s, &cfg);
            naive_step(&mut q, &g, &mut m, &mut v, t, &cfg);
        }
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
    }

    #[test]
    fn config_validation() {
        assert!(AdamConfig::default().validate().is_ok());
        let bad = AdamConfig {
            beta2: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
