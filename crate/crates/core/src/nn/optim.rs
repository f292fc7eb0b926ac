//! Adam with global-norm gradient clipping.

use serde::{Deserialize, Serialize};

use super::{ParamStore, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub clip_norm: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            clip_norm: Some(0.5),
        }
    }
}

pub fn global_norm<S: Scalar>(g: &[S]) -> f64 {
    g.iter().map(|v| v.as_f64() * v.as_f64()).sum::<f64>().sqrt()
}

/// Rescales `g` to norm `max_norm` if it is longer; returns the original norm.
pub fn clip_global_norm<S: Scalar>(g: &mut [S], max_norm: f64) -> f64 {
    let norm = global_norm(g);
    if norm > max_norm {
        let s = S::from_f64(max_norm / norm);
        g.iter_mut().for_each(|v| *v *= s);
    }
    norm
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam<S> {
    pub cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Scalar> Adam<S> {
    pub fn new(cfg: AdamConfig, n_params: usize) -> Self {
        Adam {
            cfg,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
            _marker: std::marker::PhantomData,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Clips `grads` and applies one update. Non-finite gradients abort before
    /// anything changes. Returns the pre-clip gradient norm.
    pub fn step(&mut self, params: &mut ParamStore<S>, grads: &mut [S]) -> Result<f64> {
        assert_eq!(grads.len(), params.values.len(), "gradient length");
        if let Some(name) = params.first_non_finite(grads) {
            return Err(Error::NonFiniteGradient(name.to_string()));
        }
        let norm = match self.cfg.clip_norm {
            Some(c) => clip_global_norm(grads, c),
            None => global_norm(grads),
        };
        self.t += 1;
        let c = &self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params
            .values
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let g = g.as_f64();
            *m = c.beta1 * *m + (1.0 - c.beta1) * g;
            *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
            let upd = c.lr * (*m / bc1) / ((*v / bc2).sqrt() + c.eps);
            *p = S::from_f64(p.as_f64() - upd);
        }
        Ok(norm)
    }
}
