//! Diagonal Gaussian policy heads.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Scalar;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Mean vector with either one shared log-std or one per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHead<S> {
    pub mean: Vec<S>,
    pub log_std: Vec<S>,
}

impl<S: Scalar> GaussianHead<S> {
    pub fn log_std_at(&self, i: usize) -> f64 {
        if self.log_std.len() == 1 {
            self.log_std[0].as_f64()
        } else {
            self.log_std[i].as_f64()
        }
    }
}

/// Draws `mean + std * n` with standard normal `n` per entry.
pub fn sample<S: Scalar>(head: &GaussianHead<S>, rng: &mut impl Rng) -> Vec<S> {
    head.mean
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let n: f64 = StandardNormal.sample(rng);
            S::from_f64(m.as_f64() + head.log_std_at(i).exp() * n)
        })
        .collect()
}

/// Summed log-density of `x`.
pub fn log_prob<S: Scalar>(head: &GaussianHead<S>, x: &[S]) -> f64 {
    assert_eq!(x.len(), head.mean.len(), "latent shape");
    let mut acc = 0.0;
    for (i, (&xi, &mi)) in x.iter().zip(&head.mean).enumerate() {
        let ls = head.log_std_at(i);
        let z = (xi.as_f64() - mi.as_f64()) * (-ls).exp();
        acc += -0.5 * z * z - ls - HALF_LN_2PI;
    }
    acc
}

/// Gradient of [`log_prob`] with respect to the mean entries and the log-std
/// entries (a shared log-std receives the sum).
pub fn log_prob_grad<S: Scalar>(head: &GaussianHead<S>, x: &[S]) -> (Vec<f64>, Vec<f64>) {
    let mut gmean = Vec::with_capacity(x.len());
    let mut gls = vec![0.0; head.log_std.len()];
    let shared = head.log_std.len() == 1;
    for (i, (&xi, &mi)) in x.iter().zip(&head.mean).enumerate() {
        let ls = head.log_std_at(i);
        let inv_var = (-2.0 * ls).exp();
        let d = xi.as_f64() - mi.as_f64();
        gmean.push(d * inv_var);
        gls[if shared { 0 } else { i }] += d * d * inv_var - 1.0;
    }
    (gmean, gls)
}

/// Numerically stable softmax.
pub fn softmax<S: Scalar>(x: &[S]) -> Vec<f64> {
    let m = x.iter().map(|v| v.as_f64()).fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v.as_f64() - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
