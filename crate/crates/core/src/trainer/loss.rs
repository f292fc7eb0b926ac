//! Clipped-surrogate actor objective and TD critic loss with their
//! parameter gradients.

use crate::error::{Error, Result};
use crate::nn::{log_prob, log_prob_grad, Actor, Critic, Scalar};

/// One frame as seen by the actor objective.
#[derive(Debug, Clone, Copy)]
pub struct ActorSample<'a, S> {
    pub obs: &'a [S],
    /// Sampled latent the action was derived from.
    pub latent: &'a [S],
    /// Log-density of `latent` under the policy that acted.
    pub old_log_prob: f64,
    pub advantage: f64,
}

/// One frame as seen by the critic loss.
#[derive(Debug, Clone, Copy)]
pub struct CriticSample<'a, S> {
    pub o_start: &'a [S],
    pub o_end: &'a [S],
    pub reward: f64,
    /// The network died during the macro action; the bootstrap is dropped.
    pub terminal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActorLossConfig {
    pub clip_eps: f64,
    pub normalize_advantages: bool,
    pub entropy_coef: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ActorLossStats {
    /// Mean clipped surrogate plus any entropy bonus (to be maximized).
    pub objective: f64,
    pub mean_ratio: f64,
    /// Fraction of frames whose ratio lies outside `[1 - eps, 1 + eps]`.
    pub clip_fraction: f64,
}

/// Zero mean, unit std (std floored at 1e-8). A single value maps to 0.
pub fn normalize(adv: &[f64]) -> Vec<f64> {
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt().max(1e-8);
    adv.iter().map(|a| (a - mean) / std).collect()
}

/// `min(ratio * adv, clip(ratio, 1 - eps, 1 + eps) * adv)`.
pub fn clipped_term(ratio: f64, adv: f64, eps: f64) -> f64 {
    (ratio * adv).min(ratio.clamp(1.0 - eps, 1.0 + eps) * adv)
}

/// Mean clipped surrogate over `batch`. With `grad`, adds the gradient of the
/// returned objective into it.
pub fn actor_loss<S: Scalar>(
    actor: &Actor<S>,
    t: usize,
    batch: &[ActorSample<'_, S>],
    cfg: &ActorLossConfig,
    mut grad: Option<&mut [S]>,
) -> Result<ActorLossStats> {
    assert!(!batch.is_empty(), "empty actor batch");
    let n = batch.len() as f64;
    let raw: Vec<f64> = batch.iter().map(|s| s.advantage).collect();
    let adv = if cfg.normalize_advantages { normalize(&raw) } else { raw };
    let mut stats = ActorLossStats::default();
    for (i, s) in batch.iter().enumerate() {
        let (head, cache) = actor.forward_cached(s.obs, t)?;
        let lp = log_prob(&head, s.latent);
        let ratio = (lp - s.old_log_prob).exp();
        if !ratio.is_finite() {
            return Err(Error::NonFiniteRatio(i));
        }
        let a = adv[i];
        stats.objective += clipped_term(ratio, a, cfg.clip_eps) / n;
        stats.mean_ratio += ratio / n;
        if (ratio - 1.0).abs() > cfg.clip_eps {
            stats.clip_fraction += 1.0 / n;
        }
        // entropy of the Gaussian: sum over entries of (log_std + const)
        let entries = head.mean.len() as f64;
        let ls_count = head.log_std.len() as f64;
        let entropy: f64 = (0..head.mean.len()).map(|j| head.log_std_at(j)).sum::<f64>()
            + entries * 0.5 * (1.0 + (2.0 * std::f64::consts::PI).ln());
        stats.objective += cfg.entropy_coef * entropy / n;
        let Some(g) = grad.as_deref_mut() else { continue };
        // the unclipped branch carries the gradient whenever it is the minimum
        let active = ratio * a <= ratio.clamp(1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
        let coef = if active { ratio * a / n } else { 0.0 };
        let (gm, gs) = log_prob_grad(&head, s.latent);
        let gmean: Vec<S> = gm.iter().map(|v| S::from_f64(coef * v)).collect();
        let ent_per_ls = cfg.entropy_coef * entries / ls_count / n;
        let gls: Vec<S> = gs.iter().map(|v| S::from_f64(coef * v + ent_per_ls)).collect();
        actor.backward(s.obs, t, &cache, &gmean, &gls, g);
    }
    Ok(stats)
}

/// Mean squared one-step TD error. With `grad`, adds the gradient of the loss
/// (through both value terms) into it.
pub fn critic_loss<S: Scalar>(
    critic: &Critic<S>,
    t: usize,
    batch: &[CriticSample<'_, S>],
    gamma: f64,
    mut grad: Option<&mut [S]>,
) -> Result<f64> {
    assert!(!batch.is_empty(), "empty critic batch");
    let n = batch.len() as f64;
    let mut loss = 0.0;
    for s in batch {
        let (v0, c0) = critic.forward_cached(s.o_start, t)?;
        let end = if s.terminal {
            None
        } else {
            Some(critic.forward_cached(s.o_end, t)?)
        };
        let v1 = end.as_ref().map_or(0.0, |(v, _)| v.as_f64());
        let td = s.reward + gamma * v1 - v0.as_f64();
        loss += td * td / n;
        let Some(g) = grad.as_deref_mut() else { continue };
        let d = 2.0 * td / n;
        critic.backward(s.o_start, t, &c0, S::from_f64(-d), g);
        if let Some((_, c1)) = &end {
            critic.backward(s.o_end, t, c1, S::from_f64(gamma * d), g);
        }
    }
    Ok(loss)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_arithmetic() {
        assert!((clipped_term(1.5, 1.0, 0.2) - 1.2).abs() < 1e-15);
        assert!((clipped_term(0.5, -1.0, 0.2) + 0.8).abs() < 1e-15);
        assert_eq!(clipped_term(1.0, 0.3, 0.2), 0.3);
    }

    #[test]
    fn normalization_moments() {
        let z = normalize(&[1.0, 2.0, 3.0, 6.0]);
        let mean: f64 = z.iter().sum::<f64>() / 4.0;
        let var: f64 = z.iter().map(|v| v * v).sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-15 && (var - 1.0).abs() < 1e-12);
        assert_eq!(normalize(&[5.0]), vec![0.0]);
    }
}
