use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::mlp::{Mlp, MlpCache};
use super::norm::RunningNorm;

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Log density of a diagonal Gaussian, summed over action dimensions.
pub fn gaussian_logprob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(action)
        .map(|((m, ls), a)| {
            let z = (a - m) * (-ls).exp();
            -0.5 * z * z - ls - HALF_LN_2PI
        })
        .sum()
}

pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|ls| ls + 0.5 + HALF_LN_2PI).sum()
}

/// Per-sample PPO-clip loss, `-min(r A, clip(r, 1-eps, 1+eps) A)`.
pub fn clipped_objective(logprob_new: f64, logprob_old: f64, advantage: f64, clip_eps: f64) -> f64 {
    let ratio = (logprob_new - logprob_old).exp();
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    -unclipped.min(clipped)
}

/// d(clipped_objective)/d(logprob_new).
pub(crate) fn clipped_objective_grad(
    logprob_new: f64,
    logprob_old: f64,
    advantage: f64,
    clip_eps: f64,
) -> f64 {
    let ratio = (logprob_new - logprob_old).exp();
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip_eps, 1.0 + clip_eps) * advantage;
    if unclipped <= clipped {
        -unclipped
    } else {
        0.0
    }
}

/// Gaussian policy: an MLP for the mean and a state-independent log
/// standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean_net: Mlp,
    pub log_std: Vec<f64>,
}

impl GaussianPolicy {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        act_dim: usize,
        hidden: usize,
        init_log_std: f64,
        rng: &mut R,
    ) -> Self {
        Self {
            mean_net: Mlp::new(&[obs_dim, hidden, hidden, act_dim], 0.01, rng),
            log_std: vec![init_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX); act_dim],
        }
    }

    pub fn act_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn effective_log_std(&self) -> Vec<f64> {
        self.log_std
            .iter()
            .map(|ls| ls.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect()
    }

    pub fn clamp_log_std(&mut self) {
        for ls in &mut self.log_std {
            *ls = ls.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueNet {
    pub net: Mlp,
}

impl ValueNet {
    pub fn new<R: Rng + ?Sized>(obs_dim: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            net: Mlp::new(&[obs_dim, hidden, hidden, 1], 1.0, rng),
        }
    }

    pub fn value(&self, obs: &[f64]) -> f64 {
        self.net.predict(obs)[0]
    }
}

/// Everything needed to act: networks plus the observation whitening that
/// was in force when they were trained.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentParams {
    pub policy: GaussianPolicy,
    pub value: ValueNet,
    pub obs_norm: RunningNorm,
}

/// A decision taken by [`AgentParams::act`].
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub action: Vec<f64>,
    pub logprob: f64,
    pub value: f64,
    /// The whitened observation the networks saw.
    pub input: Vec<f64>,
}

impl AgentParams {
    pub fn obs_dim(&self) -> usize {
        self.obs_norm.dim()
    }

    /// Samples an action for a raw observation. With `deterministic` the
    /// policy mean is returned and `rng` is left untouched.
    pub fn act<R: Rng + ?Sized>(&self, obs: &[f64], rng: &mut R, deterministic: bool) -> Decision {
        let input = self.obs_norm.normalize(obs);
        let mut cache = MlpCache::default();
        let mean = self.policy.mean_net.forward(&input, &mut cache).to_vec();
        let log_std = self.policy.effective_log_std();
        let action: Vec<f64> = if deterministic {
            mean.clone()
        } else {
            mean.iter()
                .zip(&log_std)
                .map(|(m, ls)| {
                    let z: f64 = StandardNormal.sample(rng);
                    m + ls.exp() * z
                })
                .collect()
        };
        let logprob = gaussian_logprob(&mean, &log_std, &action);
        let value = self.value.value(&input);
        Decision {
            action,
            logprob,
            value,
            input,
        }
    }

    pub fn value_of(&self, obs: &[f64]) -> f64 {
        self.value.value(&self.obs_norm.normalize(obs))
    }
}
