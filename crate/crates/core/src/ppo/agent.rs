use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::gae::{gae, normalize_advantages};
use super::mlp::MlpCache;
use super::norm::RunningNorm;
use super::policy::{
    clipped_objective, clipped_objective_grad, gaussian_entropy, gaussian_logprob, AgentParams,
    GaussianPolicy, ValueNet, LOG_STD_MAX, LOG_STD_MIN,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lam: f64,
    pub clip_eps: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub learning_rate: f64,
    /// Episodes collected between updates.
    pub rollout_episodes: usize,
    pub entropy_coef: f64,
    pub hidden: usize,
    pub init_log_std: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lam: 0.95,
            clip_eps: 0.2,
            epochs: 10,
            minibatch_size: 64,
            learning_rate: 3e-4,
            rollout_episodes: 10,
            entropy_coef: 0.0,
            hidden: 64,
            init_log_std: 0.0,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(format!("ppo.{field}"), msg))
            }
        };
        check(
            self.gamma > 0.0 && self.gamma <= 1.0,
            "gamma",
            "must lie in (0, 1]",
        )?;
        check((0.0..=1.0).contains(&self.lam), "lam", "must lie in [0, 1]")?;
        check(
            self.clip_eps > 0.0 && self.clip_eps.is_finite(),
            "clip_eps",
            "must be positive",
        )?;
        check(self.epochs >= 1, "epochs", "must be at least 1")?;
        check(
            self.minibatch_size >= 1,
            "minibatch_size",
            "must be at least 1",
        )?;
        check(
            self.learning_rate > 0.0 && self.learning_rate.is_finite(),
            "learning_rate",
            "must be positive",
        )?;
        check(
            self.rollout_episodes >= 1,
            "rollout_episodes",
            "must be at least 1",
        )?;
        check(
            self.entropy_coef >= 0.0 && self.entropy_coef.is_finite(),
            "entropy_coef",
            "must be non-negative",
        )?;
        check(self.hidden >= 1, "hidden", "must be at least 1")?;
        check(
            (LOG_STD_MIN..=LOG_STD_MAX).contains(&self.init_log_std),
            "init_log_std",
            "must lie in [-5, 2]",
        )
    }
}

/// Agent-visible data of one episode, as seen by the networks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpisodeBuffer {
    pub inputs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub logprobs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub terminal: bool,
    /// Value of the final next-observation; ignored when `terminal`.
    pub bootstrap_value: f64,
}

impl EpisodeBuffer {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub action: Vec<f64>,
    pub logprob_old: f64,
    pub advantage: f64,
    pub value_target: f64,
}

/// Training batch: per-sample data with advantages normalized over the
/// whole batch and value targets `advantage + value` taken before
/// normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch {
    pub samples: Vec<Sample>,
}

impl RolloutBatch {
    pub fn from_episodes(episodes: &[EpisodeBuffer], gamma: f64, lam: f64) -> Result<Self> {
        let mut samples = Vec::with_capacity(episodes.iter().map(EpisodeBuffer::len).sum());
        for ep in episodes {
            let mut values = ep.values.clone();
            values.push(if ep.terminal { 0.0 } else { ep.bootstrap_value });
            let adv = gae(&ep.rewards, &values, ep.terminal, gamma, lam)?;
            for (t, a) in adv.into_iter().enumerate() {
                samples.push(Sample {
                    input: ep.inputs[t].clone(),
                    action: ep.actions[t].clone(),
                    logprob_old: ep.logprobs[t],
                    advantage: a,
                    value_target: a + ep.values[t],
                });
            }
        }
        let mut adv: Vec<f64> = samples.iter().map(|s| s.advantage).collect();
        normalize_advantages(&mut adv);
        for (s, a) in samples.iter_mut().zip(adv) {
            s.advantage = a;
        }
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Gradients with the same layout as the trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub policy: Vec<f64>,
    pub log_std: Vec<f64>,
    pub value: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub policy: f64,
    pub entropy: f64,
    pub value: f64,
}

impl LossParts {
    pub fn total(&self, entropy_coef: f64) -> f64 {
        self.policy - entropy_coef * self.entropy + self.value
    }
}

/// Clipped policy loss minus weighted entropy plus value MSE, averaged over
/// `samples`, together with its exact gradient.
pub fn loss_and_grad(
    params: &AgentParams,
    samples: &[Sample],
    cfg: &PpoConfig,
) -> (LossParts, Grads) {
    let refs: Vec<&Sample> = samples.iter().collect();
    loss_and_grad_refs(params, &refs, cfg)
}

fn loss_and_grad_refs(
    params: &AgentParams,
    samples: &[&Sample],
    cfg: &PpoConfig,
) -> (LossParts, Grads) {
    let policy = &params.policy;
    let mut grads = Grads {
        policy: vec![0.0; policy.mean_net.params().len()],
        log_std: vec![0.0; policy.log_std.len()],
        value: vec![0.0; params.value.net.params().len()],
    };
    let mut parts = LossParts::default();
    if samples.is_empty() {
        return (parts, grads);
    }
    let n = samples.len() as f64;
    let log_std = policy.effective_log_std();
    let inv_var: Vec<f64> = log_std.iter().map(|ls| (-2.0 * ls).exp()).collect();
    let log_std_live: Vec<bool> = policy
        .log_std
        .iter()
        .map(|ls| (LOG_STD_MIN..=LOG_STD_MAX).contains(ls))
        .collect();
    let mut pcache = MlpCache::default();
    let mut vcache = MlpCache::default();
    let mut grad_mean = vec![0.0; policy.act_dim()];

    for s in samples {
        let mean = policy.mean_net.forward(&s.input, &mut pcache).to_vec();
        let logprob = gaussian_logprob(&mean, &log_std, &s.action);
        parts.policy += clipped_objective(logprob, s.logprob_old, s.advantage, cfg.clip_eps) / n;
        let dlogp = clipped_objective_grad(logprob, s.logprob_old, s.advantage, cfg.clip_eps) / n;
        if dlogp != 0.0 {
            for d in 0..mean.len() {
                let diff = s.action[d] - mean[d];
                grad_mean[d] = dlogp * diff * inv_var[d];
                if log_std_live[d] {
                    grads.log_std[d] += dlogp * (diff * diff * inv_var[d] - 1.0);
                }
            }
            policy
                .mean_net
                .backward(&mut pcache, &grad_mean, &mut grads.policy);
        }

        let v = params.value.net.forward(&s.input, &mut vcache)[0];
        let err = v - s.value_target;
        parts.value += err * err / n;
        params
            .value
            .net
            .backward(&mut vcache, &[2.0 * err / n], &mut grads.value);
    }

    parts.entropy = gaussian_entropy(&log_std);
    for (g, live) in grads.log_std.iter_mut().zip(&log_std_live) {
        if *live {
            *g -= cfg.entropy_coef;
        }
    }
    (parts, grads)
}

/// Learner state: parameters plus optimizer moments.
#[derive(Debug, Clone)]
pub struct Agent {
    pub params: AgentParams,
    pub cfg: PpoConfig,
    opt_policy: Adam,
    opt_log_std: Adam,
    opt_value: Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub last: LossParts,
    pub minibatches: usize,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(
        obs_dim: usize,
        act_dim: usize,
        cfg: PpoConfig,
        rng: &mut R,
    ) -> Result<Self> {
        cfg.validate()?;
        let policy = GaussianPolicy::new(obs_dim, act_dim, cfg.hidden, cfg.init_log_std, rng);
        let value = ValueNet::new(obs_dim, cfg.hidden, rng);
        Ok(Self::from_params(
            AgentParams {
                policy,
                value,
                obs_norm: RunningNorm::new(obs_dim),
            },
            cfg,
        ))
    }

    pub fn from_params(params: AgentParams, cfg: PpoConfig) -> Self {
        let lr = cfg.learning_rate;
        Self {
            opt_policy: Adam::new(params.policy.mean_net.params().len(), lr),
            opt_log_std: Adam::new(params.policy.log_std.len(), lr),
            opt_value: Adam::new(params.value.net.params().len(), lr),
            params,
            cfg,
        }
    }

    /// Several epochs of shuffled minibatch Adam steps on the batch.
    pub fn update<R: Rng + ?Sized>(
        &mut self,
        batch: &RolloutBatch,
        rng: &mut R,
    ) -> Result<UpdateStats> {
        if batch.is_empty() {
            return Err(Error::Usage("PPO update on an empty batch".into()));
        }
        let mut order: Vec<usize> = (0..batch.len()).collect();
        let mut stats = UpdateStats::default();
        let mut mb = Vec::with_capacity(self.cfg.minibatch_size);
        for _ in 0..self.cfg.epochs {
            order.shuffle(rng);
            for chunk in order.chunks(self.cfg.minibatch_size) {
                mb.clear();
                mb.extend(chunk.iter().map(|&i| &batch.samples[i]));
                let (parts, grads) = loss_and_grad_refs(&self.params, &mb, &self.cfg);
                let total = parts.total(self.cfg.entropy_coef);
                if !total.is_finite() {
                    return Err(Error::Diverged {
                        episode: 0,
                        detail: format!("non-finite PPO loss {parts:?}"),
                    });
                }
                self.opt_policy
                    .step(self.params.policy.mean_net.params_mut(), &grads.policy);
                self.opt_log_std
                    .step(&mut self.params.policy.log_std, &grads.log_std);
                self.params.policy.clamp_log_std();
                self.opt_value
                    .step(self.params.value.net.params_mut(), &grads.value);
                stats.last = parts;
                stats.minibatches += 1;
            }
        }
        Ok(stats)
    }
}
