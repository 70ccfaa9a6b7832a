use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::{moving_average_crossing, win_streak_episode};
use crate::coach::{AgentTransition, CoachConfig, CoachedEnv, InterventionRecord};
use crate::env::{episode_score, Env, EnvConfig, EnvId};
use crate::error::{Error, Result};
use crate::pid::Pid;
use crate::ppo::{Agent, AgentParams, EpisodeBuffer, PpoConfig, RolloutBatch};

/// When a training run ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopRule {
    /// A win is an episode whose agent score is strictly above this.
    pub win_target: f64,
    /// Consecutive wins required.
    pub win_streak: usize,
    pub average_window: usize,
    pub episode_cap: usize,
    /// Keep training after the streak until the moving average also crosses.
    pub require_average_crossing: bool,
}

impl StopRule {
    pub fn for_env(id: EnvId) -> Self {
        match id {
            EnvId::InvertedPendulum => Self {
                win_target: 800.0,
                win_streak: 5,
                average_window: 10,
                episode_cap: 2000,
                require_average_crossing: true,
            },
            EnvId::DoublePendulum => Self {
                win_target: 5500.0,
                win_streak: 5,
                average_window: 100,
                episode_cap: 5000,
                require_average_crossing: true,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.win_target.is_finite() {
            return Err(Error::config("stop.win_target", "must be finite"));
        }
        if self.win_streak == 0 {
            return Err(Error::config("stop.win_streak", "must be at least 1"));
        }
        if self.average_window == 0 {
            return Err(Error::config("stop.average_window", "must be at least 1"));
        }
        if self.episode_cap == 0 {
            return Err(Error::config("stop.episode_cap", "must be at least 1"));
        }
        Ok(())
    }

    pub fn satisfied(&self, scores: &[f64]) -> bool {
        if scores.len() >= self.episode_cap {
            return true;
        }
        let streak = win_streak_episode(scores, self.win_target, self.win_streak).is_some();
        let average = !self.require_average_crossing
            || moving_average_crossing(scores, self.win_target, self.average_window).is_some();
        streak && average
    }
}

/// Everything a single training run depends on besides its seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub coach: CoachConfig,
    pub ppo: PpoConfig,
    pub stop: StopRule,
}

impl RunConfig {
    pub fn for_env(id: EnvId) -> Self {
        Self {
            env: EnvConfig::new(id),
            coach: CoachConfig::for_env(id),
            ppo: PpoConfig::default(),
            stop: StopRule::for_env(id),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.coach.validate()?;
        self.coach
            .monitor
            .read(&crate::env::PhysicsState::upright(self.env.env_id))?;
        self.ppo.validate()?;
        self.stop.validate()
    }

    pub fn without_coach(&self) -> Self {
        let mut cfg = *self;
        cfg.coach.enabled = false;
        cfg
    }

    /// FNV-1a hash of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("run config serializes");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in json.bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    /// Sum of agent-visible rewards.
    pub agent_score: f64,
    /// Agent score plus rewards hidden inside interventions.
    pub env_score: f64,
    /// Environment steps, agent and coach together.
    pub steps: usize,
    pub interventions: usize,
    pub interventions_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingCurve {
    pub fingerprint: String,
    pub seed: u64,
    pub coached: bool,
    pub episodes: Vec<EpisodeLog>,
    pub wall_clock_secs: f64,
}

impl TrainingCurve {
    pub fn agent_scores(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.agent_score).collect()
    }

    pub fn win_streak_episode(&self, stop: &StopRule) -> Option<usize> {
        win_streak_episode(&self.agent_scores(), stop.win_target, stop.win_streak)
    }

    pub fn average_crossing_episode(&self, stop: &StopRule) -> Option<usize> {
        moving_average_crossing(&self.agent_scores(), stop.win_target, stop.average_window)
    }

    /// Same seed, configuration and per-episode logs; wall-clock time ignored.
    pub fn same_trajectory(&self, other: &TrainingCurve) -> bool {
        self.seed == other.seed && self.episodes == other.episodes
    }
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub curve: TrainingCurve,
    pub params: AgentParams,
}

/// Hooks into a training run, for auditing what the learner receives.
pub trait TrainingObserver {
    fn on_transition(&mut self, _episode: usize, _t: &AgentTransition) {}

    /// Called once per finished episode with the coach's records and the
    /// environment's own tally of every reward it emitted.
    fn on_episode(
        &mut self,
        _log: &EpisodeLog,
        _interventions: &[InterventionRecord],
        _env_emitted_reward: f64,
    ) {
    }

    /// Called with the number of samples in each PPO batch.
    fn on_update(&mut self, _samples: usize) {}
}

/// Observer that ignores everything.
pub struct NoObserver;

impl TrainingObserver for NoObserver {}

/// Sub-stream identifiers for the per-run ChaCha generators.
mod stream {
    pub const INIT: u64 = 1;
    pub const ACTIONS: u64 = 2;
    pub const SHUFFLE: u64 = 3;
    pub const RESETS: u64 = 4;
    pub const EVAL: u64 = 5;
}

fn rng_for(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Reset seed of `episode` within stream `stream_id` of a run.
fn episode_seed(seed: u64, stream_id: u64, episode: usize) -> u64 {
    // splitmix64 finalizer over a (seed, stream, episode) mix
    let mut z = seed
        .wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(stream_id.wrapping_mul(0xbf58_476d_1ce4_e5b9))
        .wrapping_add(episode as u64);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn check_finite(values: &[f64], episode: usize, what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Diverged {
            episode,
            detail: format!("non-finite {what}: {values:?}"),
        })
    }
}

pub fn run_training(cfg: &RunConfig, seed: u64) -> Result<TrainingRun> {
    run_training_observed(cfg, seed, &mut NoObserver)
}

/// Alternates coached rollout collection and PPO updates until the stop rule
/// fires. Fully determined by `(cfg, seed)`.
pub fn run_training_observed(
    cfg: &RunConfig,
    seed: u64,
    observer: &mut dyn TrainingObserver,
) -> Result<TrainingRun> {
    cfg.validate()?;
    let started = Instant::now();
    let mut init_rng = rng_for(seed, stream::INIT);
    let mut action_rng = rng_for(seed, stream::ACTIONS);
    let mut shuffle_rng = rng_for(seed, stream::SHUFFLE);

    let obs_dim = cfg.env.env_id.obs_dim();
    let mut agent = Agent::new(obs_dim, 1, cfg.ppo, &mut init_rng)?;
    let mut coached = CoachedEnv::new(Env::new(cfg.env)?, cfg.coach)?;
    let mut pending: Vec<EpisodeBuffer> = Vec::with_capacity(cfg.ppo.rollout_episodes);
    let mut logs = Vec::new();
    let mut scores = Vec::new();

    for episode in 1..=cfg.stop.episode_cap {
        let mut obs = coached.reset(episode, episode_seed(seed, stream::RESETS, episode));
        let mut buf = EpisodeBuffer::default();
        loop {
            agent.params.obs_norm.update(&obs.0);
            let decision = agent.params.act(&obs.0, &mut action_rng, false);
            check_finite(&decision.action, episode, "action")?;
            let t = coached.step(decision.action[0])?;
            check_finite(&t.next_obs.0, episode, "observation")?;
            observer.on_transition(episode, &t);
            buf.inputs.push(decision.input);
            buf.actions.push(decision.action);
            buf.logprobs.push(decision.logprob);
            buf.values.push(decision.value);
            buf.rewards.push(t.reward);
            obs = t.next_obs;
            if t.terminal || t.truncated {
                buf.terminal = t.terminal;
                if !t.terminal {
                    buf.bootstrap_value = agent.params.value_of(&obs.0);
                }
                break;
            }
        }

        let records = coached.interventions();
        let agent_score = episode_score(&buf.rewards);
        let hidden: f64 = records.iter().map(|r| r.hidden_reward).sum();
        let log = EpisodeLog {
            episode,
            agent_score,
            env_score: agent_score + hidden,
            steps: coached.env().steps_taken(),
            interventions: records.len(),
            interventions_failed: records.iter().filter(|r| !r.success).count(),
        };
        observer.on_episode(&log, records, coached.env().emitted_reward());
        scores.push(agent_score);
        logs.push(log);
        pending.push(buf);

        if pending.len() == cfg.ppo.rollout_episodes {
            let batch = RolloutBatch::from_episodes(&pending, cfg.ppo.gamma, cfg.ppo.lam)?;
            observer.on_update(batch.len());
            agent
                .update(&batch, &mut shuffle_rng)
                .map_err(|e| match e {
                    Error::Diverged { detail, .. } => Error::Diverged { episode, detail },
                    other => other,
                })?;
            pending.clear();
        }

        if cfg.stop.satisfied(&scores) {
            break;
        }
    }

    Ok(TrainingRun {
        curve: TrainingCurve {
            fingerprint: cfg.fingerprint(),
            seed,
            coached: cfg.coach.enabled,
            episodes: logs,
            wall_clock_secs: started.elapsed().as_secs_f64(),
        },
        params: agent.params,
    })
}

/// Mean score of the deterministic policy over coach-free episodes.
pub fn evaluate(
    params: &AgentParams,
    env_cfg: &EnvConfig,
    episodes: usize,
    seed: u64,
) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::Usage("evaluate needs at least one episode".into()));
    }
    let mut env = Env::new(*env_cfg)?;
    let mut unused = rng_for(seed, stream::EVAL);
    let mut total = 0.0;
    for episode in 1..=episodes {
        let mut obs = env.reset(episode_seed(seed, stream::EVAL, episode));
        let mut rewards = Vec::with_capacity(env_cfg.max_steps);
        while !env.is_done() {
            let d = params.act(&obs.0, &mut unused, true);
            let r = env.step(d.action[0])?;
            rewards.push(r.reward);
            obs = r.observation;
        }
        total += episode_score(&rewards);
    }
    Ok(total / episodes as f64)
}

/// Mean score of the coach's PID running the whole episode on its own,
/// regulating the monitored quantity to zero.
pub fn pid_baseline(
    env_cfg: &EnvConfig,
    coach: &CoachConfig,
    episodes: usize,
    seed: u64,
) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::Usage(
            "pid baseline needs at least one episode".into(),
        ));
    }
    coach.gains.validate()?;
    let mut env = Env::new(*env_cfg)?;
    let dt = env_cfg.mechanism.dt;
    let mut total = 0.0;
    for episode in 1..=episodes {
        env.reset(episode_seed(seed, stream::EVAL, episode));
        let mut pid = Pid::new(coach.gains);
        let mut rewards = Vec::with_capacity(env_cfg.max_steps);
        while !env.is_done() {
            let error = coach.monitor.read(&env.state())?;
            let force = coach.monitor.actuation_sign() * pid.update(error, dt)?;
            rewards.push(env.step(force)?.reward);
        }
        total += episode_score(&rewards);
    }
    Ok(total / episodes as f64)
}
