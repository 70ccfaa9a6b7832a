//! PID coaching with hidden interventions.
//!
//! While the monitored quantity stays within `boundary` the agent acts
//! freely. As soon as one of the agent's steps lands outside, the PID takes
//! over and drives the quantity back toward the boundary. Everything that
//! happens during the takeover (steps, forces, rewards) goes into an
//! [`InterventionRecord`] for bookkeeping; the agent only ever receives an
//! [`AgentTransition`] that stitches its own step to the post-intervention
//! observation.

use serde::{Deserialize, Serialize};

use crate::env::{Env, EnvId, Observation, PhysicsState, StepResult};
use crate::error::{Error, Result};
use crate::pid::{Pid, PidGains};

/// Physics quantity the coach watches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    /// Pole angular velocity of the single pendulum.
    PoleAngularVelocity,
    /// Lower link angle of the double pendulum.
    LowerLinkAngle,
}

impl Monitor {
    pub fn for_env(id: EnvId) -> Self {
        match id {
            EnvId::InvertedPendulum => Monitor::PoleAngularVelocity,
            EnvId::DoublePendulum => Monitor::LowerLinkAngle,
        }
    }

    pub fn read(self, state: &PhysicsState) -> Result<f64> {
        match (self, state) {
            (Monitor::PoleAngularVelocity, PhysicsState::Single(s)) => Ok(s.theta_dot),
            (Monitor::LowerLinkAngle, PhysicsState::Double(s)) => Ok(s.theta1),
            (m, s) => Err(Error::Usage(format!("monitor {m:?} cannot read {s:?}"))),
        }
    }

    /// Cart force per unit of controller output. A positive cart force
    /// raises both monitored quantities, so the controller pushes against
    /// its error.
    pub fn actuation_sign(self) -> f64 {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoachConfig {
    pub monitor: Monitor,
    /// Threshold on |monitor|; may be `+inf` to make the coach inert.
    pub boundary: f64,
    pub max_intervention_steps: usize,
    pub gains: PidGains,
    pub enabled: bool,
}

impl CoachConfig {
    pub const MAX_INTERVENTION_STEPS: usize = 50;

    pub fn for_env(id: EnvId) -> Self {
        let boundary = match id {
            EnvId::InvertedPendulum => 0.4,
            EnvId::DoublePendulum => 0.2,
        };
        Self {
            monitor: Monitor::for_env(id),
            boundary,
            max_intervention_steps: Self::MAX_INTERVENTION_STEPS,
            gains: PidGains::default(),
            enabled: true,
        }
    }

    pub fn disabled(id: EnvId) -> Self {
        Self {
            enabled: false,
            ..Self::for_env(id)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.boundary.is_nan() || self.boundary <= 0.0 {
            return Err(Error::config(
                "coach.boundary",
                format!("must be positive, got {}", self.boundary),
            ));
        }
        if self.max_intervention_steps == 0 {
            return Err(Error::config(
                "coach.max_intervention_steps",
                "must be at least 1",
            ));
        }
        self.gains.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionRecord {
    pub episode: usize,
    /// Number of agent decisions taken in the episode when the coach took over.
    pub trigger_step: usize,
    pub steps_used: usize,
    pub success: bool,
    pub hidden_reward: f64,
    pub terminal_during: bool,
    /// Forces the coach applied, in order.
    pub forces: Vec<f64>,
}

/// The only experience the agent learns from. There is deliberately no
/// field through which intervention data could travel.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentTransition {
    pub obs: Observation,
    pub action: f64,
    pub reward: f64,
    pub next_obs: Observation,
    pub terminal: bool,
    pub truncated: bool,
}

pub fn is_critical(state: &PhysicsState, cfg: &CoachConfig) -> Result<bool> {
    if !cfg.enabled {
        return Ok(false);
    }
    Ok(cfg.monitor.read(state)?.abs() > cfg.boundary)
}

/// Runs the PID until the monitored quantity is back inside the boundary,
/// the step budget runs out, or the episode ends.
pub fn intervene(
    env: &mut Env,
    cfg: &CoachConfig,
    episode: usize,
    trigger_step: usize,
) -> Result<InterventionRecord> {
    if env.is_done() {
        return Err(Error::Usage(
            "cannot intervene in a finished episode".into(),
        ));
    }
    if !is_critical(&env.state(), cfg)? {
        return Err(Error::Usage(
            "intervene called outside the critical region".into(),
        ));
    }
    let dt = env.config().mechanism.dt;
    let mut pid = Pid::new(cfg.gains);
    let mut record = InterventionRecord {
        episode,
        trigger_step,
        steps_used: 0,
        success: false,
        hidden_reward: 0.0,
        terminal_during: false,
        forces: Vec::new(),
    };
    while record.steps_used < cfg.max_intervention_steps {
        let monitor = cfg.monitor.read(&env.state())?;
        let error = monitor - monitor.signum() * cfg.boundary;
        let force = cfg.monitor.actuation_sign() * pid.update(error, dt)?;
        let r = env.step(force)?;
        record.forces.push(force);
        record.steps_used += 1;
        record.hidden_reward += r.reward;
        if r.terminal || r.truncated {
            record.terminal_during = true;
            break;
        }
        if !is_critical(&env.state(), cfg)? {
            record.success = true;
            break;
        }
    }
    Ok(record)
}

/// Applies the agent's action and, if it lands outside the boundary, lets
/// the coach intervene before the agent observes the outcome.
pub fn coached_step(
    env: &mut Env,
    action: f64,
    cfg: &CoachConfig,
    episode: usize,
    decision: usize,
) -> Result<(AgentTransition, Option<InterventionRecord>)> {
    let obs = env.observation();
    let StepResult {
        observation,
        reward,
        terminal,
        truncated,
    } = env.step(action)?;
    if terminal || truncated || !is_critical(&env.state(), cfg)? {
        let t = AgentTransition {
            obs,
            action,
            reward,
            next_obs: observation,
            terminal,
            truncated,
        };
        return Ok((t, None));
    }
    let record = intervene(env, cfg, episode, decision)?;
    let t = AgentTransition {
        obs,
        action,
        reward,
        next_obs: env.observation(),
        terminal: env.is_terminated(),
        truncated: env.is_truncated(),
    };
    Ok((t, Some(record)))
}

/// One environment wrapped by one coach, with per-episode bookkeeping.
#[derive(Debug, Clone)]
pub struct CoachedEnv {
    env: Env,
    cfg: CoachConfig,
    episode: usize,
    decisions: usize,
    records: Vec<InterventionRecord>,
}

impl CoachedEnv {
    pub fn new(env: Env, cfg: CoachConfig) -> Result<Self> {
        cfg.validate()?;
        Monitor::read(cfg.monitor, &env.state())?;
        Ok(Self {
            env,
            cfg,
            episode: 0,
            decisions: 0,
            records: Vec::new(),
        })
    }

    pub fn env(&self) -> &Env {
        &self.env
    }

    pub fn config(&self) -> &CoachConfig {
        &self.cfg
    }

    /// Starts episode `episode` and clears the intervention log.
    pub fn reset(&mut self, episode: usize, seed: u64) -> Observation {
        self.episode = episode;
        self.decisions = 0;
        self.records.clear();
        self.env.reset(seed)
    }

    pub fn reset_to(&mut self, episode: usize, state: PhysicsState) -> Result<Observation> {
        self.episode = episode;
        self.decisions = 0;
        self.records.clear();
        self.env.reset_to(state)
    }

    pub fn step(&mut self, action: f64) -> Result<AgentTransition> {
        let (t, record) = coached_step(
            &mut self.env,
            action,
            &self.cfg,
            self.episode,
            self.decisions,
        )?;
        self.decisions += 1;
        if let Some(r) = record {
            self.records.push(r);
        }
        Ok(t)
    }

    pub fn is_done(&self) -> bool {
        self.env.is_done()
    }

    pub fn decisions(&self) -> usize {
        self.decisions
    }

    pub fn interventions(&self) -> &[InterventionRecord] {
        &self.records
    }
}
