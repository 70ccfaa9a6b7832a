//! Episode semantics over the mechanism kernels: observations, rewards,
//! termination, truncation and seeded resets.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    double_tip_height, rk4_step, CartPole, CartPoleState, DoubleCartPole, DoubleCartPoleState,
    MechanismParams,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvId {
    InvertedPendulum,
    DoublePendulum,
}

impl EnvId {
    pub fn obs_dim(self) -> usize {
        match self {
            EnvId::InvertedPendulum => 4,
            EnvId::DoublePendulum => 11,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EnvId::InvertedPendulum => "inverted_pendulum",
            EnvId::DoublePendulum => "double_pendulum",
        }
    }
}

impl std::fmt::Display for EnvId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Reward and termination constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardSpec {
    /// Reward for every non-terminal step.
    pub alive_bonus: f64,
    /// Inverted pendulum: episode terminates once |theta| exceeds this.
    pub angle_limit: f64,
    /// Double pendulum: episode terminates once the tip drops below this.
    pub min_tip_height: f64,
    pub cart_velocity_penalty: f64,
    pub angular_velocity_penalty: f64,
}

impl RewardSpec {
    pub fn for_env(id: EnvId) -> Self {
        match id {
            EnvId::InvertedPendulum => Self {
                alive_bonus: 1.0,
                angle_limit: 0.2,
                min_tip_height: 0.0,
                cart_velocity_penalty: 0.0,
                angular_velocity_penalty: 0.0,
            },
            EnvId::DoublePendulum => Self {
                alive_bonus: 10.0,
                angle_limit: 0.0,
                min_tip_height: 1.0,
                cart_velocity_penalty: 0.01,
                angular_velocity_penalty: 0.05,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub env_id: EnvId,
    pub max_steps: usize,
    pub init_noise: f64,
    pub mechanism: MechanismParams,
    pub reward: RewardSpec,
}

impl EnvConfig {
    pub const MAX_STEPS: usize = 1000;
    pub const INIT_NOISE: f64 = 0.01;

    pub fn new(env_id: EnvId) -> Self {
        let mechanism = match env_id {
            EnvId::InvertedPendulum => MechanismParams::cart_pole(),
            EnvId::DoublePendulum => MechanismParams::double_cart_pole(),
        };
        Self {
            env_id,
            max_steps: Self::MAX_STEPS,
            init_noise: Self::INIT_NOISE,
            mechanism,
            reward: RewardSpec::for_env(env_id),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mechanism.validate()?;
        if self.max_steps == 0 {
            return Err(Error::config("env.max_steps", "must be at least 1"));
        }
        if !(self.init_noise.is_finite() && self.init_noise >= 0.0) {
            return Err(Error::config(
                "env.init_noise",
                "must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminal: bool,
    pub truncated: bool,
}

/// Raw generalized coordinates of whichever mechanism an environment runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhysicsState {
    Single(CartPoleState),
    Double(DoubleCartPoleState),
}

impl PhysicsState {
    pub fn upright(id: EnvId) -> Self {
        match id {
            EnvId::InvertedPendulum => PhysicsState::Single(CartPoleState::default()),
            EnvId::DoublePendulum => PhysicsState::Double(DoubleCartPoleState::default()),
        }
    }

    pub fn observe(&self) -> Observation {
        match self {
            PhysicsState::Single(s) => Observation(vec![s.x, s.x_dot, s.theta, s.theta_dot]),
            PhysicsState::Double(s) => {
                let (s1, c1) = s.theta1.sin_cos();
                let (s2, c2) = s.theta2.sin_cos();
                Observation(vec![
                    s.x,
                    s1,
                    s2,
                    c1,
                    c2,
                    s.x_dot,
                    s.theta1_dot,
                    s.theta2_dot,
                    // constraint-force slots, not modeled
                    0.0,
                    0.0,
                    0.0,
                ])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    NotStarted,
    Running,
    Terminated,
    Truncated,
}

/// A single-owner episodic environment.
#[derive(Debug, Clone)]
pub struct Env {
    cfg: EnvConfig,
    state: PhysicsState,
    steps: usize,
    phase: Phase,
    emitted_reward: f64,
}

impl Env {
    pub fn new(cfg: EnvConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            state: PhysicsState::upright(cfg.env_id),
            cfg,
            steps: 0,
            phase: Phase::NotStarted,
            emitted_reward: 0.0,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn obs_dim(&self) -> usize {
        self.cfg.env_id.obs_dim()
    }

    pub fn state(&self) -> PhysicsState {
        self.state
    }

    pub fn observation(&self) -> Observation {
        self.state.observe()
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Sum of every reward emitted since the last reset, whoever acted.
    pub fn emitted_reward(&self) -> f64 {
        self.emitted_reward
    }

    pub fn is_done(&self) -> bool {
        matches!(self.phase, Phase::Terminated | Phase::Truncated)
    }

    pub fn is_terminated(&self) -> bool {
        self.phase == Phase::Terminated
    }

    pub fn is_truncated(&self) -> bool {
        self.phase == Phase::Truncated
    }

    /// Upright equilibrium plus an independent uniform perturbation of every
    /// coordinate, drawn from a ChaCha stream keyed by `seed`.
    pub fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = self.cfg.init_noise;
        let mut noise = || if w > 0.0 { rng.gen_range(-w..=w) } else { 0.0 };
        self.state = match self.cfg.env_id {
            EnvId::InvertedPendulum => {
                PhysicsState::Single(CartPoleState::new(noise(), noise(), noise(), noise()))
            }
            EnvId::DoublePendulum => PhysicsState::Double(DoubleCartPoleState {
                x: noise(),
                theta1: noise(),
                theta2: noise(),
                x_dot: noise(),
                theta1_dot: noise(),
                theta2_dot: noise(),
            }),
        };
        self.steps = 0;
        self.phase = Phase::Running;
        self.emitted_reward = 0.0;
        self.observation()
    }

    /// Places the mechanism in an arbitrary state and starts a fresh episode
    /// from it.
    pub fn reset_to(&mut self, state: PhysicsState) -> Result<Observation> {
        let matches_env = matches!(
            (self.cfg.env_id, &state),
            (EnvId::InvertedPendulum, PhysicsState::Single(_))
                | (EnvId::DoublePendulum, PhysicsState::Double(_))
        );
        if !matches_env {
            return Err(Error::Usage(format!(
                "state kind does not match environment {}",
                self.cfg.env_id
            )));
        }
        self.state = state;
        self.steps = 0;
        self.phase = Phase::Running;
        self.emitted_reward = 0.0;
        Ok(self.observation())
    }

    pub fn step(&mut self, action: f64) -> Result<StepResult> {
        match self.phase {
            Phase::Running => {}
            Phase::NotStarted => return Err(Error::Usage("step called before reset".into())),
            _ => return Err(Error::Usage("step called on a finished episode".into())),
        }
        if action.is_nan() {
            return Err(Error::Domain("action is NaN".into()));
        }
        let limit = self.cfg.mechanism.force_limit;
        let force = action.clamp(-limit, limit);
        let p = self.cfg.mechanism;
        let rw = self.cfg.reward;

        let (terminal, reward) = match &mut self.state {
            PhysicsState::Single(s) => {
                *s = rk4_step(&CartPole::new(p), s, force)?;
                let terminal = s.theta.abs() > rw.angle_limit;
                (terminal, if terminal { 0.0 } else { rw.alive_bonus })
            }
            PhysicsState::Double(s) => {
                *s = rk4_step(&DoubleCartPole::new(p), s, force)?;
                let terminal = double_tip_height(s, &p) < rw.min_tip_height;
                let reward = if terminal {
                    0.0
                } else {
                    rw.alive_bonus
                        - rw.cart_velocity_penalty * s.x_dot * s.x_dot
                        - rw.angular_velocity_penalty
                            * (s.theta1_dot * s.theta1_dot + s.theta2_dot * s.theta2_dot)
                };
                (terminal, reward)
            }
        };
        self.steps += 1;
        self.emitted_reward += reward;
        let truncated = !terminal && self.steps >= self.cfg.max_steps;
        self.phase = if terminal {
            Phase::Terminated
        } else if truncated {
            Phase::Truncated
        } else {
            Phase::Running
        };
        Ok(StepResult {
            observation: self.observation(),
            reward,
            terminal,
            truncated,
        })
    }
}

/// Total reward of an episode.
pub fn episode_score(rewards: &[f64]) -> f64 {
    rewards.iter().sum()
}
