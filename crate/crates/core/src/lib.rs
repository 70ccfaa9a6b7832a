//! PID-coached reinforcement learning on cart-pole systems.
//!
//! A deliberately weak PID controller takes over whenever the learner drives
//! a monitored quantity outside a boundary, nudges it back, and keeps every
//! step of that takeover out of the learner's training data. The harness
//! measures how many episodes PPO needs to reach a win streak with and
//! without the coach.

pub mod coach;
pub mod config;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod harness;
pub mod pid;
pub mod ppo;

pub use coach::{AgentTransition, CoachConfig, CoachedEnv, InterventionRecord, Monitor};
pub use config::ExperimentConfig;
pub use dynamics::{CartPoleState, DoubleCartPoleState, MechanismParams};
pub use env::{Env, EnvConfig, EnvId, Observation, PhysicsState, StepResult};
pub use error::{Error, Result};
pub use harness::{EpisodeLog, ExperimentSummary, StopRule, TrainingCurve};
pub use pid::{PidGains, PidMemory};
pub use ppo::{AgentParams, PpoConfig};
