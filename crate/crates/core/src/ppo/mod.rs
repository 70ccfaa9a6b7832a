//! Proximal policy optimization for a single continuous actuator, written
//! directly against flat parameter vectors.

pub mod adam;
pub mod agent;
pub mod checkpoint;
pub mod gae;
pub mod mlp;
pub mod norm;
pub mod policy;

pub use adam::Adam;
pub use agent::{
    loss_and_grad, Agent, EpisodeBuffer, Grads, LossParts, PpoConfig, RolloutBatch, Sample,
    UpdateStats,
};
pub use gae::{gae, normalize_advantages};
pub use mlp::{Mlp, MlpCache};
pub use norm::RunningNorm;
pub use policy::{
    clipped_objective, gaussian_entropy, gaussian_logprob, AgentParams, Decision, GaussianPolicy,
    ValueNet, LOG_STD_MAX, LOG_STD_MIN,
};
