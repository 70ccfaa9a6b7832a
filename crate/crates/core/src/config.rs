//! Experiment configuration file: one JSON document, one section per module.
//!
//! Every section and key is optional except `env`; missing values take the
//! documented defaults for that environment. Unknown keys are rejected.
//! `coach.boundary` accepts a positive number or the string `"inf"`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::coach::{CoachConfig, Monitor};
use crate::env::{EnvConfig, EnvId};
use crate::error::{Error, Result};
use crate::harness::{RunConfig, StopRule};
use crate::pid::PidGains;
use crate::ppo::PpoConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSection {
    pub max_steps: usize,
    pub init_noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoachSection {
    pub enabled: bool,
    #[serde(serialize_with = "ser_boundary", deserialize_with = "de_boundary")]
    pub boundary: f64,
    pub max_intervention_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    /// Coach-free evaluation episodes after training.
    pub episodes: usize,
    /// Episodes for the standalone PID baseline.
    pub pid_baseline_episodes: usize,
    pub seed: u64,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self {
            episodes: 10,
            pid_baseline_episodes: 20,
            seed: 12345,
        }
    }
}

/// Fully materialized experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub env: EnvId,
    pub env_options: EnvSection,
    pub coach: CoachSection,
    pub pid: PidGains,
    pub ppo: PpoConfig,
    pub seeds: Vec<u64>,
    pub stop: StopRule,
    pub evaluation: EvaluationSection,
    pub output_dir: PathBuf,
    pub jobs: usize,
}

/// On-disk form with every field optional.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    env: EnvId,
    env_options: Option<RawEnvSection>,
    coach: Option<RawCoachSection>,
    pid: Option<RawPid>,
    ppo: Option<PpoConfig>,
    seeds: Option<Vec<u64>>,
    stop: Option<RawStop>,
    evaluation: Option<RawEvaluation>,
    output_dir: Option<PathBuf>,
    jobs: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvSection {
    max_steps: Option<usize>,
    init_noise: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCoachSection {
    enabled: Option<bool>,
    #[serde(default, deserialize_with = "de_opt_boundary")]
    boundary: Option<f64>,
    max_intervention_steps: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPid {
    kp: Option<f64>,
    ki: Option<f64>,
    kd: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStop {
    win_target: Option<f64>,
    win_streak: Option<usize>,
    average_window: Option<usize>,
    episode_cap: Option<usize>,
    require_average_crossing: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvaluation {
    episodes: Option<usize>,
    pid_baseline_episodes: Option<usize>,
    seed: Option<u64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BoundaryRepr {
    Number(f64),
    Text(String),
}

fn boundary_from_repr<E: serde::de::Error>(repr: BoundaryRepr) -> std::result::Result<f64, E> {
    match repr {
        BoundaryRepr::Number(v) => Ok(v),
        BoundaryRepr::Text(s) if matches!(s.as_str(), "inf" | "+inf" | "infinity") => {
            Ok(f64::INFINITY)
        }
        BoundaryRepr::Text(s) => Err(E::custom(format!(
            "boundary must be a number or \"inf\", got {s:?}"
        ))),
    }
}

fn de_boundary<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    boundary_from_repr(BoundaryRepr::deserialize(d)?)
}

fn de_opt_boundary<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<f64>, D::Error> {
    Option::<BoundaryRepr>::deserialize(d)?
        .map(boundary_from_repr)
        .transpose()
}

fn ser_boundary<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

impl ExperimentConfig {
    /// Documented defaults for `env`.
    pub fn defaults(env: EnvId) -> Self {
        let run = RunConfig::for_env(env);
        Self {
            name: env.as_str().to_string(),
            env,
            env_options: EnvSection {
                max_steps: run.env.max_steps,
                init_noise: run.env.init_noise,
            },
            coach: CoachSection {
                enabled: run.coach.enabled,
                boundary: run.coach.boundary,
                max_intervention_steps: run.coach.max_intervention_steps,
            },
            pid: run.coach.gains,
            ppo: run.ppo,
            seeds: (1..=10).collect(),
            stop: run.stop,
            evaluation: EvaluationSection::default(),
            output_dir: PathBuf::from("out"),
            jobs: 1,
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let cfg = Self::materialize(raw);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    fn materialize(raw: RawConfig) -> Self {
        let mut c = Self::defaults(raw.env);
        if let Some(name) = raw.name {
            c.name = name;
        }
        if let Some(e) = raw.env_options {
            c.env_options.max_steps = e.max_steps.unwrap_or(c.env_options.max_steps);
            c.env_options.init_noise = e.init_noise.unwrap_or(c.env_options.init_noise);
        }
        if let Some(s) = raw.coach {
            c.coach.enabled = s.enabled.unwrap_or(c.coach.enabled);
            c.coach.boundary = s.boundary.unwrap_or(c.coach.boundary);
            c.coach.max_intervention_steps = s
                .max_intervention_steps
                .unwrap_or(c.coach.max_intervention_steps);
        }
        if let Some(p) = raw.pid {
            c.pid.kp = p.kp.unwrap_or(c.pid.kp);
            c.pid.ki = p.ki.unwrap_or(c.pid.ki);
            c.pid.kd = p.kd.unwrap_or(c.pid.kd);
        }
        if let Some(p) = raw.ppo {
            c.ppo = p;
        }
        if let Some(seeds) = raw.seeds {
            c.seeds = seeds;
        }
        if let Some(s) = raw.stop {
            c.stop.win_target = s.win_target.unwrap_or(c.stop.win_target);
            c.stop.win_streak = s.win_streak.unwrap_or(c.stop.win_streak);
            c.stop.average_window = s.average_window.unwrap_or(c.stop.average_window);
            c.stop.episode_cap = s.episode_cap.unwrap_or(c.stop.episode_cap);
            c.stop.require_average_crossing = s
                .require_average_crossing
                .unwrap_or(c.stop.require_average_crossing);
        }
        if let Some(e) = raw.evaluation {
            c.evaluation.episodes = e.episodes.unwrap_or(c.evaluation.episodes);
            c.evaluation.pid_baseline_episodes = e
                .pid_baseline_episodes
                .unwrap_or(c.evaluation.pid_baseline_episodes);
            c.evaluation.seed = e.seed.unwrap_or(c.evaluation.seed);
        }
        if let Some(dir) = raw.output_dir {
            c.output_dir = dir;
        }
        if let Some(jobs) = raw.jobs {
            c.jobs = jobs;
        }
        c
    }

    pub fn run_config(&self) -> RunConfig {
        let mut env = EnvConfig::new(self.env);
        env.max_steps = self.env_options.max_steps;
        env.init_noise = self.env_options.init_noise;
        RunConfig {
            env,
            coach: CoachConfig {
                monitor: Monitor::for_env(self.env),
                boundary: self.coach.boundary,
                max_intervention_steps: self.coach.max_intervention_steps,
                gains: self.pid,
                enabled: self.coach.enabled,
            },
            ppo: self.ppo,
            stop: self.stop,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::config(
                "name",
                "must be a non-empty single path component",
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "must list at least one seed"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seeds", "must not repeat a seed"));
        }
        if self.evaluation.episodes == 0 {
            return Err(Error::config("evaluation.episodes", "must be at least 1"));
        }
        if self.evaluation.pid_baseline_episodes == 0 {
            return Err(Error::config(
                "evaluation.pid_baseline_episodes",
                "must be at least 1",
            ));
        }
        if self.jobs == 0 {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        self.run_config().validate()
    }
}
