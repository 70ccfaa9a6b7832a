use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{summarize_metric, MetricSummary};
use super::training::{run_training, RunConfig, StopRule, TrainingRun};
use crate::env::EnvId;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arm {
    Coached,
    Uncoached,
}

impl Arm {
    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Coached => "coached",
            Arm::Uncoached => "uncoached",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmMetrics {
    pub win_streak_episode: Option<usize>,
    pub average_crossing_episode: Option<usize>,
    pub episodes_run: usize,
    pub interventions: usize,
    pub env_steps: usize,
}

impl ArmMetrics {
    pub fn from_run(run: &TrainingRun, stop: &StopRule) -> Self {
        let c = &run.curve;
        Self {
            win_streak_episode: c.win_streak_episode(stop),
            average_crossing_episode: c.average_crossing_episode(stop),
            episodes_run: c.episodes.len(),
            interventions: c.episodes.iter().map(|e| e.interventions).sum(),
            env_steps: c.episodes.iter().map(|e| e.steps).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub coached: ArmMetrics,
    pub uncoached: ArmMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub env: EnvId,
    pub win_target: f64,
    pub win_streak: usize,
    pub average_window: usize,
    pub seeds: Vec<u64>,
    pub per_seed: Vec<SeedResult>,
    pub win_streak_metric: MetricSummary,
    pub average_crossing_metric: MetricSummary,
}

impl ExperimentSummary {
    pub fn from_seed_results(cfg: &RunConfig, per_seed: Vec<SeedResult>) -> Self {
        let streak: Vec<_> = per_seed
            .iter()
            .map(|r| (r.coached.win_streak_episode, r.uncoached.win_streak_episode))
            .collect();
        let average: Vec<_> = per_seed
            .iter()
            .map(|r| {
                (
                    r.coached.average_crossing_episode,
                    r.uncoached.average_crossing_episode,
                )
            })
            .collect();
        Self {
            env: cfg.env.env_id,
            win_target: cfg.stop.win_target,
            win_streak: cfg.stop.win_streak,
            average_window: cfg.stop.average_window,
            seeds: per_seed.iter().map(|r| r.seed).collect(),
            win_streak_metric: summarize_metric(&streak),
            average_crossing_metric: summarize_metric(&average),
            per_seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArmRun {
    pub seed: u64,
    pub arm: Arm,
    pub run: TrainingRun,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub summary: ExperimentSummary,
    pub runs: Vec<ArmRun>,
}

/// Trains both arms on every seed (same seed, coach on and off) and
/// compares how quickly each reaches the stop-rule criteria. Runs execute on
/// up to `jobs` threads; results do not depend on scheduling.
pub fn paired_experiment(cfg: &RunConfig, seeds: &[u64], jobs: usize) -> Result<ExperimentReport> {
    if seeds.len() < 2 {
        return Err(Error::Usage(
            "a paired experiment needs at least two seeds".into(),
        ));
    }
    cfg.validate()?;
    let mut coached_cfg = *cfg;
    coached_cfg.coach.enabled = true;
    let uncoached_cfg = cfg.without_coach();

    let tasks: Vec<(u64, Arm)> = seeds
        .iter()
        .flat_map(|&s| [(s, Arm::Coached), (s, Arm::Uncoached)])
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<ArmRun>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(seed, arm)| {
                let run_cfg = match arm {
                    Arm::Coached => &coached_cfg,
                    Arm::Uncoached => &uncoached_cfg,
                };
                run_training(run_cfg, seed).map(|run| ArmRun { seed, arm, run })
            })
            .collect()
    });
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;

    let per_seed = seeds
        .iter()
        .map(|&seed| {
            let metrics = |arm| {
                let r = runs
                    .iter()
                    .find(|r| r.seed == seed && r.arm == arm)
                    .expect("every task produced a run");
                ArmMetrics::from_run(&r.run, &cfg.stop)
            };
            SeedResult {
                seed,
                coached: metrics(Arm::Coached),
                uncoached: metrics(Arm::Uncoached),
            }
        })
        .collect();
    Ok(ExperimentReport {
        summary: ExperimentSummary::from_seed_results(cfg, per_seed),
        runs,
    })
}
