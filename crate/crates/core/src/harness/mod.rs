//! Seeded training and evaluation loops, training-speed metrics and paired
//! coached-versus-uncoached experiments.

pub mod experiment;
pub mod metrics;
pub mod output;
pub mod training;

pub use experiment::{
    paired_experiment, Arm, ArmMetrics, ArmRun, ExperimentReport, ExperimentSummary, SeedResult,
};
pub use metrics::{
    median, moving_average_crossing, summarize_metric, win_streak_episode, MetricSummary,
};
pub use training::{
    evaluate, pid_baseline, run_training, run_training_observed, EpisodeLog, NoObserver, RunConfig,
    StopRule, TrainingCurve, TrainingObserver, TrainingRun,
};
