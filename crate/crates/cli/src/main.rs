//! `coach`: train, compare, evaluate and baseline runs from an experiment config.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use coaching_core::harness::output::{write_json, write_run_csv};
use coaching_core::harness::{
    evaluate, paired_experiment, pid_baseline, run_training, Arm, TrainingRun,
};
use coaching_core::ppo::checkpoint;
use coaching_core::ExperimentConfig;
use serde_json::json;

#[derive(Debug, Parser)]
#[command(
    name = "coach",
    version,
    about = "PID-coached PPO training experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one arm per selected seed (default: the first configured seed).
    Train(RunArgs),
    /// Paired coached-vs-uncoached experiment over the selected seeds.
    Compare(RunArgs),
    /// Load a checkpoint and report its coach-free evaluation mean.
    Evaluate(EvaluateArgs),
    /// Run the PID alone from episode start and report its mean score.
    PidBaseline(BaselineArgs),
}

#[derive(Debug, Args)]
struct ConfigArgs {
    /// Experiment config (JSON). Without it the inverted-pendulum defaults are used.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Use seeds 1..=N.
    #[arg(long, value_name = "N", conflicts_with = "seed_list")]
    seeds: Option<u64>,
    /// Comma-separated seed list.
    #[arg(long, value_name = "S1,S2,...", value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    /// Worker threads.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Output root; runs land in <DIR>/<name>/<seed>/<arm>/.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Force the coach off.
    #[arg(long)]
    no_coach: bool,
    #[arg(long, value_name = "N")]
    episode_cap: Option<usize>,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_name = "PATH")]
    checkpoint: PathBuf,
    #[arg(long, value_name = "N")]
    episodes: Option<usize>,
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct BaselineArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_name = "N")]
    episodes: Option<usize>,
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl From<coaching_core::Error> for Failure {
    fn from(e: coaching_core::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.into())
        } else {
            Failure::Runtime(e.into())
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Train(args) => train(&args),
        Command::Compare(args) => compare(&args),
        Command::Evaluate(args) => evaluate_checkpoint(&args),
        Command::PidBaseline(args) => baseline(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load_config(args: &ConfigArgs) -> Result<ExperimentConfig, Failure> {
    match &args.config {
        None => Ok(ExperimentConfig::defaults(
            coaching_core::EnvId::InvertedPendulum,
        )),
        Some(path) => ExperimentConfig::load(path)
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Config),
    }
}

/// Applies command-line overrides and re-validates.
fn run_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = load_config(&args.config)?;
    if let Some(n) = args.seeds {
        cfg.seeds = (1..=n).collect();
    }
    if let Some(list) = &args.seed_list {
        cfg.seeds = list.clone();
    }
    if let Some(jobs) = args.jobs {
        cfg.jobs = jobs;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    if args.no_coach {
        cfg.coach.enabled = false;
    }
    if let Some(cap) = args.episode_cap {
        cfg.stop.episode_cap = cap;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes run.csv, config.json and checkpoint for one arm of one seed and
/// returns the arm's evaluation mean.
fn write_run(
    cfg: &ExperimentConfig,
    seed: u64,
    arm: Arm,
    run: &TrainingRun,
) -> Result<f64, Failure> {
    let dir = cfg
        .output_dir
        .join(&cfg.name)
        .join(seed.to_string())
        .join(arm.as_str());
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut used = cfg.clone();
    used.seeds = vec![seed];
    used.coach.enabled = arm == Arm::Coached && cfg.coach.enabled;
    std::fs::write(dir.join("config.json"), used.to_json_string())
        .context("writing config.json")?;
    write_run_csv(&run.curve, &dir.join("run.csv"))?;
    checkpoint::save(&run.params, &dir.join("checkpoint"))?;
    let eval = evaluate(
        &run.params,
        &used.run_config().env,
        cfg.evaluation.episodes,
        cfg.evaluation.seed,
    )?;
    Ok(eval)
}

fn train(args: &RunArgs) -> Result<(), Failure> {
    let mut cfg = run_config(args)?;
    if args.seeds.is_none() && args.seed_list.is_none() {
        cfg.seeds.truncate(1);
    }
    let arm = if cfg.coach.enabled {
        Arm::Coached
    } else {
        Arm::Uncoached
    };
    let run_cfg = cfg.run_config();
    for &seed in &cfg.seeds {
        let run = run_training(&run_cfg, seed)?;
        let eval = write_run(&cfg, seed, arm, &run)?;
        let c = &run.curve;
        println!(
            "seed {seed} {}: {} episodes, win streak at {}, average crossing at {}, evaluation mean {eval:.1}",
            arm.as_str(),
            c.episodes.len(),
            show(c.win_streak_episode(&cfg.stop)),
            show(c.average_crossing_episode(&cfg.stop)),
        );
    }
    Ok(())
}

fn compare(args: &RunArgs) -> Result<(), Failure> {
    let cfg = run_config(args)?;
    if !cfg.coach.enabled {
        return Err(Failure::Config(anyhow::anyhow!(
            "compare needs the coach enabled; drop --no-coach or set coach.enabled"
        )));
    }
    let report = paired_experiment(&cfg.run_config(), &cfg.seeds, cfg.jobs)?;
    let mut evaluations = Vec::new();
    for r in &report.runs {
        let eval = write_run(&cfg, r.seed, r.arm, &r.run)?;
        evaluations.push(json!({"seed": r.seed, "arm": r.arm, "evaluation_mean": eval}));
    }
    let root = cfg.output_dir.join(&cfg.name);
    let summary = json!({
        "config": cfg,
        "summary": report.summary,
        "evaluations": evaluations,
    });
    write_json(&summary, &root.join("summary.json"))?;

    let s = &report.summary;
    for r in &s.per_seed {
        println!(
            "seed {}: win streak coached {} / uncoached {}; average crossing coached {} / uncoached {}",
            r.seed,
            show(r.coached.win_streak_episode),
            show(r.uncoached.win_streak_episode),
            show(r.coached.average_crossing_episode),
            show(r.uncoached.average_crossing_episode),
        );
    }
    for (label, m) in [
        ("win streak", &s.win_streak_metric),
        ("average crossing", &s.average_crossing_metric),
    ] {
        println!(
            "{label}: median reduction {}, coached faster in {}/{} finishing pairs, did not finish {}, sign test p = {:.4}",
            m.median_reduction_percent
                .map(|v| format!("{v:.1}%"))
                .unwrap_or_else(|| "n/a".into()),
            m.coached_better,
            m.finishing_pairs,
            m.did_not_finish,
            m.sign_test_p,
        );
    }
    println!("wrote {}", root.display());
    Ok(())
}

fn evaluate_checkpoint(args: &EvaluateArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let params = load_checkpoint(&args.checkpoint)?;
    let env = cfg.run_config().env;
    if params.policy.mean_net.input_dim() != env.env_id.obs_dim() {
        return Err(Failure::Config(anyhow::anyhow!(
            "checkpoint expects {} observations but {} provides {}",
            params.policy.mean_net.input_dim(),
            env.env_id,
            env.env_id.obs_dim()
        )));
    }
    let episodes = args.episodes.unwrap_or(cfg.evaluation.episodes);
    let mean = evaluate(
        &params,
        &env,
        episodes,
        args.seed.unwrap_or(cfg.evaluation.seed),
    )?;
    println!("evaluation mean over {episodes} episodes: {mean:.2}");
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<coaching_core::AgentParams, Failure> {
    Ok(checkpoint::load(path)?)
}

fn baseline(args: &BaselineArgs) -> Result<(), Failure> {
    let cfg = load_config(&args.config)?;
    let run = cfg.run_config();
    let episodes = args
        .episodes
        .unwrap_or(cfg.evaluation.pid_baseline_episodes);
    let mean = pid_baseline(
        &run.env,
        &run.coach,
        episodes,
        args.seed.unwrap_or(cfg.evaluation.seed),
    )?;
    println!("pid baseline mean over {episodes} episodes: {mean:.2}");
    Ok(())
}

fn show(v: Option<usize>) -> String {
    v.map(|e| e.to_string()).unwrap_or_else(|| "-".into())
}
