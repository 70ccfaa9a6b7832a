//! On-disk artifacts: one CSV per run, one JSON summary per experiment.

use std::path::Path;

use serde::Serialize;

use super::training::{EpisodeLog, TrainingCurve};
use crate::error::Result;

pub const RUN_CSV_HEADER: [&str; 6] = [
    "episode",
    "agent_score",
    "env_score",
    "steps",
    "interventions",
    "interventions_failed",
];

pub fn write_run_csv(curve: &TrainingCurve, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RUN_CSV_HEADER)?;
    for e in &curve.episodes {
        w.write_record([
            e.episode.to_string(),
            e.agent_score.to_string(),
            e.env_score.to_string(),
            e.steps.to_string(),
            e.interventions.to_string(),
            e.interventions_failed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_run_csv(path: &Path) -> Result<Vec<EpisodeLog>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let curve = TrainingCurve {
            fingerprint: "abc".into(),
            seed: 3,
            coached: true,
            episodes: vec![
                EpisodeLog {
                    episode: 1,
                    agent_score: 12.0,
                    env_score: 40.0,
                    steps: 41,
                    interventions: 2,
                    interventions_failed: 1,
                },
                EpisodeLog {
                    episode: 2,
                    agent_score: 9.75,
                    env_score: 9.75,
                    steps: 10,
                    interventions: 0,
                    interventions_failed: 0,
                },
            ],
            wall_clock_secs: 0.5,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        write_run_csv(&curve, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "episode,agent_score,env_score,steps,interventions,interventions_failed\n"
        ));
        assert_eq!(read_run_csv(&path).unwrap(), curve.episodes);
    }
}
