//! The `run` command: every (arm, seed) pair, one CSV each, one summary.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use cesfp::engine::{run, RunOptions};
use cesfp::metrics::distance_to_nearest;
use cesfp::{MetricSnapshot, RunRecord};
use serde::{Deserialize, Serialize};

use crate::config::{ArmConfig, ExperimentConfig, ResolvedGame};
use crate::error::{HarnessError, Result};

pub const SUMMARY_FILE: &str = "summary.json";

pub const CSV_HEADER: [&str; 8] = [
    "t",
    "samples_this_round",
    "cumulative_samples",
    "wall_ns",
    "nash_gap",
    "gwfp_epsilon",
    "expected_travel_time",
    "potential",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub game: GameInfo,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub grid: Vec<u64>,
    pub arms: Vec<ArmSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameInfo {
    pub name: String,
    pub id: String,
    pub num_players: usize,
    pub action_counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub arm: ArmConfig,
    pub runs: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub csv: String,
    pub cumulative_samples: u64,
    pub total_wall_ns: u64,
    #[serde(rename = "final")]
    pub final_metrics: MetricSnapshot,
    /// Distance from `q(T)` to the nearest known equilibrium, when the
    /// equilibrium set is known.
    pub final_ne_distance: Option<f64>,
    pub series: Vec<SeriesPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub cumulative_samples: u64,
    pub cumulative_wall_ns: u64,
    #[serde(flatten)]
    pub metrics: MetricSnapshot,
}

/// Everything learned from one finished experiment.
#[derive(Debug)]
pub struct Outcome {
    pub out_dir: PathBuf,
    pub summary: Summary,
}

pub fn csv_name(arm: &str, seed: u64) -> String {
    format!("{arm}_seed{seed}.csv")
}

fn cell(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_record_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in &record.rounds {
        let s = r.snapshot.as_ref();
        w.write_record([
            r.t.to_string(),
            r.samples.to_string(),
            r.cumulative_samples.to_string(),
            r.wall_ns.to_string(),
            cell(s.and_then(|s| s.nash_gap)),
            cell(s.and_then(|s| s.gwfp_epsilon)),
            cell(s.and_then(|s| s.expected_travel_time)),
            cell(s.and_then(|s| s.potential_value)),
        ])?;
    }
    w.flush().map_err(|source| HarnessError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn summarize(record: &RunRecord, game: &ResolvedGame, csv: String) -> RunSummary {
    let series = record
        .rounds
        .iter()
        .filter_map(|r| {
            r.snapshot.map(|metrics| SeriesPoint {
                cumulative_samples: r.cumulative_samples,
                cumulative_wall_ns: r.cumulative_wall_ns,
                metrics,
            })
        })
        .collect::<Vec<_>>();
    RunSummary {
        seed: record.seed,
        csv,
        cumulative_samples: record.total_samples(),
        total_wall_ns: record.total_wall_ns(),
        final_metrics: series.last().map(|p| p.metrics).unwrap_or_default(),
        final_ne_distance: distance_to_nearest(
            record.final_empirical.profile(),
            &game.loaded.known_equilibria,
        ),
        series,
    }
}

/// Runs the whole experiment. Runs execute on `cfg.workers` threads; files
/// are written from the calling thread only.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    let game = cfg.resolve_game()?;
    let g = game.loaded.game.as_ref();
    if !g.has_exact_oracle() {
        if let Some(arm) = cfg
            .arms
            .iter()
            .find(|a| a.algorithm == cesfp::Algorithm::FpExact)
        {
            return Err(cesfp::Error::OracleUnavailable(format!(
                "arm {:?} runs exact FP on a game without exact mixed utilities",
                arm.name
            ))
            .into());
        }
    }
    let jobs: Vec<(usize, u64)> = (0..cfg.arms.len())
        .flat_map(|a| cfg.seeds.iter().map(move |&s| (a, s)))
        .collect();
    let configs = jobs
        .iter()
        .map(|&(a, seed)| cfg.arms[a].engine_config(cfg, seed))
        .collect::<Result<Vec<_>>>()?;
    let options = RunOptions::new(cfg.horizon).grid(cfg.metrics.clone());

    let out_dir = cfg.out_dir();
    std::fs::create_dir_all(&out_dir).map_err(|source| HarnessError::Write {
        path: out_dir.clone(),
        source,
    })?;

    let mut slots: Vec<Option<RunSummary>> = vec![None; jobs.len()];
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, cesfp::Result<RunRecord>)>();
    let mut failure = None;
    std::thread::scope(|scope| {
        for _ in 0..cfg.workers.min(jobs.len()) {
            let tx = tx.clone();
            let (next, configs, options) = (&next, &configs, &options);
            scope.spawn(move || loop {
                let job = next.fetch_add(1, Ordering::Relaxed);
                if job >= configs.len() {
                    break;
                }
                let result = run(g, configs[job].clone(), options);
                let stop = result.is_err();
                if tx.send((job, result)).is_err() || stop {
                    next.store(configs.len(), Ordering::Relaxed);
                    break;
                }
            });
        }
        drop(tx);
        for (job, result) in rx {
            if failure.is_some() {
                continue;
            }
            let outcome = result.map_err(HarnessError::from).and_then(|record| {
                let (arm, seed) = jobs[job];
                let name = csv_name(&cfg.arms[arm].name, seed);
                write_record_csv(&record, &out_dir.join(&name))?;
                Ok(summarize(&record, &game, name))
            });
            match outcome {
                Ok(summary) => slots[job] = Some(summary),
                Err(e) => {
                    next.store(jobs.len(), Ordering::Relaxed);
                    failure = Some(e);
                }
            }
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }

    let mut runs = slots.into_iter().map(|s| s.expect("every job reported"));
    let arms = cfg
        .arms
        .iter()
        .map(|arm| ArmSummary {
            arm: arm.clone(),
            runs: runs.by_ref().take(cfg.seeds.len()).collect(),
        })
        .collect();
    let summary = Summary {
        schema_version: crate::config::SCHEMA_VERSION,
        game: GameInfo {
            name: game.loaded.name.clone(),
            id: game.id.clone(),
            num_players: g.num_players(),
            action_counts: g.action_counts().to_vec(),
        },
        horizon: cfg.horizon,
        seeds: cfg.seeds.clone(),
        grid: cfg.metrics.grid(cfg.horizon),
        arms,
    };
    let path = out_dir.join(SUMMARY_FILE);
    let mut text = serde_json::to_string_pretty(&summary).expect("summaries serialize");
    text.push('\n');
    std::fs::write(&path, text).map_err(|source| HarnessError::Write { path, source })?;
    Ok(Outcome { out_dir, summary })
}

pub fn load_summary(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
