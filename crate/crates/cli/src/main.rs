use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use cesfp::Rounding;
use cesfp_cli::compare::COMPARISON_FILE;
use cesfp_cli::experiment::SUMMARY_FILE;
use cesfp_cli::{
    compare, load_summary, run_experiment, validate_schedules, ExperimentConfig, Overrides,
    ScheduleQuery,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "cesfp",
    version,
    about = "Fictitious-play experiments: run, compare, validate schedules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (arm, seed) pair of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides `out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated seeds; overrides `seeds`.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        horizon: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Aggregate one or more summaries (at least two arms in total).
    Compare {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        /// Directory for comparison.csv; defaults to the first summary's.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check step-size and sample-count schedules.
    ValidateSchedule {
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long, value_enum, default_value_t = RoundingArg::Ceil)]
        rounding: RoundingArg,
        /// Last round checked.
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
    },
    /// List builtin game names.
    ListGames,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoundingArg {
    Ceil,
    Floor,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run {
            config,
            out,
            seeds,
            horizon,
            workers,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            cfg.apply(&Overrides {
                out_dir: out,
                seeds,
                horizon,
                workers,
            });
            let outcome = run_experiment(&cfg)?;
            for arm in &outcome.summary.arms {
                let runs = arm.runs.len().max(1) as f64;
                let gap: f64 = arm
                    .runs
                    .iter()
                    .filter_map(|r| r.final_metrics.nash_gap)
                    .sum::<f64>()
                    / runs;
                let samples: u64 = arm.runs.iter().map(|r| r.cumulative_samples).sum();
                let wall: u64 = arm.runs.iter().map(|r| r.total_wall_ns).sum();
                println!(
                    "{:<16} runs {:>3}  mean final nash_gap {:.4e}  samples {}  wall {:.3} s",
                    arm.arm.name,
                    arm.runs.len(),
                    gap,
                    samples,
                    wall as f64 * 1e-9
                );
            }
            println!("wrote {}", outcome.out_dir.join(SUMMARY_FILE).display());
            Ok(true)
        }
        Command::Compare { summaries, out } => {
            let loaded = summaries
                .iter()
                .map(|p| load_summary(p))
                .collect::<Result<Vec<_>, _>>()?;
            let comparison = compare(&loaded)?;
            let dir = match out {
                Some(dir) => dir,
                None => summaries[0].parent().map(PathBuf::from).unwrap_or_default(),
            };
            std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(COMPARISON_FILE);
            comparison.write_csv(&path)?;
            let mut stdout = std::io::stdout().lock();
            let printed = write!(stdout, "{}", comparison.table())
                .and_then(|_| writeln!(stdout, "wrote {}", path.display()));
            match printed {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(true),
            }
        }
        Command::ValidateSchedule {
            beta,
            gamma,
            c,
            rounding,
            horizon,
        } => {
            let rounding = match rounding {
                RoundingArg::Ceil => Rounding::Ceil,
                RoundingArg::Floor => Rounding::Floor,
            };
            let (report, ok) = validate_schedules(&ScheduleQuery {
                beta,
                gamma,
                c,
                rounding,
                horizon,
            })?;
            print!("{report}");
            Ok(ok)
        }
        Command::ListGames => {
            for (name, about) in cesfp::description::builtin_names() {
                println!("{name:<72} {about}");
            }
            Ok(true)
        }
    }
}
