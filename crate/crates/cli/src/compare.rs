//! The `compare` command: per-arm medians and interquartile ranges across
//! seeds, at every grid point shared by all runs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::experiment::{SeriesPoint, Summary};

pub const COMPARISON_FILE: &str = "comparison.csv";

/// The aggregated series, in CSV column order after `arm,t,runs`.
pub const MEASURES: [&str; 6] = [
    "cumulative_samples",
    "cumulative_wall_ns",
    "nash_gap",
    "gwfp_epsilon",
    "expected_travel_time",
    "potential",
];

fn measure(point: &SeriesPoint, index: usize) -> Option<f64> {
    let m = &point.metrics;
    match index {
        0 => Some(point.cumulative_samples as f64),
        1 => Some(point.cumulative_wall_ns as f64),
        2 => m.nash_gap,
        3 => m.gwfp_epsilon,
        4 => m.expected_travel_time,
        5 => m.potential_value,
        _ => unreachable!("measure index"),
    }
}

/// Median and quartiles, linearly interpolated between order statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spread {
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
}

pub fn spread(values: &[f64]) -> Option<Spread> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let h = p * (v.len() - 1) as f64;
        let (lo, hi) = (h.floor() as usize, h.ceil() as usize);
        v[lo] + (h - lo as f64) * (v[hi] - v[lo])
    };
    Some(Spread {
        q25: at(0.25),
        median: at(0.5),
        q75: at(0.75),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub arm: String,
    pub t: u64,
    pub runs: usize,
    pub measures: [Option<Spread>; MEASURES.len()],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub game_id: String,
    pub horizon: u64,
    pub rows: Vec<Row>,
}

pub fn compare(summaries: &[Summary]) -> Result<Comparison> {
    let first = summaries
        .first()
        .ok_or_else(|| HarnessError::MismatchedExperiments("no summaries given".into()))?;
    for s in &summaries[1..] {
        if s.game.id != first.game.id {
            return Err(HarnessError::MismatchedExperiments(format!(
                "game {} ({}) vs {} ({})",
                first.game.name, first.game.id, s.game.name, s.game.id
            )));
        }
        if s.horizon != first.horizon {
            return Err(HarnessError::MismatchedExperiments(format!(
                "horizon {} vs {}",
                first.horizon, s.horizon
            )));
        }
    }
    let arms: Vec<_> = summaries.iter().flat_map(|s| &s.arms).collect();
    if arms.len() < 2 {
        return Err(HarnessError::MismatchedExperiments(format!(
            "need at least two arms to compare, found {}",
            arms.len()
        )));
    }
    let mut names = BTreeSet::new();
    for arm in &arms {
        if !names.insert(arm.arm.name.as_str()) {
            return Err(HarnessError::MismatchedExperiments(format!(
                "arm {:?} appears in more than one summary",
                arm.arm.name
            )));
        }
    }

    let mut shared: Option<BTreeSet<u64>> = None;
    for run in arms.iter().flat_map(|a| &a.runs) {
        let ts: BTreeSet<u64> = run.series.iter().map(|p| p.metrics.t).collect();
        shared = Some(match shared {
            None => ts,
            Some(s) => s.intersection(&ts).copied().collect(),
        });
    }
    let grid = shared.unwrap_or_default();

    let mut rows = Vec::new();
    for arm in &arms {
        for &t in &grid {
            let points: Vec<&SeriesPoint> = arm
                .runs
                .iter()
                .filter_map(|r| r.series.iter().find(|p| p.metrics.t == t))
                .collect();
            let measures = std::array::from_fn(|i| {
                let values: Vec<f64> = points.iter().filter_map(|p| measure(p, i)).collect();
                spread(&values)
            });
            rows.push(Row {
                arm: arm.arm.name.clone(),
                t,
                runs: points.len(),
                measures,
            });
        }
    }
    Ok(Comparison {
        game_id: first.game.id.clone(),
        horizon: first.horizon,
        rows,
    })
}

impl Comparison {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["arm".to_string(), "t".into(), "runs".into()];
        for m in MEASURES {
            for stat in ["median", "q25", "q75"] {
                header.push(format!("{m}_{stat}"));
            }
        }
        w.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.arm.clone(), row.t.to_string(), row.runs.to_string()];
            for s in &row.measures {
                match s {
                    Some(s) => record.extend([s.median, s.q25, s.q75].map(|x| x.to_string())),
                    None => record.extend(std::iter::repeat_n(String::new(), 3)),
                }
            }
            w.write_record(&record)?;
        }
        w.flush().map_err(|source| HarnessError::Write {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Fixed-width table of medians with the interquartile range of the
    /// Nash gap.
    pub fn table(&self) -> String {
        // Four significant digits; blank for missing values.
        let num = |s: &Option<Spread>, scale: f64| {
            s.map(|s| format!("{:.4e}", s.median / scale))
                .unwrap_or_else(|| "-".into())
        };
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>4} {:>12} {:>12} {:>12} {:>25} {:>12} {:>12}",
            "arm",
            "t",
            "runs",
            "samples",
            "wall_ms",
            "gwfp_eps",
            "nash_gap [q25, q75]",
            "travel_time",
            "potential"
        );
        for row in &self.rows {
            let m = &row.measures;
            let gap = match m[2] {
                Some(s) => format!("{:.3e} [{:.2e}, {:.2e}]", s.median, s.q25, s.q75),
                None => "-".into(),
            };
            let samples = m[0].map(|s| format!("{}", s.median)).unwrap_or_default();
            let _ = writeln!(
                out,
                "{:<16} {:>8} {:>4} {:>12} {:>12} {:>12} {:>25} {:>12} {:>12}",
                row.arm,
                row.t,
                row.runs,
                samples,
                num(&m[1], 1e6),
                num(&m[3], 1.0),
                gap,
                num(&m[4], 1.0),
                num(&m[5], 1.0),
            );
        }
        out
    }
}
