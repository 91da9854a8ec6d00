//! Experiment configuration files.
//!
//! ```toml
//! schema_version = 1
//! game = "congestion:benchmark"     # or { file = "game.toml" }, or an inline spec
//! horizon = 10000
//! seeds = [0, 1, 2]
//! workers = 1
//! out_dir = "out/desk"
//!
//! [metrics]
//! geometric = true
//! points = [50, 5000]
//!
//! [[arms]]
//! name = "sampled_fp"
//! algorithm = "sampled_fp"
//! gamma = 0.6
//!
//! [[arms]]
//! name = "cesfp"
//! algorithm = "cesfp"
//! beta = 0.6
//! ```
//!
//! Relative paths (`out_dir`, game `file`) resolve against the config file's
//! directory.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use cesfp::description::{parse_game_file, GameSpec, LoadedGame};
use cesfp::{
    Algorithm, EngineConfig, InitialAction, MetricGrid, Rounding, SampleSchedule, StepSchedule,
    TestActionMode, TieRule,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum GameRef {
    Named(String),
    File { file: PathBuf },
    Inline(GameSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub name: String,
    pub algorithm: Algorithm,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default = "default_exponent")]
    pub gamma: f64,
    #[serde(default)]
    pub rounding: Rounding,
    #[serde(default = "default_exponent")]
    pub beta: f64,
}

fn default_c() -> f64 {
    1.0
}

fn default_exponent() -> f64 {
    0.6
}

fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub game: GameRef,
    pub arms: Vec<ArmConfig>,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub tie_rule: TieRule,
    #[serde(default)]
    pub initial_action: InitialAction,
    #[serde(default)]
    pub test_action_mode: TestActionMode,
    #[serde(default)]
    pub metrics: MetricGrid,
    pub out_dir: Option<PathBuf>,
    /// Directory relative paths resolve against; not part of the file.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// Command-line values that replace the file's.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out_dir: Option<PathBuf>,
    pub seeds: Option<Vec<u64>>,
    pub horizon: Option<u64>,
    pub workers: Option<usize>,
}

/// The experiment's game, built, plus a stable identity for comparisons.
#[derive(Debug, Clone)]
pub struct ResolvedGame {
    pub spec: GameSpec,
    pub loaded: LoadedGame,
    /// Hex SHA-256 of the spec's canonical JSON.
    pub id: String,
}

impl ArmConfig {
    pub fn engine_config(&self, cfg: &ExperimentConfig, seed: u64) -> Result<EngineConfig> {
        Ok(EngineConfig::new(self.algorithm)
            .samples(SampleSchedule::new(self.c, self.gamma, self.rounding)?)
            .step(StepSchedule::power(self.beta)?)
            .tie_rule(cfg.tie_rule)
            .test_actions(cfg.test_action_mode)
            .initial(cfg.initial_action.clone())
            .seed(seed))
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: Self =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
        Self::parse(&text, &base).map_err(|e| match e {
            HarnessError::Config(message) => HarnessError::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(out) = &overrides.out_dir {
            // Command-line paths are relative to the working directory.
            self.out_dir = Some(std::path::absolute(out).unwrap_or_else(|_| out.clone()));
        }
        if let Some(seeds) = &overrides.seeds {
            self.seeds = seeds.clone();
        }
        if let Some(horizon) = overrides.horizon {
            self.horizon = horizon;
        }
        if let Some(workers) = overrides.workers {
            self.workers = workers;
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.arms.is_empty() {
            return fail("at least one arm is required".into());
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if self.seeds.is_empty() {
            return fail("seeds must be non-empty".into());
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return fail(format!("seed {dup} is listed twice"));
        }
        if self.workers == 0 {
            return fail("workers must be at least 1".into());
        }
        let mut names = HashSet::new();
        for arm in &self.arms {
            let safe = !arm.name.is_empty()
                && arm
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "_-.".contains(c));
            if !safe {
                return fail(format!(
                    "arm name {:?} must be non-empty ASCII letters, digits, '_', '-' or '.'",
                    arm.name
                ));
            }
            if !names.insert(arm.name.as_str()) {
                return fail(format!("arm name {:?} is used twice", arm.name));
            }
            arm.engine_config(self, 0)?;
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        match &self.out_dir {
            Some(dir) => self.base_dir.join(dir),
            None => self.base_dir.join("out"),
        }
    }

    pub fn resolve_game(&self) -> Result<ResolvedGame> {
        let spec = match &self.game {
            GameRef::Named(name) => GameSpec::Builtin { name: name.clone() },
            GameRef::Inline(spec) => spec.clone(),
            GameRef::File { file } => {
                let path = self.base_dir.join(file);
                let text = std::fs::read_to_string(&path).map_err(|source| HarnessError::Read {
                    path: path.clone(),
                    source,
                })?;
                parse_game_file(&text)?.game
            }
        };
        let loaded = spec.build()?;
        let canonical = serde_json::to_vec(&spec).expect("game specs serialize");
        let id = hex::encode(Sha256::digest(&canonical));
        Ok(ResolvedGame { spec, loaded, id })
    }
}
