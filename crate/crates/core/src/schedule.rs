//! Per-round sample counts `k_t` and step sizes `rho(t)`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative distance within which `C t^gamma` is treated as an integer
/// before rounding, so `32^0.6 = 8` is not pushed to 9 by `powf` error.
const INTEGER_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    #[default]
    Ceil,
    Floor,
}

/// `k_t = round(C * t^gamma)`, never below one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSchedule {
    pub c: f64,
    pub gamma: f64,
    #[serde(default)]
    pub rounding: Rounding,
}

impl Default for SampleSchedule {
    fn default() -> Self {
        Self {
            c: 1.0,
            gamma: 0.6,
            rounding: Rounding::Ceil,
        }
    }
}

impl SampleSchedule {
    pub fn new(c: f64, gamma: f64, rounding: Rounding) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "sample scale C = {c} must be > 0"
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "sample exponent gamma = {gamma} must be >= 0"
            )));
        }
        Ok(Self { c, gamma, rounding })
    }

    pub fn samples(&self, t: u64) -> usize {
        let x = self.c * (t as f64).powf(self.gamma);
        let nearest = x.round();
        let x = if (x - nearest).abs() <= INTEGER_SNAP * nearest.max(1.0) {
            nearest
        } else {
            x
        };
        let k = match self.rounding {
            Rounding::Ceil => x.ceil(),
            Rounding::Floor => x.floor(),
        };
        k.max(1.0) as usize
    }

    /// `sum_{t=1}^{horizon} k_t`.
    pub fn cumulative(&self, horizon: u64) -> u64 {
        (1..=horizon).map(|t| self.samples(t) as u64).sum()
    }
}

/// Step-size sequence `rho(t)`, `t >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule {
    /// `rho(t) = t^{-beta}`.
    Power { beta: f64 },
    /// Caller-supplied values; `rho(t)` is entry `t - 1`.
    Sequence(Arc<[f64]>),
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Power { beta: 0.6 }
    }
}

impl StepSchedule {
    pub fn power(beta: f64) -> Result<Self> {
        if !(beta.is_finite() && beta >= 0.0) {
            return Err(Error::InvalidSchedule(format!(
                "step exponent beta = {beta} must be >= 0"
            )));
        }
        Ok(StepSchedule::Power { beta })
    }

    pub fn sequence(values: impl Into<Arc<[f64]>>) -> Result<Self> {
        let values = values.into();
        if values.is_empty() {
            return Err(Error::InvalidSchedule("empty step-size sequence".into()));
        }
        Ok(StepSchedule::Sequence(values))
    }

    /// Longest horizon the schedule covers.
    pub fn covered_horizon(&self) -> Option<u64> {
        match self {
            StepSchedule::Power { .. } => None,
            StepSchedule::Sequence(v) => Some(v.len() as u64),
        }
    }

    pub fn rho(&self, t: u64) -> Result<f64> {
        if t == 0 {
            return Err(Error::InvalidSchedule("step sizes start at t = 1".into()));
        }
        match self {
            StepSchedule::Power { beta } => Ok((t as f64).powf(-beta)),
            StepSchedule::Sequence(v) => v.get((t - 1) as usize).copied().ok_or_else(|| {
                Error::InvalidSchedule(format!(
                    "step-size sequence has {} entries, round {t} requested",
                    v.len()
                ))
            }),
        }
    }
}
