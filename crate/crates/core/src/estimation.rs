//! Stochastic-approximation averaging and step-size diagnostics.
//!
//! The CESFP estimate of each mixed utility is a [`TrackingEstimator`]
//! driven by one sampled utility per round. Its step sizes must be
//! positive and at most one, square-summable, and decay slower than `1/t`
//! (so that `1 / (t rho(t)) -> 0`); [`validate_step_schedule`] checks those
//! clauses numerically and, for power schedules, in closed form.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::schedule::{Rounding, SampleSchedule, StepSchedule};

/// `(1 - rho) * prev + rho * sample`, evaluated as an increment so that a
/// constant input is an exact fixed point and `rho = 1` copies `sample`.
pub fn toeplitz_average_step(prev: f64, sample: f64, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::StepSizeOutOfRange(rho));
    }
    if rho == 1.0 {
        return Ok(sample);
    }
    Ok(prev + rho * (sample - prev))
}

/// Running estimate `mu_t = (1 - rho_t) mu_{t-1} + rho_t X_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackingEstimator {
    estimate: f64,
    round: u64,
    schedule: StepSchedule,
}

impl TrackingEstimator {
    pub fn new(initial: f64, schedule: StepSchedule) -> Self {
        Self {
            estimate: initial,
            round: 0,
            schedule,
        }
    }

    pub fn estimate(&self) -> f64 {
        self.estimate
    }

    /// Number of samples absorbed so far.
    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn update(&mut self, sample: f64) -> Result<f64> {
        if !sample.is_finite() {
            return Err(Error::NonFiniteValue { index: 0 });
        }
        let rho = self.schedule.rho(self.round + 1)?;
        self.estimate = toeplitz_average_step(self.estimate, sample, rho)?;
        self.round += 1;
        Ok(self.estimate)
    }
}

/// Smallest horizon [`validate_step_schedule`] accepts.
pub const MIN_CHECK_HORIZON: u64 = 1_000;

const RATIO_MARGIN: f64 = 1e-6;

/// Outcome of [`validate_step_schedule`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepScheduleReport {
    pub t_check: u64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// `0 < rho(t) <= 1` for every `t <= t_check`.
    pub rho_positive_le_one: bool,
    /// `sum_{t <= t_check} rho(t)^2`.
    pub square_partial_sum: f64,
    /// Upper bound on the full series `sum rho(t)^2`, when it is finite.
    /// Closed form `2 beta / (2 beta - 1)` for power schedules; partial sum
    /// plus a fitted power-law tail for sequences.
    pub square_sum_bound: Option<f64>,
    pub square_summable: bool,
    /// Decay exponent: `beta` for power schedules, fitted over the last
    /// decade `[t_check / 10, t_check]` for sequences.
    pub decay_exponent: f64,
    /// `1 / (t rho(t))` at `t_check / 10` and at `t_check`.
    pub inverse_t_rho_earlier: f64,
    pub inverse_t_rho: f64,
    pub inverse_limit_vanishes: bool,
    /// `min t rho(t)` over the last decade: the `c` in `rho_t >= c / t`.
    pub harmonic_lower_bound: f64,
    /// `sum rho(t) = infinity`.
    pub sum_diverges: bool,
    pub violations: Vec<String>,
}

impl StepScheduleReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the step-size clauses over `t <= t_check`.
pub fn validate_step_schedule(schedule: &StepSchedule, t_check: u64) -> Result<StepScheduleReport> {
    if t_check < MIN_CHECK_HORIZON {
        return Err(Error::InvalidSchedule(format!(
            "check horizon {t_check} is below {MIN_CHECK_HORIZON}"
        )));
    }
    if let Some(len) = schedule.covered_horizon() {
        if len < t_check {
            return Err(Error::InvalidSchedule(format!(
                "sequence has {len} entries, check horizon is {t_check}"
            )));
        }
    }
    let earlier = t_check / 10;
    let mut rho_min = f64::INFINITY;
    let mut rho_max = f64::NEG_INFINITY;
    let mut square_partial_sum = 0.0;
    let mut harmonic_lower_bound = f64::INFINITY;
    let mut all_finite = true;
    for t in 1..=t_check {
        let rho = schedule.rho(t)?;
        all_finite &= rho.is_finite();
        rho_min = rho_min.min(rho);
        rho_max = rho_max.max(rho);
        square_partial_sum += rho * rho;
        if t >= earlier {
            harmonic_lower_bound = harmonic_lower_bound.min(t as f64 * rho);
        }
    }
    let rho_positive_le_one = all_finite && rho_min > 0.0 && rho_max <= 1.0;

    let rho_end = schedule.rho(t_check)?;
    let rho_earlier = schedule.rho(earlier)?;
    let inverse_t_rho = 1.0 / (t_check as f64 * rho_end);
    let inverse_t_rho_earlier = 1.0 / (earlier as f64 * rho_earlier);

    let (decay_exponent, square_sum_bound, inverse_limit_vanishes, sum_diverges) = match schedule {
        StepSchedule::Power { beta } => {
            let beta = *beta;
            // sum t^{-2b} <= 1 + int_1^inf s^{-2b} ds
            let bound = (2.0 * beta > 1.0).then(|| 2.0 * beta / (2.0 * beta - 1.0));
            (beta, bound, beta < 1.0, beta <= 1.0)
        }
        StepSchedule::Sequence(_) => {
            let exponent = if rho_end > 0.0 && rho_earlier > 0.0 {
                (rho_earlier / rho_end).ln() / (t_check as f64 / earlier as f64).ln()
            } else {
                f64::NAN
            };
            let bound = (2.0 * exponent > 1.0 + RATIO_MARGIN).then(|| {
                square_partial_sum + rho_end * rho_end * t_check as f64 / (2.0 * exponent - 1.0)
            });
            let vanishes = inverse_t_rho < inverse_t_rho_earlier * (1.0 - RATIO_MARGIN);
            (exponent, bound, vanishes, exponent <= 1.0 + RATIO_MARGIN)
        }
    };
    let square_summable = square_sum_bound.is_some_and(|b| square_partial_sum <= b);

    let mut violations = Vec::new();
    if !rho_positive_le_one {
        violations.push(format!(
            "rho(t) must lie in (0, 1]: observed range [{rho_min}, {rho_max}]"
        ));
    }
    if !square_summable {
        violations.push(format!(
            "sum rho(t)^2 is not finite: partial sum {square_partial_sum:.6} at t = {t_check}, decay exponent {decay_exponent:.4} <= 0.5"
        ));
    }
    if !inverse_limit_vanishes {
        violations.push(format!(
            "1/(t rho(t)) does not vanish: {inverse_t_rho_earlier:.6} at t = {earlier}, {inverse_t_rho:.6} at t = {t_check}"
        ));
    }
    Ok(StepScheduleReport {
        t_check,
        rho_min,
        rho_max,
        rho_positive_le_one,
        square_partial_sum,
        square_sum_bound,
        square_summable,
        decay_exponent,
        inverse_t_rho_earlier,
        inverse_t_rho,
        inverse_limit_vanishes,
        harmonic_lower_bound,
        sum_diverges,
        violations,
    })
}

/// Outcome of [`validate_sample_schedule`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleScheduleReport {
    pub c: f64,
    pub gamma: f64,
    pub rounding: Rounding,
    pub positive_scale: bool,
    /// Strict `gamma > 1/2`.
    pub gamma_above_half: bool,
    pub violations: Vec<String>,
    /// Non-fatal remarks, e.g. floor rounding.
    pub notes: Vec<String>,
}

impl SampleScheduleReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `k_t = ceil(C t^gamma)` with `C > 0` and `gamma > 1/2`.
pub fn validate_sample_schedule(schedule: &SampleSchedule) -> SampleScheduleReport {
    let positive_scale = schedule.c.is_finite() && schedule.c > 0.0;
    let gamma_above_half = schedule.gamma > 0.5;
    let mut violations = Vec::new();
    let mut notes = Vec::new();
    if !positive_scale {
        violations.push(format!("sample scale C = {} must be > 0", schedule.c));
    }
    if !gamma_above_half {
        violations.push(format!(
            "sample exponent gamma = {} must be strictly greater than 1/2",
            schedule.gamma
        ));
    }
    if schedule.rounding == Rounding::Floor {
        notes.push("floor rounding draws at most one sample fewer per round than ceil".into());
    }
    SampleScheduleReport {
        c: schedule.c,
        gamma: schedule.gamma,
        rounding: schedule.rounding,
        positive_scale,
        gamma_above_half,
        violations,
        notes,
    }
}
