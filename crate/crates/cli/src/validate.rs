//! The `validate-schedule` command.

use std::fmt::Write as _;

use cesfp::estimation::{validate_sample_schedule, validate_step_schedule};
use cesfp::{Rounding, SampleSchedule, StepSchedule};

use crate::error::Result;

#[derive(Debug, Clone, Default)]
pub struct ScheduleQuery {
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub c: Option<f64>,
    pub rounding: Rounding,
    pub horizon: u64,
}

/// Human-readable report and whether every checked clause holds. With
/// neither `beta` nor `gamma` given, both default schedules are checked.
pub fn validate_schedules(query: &ScheduleQuery) -> Result<(String, bool)> {
    let both = query.beta.is_none() && query.gamma.is_none() && query.c.is_none();
    let mut out = String::new();
    let mut ok = true;
    let flag = |b: bool| if b { "pass" } else { "FAIL" };

    if query.beta.is_some() || both {
        let beta = query.beta.unwrap_or(0.6);
        let r = validate_step_schedule(&StepSchedule::power(beta)?, query.horizon)?;
        let _ = writeln!(
            out,
            "step size rho(t) = t^-{beta}, checked to t = {}",
            r.t_check
        );
        let _ = writeln!(
            out,
            "  {}  0 < rho(t) <= 1            min {:.6e}, max {:.6e}",
            flag(r.rho_positive_le_one),
            r.rho_min,
            r.rho_max
        );
        let bound = r
            .square_sum_bound
            .map_or("none".to_string(), |b| format!("{b:.6}"));
        let _ = writeln!(
            out,
            "  {}  sum rho(t)^2 < infinity    partial {:.6}, bound {bound}",
            flag(r.square_summable),
            r.square_partial_sum
        );
        let _ = writeln!(
            out,
            "  {}  1/(t rho(t)) -> 0          {:.6e} at t/10, {:.6e} at t",
            flag(r.inverse_limit_vanishes),
            r.inverse_t_rho_earlier,
            r.inverse_t_rho
        );
        let _ = writeln!(
            out,
            "  {}  sum rho(t) = infinity      rho(t) >= {:.4}/t over the last decade",
            flag(r.sum_diverges),
            r.harmonic_lower_bound
        );
        for v in &r.violations {
            let _ = writeln!(out, "  violation: {v}");
        }
        ok &= r.passes();
    }
    if query.gamma.is_some() || query.c.is_some() || both {
        let schedule = SampleSchedule::new(
            query.c.unwrap_or(1.0),
            query.gamma.unwrap_or(0.6),
            query.rounding,
        )?;
        let r = validate_sample_schedule(&schedule);
        let rounding = match r.rounding {
            Rounding::Ceil => "ceil",
            Rounding::Floor => "floor",
        };
        let _ = writeln!(out, "samples k_t = {rounding}({} t^{})", r.c, r.gamma);
        let _ = writeln!(out, "  {}  C > 0", flag(r.positive_scale));
        let _ = writeln!(out, "  {}  gamma > 1/2", flag(r.gamma_above_half));
        for v in &r.violations {
            let _ = writeln!(out, "  violation: {v}");
        }
        for n in &r.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        ok &= r.passes();
    }
    let _ = writeln!(
        out,
        "{}",
        if ok {
            "all clauses pass"
        } else {
            "schedule rejected"
        }
    );
    Ok((out, ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(beta: Option<f64>, gamma: Option<f64>) -> bool {
        let q = ScheduleQuery {
            beta,
            gamma,
            horizon: 100_000,
            ..ScheduleQuery::default()
        };
        validate_schedules(&q).unwrap().1
    }

    #[test]
    fn clause_outcomes() {
        assert!(check(None, None));
        assert!(check(Some(0.6), None));
        assert!(!check(Some(0.5), None));
        assert!(!check(Some(1.0), None));
        assert!(check(None, Some(0.6)));
        assert!(!check(None, Some(0.5)));
    }

    #[test]
    fn short_horizon_is_an_error() {
        let q = ScheduleQuery {
            beta: Some(0.6),
            horizon: 10,
            ..ScheduleQuery::default()
        };
        assert!(validate_schedules(&q).is_err());
    }
}
