use cesfp::estimation::{
    toeplitz_average_step, validate_sample_schedule, validate_step_schedule, TrackingEstimator,
};
use cesfp::{Rounding, SampleSchedule, StepSchedule};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const T: u64 = 100_000;

fn track(beta: f64, horizon: u64, mut sample: impl FnMut(u64) -> f64) -> f64 {
    let mut est = TrackingEstimator::new(0.0, StepSchedule::power(beta).unwrap());
    for t in 1..=horizon {
        est.update(sample(t)).unwrap();
    }
    est.estimate()
}

proptest! {
    #[test]
    fn average_step_stays_between_inputs(prev in -1e6..1e6f64, x in -1e6..1e6f64, rho in 1e-9..=1.0f64) {
        let y = toeplitz_average_step(prev, x, rho).unwrap();
        let slack = 1e-9 * (1.0 + prev.abs().max(x.abs()));
        prop_assert!(y >= prev.min(x) - slack && y <= prev.max(x) + slack);
    }

    #[test]
    fn rho_outside_unit_interval_is_rejected(prev in -1.0..1.0f64, rho in prop_oneof![-2.0..=0.0f64, 1.0 + 1e-9..3.0f64]) {
        prop_assert!(toeplitz_average_step(prev, 0.0, rho).is_err());
    }

    #[test]
    fn tracker_is_bounded(
        initial in -3.0..3.0f64,
        bound in 0.1..5.0f64,
        beta in 0.5..1.0f64,
        samples in prop::collection::vec(-1.0..=1.0f64, 1..300),
    ) {
        let mut est = TrackingEstimator::new(initial, StepSchedule::power(beta).unwrap());
        let cap = initial.abs().max(bound) * (1.0 + 1e-12);
        for s in samples {
            let y = est.update(s * bound).unwrap();
            prop_assert!(y.abs() <= cap);
        }
    }

    #[test]
    fn power_schedules_in_range_pass(beta in 0.5001..=1.0f64) {
        let report = validate_step_schedule(&StepSchedule::power(beta).unwrap(), 10_000).unwrap();
        prop_assert!(report.rho_positive_le_one && report.square_summable, "{:?}", report.violations);
        // beta = 1 makes 1/(t rho(t)) constant.
        prop_assert_eq!(report.passes(), beta < 1.0);
    }

    #[test]
    fn slow_power_schedules_fail_square_summability(beta in 0.05..=0.5f64) {
        let report = validate_step_schedule(&StepSchedule::power(beta).unwrap(), 10_000).unwrap();
        prop_assert!(!report.square_summable);
        prop_assert!(!report.passes());
    }

    #[test]
    fn fast_power_schedules_fail_the_limit_clause(beta in 1.0001..3.0f64) {
        let report = validate_step_schedule(&StepSchedule::power(beta).unwrap(), 10_000).unwrap();
        prop_assert!(!report.inverse_limit_vanishes);
        prop_assert!(!report.sum_diverges);
    }
}

#[test]
fn constant_input_is_a_fixed_point() {
    for beta in [0.6, 0.75, 1.0] {
        let mut est = TrackingEstimator::new(2.5, StepSchedule::power(beta).unwrap());
        for _ in 0..1000 {
            assert_eq!(est.update(2.5).unwrap(), 2.5);
        }
    }
}

#[test]
fn full_replacement_copies_the_input() {
    let mut est = TrackingEstimator::new(7.0, StepSchedule::sequence(vec![1.0; 50]).unwrap());
    for t in 1..=50 {
        let x = (t as f64).sin();
        assert_eq!(est.update(x).unwrap(), x);
    }
    assert!(est.update(0.0).is_err());
}

#[test]
fn first_update_overwrites_initial_value() {
    let mut est = TrackingEstimator::new(-40.0, StepSchedule::default());
    assert_eq!(est.update(3.25).unwrap(), 3.25);
    assert_eq!(est.round(), 1);
    assert!(est.update(f64::NAN).is_err());
}

#[test]
fn averaging_converges_to_limit_of_inputs() {
    let y = track(0.6, T, |t| 1.0 + 1.0 / t as f64);
    assert!((y - 1.0).abs() <= 0.02, "{y}");
}

#[test]
fn tracking_follows_a_drifting_mean() {
    let mu = |t: u64| 1.0 - 1.0 / t as f64;
    let y = track(0.6, T, mu);
    assert!((y - mu(T)).abs() <= 0.02, "{y}");
}

#[test]
fn tracking_error_contracts_for_bounded_drift() {
    for c in [0.1, 1.0, 10.0] {
        for beta in [0.6, 0.8] {
            // Increments are exactly c / t.
            let mut mu = 0.0;
            let mut est = TrackingEstimator::new(0.0, StepSchedule::power(beta).unwrap());
            let mut early = None;
            for t in 1..=T {
                mu += c / t as f64;
                est.update(mu).unwrap();
                if t == 100 {
                    early = Some((est.estimate() - mu).abs());
                }
            }
            let late = (est.estimate() - mu).abs();
            assert!(
                late < early.unwrap(),
                "c={c} beta={beta}: {late} vs {early:?}"
            );
        }
    }
}

#[test]
fn zero_mean_noise_is_averaged_out() {
    let hits = (0..20u64)
        .filter(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            track(0.6, T, |_| rng.random_range(-1.0..=1.0)).abs() <= 0.05
        })
        .count();
    assert!(hits >= 19, "{hits}/20");
}

#[test]
fn sequence_and_power_forms_agree() {
    let values: Vec<f64> = (1..=20_000).map(|t| (t as f64).powf(-0.6)).collect();
    let seq = validate_step_schedule(&StepSchedule::sequence(values).unwrap(), 20_000).unwrap();
    let pow = validate_step_schedule(&StepSchedule::power(0.6).unwrap(), 20_000).unwrap();
    assert!(seq.passes() && pow.passes());
    assert!((seq.decay_exponent - 0.6).abs() < 1e-6);
    assert!((seq.square_partial_sum - pow.square_partial_sum).abs() < 1e-9);
}

#[test]
fn sample_schedule_requires_gamma_strictly_above_half() {
    let at = |gamma, rounding| {
        validate_sample_schedule(&SampleSchedule::new(1.0, gamma, rounding).unwrap())
    };
    assert!(at(0.6, Rounding::Ceil).passes());
    assert!(!at(0.5, Rounding::Ceil).passes());
    assert!(!at(0.5, Rounding::Ceil).gamma_above_half);
    let floor = at(0.6, Rounding::Floor);
    assert!(floor.passes() && !floor.notes.is_empty());
}
