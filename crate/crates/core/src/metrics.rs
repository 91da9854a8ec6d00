//! Equilibrium-quality and learning-progress measurements.
//!
//! All measures need exact mixed utilities, so they fail with
//! [`Error::OracleUnavailable`] on games without an exact oracle.

use serde::{Deserialize, Serialize};

use crate::engine::UtilityEstimateTable;
use crate::error::{Error, Result};
use crate::game::{Game, MixedProfile};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    pub t: u64,
    pub nash_gap: Option<f64>,
    pub gwfp_epsilon: Option<f64>,
    pub max_estimate_error: Option<f64>,
    pub expected_travel_time: Option<f64>,
    pub potential_value: Option<f64>,
}

fn exact_values<G: Game + ?Sized>(game: &G, profile: &MixedProfile) -> Result<Vec<Vec<f64>>> {
    if !game.has_exact_oracle() {
        return Err(Error::OracleUnavailable(format!(
            "{} players with {:?} actions",
            game.num_players(),
            game.action_counts()
        )));
    }
    game.all_action_values(profile)
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `max_i [max_a U_i(a, p_{-i}) - U_i(p)]` from precomputed action values.
pub fn nash_gap_from_values(values: &[Vec<f64>], profile: &MixedProfile) -> f64 {
    values
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let current: f64 = row
                .iter()
                .zip(profile.strategy(i))
                .map(|(v, p)| v * p)
                .sum();
            max_of(row) - current
        })
        .fold(0.0, f64::max)
}

/// Largest gain any player can get by a unilateral deviation from
/// `profile`; zero exactly at Nash equilibria.
pub fn nash_gap<G: Game + ?Sized>(game: &G, profile: &MixedProfile) -> Result<f64> {
    let values = exact_values(game, profile)?;
    Ok(nash_gap_from_values(&values, profile))
}

fn gwfp_from_values(values: &[Vec<f64>], next: &[usize]) -> f64 {
    values
        .iter()
        .zip(next)
        .map(|(row, &a)| max_of(row) - row[a])
        .fold(0.0, f64::max)
}

/// Best-response deficiency of `a(t+1)` against `q(t)`:
/// `max_i [max_a U_i(a, q_{-i}(t)) - U_i(a_i(t+1), q_{-i}(t))]`.
pub fn gwfp_epsilon<G: Game + ?Sized>(game: &G, q: &MixedProfile, next: &[usize]) -> Result<f64> {
    crate::game::check_joint(game.action_counts(), next)?;
    let values = exact_values(game, q)?;
    Ok(gwfp_from_values(&values, next))
}

fn estimate_error_from_values(values: &[Vec<f64>], table: &UtilityEstimateTable) -> f64 {
    values
        .iter()
        .zip(table.rows())
        .flat_map(|(exact, est)| exact.iter().zip(est).map(|(u, e)| (u - e).abs()))
        .fold(0.0, f64::max)
}

/// `max_{i, a} |U_hat_i(a) - U_i(a, q_{-i})|`.
pub fn estimate_error<G: Game + ?Sized>(
    game: &G,
    table: &UtilityEstimateTable,
    q: &MixedProfile,
) -> Result<f64> {
    let values = exact_values(game, q)?;
    Ok(estimate_error_from_values(&values, table))
}

/// Euclidean distance between two profiles, viewed as one long vector.
pub fn profile_distance(a: &MixedProfile, b: &MixedProfile) -> f64 {
    a.strategies()
        .iter()
        .flatten()
        .zip(b.strategies().iter().flatten())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Distance to the nearest of a known, finite set of equilibria.
pub fn distance_to_nearest(profile: &MixedProfile, equilibria: &[MixedProfile]) -> Option<f64> {
    equilibria
        .iter()
        .map(|e| profile_distance(profile, e))
        .reduce(f64::min)
}

/// Every available measure at round `t`, sharing one exact evaluation.
/// Oracle-dependent fields are `None` when the game has no exact oracle.
pub fn snapshot<G: Game + ?Sized>(
    game: &G,
    t: u64,
    q: &MixedProfile,
    table: &UtilityEstimateTable,
    next: &[usize],
) -> Result<MetricSnapshot> {
    let mut snap = MetricSnapshot {
        t,
        ..MetricSnapshot::default()
    };
    if game.has_exact_oracle() {
        let values = game.all_action_values(q)?;
        snap.nash_gap = Some(nash_gap_from_values(&values, q));
        snap.gwfp_epsilon = Some(gwfp_from_values(&values, next));
        snap.max_estimate_error = Some(estimate_error_from_values(&values, table));
    }
    if let Some(congestion) = game.as_congestion() {
        snap.expected_travel_time = Some(congestion.expected_total_travel_time(q)?);
    }
    snap.potential_value = game.expected_potential(q).transpose()?;
    Ok(snap)
}
