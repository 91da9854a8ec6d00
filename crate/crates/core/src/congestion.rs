//! Parallel-route congestion games.
//!
//! Every driver picks one route; the delay on a route depends only on how
//! many drivers share it, and a driver's utility is minus the delay on the
//! chosen route. Under independent mixed play the load on a route is
//! Poisson-binomial, which gives exact expected utilities in `O(n^2)` per
//! route instead of enumerating `R^n` joint actions.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{check_joint, Game, GameTags, MixedProfile};

/// Drivers in the desk-scale benchmark instance.
pub const BENCHMARK_DRIVERS: usize = 50;
/// Routes in the desk-scale benchmark instance.
pub const BENCHMARK_ROUTES: usize = 10;
/// Seed used to draw the benchmark's affine costs.
pub const BENCHMARK_SEED: u64 = 20_160_301;
/// Slope range `[lo, hi]` of the random affine costs.
pub const BENCHMARK_SLOPE: (f64, f64) = (0.5, 2.0);
/// Intercept range `[lo, hi]` of the random affine costs.
pub const BENCHMARK_INTERCEPT: (f64, f64) = (0.0, 5.0);

/// Delay as a function of route load (load is at least 1 when evaluated).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CostFunction {
    /// `c(k) = slope * k + intercept`.
    Affine { slope: f64, intercept: f64 },
    /// `c(k) = table[k - 1]` for `k` in `1..=num_drivers`.
    Table { table: Vec<f64> },
}

impl CostFunction {
    pub fn linear(slope: f64) -> Self {
        CostFunction::Affine {
            slope,
            intercept: 0.0,
        }
    }

    #[inline]
    pub fn cost(&self, load: usize) -> f64 {
        debug_assert!(load >= 1);
        match self {
            CostFunction::Affine { slope, intercept } => slope * load as f64 + intercept,
            CostFunction::Table { table } => table[load - 1],
        }
    }
}

#[derive(Debug, Clone)]
pub struct CongestionGame {
    num_drivers: usize,
    routes: Vec<CostFunction>,
    action_counts: Vec<usize>,
}

impl CongestionGame {
    pub fn new(num_drivers: usize, routes: Vec<CostFunction>) -> Result<Self> {
        if num_drivers < 2 {
            return Err(Error::InvalidGame(format!(
                "need at least 2 drivers, got {num_drivers}"
            )));
        }
        if routes.is_empty() {
            return Err(Error::InvalidGame("no routes".into()));
        }
        for (r, cost) in routes.iter().enumerate() {
            match cost {
                CostFunction::Affine { slope, intercept } => {
                    if !slope.is_finite() || !intercept.is_finite() || *slope < 0.0 {
                        return Err(Error::InvalidGame(format!(
                            "route {r}: affine cost needs a finite slope >= 0 and finite intercept"
                        )));
                    }
                }
                CostFunction::Table { table } => {
                    if table.len() != num_drivers {
                        return Err(Error::InvalidGame(format!(
                            "route {r}: cost table has {} entries, expected {num_drivers}",
                            table.len()
                        )));
                    }
                    if table.iter().any(|c| !c.is_finite()) {
                        return Err(Error::InvalidGame(format!(
                            "route {r}: cost table has a non-finite entry"
                        )));
                    }
                }
            }
        }
        Ok(Self {
            action_counts: vec![routes.len(); num_drivers],
            num_drivers,
            routes,
        })
    }

    /// Affine costs with slopes and intercepts drawn uniformly from the given
    /// closed ranges under `seed`.
    pub fn random_affine(
        num_drivers: usize,
        num_routes: usize,
        slope: (f64, f64),
        intercept: (f64, f64),
        seed: u64,
    ) -> Result<Self> {
        if !(slope.0 <= slope.1 && intercept.0 <= intercept.1) {
            return Err(Error::InvalidGame("empty cost parameter range".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let routes = (0..num_routes)
            .map(|_| CostFunction::Affine {
                slope: rng.random_range(slope.0..=slope.1),
                intercept: rng.random_range(intercept.0..=intercept.1),
            })
            .collect();
        Self::new(num_drivers, routes)
    }

    /// The desk-scale benchmark: 50 drivers on 10 routes.
    pub fn benchmark() -> Self {
        Self::random_affine(
            BENCHMARK_DRIVERS,
            BENCHMARK_ROUTES,
            BENCHMARK_SLOPE,
            BENCHMARK_INTERCEPT,
            BENCHMARK_SEED,
        )
        .expect("benchmark parameters are valid")
    }

    /// 1000 drivers on 50 routes, same cost family as the benchmark.
    pub fn full_scale() -> Self {
        Self::random_affine(
            1000,
            50,
            BENCHMARK_SLOPE,
            BENCHMARK_INTERCEPT,
            BENCHMARK_SEED,
        )
        .expect("full-scale parameters are valid")
    }

    pub fn num_drivers(&self) -> usize {
        self.num_drivers
    }

    pub fn num_routes(&self) -> usize {
        self.routes.len()
    }

    pub fn routes(&self) -> &[CostFunction] {
        &self.routes
    }

    /// Number of drivers on each route.
    pub fn route_loads(&self, joint: &[usize]) -> Result<Vec<usize>> {
        check_joint(&self.action_counts, joint)?;
        Ok(self.loads_unchecked(joint))
    }

    fn loads_unchecked(&self, joint: &[usize]) -> Vec<usize> {
        let mut loads = vec![0; self.routes.len()];
        for &r in joint {
            loads[r] += 1;
        }
        loads
    }

    /// Rosenthal potential `-sum_r sum_{k=1}^{load_r} c_r(k)`.
    pub fn rosenthal_potential(&self, joint: &[usize]) -> Result<f64> {
        let loads = self.route_loads(joint)?;
        Ok(-self
            .routes
            .iter()
            .zip(&loads)
            .map(|(c, &load)| (1..=load).map(|k| c.cost(k)).sum::<f64>())
            .sum::<f64>())
    }

    /// Total travel time `sum_r load_r * c_r(load_r)` of a pure joint action.
    pub fn total_travel_time(&self, joint: &[usize]) -> Result<f64> {
        let loads = self.route_loads(joint)?;
        Ok(self
            .routes
            .iter()
            .zip(&loads)
            .filter(|(_, &load)| load > 0)
            .map(|(c, &load)| load as f64 * c.cost(load))
            .sum())
    }

    fn route_probabilities(
        &self,
        profile: &MixedProfile,
        route: usize,
        skip: Option<usize>,
    ) -> Vec<f64> {
        (0..self.num_drivers)
            .filter(|&j| Some(j) != skip)
            .map(|j| profile.strategy(j)[route])
            .collect()
    }

    /// `U_i(route, p_{-i}) = -E[c_route(1 + B)]` with `B` the number of other
    /// drivers on `route`. The driver's own entry of `profile` is ignored.
    pub fn congestion_mixed_utility(
        &self,
        player: usize,
        route: usize,
        profile: &MixedProfile,
    ) -> Result<f64> {
        profile.check_shape(&self.action_counts)?;
        if player >= self.num_drivers || route >= self.routes.len() {
            return Err(Error::InvalidAction(format!(
                "driver {player} / route {route} out of range"
            )));
        }
        let pmf = poisson_binomial_pmf(&self.route_probabilities(profile, route, Some(player)))?;
        Ok(-expected_delay(&self.routes[route], &pmf))
    }

    /// `sum_r sum_k P(load_r = k) * k * c_r(k)` under independent play.
    pub fn expected_total_travel_time(&self, profile: &MixedProfile) -> Result<f64> {
        profile.check_shape(&self.action_counts)?;
        let mut total = 0.0;
        for (r, cost) in self.routes.iter().enumerate() {
            let pmf = poisson_binomial_pmf(&self.route_probabilities(profile, r, None))?;
            total += pmf
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, p)| p * k as f64 * cost.cost(k))
                .sum::<f64>();
        }
        Ok(total)
    }

    /// Expected Rosenthal potential under independent play.
    pub fn expected_rosenthal_potential(&self, profile: &MixedProfile) -> Result<f64> {
        profile.check_shape(&self.action_counts)?;
        let mut total = 0.0;
        for (r, cost) in self.routes.iter().enumerate() {
            let pmf = poisson_binomial_pmf(&self.route_probabilities(profile, r, None))?;
            let mut cumulative = 0.0;
            for (k, p) in pmf.iter().enumerate().skip(1) {
                cumulative += cost.cost(k);
                total -= p * cumulative;
            }
        }
        Ok(total)
    }
}

/// `E[c(1 + B)]` where `pmf[k] = P(B = k)`.
fn expected_delay(cost: &CostFunction, pmf: &[f64]) -> f64 {
    pmf.iter()
        .enumerate()
        .map(|(k, p)| p * cost.cost(k + 1))
        .sum()
}

/// Distribution of the number of successes among independent Bernoulli
/// trials, by iterative convolution. Entry `k` is `P(exactly k successes)`.
pub fn poisson_binomial_pmf(probabilities: &[f64]) -> Result<Vec<f64>> {
    let mut pmf = Vec::with_capacity(probabilities.len() + 1);
    pmf.push(1.0);
    for (index, &p) in probabilities.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ProbabilityOutOfRange { index, value: p });
        }
        pmf.push(0.0);
        for k in (1..pmf.len()).rev() {
            pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    Ok(pmf)
}

/// Removes one Bernoulli(`p`) trial from a Poisson-binomial pmf.
///
/// Runs the division upward when `p <= 1/2` and downward otherwise, so each
/// step multiplies the carried error by at most one.
pub(crate) fn remove_trial(pmf: &[f64], p: f64) -> Vec<f64> {
    let n = pmf.len() - 1;
    let mut out = vec![0.0; n];
    if n == 0 {
        return out;
    }
    if p <= 0.5 {
        let q = 1.0 - p;
        let mut prev = 0.0;
        for k in 0..n {
            let v = (pmf[k] - p * prev) / q;
            out[k] = v;
            prev = v;
        }
    } else {
        let q = 1.0 - p;
        let mut next = 0.0;
        for k in (0..n).rev() {
            let v = (pmf[k + 1] - q * next) / p;
            out[k] = v;
            next = v;
        }
    }
    out
}

impl Game for CongestionGame {
    fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    fn utility(&self, player: usize, joint: &[usize]) -> f64 {
        let route = joint[player];
        let load = joint.iter().filter(|&&r| r == route).count();
        -self.routes[route].cost(load)
    }

    fn tags(&self) -> GameTags {
        GameTags {
            potential: true,
            ..GameTags::default()
        }
    }

    fn deviation_utilities(&self, player: usize, joint: &[usize], out: &mut [f64]) {
        let mut loads = self.loads_unchecked(joint);
        loads[joint[player]] -= 1;
        for (r, slot) in out.iter_mut().enumerate() {
            *slot = -self.routes[r].cost(loads[r] + 1);
        }
    }

    fn all_deviation_utilities(&self, joint: &[usize], out: &mut [Vec<f64>]) {
        let loads = self.loads_unchecked(joint);
        // Delay seen when joining route r from elsewhere / when already on it.
        let join: Vec<f64> = self
            .routes
            .iter()
            .zip(&loads)
            .map(|(c, &l)| -c.cost(l + 1))
            .collect();
        let stay: Vec<f64> = self
            .routes
            .iter()
            .zip(&loads)
            .map(|(c, &l)| if l > 0 { -c.cost(l) } else { 0.0 })
            .collect();
        for (row, &own) in out.iter_mut().zip(joint) {
            row.copy_from_slice(&join);
            row[own] = stay[own];
        }
    }

    fn has_exact_oracle(&self) -> bool {
        true
    }

    fn action_values(&self, player: usize, profile: &MixedProfile) -> Result<Vec<f64>> {
        (0..self.routes.len())
            .map(|r| self.congestion_mixed_utility(player, r, profile))
            .collect()
    }

    fn all_action_values(&self, profile: &MixedProfile) -> Result<Vec<Vec<f64>>> {
        profile.check_shape(&self.action_counts)?;
        let mut values = vec![vec![0.0; self.routes.len()]; self.num_drivers];
        for (r, cost) in self.routes.iter().enumerate() {
            let full = poisson_binomial_pmf(&self.route_probabilities(profile, r, None))?;
            // Drivers with bit-identical probabilities share a deconvolution.
            let mut cache: HashMap<u64, f64> = HashMap::new();
            for (i, row) in values.iter_mut().enumerate() {
                let p = profile.strategy(i)[r];
                row[r] = *cache
                    .entry(p.to_bits())
                    .or_insert_with(|| -expected_delay(cost, &remove_trial(&full, p)));
            }
        }
        Ok(values)
    }

    fn expected_potential(&self, profile: &MixedProfile) -> Option<Result<f64>> {
        Some(self.expected_rosenthal_potential(profile))
    }

    fn as_congestion(&self) -> Option<&CongestionGame> {
        Some(self)
    }
}
