//! The repeated-play loop shared by FP, Sampled FP and CESFP.
//!
//! Round `t` starts from the empirical distribution `q(t)`, forms a utility
//! estimate for every action of every player, picks `a(t+1)` as a best
//! response to that estimate, and folds `a(t+1)` into `q(t+1)`:
//!
//! * `FpExact` uses the exact mixed utilities `U_i(a, q_{-i}(t))`;
//! * `SampledFp` averages pure utilities over `k_t` fresh test actions drawn
//!   from `q(t)`;
//! * `Cesfp` draws one test action and blends its utilities into a running
//!   estimate with weight `rho(t)`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::toeplitz_average_step;
use crate::game::{best_response, check_joint, Game, MixedProfile, TieRule};
use crate::metrics::{self, MetricSnapshot};
use crate::schedule::{SampleSchedule, StepSchedule};

/// Normalized action histogram `q(t)` with its round counter.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution {
    profile: MixedProfile,
    round: u64,
}

impl EmpiricalDistribution {
    /// `q(1)`: point masses on the initial joint action.
    pub fn new(action_counts: &[usize], initial: &[usize]) -> Result<Self> {
        Ok(Self {
            profile: MixedProfile::pure(action_counts, initial)?,
            round: 1,
        })
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn profile(&self) -> &MixedProfile {
        &self.profile
    }

    pub fn strategy(&self, player: usize) -> &[f64] {
        self.profile.strategy(player)
    }

    /// `q_i(t+1) = q_i(t) + (e_{a_i} - q_i(t)) / (t + 1)` for every player.
    pub fn update(&mut self, joint: &[usize]) -> Result<()> {
        let counts: Vec<usize> = self.profile.strategies().iter().map(Vec::len).collect();
        check_joint(&counts, joint)?;
        self.update_unchecked(joint);
        Ok(())
    }

    fn update_unchecked(&mut self, joint: &[usize]) {
        let weight = 1.0 / (self.round + 1) as f64;
        for (player, &chosen) in joint.iter().enumerate() {
            for (a, q) in self.profile.strategy_mut(player).iter_mut().enumerate() {
                let target = if a == chosen { 1.0 } else { 0.0 };
                *q += weight * (target - *q);
            }
        }
        self.round += 1;
    }

    /// Draws an independent pure action for every player from `q_i`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut out = vec![0; self.profile.num_players()];
        self.draw_into(rng, &mut out);
        out
    }

    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [usize]) {
        for (player, slot) in out.iter_mut().enumerate() {
            *slot = sample_categorical(self.profile.strategy(player), rng.random::<f64>());
        }
    }
}

/// First index whose cumulative mass exceeds `u`; falls back to the last
/// index with positive mass when rounding leaves the total just below `u`.
fn sample_categorical(probabilities: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    let mut last_positive = 0;
    for (a, &p) in probabilities.iter().enumerate() {
        if p > 0.0 {
            cumulative += p;
            last_positive = a;
            if u < cumulative {
                return a;
            }
        }
    }
    last_positive
}

/// Per-player, per-action utility estimates `U_hat_i(a, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityEstimateTable {
    rows: Vec<Vec<f64>>,
}

impl UtilityEstimateTable {
    pub fn zeros(action_counts: &[usize]) -> Self {
        Self {
            rows: action_counts.iter().map(|&m| vec![0.0; m]).collect(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn row(&self, player: usize) -> &[f64] {
        &self.rows[player]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// One CESFP step for `player`:
    /// `U_hat(a) <- (1 - rho) U_hat(a) + rho u_i(a, test_{-i})` for every `a`.
    pub fn cesfp_update<G: Game + ?Sized>(
        &mut self,
        game: &G,
        player: usize,
        test_action: &[usize],
        rho: f64,
    ) -> Result<()> {
        check_joint(game.action_counts(), test_action)?;
        let mut sample = vec![0.0; game.action_counts()[player]];
        game.deviation_utilities(player, test_action, &mut sample);
        self.blend_row(player, &sample, rho)
    }

    fn blend_row(&mut self, player: usize, sample: &[f64], rho: f64) -> Result<()> {
        for (estimate, &u) in self.rows[player].iter_mut().zip(sample) {
            *estimate = toeplitz_average_step(*estimate, u, rho)?;
        }
        Ok(())
    }
}

/// Fresh Sampled-FP estimate for `player`: the average of
/// `u_i(a, test_{-i})` over `k` independent draws from `q`.
pub fn sampled_fp_estimate<G: Game + ?Sized, R: Rng + ?Sized>(
    game: &G,
    player: usize,
    q: &EmpiricalDistribution,
    k: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if k == 0 {
        return Err(Error::InvalidSchedule(
            "Sampled FP needs at least one sample".into(),
        ));
    }
    let m = game.action_counts()[player];
    let mut total = vec![0.0; m];
    let mut sample = vec![0.0; m];
    let mut joint = vec![0; game.num_players()];
    for _ in 0..k {
        q.draw_into(rng, &mut joint);
        game.deviation_utilities(player, &joint, &mut sample);
        for (acc, u) in total.iter_mut().zip(&sample) {
            *acc += u;
        }
    }
    let scale = 1.0 / k as f64;
    total.iter_mut().for_each(|v| *v *= scale);
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    FpExact,
    SampledFp,
    Cesfp,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::FpExact => "fp_exact",
            Algorithm::SampledFp => "sampled_fp",
            Algorithm::Cesfp => "cesfp",
        }
    }
}

/// Whether all players share each round's test actions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestActionMode {
    #[default]
    Shared,
    PerPlayer,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialAction {
    /// Every player starts on action 0.
    #[default]
    Zero,
    /// Uniform draws from the engine's seeded stream.
    Random,
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub algorithm: Algorithm,
    pub samples: SampleSchedule,
    pub step: StepSchedule,
    pub tie_rule: TieRule,
    pub test_actions: TestActionMode,
    pub initial: InitialAction,
    pub seed: u64,
}

impl EngineConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            samples: SampleSchedule::default(),
            step: StepSchedule::default(),
            tie_rule: TieRule::default(),
            test_actions: TestActionMode::default(),
            initial: InitialAction::default(),
            seed: 0,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn samples(mut self, samples: SampleSchedule) -> Self {
        self.samples = samples;
        self
    }

    pub fn step(mut self, step: StepSchedule) -> Self {
        self.step = step;
        self
    }

    pub fn tie_rule(mut self, tie_rule: TieRule) -> Self {
        self.tie_rule = tie_rule;
        self
    }

    pub fn test_actions(mut self, mode: TestActionMode) -> Self {
        self.test_actions = mode;
        self
    }

    pub fn initial(mut self, initial: InitialAction) -> Self {
        self.initial = initial;
        self
    }
}

/// What one round consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundInfo {
    pub t: u64,
    /// Test actions drawn per player this round.
    pub samples: u64,
}

/// A single learner. Owns its random stream; not shared across threads.
pub struct Engine<'g, G: Game + ?Sized> {
    game: &'g G,
    config: EngineConfig,
    rng: ChaCha8Rng,
    empirical: EmpiricalDistribution,
    estimates: UtilityEstimateTable,
    next: Vec<usize>,
    chosen: bool,
    test_action: Vec<usize>,
    scratch: Vec<Vec<f64>>,
    cumulative_samples: u64,
}

impl<'g, G: Game + ?Sized> Engine<'g, G> {
    pub fn new(game: &'g G, config: EngineConfig) -> Result<Self> {
        if config.algorithm == Algorithm::FpExact && !game.has_exact_oracle() {
            return Err(Error::OracleUnavailable(format!(
                "exact FP needs exact mixed utilities; the joint space of {} players is too large to enumerate",
                game.num_players()
            )));
        }
        let counts = game.action_counts().to_vec();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let initial: Vec<usize> = match config.initial {
            InitialAction::Zero => vec![0; counts.len()],
            InitialAction::Random => counts.iter().map(|&m| rng.random_range(0..m)).collect(),
            InitialAction::Fixed(ref joint) => joint.clone(),
        };
        Ok(Self {
            game,
            empirical: EmpiricalDistribution::new(&counts, &initial)?,
            estimates: UtilityEstimateTable::zeros(&counts),
            next: initial,
            chosen: false,
            test_action: vec![0; counts.len()],
            scratch: counts.iter().map(|&m| vec![0.0; m]).collect(),
            config,
            rng,
            cumulative_samples: 0,
        })
    }

    pub fn game(&self) -> &'g G {
        self.game
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn empirical(&self) -> &EmpiricalDistribution {
        &self.empirical
    }

    pub fn estimates(&self) -> &UtilityEstimateTable {
        &self.estimates
    }

    /// `a(t+1)` after [`Engine::choose`], `a(1)` before the first round.
    pub fn next_action(&self) -> &[usize] {
        &self.next
    }

    pub fn round(&self) -> u64 {
        self.empirical.round()
    }

    pub fn cumulative_samples(&self) -> u64 {
        self.cumulative_samples
    }

    /// Forms the round-`t` estimates and picks `a(t+1)`, leaving `q(t)`
    /// untouched so it can still be measured.
    pub fn choose(&mut self) -> Result<RoundInfo> {
        let t = self.empirical.round();
        let samples = match self.config.algorithm {
            Algorithm::FpExact => {
                let values = self.game.all_action_values(self.empirical.profile())?;
                self.estimates = UtilityEstimateTable::from_rows(values);
                0
            }
            Algorithm::SampledFp => {
                let k = self.config.samples.samples(t);
                self.sampled_round(k);
                k as u64
            }
            Algorithm::Cesfp => {
                let rho = self.config.step.rho(t)?;
                self.cesfp_round(rho)?;
                1
            }
        };
        for (player, slot) in self.next.iter_mut().enumerate() {
            *slot = best_response(
                self.estimates.row(player),
                self.config.tie_rule,
                &mut self.rng,
            )?;
        }
        self.chosen = true;
        self.cumulative_samples += samples;
        Ok(RoundInfo { t, samples })
    }

    /// Folds the chosen `a(t+1)` into the empirical distribution.
    pub fn commit(&mut self) -> Result<()> {
        if !self.chosen {
            return Err(Error::InvalidAction("commit called before choose".into()));
        }
        self.empirical.update_unchecked(&self.next);
        self.chosen = false;
        Ok(())
    }

    pub fn step(&mut self) -> Result<RoundInfo> {
        let info = self.choose()?;
        self.commit()?;
        Ok(info)
    }

    fn sampled_round(&mut self, k: usize) {
        for row in self.estimates.rows.iter_mut() {
            row.iter_mut().for_each(|v| *v = 0.0);
        }
        match self.config.test_actions {
            TestActionMode::Shared => {
                for _ in 0..k {
                    self.empirical
                        .draw_into(&mut self.rng, &mut self.test_action);
                    self.game
                        .all_deviation_utilities(&self.test_action, &mut self.scratch);
                    for (row, sample) in self.estimates.rows.iter_mut().zip(&self.scratch) {
                        for (acc, u) in row.iter_mut().zip(sample) {
                            *acc += u;
                        }
                    }
                }
            }
            TestActionMode::PerPlayer => {
                for player in 0..self.game.num_players() {
                    for _ in 0..k {
                        self.empirical
                            .draw_into(&mut self.rng, &mut self.test_action);
                        let sample = &mut self.scratch[player];
                        self.game
                            .deviation_utilities(player, &self.test_action, sample);
                        for (acc, u) in self.estimates.rows[player].iter_mut().zip(sample.iter()) {
                            *acc += u;
                        }
                    }
                }
            }
        }
        let scale = 1.0 / k as f64;
        for row in self.estimates.rows.iter_mut() {
            row.iter_mut().for_each(|v| *v *= scale);
        }
    }

    fn cesfp_round(&mut self, rho: f64) -> Result<()> {
        match self.config.test_actions {
            TestActionMode::Shared => {
                self.empirical
                    .draw_into(&mut self.rng, &mut self.test_action);
                self.game
                    .all_deviation_utilities(&self.test_action, &mut self.scratch);
                for player in 0..self.game.num_players() {
                    self.estimates
                        .blend_row(player, &self.scratch[player], rho)?;
                }
            }
            TestActionMode::PerPlayer => {
                for player in 0..self.game.num_players() {
                    self.empirical
                        .draw_into(&mut self.rng, &mut self.test_action);
                    self.game.deviation_utilities(
                        player,
                        &self.test_action,
                        &mut self.scratch[player],
                    );
                    self.estimates
                        .blend_row(player, &self.scratch[player], rho)?;
                }
            }
        }
        Ok(())
    }
}

/// Rounds at which metric snapshots are taken. The final round is always
/// included.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricGrid {
    /// `t` in `{1, 2, 4, 8, ...}`.
    #[serde(default = "default_true")]
    pub geometric: bool,
    /// Every `t` divisible by this.
    #[serde(default)]
    pub every: Option<u64>,
    #[serde(default)]
    pub points: Vec<u64>,
}

fn default_true() -> bool {
    true
}

impl Default for MetricGrid {
    fn default() -> Self {
        Self {
            geometric: true,
            every: None,
            points: Vec::new(),
        }
    }
}

impl MetricGrid {
    pub fn none() -> Self {
        Self {
            geometric: false,
            every: None,
            points: Vec::new(),
        }
    }

    pub fn points(points: impl IntoIterator<Item = u64>) -> Self {
        Self {
            geometric: false,
            every: None,
            points: points.into_iter().collect(),
        }
    }

    pub fn contains(&self, t: u64, horizon: u64) -> bool {
        t == horizon
            || (self.geometric && t.is_power_of_two())
            || self.every.is_some_and(|e| e > 0 && t.is_multiple_of(e))
            || self.points.contains(&t)
    }

    pub fn grid(&self, horizon: u64) -> Vec<u64> {
        (1..=horizon)
            .filter(|&t| self.contains(t, horizon))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: u64,
    pub samples: u64,
    pub cumulative_samples: u64,
    /// Monotonic-clock time spent in this round's estimate, choice and update.
    pub wall_ns: u64,
    pub cumulative_wall_ns: u64,
    pub snapshot: Option<MetricSnapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub horizon: u64,
    pub grid: MetricGrid,
    /// Keep every chosen joint action `a(t+1)`.
    pub record_actions: bool,
}

impl RunOptions {
    pub fn new(horizon: u64) -> Self {
        Self {
            horizon,
            grid: MetricGrid::default(),
            record_actions: false,
        }
    }

    pub fn grid(mut self, grid: MetricGrid) -> Self {
        self.grid = grid;
        self
    }

    pub fn record_actions(mut self, record: bool) -> Self {
        self.record_actions = record;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub initial_action: Vec<usize>,
    pub rounds: Vec<RoundRecord>,
    pub actions: Option<Vec<Vec<usize>>>,
    pub final_empirical: EmpiricalDistribution,
    pub final_estimates: UtilityEstimateTable,
}

impl RunRecord {
    pub fn snapshots(&self) -> impl Iterator<Item = &MetricSnapshot> {
        self.rounds.iter().filter_map(|r| r.snapshot.as_ref())
    }

    pub fn snapshot_at(&self, t: u64) -> Option<&MetricSnapshot> {
        self.rounds
            .get((t as usize).checked_sub(1)?)
            .and_then(|r| r.snapshot.as_ref())
    }

    pub fn total_samples(&self) -> u64 {
        self.rounds.last().map_or(0, |r| r.cumulative_samples)
    }

    pub fn total_wall_ns(&self) -> u64 {
        self.rounds.last().map_or(0, |r| r.cumulative_wall_ns)
    }

    /// The record with every timing field zeroed, for determinism checks.
    pub fn without_timing(&self) -> Self {
        let mut copy = self.clone();
        for r in copy.rounds.iter_mut() {
            r.wall_ns = 0;
            r.cumulative_wall_ns = 0;
        }
        copy
    }
}

/// Runs `options.horizon` rounds. The snapshot stored at round `t` measures
/// `q(t)`, the estimates of round `t`, and the choice `a(t+1)`.
pub fn run<G: Game + ?Sized>(
    game: &G,
    config: EngineConfig,
    options: &RunOptions,
) -> Result<RunRecord> {
    if options.horizon == 0 {
        return Err(Error::InvalidSchedule("horizon must be at least 1".into()));
    }
    let algorithm = config.algorithm;
    let seed = config.seed;
    let mut engine = Engine::new(game, config)?;
    let initial_action = engine.next_action().to_vec();
    let mut rounds = Vec::with_capacity(options.horizon as usize);
    let mut actions = options.record_actions.then(Vec::new);
    let mut cumulative_wall_ns = 0u64;
    for _ in 0..options.horizon {
        let started = Instant::now();
        let info = engine.choose()?;
        let choose_ns = started.elapsed().as_nanos() as u64;

        let snapshot = if options.grid.contains(info.t, options.horizon) {
            Some(metrics::snapshot(
                game,
                info.t,
                engine.empirical().profile(),
                engine.estimates(),
                engine.next_action(),
            )?)
        } else {
            None
        };
        if let Some(actions) = actions.as_mut() {
            actions.push(engine.next_action().to_vec());
        }

        let started = Instant::now();
        engine.commit()?;
        let wall_ns = choose_ns + started.elapsed().as_nanos() as u64;
        cumulative_wall_ns += wall_ns;
        rounds.push(RoundRecord {
            t: info.t,
            samples: info.samples,
            cumulative_samples: engine.cumulative_samples(),
            wall_ns,
            cumulative_wall_ns,
            snapshot,
        });
    }
    Ok(RunRecord {
        algorithm,
        seed,
        initial_action,
        rounds,
        actions,
        final_empirical: engine.empirical().clone(),
        final_estimates: engine.estimates().clone(),
    })
}
