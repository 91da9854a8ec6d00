//! Fictitious-play learning for finite normal-form games.
//!
//! Three repeated-play learners share one loop ([`engine`]):
//!
//! * classical Fictitious Play, which best-responds to the exact mixed
//!   utility against the opponents' empirical distribution;
//! * Sampled FP, which replaces the exact mixed utility with a fresh
//!   Monte-Carlo average over `k_t` joint test actions every round;
//! * CESFP, which draws a single test action per round and tracks the mixed
//!   utility with the recursion `U <- (1 - rho) U + rho * u(sample)`.
//!
//! [`game`] holds the normal-form representation and the exact oracles,
//! [`congestion`] the parallel-route traffic game with a polynomial-time
//! exact oracle, [`estimation`] the stochastic-approximation primitives and
//! schedule diagnostics, and [`metrics`] the equilibrium-quality measures.

pub mod congestion;
pub mod description;
pub mod engine;
pub mod error;
pub mod estimation;
pub mod game;
pub mod metrics;
pub mod schedule;

pub use congestion::{CongestionGame, CostFunction};
pub use engine::{
    Algorithm, EmpiricalDistribution, Engine, EngineConfig, InitialAction, MetricGrid, RunRecord,
    TestActionMode, UtilityEstimateTable,
};
pub use error::{Error, Result};
pub use game::{best_response, Game, GameTags, MixedProfile, NormalFormGame, TieRule};
pub use metrics::MetricSnapshot;
pub use schedule::{Rounding, SampleSchedule, StepSchedule};
