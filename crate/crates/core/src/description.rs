//! Game description files and named builtin games.
//!
//! A description file is TOML:
//!
//! ```toml
//! schema_version = 1
//!
//! [game]
//! kind = "tensor"
//! num_players = 2
//! action_counts = [2, 2]
//! # one row-major tensor per player, player 0 the slowest axis
//! payoffs = [[1, -1, -1, 1], [-1, 1, 1, -1]]
//! zero_sum = true
//! ```
//!
//! `kind = "congestion"` takes `num_drivers` plus either an explicit
//! `routes` list (`{ slope, intercept }` or `{ table = [...] }`) or a
//! `random = { routes, slope = [lo, hi], intercept = [lo, hi] }` block drawn
//! under `seed`. `kind = "builtin"` takes a `name` from [`builtin_names`].

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::congestion::{
    CongestionGame, CostFunction, BENCHMARK_INTERCEPT, BENCHMARK_SEED, BENCHMARK_SLOPE,
};
use crate::error::{Error, Result};
use crate::game::{Game, MixedProfile, NormalFormGame};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub schema_version: u32,
    pub game: GameSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GameSpec {
    Builtin {
        name: String,
    },
    Tensor {
        num_players: usize,
        action_counts: Vec<usize>,
        payoffs: Vec<Vec<f64>>,
        #[serde(default)]
        identical_interest: bool,
        #[serde(default)]
        zero_sum: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        potential: Option<Vec<f64>>,
    },
    Congestion {
        num_drivers: usize,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        routes: Vec<CostFunction>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        random: Option<RandomRoutes>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomRoutes {
    pub routes: usize,
    pub slope: [f64; 2],
    pub intercept: [f64; 2],
}

/// A constructed game plus what is known about it.
#[derive(Clone)]
pub struct LoadedGame {
    pub name: String,
    pub game: Arc<dyn Game>,
    /// Analytically known Nash equilibria, when the set is finite and known.
    pub known_equilibria: Vec<MixedProfile>,
}

impl fmt::Debug for LoadedGame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LoadedGame")
            .field("name", &self.name)
            .field("action_counts", &self.game.action_counts().len())
            .field("known_equilibria", &self.known_equilibria.len())
            .finish()
    }
}

pub fn parse_game_file(text: &str) -> Result<GameFile> {
    let file: GameFile = toml::from_str(text).map_err(|e| Error::Description(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::Description(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            file.schema_version
        )));
    }
    Ok(file)
}

impl GameSpec {
    pub fn build(&self) -> Result<LoadedGame> {
        match self {
            GameSpec::Builtin { name } => builtin(name),
            GameSpec::Tensor {
                num_players,
                action_counts,
                payoffs,
                identical_interest,
                zero_sum,
                potential,
            } => {
                if *num_players != action_counts.len() {
                    return Err(Error::Description(format!(
                        "num_players = {num_players} but {} action counts given",
                        action_counts.len()
                    )));
                }
                let mut game =
                    NormalFormGame::from_tensors(action_counts.clone(), payoffs.clone())?;
                if *identical_interest {
                    game = game.identical_interest()?;
                }
                if *zero_sum {
                    game = game.zero_sum()?;
                }
                if let Some(potential) = potential {
                    game = game.with_potential_tensor(potential.clone())?;
                }
                Ok(LoadedGame {
                    name: format!("tensor {action_counts:?}"),
                    game: Arc::new(game),
                    known_equilibria: Vec::new(),
                })
            }
            GameSpec::Congestion {
                num_drivers,
                routes,
                random,
                seed,
            } => {
                let game = match (routes.is_empty(), random) {
                    (false, None) => CongestionGame::new(*num_drivers, routes.clone())?,
                    (true, Some(r)) => CongestionGame::random_affine(
                        *num_drivers,
                        r.routes,
                        (r.slope[0], r.slope[1]),
                        (r.intercept[0], r.intercept[1]),
                        seed.unwrap_or(BENCHMARK_SEED),
                    )?,
                    _ => {
                        return Err(Error::Description(
                            "congestion game needs exactly one of `routes` or `random`".into(),
                        ))
                    }
                };
                Ok(LoadedGame {
                    name: format!(
                        "congestion {} drivers x {} routes",
                        num_drivers,
                        game.num_routes()
                    ),
                    game: Arc::new(game),
                    known_equilibria: Vec::new(),
                })
            }
        }
    }
}

/// Builtin names with a one-line description. `congestion:` also accepts
/// `key=value` parameters; see [`builtin`].
pub fn builtin_names() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "matching_pennies",
            "2x2 zero-sum; unique equilibrium at uniform play",
        ),
        (
            "coordination_2x2",
            "2x2 identical interest, payoff 1 on the diagonal",
        ),
        (
            "unanimity_3x2",
            "3 players, 2 actions, common payoff 1 iff all agree",
        ),
        (
            "congestion:benchmark",
            "50 drivers, 10 routes, random affine costs",
        ),
        (
            "congestion:large",
            "1000 drivers, 50 routes, random affine costs",
        ),
        (
            "congestion:drivers=N,routes=R[,seed=S][,slope=LO..HI][,intercept=LO..HI]",
            "random affine parallel-route game",
        ),
    ]
}

/// Resolves a builtin game by name.
pub fn builtin(name: &str) -> Result<LoadedGame> {
    let counts = [2, 2];
    let loaded = |game: Arc<dyn Game>, known_equilibria| LoadedGame {
        name: name.to_string(),
        game,
        known_equilibria,
    };
    match name {
        "matching_pennies" => Ok(loaded(
            Arc::new(NormalFormGame::matching_pennies()),
            vec![MixedProfile::uniform(&counts)],
        )),
        "coordination_2x2" => Ok(loaded(
            Arc::new(NormalFormGame::coordination_2x2()),
            vec![
                MixedProfile::pure(&counts, &[0, 0])?,
                MixedProfile::pure(&counts, &[1, 1])?,
                MixedProfile::uniform(&counts),
            ],
        )),
        "unanimity_3x2" => Ok(loaded(
            Arc::new(NormalFormGame::unanimity(3, 2)?),
            Vec::new(),
        )),
        "congestion:benchmark" => Ok(loaded(Arc::new(CongestionGame::benchmark()), Vec::new())),
        "congestion:large" => Ok(loaded(Arc::new(CongestionGame::full_scale()), Vec::new())),
        _ => match name.strip_prefix("congestion:") {
            Some(params) => Ok(loaded(
                Arc::new(parse_congestion_params(params)?),
                Vec::new(),
            )),
            None => Err(Error::Description(format!("unknown builtin game `{name}`"))),
        },
    }
}

fn parse_range(key: &str, value: &str) -> Result<(f64, f64)> {
    let bad = || Error::Description(format!("`{key}` wants LO..HI, got `{value}`"));
    let (lo, hi) = value.split_once("..").ok_or_else(bad)?;
    Ok((
        lo.trim().parse().map_err(|_| bad())?,
        hi.trim().parse().map_err(|_| bad())?,
    ))
}

fn parse_congestion_params(params: &str) -> Result<CongestionGame> {
    let mut drivers = None;
    let mut routes = None;
    let mut seed = BENCHMARK_SEED;
    let mut slope = BENCHMARK_SLOPE;
    let mut intercept = BENCHMARK_INTERCEPT;
    for pair in params.split(',').filter(|p| !p.trim().is_empty()) {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Description(format!("expected key=value, got `{pair}`")))?;
        let (key, value) = (key.trim(), value.trim());
        let int = |v: &str| {
            v.parse::<u64>()
                .map_err(|_| Error::Description(format!("`{key}` wants an integer, got `{v}`")))
        };
        match key {
            "drivers" => drivers = Some(int(value)? as usize),
            "routes" => routes = Some(int(value)? as usize),
            "seed" => seed = int(value)?,
            "slope" => slope = parse_range(key, value)?,
            "intercept" => intercept = parse_range(key, value)?,
            _ => {
                return Err(Error::Description(format!(
                    "unknown congestion parameter `{key}`"
                )))
            }
        }
    }
    let drivers = drivers.ok_or_else(|| Error::Description("congestion needs drivers=N".into()))?;
    let routes = routes.ok_or_else(|| Error::Description("congestion needs routes=R".into()))?;
    CongestionGame::random_affine(drivers, routes, slope, intercept, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_file() {
        let text = r#"
            schema_version = 1
            [game]
            kind = "tensor"
            num_players = 2
            action_counts = [2, 2]
            payoffs = [[1, -1, -1, 1], [-1, 1, 1, -1]]
            zero_sum = true
        "#;
        let file = parse_game_file(text).unwrap();
        let loaded = file.game.build().unwrap();
        assert!(loaded.game.tags().zero_sum);
        assert_eq!(loaded.game.utility(0, &[1, 1]), 1.0);
    }

    #[test]
    fn congestion_files() {
        let explicit = r#"
            schema_version = 1
            [game]
            kind = "congestion"
            num_drivers = 3
            routes = [{ slope = 1.0, intercept = 0.0 }, { table = [1.0, 2.0, 4.0] }]
        "#;
        let g = parse_game_file(explicit).unwrap().game.build().unwrap();
        assert_eq!(g.game.action_counts(), &[2, 2, 2]);
        assert_eq!(g.game.utility(0, &[1, 1, 0]), -2.0);

        let random = r#"
            schema_version = 1
            [game]
            kind = "congestion"
            num_drivers = 50
            seed = 20160301
            random = { routes = 10, slope = [0.5, 2.0], intercept = [0.0, 5.0] }
        "#;
        let g = parse_game_file(random).unwrap().game.build().unwrap();
        let bench = CongestionGame::benchmark();
        assert_eq!(g.game.as_congestion().unwrap().routes(), bench.routes());
    }

    #[test]
    fn bad_files() {
        assert!(parse_game_file(
            "schema_version = 2\n[game]\nkind = \"builtin\"\nname = \"matching_pennies\""
        )
        .is_err());
        assert!(parse_game_file("schema_version = 1\n[game]\nkind = \"nope\"").is_err());
        let mismatch = r#"
            schema_version = 1
            [game]
            kind = "tensor"
            num_players = 3
            action_counts = [2, 2]
            payoffs = [[0, 0, 0, 0], [0, 0, 0, 0]]
        "#;
        assert!(parse_game_file(mismatch).unwrap().game.build().is_err());
        let both = GameSpec::Congestion {
            num_drivers: 3,
            routes: vec![CostFunction::linear(1.0)],
            random: Some(RandomRoutes {
                routes: 2,
                slope: [1.0, 1.0],
                intercept: [0.0, 0.0],
            }),
            seed: None,
        };
        assert!(both.build().is_err());
    }

    #[test]
    fn builtins_resolve() {
        for (name, _) in builtin_names() {
            if name.contains('[') {
                continue;
            }
            let g = builtin(name).unwrap();
            assert!(g.game.num_players() >= 2, "{name}");
        }
        let g = builtin("congestion:drivers=10,routes=3,slope=1..1,intercept=0..0").unwrap();
        let c = g.game.as_congestion().unwrap();
        assert_eq!(c.num_drivers(), 10);
        assert!(c.routes().iter().all(|r| *r == CostFunction::linear(1.0)));
        assert!(builtin("congestion:routes=3").is_err());
        assert!(builtin("congestion:drivers=3,routes=2,foo=1").is_err());
        assert!(builtin("rock_paper_scissors").is_err());
    }
}
