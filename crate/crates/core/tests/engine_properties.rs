use cesfp::engine::{run, RunOptions};
use cesfp::game::mixed_utility_exact;
use cesfp::metrics::{estimate_error, gwfp_epsilon, nash_gap};
use cesfp::*;
use proptest::prelude::*;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn enumerable_games() -> Vec<(&'static str, Box<dyn Game>)> {
    let rps = NormalFormGame::from_tensors(
        vec![3, 3],
        vec![
            vec![0.0, -1.0, 1.0, 1.0, 0.0, -1.0, -1.0, 1.0, 0.0],
            vec![0.0, 1.0, -1.0, -1.0, 0.0, 1.0, 1.0, -1.0, 0.0],
        ],
    )
    .unwrap();
    let two_by_three = NormalFormGame::from_tensors(
        vec![2, 3],
        vec![
            vec![3.0, 0.0, 1.0, 0.5, 2.0, 0.0],
            vec![1.0, 2.5, 0.0, 0.0, 1.0, 3.0],
        ],
    )
    .unwrap();
    vec![
        (
            "matching_pennies",
            Box::new(NormalFormGame::matching_pennies()),
        ),
        ("coordination", Box::new(NormalFormGame::coordination_2x2())),
        ("rock_paper_scissors", Box::new(rps)),
        ("two_by_three", Box::new(two_by_three)),
        (
            "unanimity",
            Box::new(NormalFormGame::unanimity(3, 2).unwrap()),
        ),
        (
            "congestion",
            Box::new(CongestionGame::random_affine(6, 3, (0.5, 2.0), (0.0, 5.0), 2).unwrap()),
        ),
    ]
}

fn max_abs_payoff(game: &dyn Game) -> f64 {
    let mut m = 0.0f64;
    cesfp::game::for_each_joint(game.action_counts(), |y| {
        for i in 0..game.num_players() {
            m = m.max(game.utility(i, y).abs());
        }
    });
    m
}

#[test]
fn exact_fp_is_an_exact_best_response_every_round() {
    for (name, game) in enumerable_games() {
        let options = RunOptions::new(500).grid(MetricGrid {
            every: Some(1),
            ..MetricGrid::none()
        });
        let record = run(
            game.as_ref(),
            EngineConfig::new(Algorithm::FpExact),
            &options,
        )
        .unwrap();
        assert_eq!(record.snapshots().count(), 500, "{name}");
        for snap in record.snapshots() {
            assert_eq!(snap.gwfp_epsilon, Some(0.0), "{name} t={}", snap.t);
            assert!(snap.nash_gap.unwrap() >= 0.0);
        }
    }
}

#[test]
fn chosen_actions_maximize_the_current_table() {
    for (name, game) in enumerable_games() {
        for algorithm in [Algorithm::FpExact, Algorithm::SampledFp, Algorithm::Cesfp] {
            for mode in [TestActionMode::Shared, TestActionMode::PerPlayer] {
                let cfg = EngineConfig::new(algorithm).seed(4).test_actions(mode);
                let mut engine = Engine::new(game.as_ref(), cfg).unwrap();
                for _ in 0..300 {
                    engine.choose().unwrap();
                    for (i, &a) in engine.next_action().iter().enumerate() {
                        let row = engine.estimates().row(i);
                        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        assert_eq!(row[a], max, "{name} {algorithm:?} {mode:?}");
                    }
                    engine.commit().unwrap();
                }
            }
        }
    }
}

#[test]
fn per_round_sample_counts() {
    let game = NormalFormGame::unanimity(3, 2).unwrap();
    let schedule = SampleSchedule::default();
    for algorithm in [Algorithm::FpExact, Algorithm::SampledFp, Algorithm::Cesfp] {
        let record = run(
            &game,
            EngineConfig::new(algorithm),
            &RunOptions::new(1000).grid(MetricGrid::none()),
        )
        .unwrap();
        let mut total = 0;
        for r in &record.rounds {
            let expected = match algorithm {
                Algorithm::FpExact => 0,
                Algorithm::SampledFp => schedule.samples(r.t) as u64,
                Algorithm::Cesfp => 1,
            };
            assert_eq!(r.samples, expected);
            total += r.samples;
            assert_eq!(r.cumulative_samples, total);
        }
        let expected_total = match algorithm {
            Algorithm::FpExact => 0,
            Algorithm::SampledFp => schedule.cumulative(1000),
            Algorithm::Cesfp => 1000,
        };
        assert_eq!(record.total_samples(), expected_total);
    }
}

#[test]
fn runs_are_deterministic_given_the_seed() {
    for (name, game) in enumerable_games() {
        for algorithm in [Algorithm::FpExact, Algorithm::SampledFp, Algorithm::Cesfp] {
            let cfg = EngineConfig::new(algorithm)
                .seed(17)
                .tie_rule(TieRule::SeededUniform)
                .initial(InitialAction::Random);
            let options = RunOptions::new(400).record_actions(true);
            let a = run(game.as_ref(), cfg.clone(), &options)
                .unwrap()
                .without_timing();
            let b = run(game.as_ref(), cfg, &options).unwrap().without_timing();
            assert_eq!(a, b, "{name} {algorithm:?}");
        }
    }
}

#[test]
fn mixed_utility_increments_shrink_like_one_over_t() {
    // q_{-i}(t) moves by at most 2/t in L1 per opponent.
    for (name, game) in enumerable_games() {
        let bound = 2.0 * max_abs_payoff(game.as_ref());
        let mut engine = Engine::new(game.as_ref(), EngineConfig::new(Algorithm::FpExact)).unwrap();
        let mut prev = game
            .all_action_values(engine.empirical().profile())
            .unwrap();
        for _ in 0..400 {
            engine.step().unwrap();
            let t = engine.round() as f64;
            let now = game
                .all_action_values(engine.empirical().profile())
                .unwrap();
            for (p, n) in prev.iter().flatten().zip(now.iter().flatten()) {
                assert!((n - p).abs() <= bound / t + 1e-12, "{name} t={t}");
            }
            prev = now;
        }
    }
}

#[test]
fn estimate_tables_stay_within_payoff_range() {
    for (name, game) in enumerable_games() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        cesfp::game::for_each_joint(game.action_counts(), |y| {
            for i in 0..game.num_players() {
                lo = lo.min(game.utility(i, y));
                hi = hi.max(game.utility(i, y));
            }
        });
        for algorithm in [Algorithm::SampledFp, Algorithm::Cesfp] {
            let mut engine =
                Engine::new(game.as_ref(), EngineConfig::new(algorithm).seed(1)).unwrap();
            for _ in 0..300 {
                engine.step().unwrap();
                for &v in engine.estimates().rows().iter().flatten() {
                    assert!(
                        v.is_finite() && v >= lo - 1e-12 && v <= hi + 1e-12,
                        "{name} {algorithm:?}"
                    );
                }
            }
        }
    }
}

#[test]
fn exact_fp_from_a_miscoordinated_start() {
    let game = NormalFormGame::coordination_2x2();
    let cfg = EngineConfig::new(Algorithm::FpExact).initial(InitialAction::Fixed(vec![0, 1]));
    let record = run(&game, cfg, &RunOptions::new(10_000)).unwrap();
    let q = record.final_empirical.profile();
    assert!(nash_gap(&game, q).unwrap() <= 0.05);
    let eqs = [
        MixedProfile::pure(&[2, 2], &[0, 0]).unwrap(),
        MixedProfile::pure(&[2, 2], &[1, 1]).unwrap(),
        MixedProfile::uniform(&[2, 2]),
    ];
    assert!(cesfp::metrics::distance_to_nearest(q, &eqs).unwrap() < 0.05);
}

#[test]
fn cesfp_epsilon_trends_to_zero_on_coordination() {
    let game = NormalFormGame::coordination_2x2();
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for seed in 0..10 {
        let cfg = EngineConfig::new(Algorithm::Cesfp)
            .seed(seed)
            .initial(InitialAction::Fixed(vec![0, 1]));
        let record = run(
            &game,
            cfg,
            &RunOptions::new(10_000).grid(MetricGrid::points([10, 10_000])),
        )
        .unwrap();
        early.push(record.snapshot_at(10).unwrap().gwfp_epsilon.unwrap());
        late.push(record.snapshot_at(10_000).unwrap().gwfp_epsilon.unwrap());
    }
    // Play locks onto a pure equilibrium where the deficiency is exactly 0,
    // so the median can tie at 0; the mean must still fall.
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(
        median(late.clone()) <= median(early.clone()),
        "{early:?} {late:?}"
    );
    assert!(mean(&late) < mean(&early), "{early:?} {late:?}");
}

#[test]
fn cesfp_estimates_track_exact_values() {
    let game = CongestionGame::random_affine(20, 5, (0.5, 2.0), (0.0, 5.0), 7).unwrap();
    let (mut early, mut late) = (Vec::new(), Vec::new());
    for seed in 0..10 {
        let record = run(
            &game,
            EngineConfig::new(Algorithm::Cesfp).seed(seed),
            &RunOptions::new(10_000).grid(MetricGrid::points([100, 10_000])),
        )
        .unwrap();
        early.push(record.snapshot_at(100).unwrap().max_estimate_error.unwrap());
        late.push(
            record
                .snapshot_at(10_000)
                .unwrap()
                .max_estimate_error
                .unwrap(),
        );
    }
    assert!(median(late) < 0.5 * median(early));
}

#[test]
fn one_cesfp_round_against_a_point_mass_is_exact() {
    let game = CongestionGame::random_affine(4, 3, (0.5, 2.0), (0.0, 5.0), 5).unwrap();
    let mut engine = Engine::new(&game, EngineConfig::new(Algorithm::Cesfp)).unwrap();
    engine.choose().unwrap();
    let q = engine.empirical().profile().clone();
    assert_eq!(estimate_error(&game, engine.estimates(), &q).unwrap(), 0.0);
    let eps = gwfp_epsilon(&game, &q, engine.next_action()).unwrap();
    assert_eq!(eps, 0.0);
}

#[test]
fn shared_and_per_player_modes_both_complete() {
    let game = CongestionGame::random_affine(10, 3, (0.5, 2.0), (0.0, 5.0), 9).unwrap();
    for algorithm in [Algorithm::SampledFp, Algorithm::Cesfp] {
        for mode in [TestActionMode::Shared, TestActionMode::PerPlayer] {
            let record = run(
                &game,
                EngineConfig::new(algorithm).test_actions(mode),
                &RunOptions::new(2000),
            )
            .unwrap();
            let last = record.snapshot_at(2000).unwrap();
            assert!(last.nash_gap.unwrap() < record.snapshot_at(1).unwrap().nash_gap.unwrap());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn empirical_distribution_is_a_histogram(actions in prop::collection::vec((0usize..3, 0usize..4), 1..200)) {
        let mut q = EmpiricalDistribution::new(&[3, 4], &[actions[0].0, actions[0].1]).unwrap();
        for &(a, b) in &actions[1..] {
            q.update(&[a, b]).unwrap();
        }
        let t = actions.len() as f64;
        prop_assert_eq!(q.round(), actions.len() as u64);
        for player in 0..2 {
            let s = q.strategy(player);
            prop_assert!((s.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            for (k, x) in s.iter().enumerate() {
                let count = actions.iter().filter(|p| if player == 0 { p.0 == k } else { p.1 == k }).count();
                prop_assert!((x * t - count as f64).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn sampled_estimates_against_point_masses_are_exact(joint in prop::collection::vec(0usize..3, 4), k in 1usize..50, seed in any::<u64>()) {
        use rand::SeedableRng;
        let game = CongestionGame::random_affine(4, 3, (0.5, 2.0), (0.0, 5.0), 1).unwrap();
        let q = EmpiricalDistribution::new(&[3; 4], &joint).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for player in 0..4 {
            let est = cesfp::engine::sampled_fp_estimate(&game, player, &q, k, &mut rng).unwrap();
            for (route, e) in est.iter().enumerate() {
                let exact = mixed_utility_exact(&game, player, route, q.profile()).unwrap();
                prop_assert!((e - exact).abs() <= 1e-12);
            }
        }
    }
}
