//! Cross-module properties on shared realizations.

use fdnoma::channel::ChannelGenerator;
use fdnoma::montecarlo::{run_sweep, simulate, Metric, SimOptions, SweepAxis, SweepCase, SweepConfig, CHUNK_SIZE};
use fdnoma::selection::{decide, LinkSinrs, Scheme, SelectionOptions};
use fdnoma::SystemParams;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params(rho_db: f64, n_t: usize, m_r: usize, m_t: usize) -> SystemParams {
    SystemParams::default().with_rho_db(rho_db).with_antennas(n_t, m_r, m_t)
}

#[test]
fn tallies_identical_for_any_worker_count() {
    let p = params(15.0, 3, 2, 3);
    let trials = 2 * CHUNK_SIZE + 1234;
    let base = simulate(
        &p,
        &Scheme::ALL,
        trials,
        77,
        SimOptions {
            workers: 1,
            ..SimOptions::default()
        },
    )
    .unwrap();
    for workers in [2, 5] {
        let other = simulate(
            &p,
            &Scheme::ALL,
            trials,
            77,
            SimOptions {
                workers,
                ..SimOptions::default()
            },
        )
        .unwrap();
        assert_eq!(base, other, "workers = {workers}");
    }
}

#[test]
fn optimum_maximizes_sum_rate_per_draw() {
    let p = params(10.0, 3, 2, 2);
    let mut gen = ChannelGenerator::new(&p, 3, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let theta2 = p.derived().theta2;
    for _ in 0..2000 {
        let r = gen.draw();
        let opt = LinkSinrs::of(
            &r,
            &p,
            &decide(Scheme::Optimum, &r, &p, theta2, SelectionOptions::default(), &mut rng).unwrap(),
        );
        for scheme in [
            Scheme::MaxU1,
            Scheme::MaxU2,
            Scheme::QosStatic,
            Scheme::OptimumU2,
            Scheme::Random,
        ] {
            let d = decide(scheme, &r, &p, theta2, SelectionOptions::default(), &mut rng).unwrap();
            assert!(
                LinkSinrs::of(&r, &p, &d).sum_rate() <= opt.sum_rate() + 1e-12,
                "{scheme}"
            );
        }
    }
}

#[test]
fn analytic_columns_follow_formula_availability() {
    let cfg = SweepConfig {
        cases: vec![SweepCase {
            label: "x".into(),
            params: params(0.0, 2, 2, 2),
        }],
        axis: SweepAxis::RhoDb(vec![20.0]),
        schemes: Scheme::ALL.to_vec(),
        metrics: vec![Metric::OutageU2, Metric::RateU2],
        trials: 100,
        seed: 1,
        options: SimOptions::default(),
    };
    let rows = run_sweep(&cfg).unwrap().rows;
    let has = |s: Scheme, m: Metric| {
        rows.iter()
            .find(|r| r.scheme == s && r.metric == m)
            .unwrap()
            .analytic
            .is_some()
    };
    assert!(has(Scheme::MaxU1, Metric::RateU2));
    assert!(has(Scheme::QosStatic, Metric::OutageU2));
    assert!(!has(Scheme::QosStatic, Metric::RateU2));
    assert!(!has(Scheme::Optimum, Metric::OutageU2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn simulated_outages_are_probabilities(
        rho in -5.0f64..45.0,
        n_t in 1usize..4, m_r in 1usize..3, m_t in 1usize..3,
        r2 in 0.1f64..3.0,
        seed in 0u64..1000,
    ) {
        let mut p = params(rho, n_t, m_r, m_t);
        p.rate_target_u2 = r2;
        let tallies = simulate(&p, &Scheme::ALL, 300, seed, SimOptions::default()).unwrap();
        for t in &tallies {
            for m in [Metric::OutageU1, Metric::OutageU2] {
                let v = t.estimate(m, seed).unwrap().value;
                prop_assert!((0.0..=1.0).contains(&v));
            }
            let r = t.estimate(Metric::RateU2, seed).unwrap().value;
            prop_assert!(r >= 0.0 && r <= (1.0 + p.a2 / p.a1).log2() + 1e-12);
        }
    }
}
