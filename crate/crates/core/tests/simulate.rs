use mv_reinsure::equilibrium::{proportional_equilibrium_schedule, EquilibriumStrategy, ValueFunctions};
use mv_reinsure::model::{ClaimMeasure, Config, ModelParams, Retention, Schedule, Severity, Strategy};
use mv_reinsure::quadrature::QuadSettings;
use mv_reinsure::simulate::*;
use mv_reinsure::Error;

fn ex2() -> (ModelParams, ClaimMeasure) {
    let c = Config::example2();
    (c.params, c.claims)
}

fn sim(n: usize, seed: u64) -> SimConfig {
    SimConfig {
        n_paths: n,
        steps_per_unit_time: 200,
        seed,
        ..SimConfig::default()
    }
}

#[test]
fn deterministic_ode_is_exact() {
    let p = ModelParams {
        sigma1: 0.0,
        theta: 0.6,
        eta: 0.6,
        ..ModelParams::example1()
    };
    let s = Strategy::new(Retention::zero(), Schedule::constant(0.0), p.horizon);
    let cfg = SimConfig { x0: 3.0, t0: 1.5, ..sim(20, 1) };
    let out = simulate_terminal(&cfg, &s, &p, &ClaimMeasure::none()).unwrap();
    let expect = 3.0 * (p.r * (p.horizon - 1.5)).exp();
    assert!(out.iter().all(|&x| x == expect));
}

#[test]
fn same_seed_same_samples_any_thread_count() {
    let (p, cm) = ex2();
    let s = EquilibriumStrategy::new(p).to_strategy();
    let base = simulate_terminal(&sim(500, 42), &s, &p, &cm).unwrap();
    for threads in [1, 2, 5] {
        let cfg = SimConfig { threads: Some(threads), ..sim(500, 42) };
        let again = simulate_terminal(&cfg, &s, &p, &cm).unwrap();
        assert_eq!(
            base.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            again.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }
    let other = simulate_terminal(&sim(500, 43), &s, &p, &cm).unwrap();
    assert_ne!(base, other);
}

#[test]
fn discounted_surplus_is_a_martingale_without_loadings() {
    let p = ModelParams {
        theta: 0.6,
        eta: 0.6,
        ..ModelParams::example1()
    };
    let cm = ClaimMeasure::new(1.0, Severity::exponential(0.5)).unwrap();
    let s = Strategy::new(Retention::zero(), Schedule::constant(0.0), p.horizon);
    let times = [0.0, 2.0, 4.5, 7.0, 9.0];
    let cfg = SimConfig { x0: 1.0, ..sim(20_000, 5) };
    let obs = simulate_observed(&cfg, &s, &p, &cm, &times).unwrap();
    let target = p.growth(0.0) * 1.0;
    for (&t, xs) in times.iter().zip(&obs) {
        let y: Vec<f64> = xs.iter().map(|x| p.growth(t) * x).collect();
        let e = estimate_objective(&y, 1.0).unwrap();
        assert!((e.mean - target).abs() <= 3.0 * e.se_mean.max(1e-12), "t = {t}: {e:?}");
    }
}

#[test]
fn mean_shift_in_initial_surplus() {
    let (p, cm) = ex2();
    let s = EquilibriumStrategy::new(p).to_strategy();
    let a = simulate_terminal(&sim(2_000, 9), &s, &p, &cm).unwrap();
    let cfg = SimConfig { x0: 100.0, ..sim(2_000, 9) };
    let b = simulate_terminal(&cfg, &s, &p, &cm).unwrap();
    let shift = 100.0 * p.growth(0.0);
    for (x, y) in a.iter().zip(&b) {
        assert!((y - x - shift).abs() < 1e-10);
    }
    let ma = pairwise_sum(&a) / a.len() as f64;
    let mb = pairwise_sum(&b) / b.len() as f64;
    assert!((mb - shift - ma).abs() < 1e-10);
}

#[test]
fn step_halving_moves_mean_less_than_one_se() {
    let (p, cm) = ex2();
    let s = EquilibriumStrategy::new(p).to_strategy();
    let coarse = estimate_objective(&simulate_terminal(&sim(20_000, 3), &s, &p, &cm).unwrap(), p.gamma).unwrap();
    let cfg = SimConfig { steps_per_unit_time: 400, ..sim(20_000, 3) };
    let fine = estimate_objective(&simulate_terminal(&cfg, &s, &p, &cm).unwrap(), p.gamma).unwrap();
    assert!((coarse.mean - fine.mean).abs() < coarse.se_mean);
}

#[test]
fn proportional_equilibrium_matches_its_value_function() {
    let (p, cm) = ex2();
    let q = proportional_equilibrium_schedule(&p, &cm).unwrap();
    let s = Strategy::new(Retention::proportional(q), EquilibriumStrategy::new(p).investment_schedule(), p.horizon);
    let e = estimate_objective(&simulate_terminal(&sim(40_000, 17), &s, &p, &cm).unwrap(), p.gamma).unwrap();
    let v2 = mv_reinsure::compare::cl_value_proportional(0.0, 0.0, &mv_reinsure::compare::CramerLundbergSpec::example2())
        .unwrap();
    assert!((e.objective_j - v2.value).abs() <= 3.0 * e.se_j, "{e:?} vs {v2:?}");
    assert!((e.mean - v2.expectation).abs() <= 3.0 * e.se_mean);
}

#[test]
fn equilibrium_moments_match_closed_forms() {
    let (p, cm) = ex2();
    let vf = ValueFunctions::new(p, cm.clone(), QuadSettings::default());
    let s = EquilibriumStrategy::new(p).to_strategy();
    let e = estimate_objective(&simulate_terminal(&sim(40_000, 23), &s, &p, &cm).unwrap(), p.gamma).unwrap();
    let pt = vf.evaluate(0.0, 0.0).unwrap();
    assert!((e.mean - pt.expectation).abs() <= 3.0 * e.se_mean);
    assert!((e.objective_j - pt.value).abs() <= 3.0 * e.se_j);
    assert!((e.variance - pt.variance).abs() <= 3.0 * e.se_variance);
}

#[test]
fn identity_perturbation_is_exactly_zero() {
    let (p, cm) = ex2();
    let report = perturbation_test(
        0.0,
        0.5,
        &[0.5, 0.1],
        &[Perturbation::identity(&p)],
        &sim(500, 1),
        &p,
        &cm,
    )
    .unwrap();
    for r in &report.results[0].estimates {
        assert_eq!((r.ratio, r.se), (0.0, 0.0));
    }
    assert!(report.pass);
}

#[test]
fn perturbation_rejects_bad_eps() {
    let (p, cm) = ex2();
    let lib = perturbation_library(0.0, &p).unwrap();
    assert_eq!(lib.len(), 10);
    for eps in [vec![], vec![0.1, 0.5], vec![4.0], vec![0.5, 0.0]] {
        let err = perturbation_test(0.0, 0.0, &eps, &lib, &sim(10, 1), &p, &cm).unwrap_err();
        assert!(matches!(err, Error::InfeasibleEpsilon(_)), "{eps:?}");
    }
}

#[test]
fn invalid_inputs_are_reported() {
    let (p, cm) = ex2();
    let bad = Strategy::new(Retention::proportional(Schedule::constant(1.5)), Schedule::constant(0.0), p.horizon);
    assert!(matches!(simulate_terminal(&sim(10, 1), &bad, &p, &cm), Err(Error::InvalidStrategy(_))));
    let s = EquilibriumStrategy::new(p).to_strategy();
    let cfg = SimConfig { n_paths: 0, t0: 5.0, ..sim(10, 1) };
    match simulate_terminal(&cfg, &s, &p, &cm) {
        Err(Error::Validation(v)) => assert_eq!(v.len(), 2),
        other => panic!("{other:?}"),
    }
    let huge = SimConfig { x0: 1e13, ..sim(3, 1) };
    assert!(matches!(simulate_terminal(&huge, &s, &p, &cm), Err(Error::Blowup { .. })));
}

#[test]
fn sample_dump_round_trips() {
    let xs = vec![0.1, -2.5, 1e-300, 12345.678901234567];
    let mut bin = Vec::new();
    write_samples(&mut bin, &xs, SampleFormat::Binary).unwrap();
    assert_eq!(bin.len(), 32);
    assert_eq!(read_samples_binary(&bin), xs);
    let mut csv = Vec::new();
    write_samples(&mut csv, &xs, SampleFormat::Csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let back: Vec<f64> = text.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(back, xs);
}
