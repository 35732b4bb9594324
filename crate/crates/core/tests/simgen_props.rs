use sepcoef::simgen::{generate, generate_rep, run_scenario, BoxStats, Scenario, ScenarioSpec};

#[test]
fn identical_specs_reproduce_identical_summaries() {
    for scenario in [
        Scenario::S1Bvn { rho: 0.4 },
        Scenario::S3Discretize { k: Some(16) },
        Scenario::S4bCosine,
        Scenario::S5dMisspec,
    ] {
        let spec = ScenarioSpec::new(scenario, 256, 99, 6);
        assert_eq!(run_scenario(&spec).unwrap(), run_scenario(&spec).unwrap());
        assert_ne!(generate_rep(&spec, 0).unwrap(), generate_rep(&spec, 1).unwrap());
    }
}

#[test]
fn bivariate_normal_scenario_has_the_requested_correlation() {
    for rho in [0.0, 0.4, 0.75] {
        let obs = generate(&ScenarioSpec::new(Scenario::S1Bvn { rho }, 100_000, 8, 1)).unwrap();
        let x = obs.column(0);
        let (mx, sx) = sepcoef::data::mean_sd(&x);
        let (my, sy) = sepcoef::data::mean_sd(obs.y());
        let cov: f64 = x.iter().zip(obs.y()).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>() / (x.len() - 1) as f64;
        assert!((cov / (sx * sy) - rho).abs() < 0.01, "rho {rho}");
    }
}

#[test]
fn summaries_match_their_repetitions() {
    let spec = ScenarioSpec::new(Scenario::S2aBf, 200, 5, 9);
    let summary = run_scenario(&spec).unwrap();
    for m in &summary.metrics {
        let values = summary.values(&m.name).unwrap();
        assert_eq!(values.len(), 9);
        assert_eq!(m.stats, BoxStats::from_values(&values));
    }
    for (rep, r) in summary.reps.iter().enumerate() {
        assert_eq!(r.data_seed, spec.data_seed(rep));
        assert_eq!(r.estimator_seed, spec.estimator_seed(rep));
    }
    assert!(summary.metric("rank_based").is_some());
}

#[test]
fn scenario_shapes() {
    for (scenario, p) in [
        (Scenario::IntroDiscretization { categories: Some(4) }, 1),
        (Scenario::S4aNoise { sigma: 0.5 }, 2),
        (Scenario::S4bCosine, 2),
        (Scenario::S5cRademacher, 1),
    ] {
        let obs = generate(&ScenarioSpec::new(scenario, 64, 1, 1)).unwrap();
        assert_eq!((obs.n(), obs.p()), (64, p), "{scenario}");
    }
    assert!(generate(&ScenarioSpec::new(Scenario::S3Discretize { k: Some(3) }, 64, 1, 1)).is_err());
    assert!(generate(&ScenarioSpec::new(Scenario::S1Bvn { rho: 1.5 }, 64, 1, 1)).is_err());
}
