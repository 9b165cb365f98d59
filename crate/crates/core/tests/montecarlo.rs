use fplab::{
    empirical_density, norms, simulate, stationary_density, Grid1D, InitialCondition, MCConfig, OUOracle,
    ProblemSpec,
};

fn ou(eps: f64) -> ProblemSpec {
    ProblemSpec::ornstein_uhlenbeck(eps, 1.0)
}

#[test]
fn ou_sample_mean_tracks_the_exact_mean() {
    let n_paths = 20_000;
    let oracle = OUOracle::new(0.1, 1.0).unwrap();
    for (k, t) in [1.0, 5.0, 10.0].into_iter().enumerate() {
        let mc = MCConfig::new(n_paths, 1e-2, 7 + k as u64, InitialCondition::Point(0.0)).unwrap();
        let samples = simulate(&oracle.problem(), &mc, 0.0, t).unwrap();
        let (mean, var) = oracle.moments(t).unwrap();
        let se = (var / n_paths as f64).sqrt();
        assert!(
            (samples.mean() - mean).abs() <= 4.0 * se,
            "t = {t}: {} vs {mean} (se {se})",
            samples.mean()
        );
        assert!((samples.variance() / var - 1.0).abs() < 0.05, "t = {t}");
    }
}

#[test]
fn unforced_stationary_samples_stay_stationary() {
    let spec = ou(0.0);
    let grid = Grid1D::new(-6.0, 6.0, 129).unwrap();
    let phat = stationary_density(&spec, &grid, true).unwrap().density;
    let mc = MCConfig::new(400_000, 1e-2, 3, InitialCondition::StationarySample).unwrap();

    let early = simulate(&spec, &mc, 0.0, 0.1).unwrap();
    let l1 = norms(&empirical_density(&early, &grid).unwrap().density, &phat).unwrap().l1;
    assert!(l1 <= 0.02, "{l1}");

    let later = simulate(&spec, &mc, 0.0, 2.0).unwrap();
    let emp = empirical_density(&later, &grid).unwrap();
    assert_eq!(emp.out_of_range, 0);
    let l1 = norms(&emp.density, &phat).unwrap().l1;
    assert!(l1 <= 0.02, "{l1}");
}

#[test]
fn histogram_error_shrinks_like_root_n() {
    let spec = ou(0.0);
    let grid = Grid1D::new(-6.0, 6.0, 129).unwrap();
    let phat = stationary_density(&spec, &grid, true).unwrap().density;
    let l1 = |n_paths| {
        let mc = MCConfig::new(n_paths, 1e-2, 11, InitialCondition::StationarySample).unwrap();
        let s = simulate(&spec, &mc, 0.0, 0.1).unwrap();
        norms(&empirical_density(&s, &grid).unwrap().density, &phat).unwrap().l1
    };
    let shrink = l1(1_000) / l1(100_000);
    assert!((5.0..15.0).contains(&shrink), "{shrink}");
}

#[test]
fn runs_are_reproducible_and_seed_dependent() {
    let spec = ou(0.2);
    let mc = MCConfig::new(2_000, 1e-2, 99, InitialCondition::StationarySample).unwrap();
    let a = simulate(&spec, &mc, 0.0, 1.0).unwrap();
    let b = simulate(&spec, &mc, 0.0, 1.0).unwrap();
    assert_eq!(a, b);
    let c = simulate(&spec, &MCConfig { seed: 100, ..mc }, 0.0, 1.0).unwrap();
    assert_ne!(a.positions, c.positions);
}
