use rieszgas::dynamics::{ModelParams, SigmaRule};
use rieszgas::experiments::{
    run_cauchy_bound, run_chaos_rate, run_continuity, run_contraction, run_moment_monitor, run_pde_residual,
    run_simulate, run_stationary, CauchySetup, ChaosSetup, ContinuitySetup, ContractionSetup, Coupling,
    InitialCondition, MomentSetup, PdeSetup, SimulateSetup, StationarySetup, TestFunction, NONCOLLISION_WARNING,
};
use rieszgas::integrator::SchemeConfig;

fn quad(n: usize, alpha: f64, lambda: f64, sigma: SigmaRule) -> ModelParams {
    ModelParams::quadratic(n, alpha, lambda, sigma).unwrap()
}

#[test]
fn identical_starts_have_zero_distance() {
    let setup = ContractionSetup {
        initial_alt: InitialCondition::default(),
        t_end: 1.0,
        ..ContractionSetup::default()
    };
    let report = run_contraction(&quad(16, 1.0, 1.0, SigmaRule::OneOverN), &SchemeConfig::default(), &setup, 3, 5).unwrap();
    assert!(report.observed["D"].value.iter().all(|v| *v == 0.0));
    assert!(report.all_pass());
}

#[test]
fn contraction_envelope_at_larger_lambda() {
    let setup = ContractionSetup {
        t_end: 1.0,
        ..ContractionSetup::default()
    };
    let report = run_contraction(&quad(16, 1.0, 2.0, SigmaRule::OneOverN), &SchemeConfig::default(), &setup, 4, 1).unwrap();
    let env = &report.theoretical_bound["envelope"];
    for (t, e) in report.time_grid.iter().zip(env) {
        assert!((e - (-4.0 * t).exp()).abs() < 1e-15);
    }
    assert!(report.pass["contraction"]);
}

#[test]
fn equal_sizes_with_shared_noise_coincide() {
    let setup = CauchySetup {
        sizes: [16, 16],
        times: vec![0.25, 0.5],
        coupling: Coupling::Synchronous,
        ..CauchySetup::default()
    };
    let report = run_cauchy_bound(&quad(16, 1.0, 1.0, SigmaRule::OneOverN), &SchemeConfig::default(), &setup, 3, 2).unwrap();
    assert!(report.observed["w2sq"].value.iter().all(|v| *v == 0.0));
    // 1/16 + 1/16 + 2(1/16 + 1/16), halved
    assert!((report.fitted["asymptotic_term"] - 0.1875).abs() < 1e-15);
}

#[test]
fn cauchy_asymptote_for_the_reference_sizes() {
    let setup = CauchySetup {
        times: vec![0.5],
        ..CauchySetup::default()
    };
    let report = run_cauchy_bound(&quad(32, 1.0, 1.0, SigmaRule::OneOverN), &SchemeConfig::default(), &setup, 2, 0).unwrap();
    assert!((report.fitted["asymptotic_term"] - 9.0 / 128.0).abs() < 1e-15);
}

#[test]
fn chaos_exponent_follows_alpha() {
    let setup = ChaosSetup {
        sizes: vec![2, 4],
        n_ref: 32,
        t_eval: 0.1,
        ..ChaosSetup::default()
    };
    for (alpha, e) in [(1.0, 1.0), (1.5, 1.0 / 3.0)] {
        let report = run_chaos_rate(&quad(4, alpha, 1.0, SigmaRule::OneOverN), &SchemeConfig::default(), &setup, 2, 0).unwrap();
        assert!((report.fitted["theory_exponent"] - e).abs() < 1e-15);
        assert!(report.fitted["slope"].is_finite());
    }
}

#[test]
fn noiseless_pairs_reach_equilibrium() {
    let setup = StationarySetup {
        deterministic_sizes: vec![2, 8],
        t_end: 0.5,
        ..StationarySetup::default()
    };
    let report = run_stationary(&quad(16, 1.0, 1.0, SigmaRule::OneOverN), &SchemeConfig::default(), &setup, 1, 0).unwrap();
    assert!(report.fitted["equilibrium_error_N2"] < 1e-6);
    assert!(report.fitted["equilibrium_error_N8"] < 1e-6);
    assert!(report.fitted["hermite_root_error_N8"] < 1e-6);
    assert!((report.fitted["semicircle_radius"] - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn constant_and_odd_test_functions_have_no_residual() {
    let setup = PdeSetup {
        sizes: vec![2],
        test_functions: vec![TestFunction::Constant, TestFunction::Linear],
        t_end: 0.5,
        dt: 1.0 / 16.0,
        initial: InitialCondition::Explicit { points: vec![-1.0, 1.0] },
        ..PdeSetup::default()
    };
    let report = run_pde_residual(&quad(2, 1.0, 1.0, SigmaRule::Zero), &SchemeConfig::default(), &setup, 2, 0).unwrap();
    assert!(report.observed["abs_residual_constant_N2"].value.iter().all(|v| *v == 0.0));
    assert!(report.observed["abs_residual_linear_N2"].value.iter().all(|v| v.abs() < 1e-12));
}

#[test]
fn continuity_bracket_and_zero_displacement() {
    let setup = ContinuitySetup {
        sizes: vec![2, 16],
        initial: InitialCondition::Grid { a: 0.25, b: 1.25 },
        ..ContinuitySetup::default()
    };
    let p = quad(2, 1.0, 1.0, SigmaRule::Constant(0.5));
    let report = run_continuity(&p, &SchemeConfig::default(), &setup, 4, 0).unwrap();
    // grid {0.5, 1}: |A| = 2√2 and 𝓗 = 1
    assert!((report.fitted["bracket_N2"] - 4.0).abs() < 1e-12);
    assert_eq!(report.time_grid[0], 0.0);
    assert_eq!(report.observed["displacement_N16"].value[0], 0.0);
}

#[test]
fn hcal_asymptote_and_standard_error_scaling() {
    let setup = MomentSetup {
        t_end: 0.5,
        sample_dt: 0.125,
        ..MomentSetup::default()
    };
    let p = quad(64, 1.0, 1.0, SigmaRule::OneOverN);
    let small = run_moment_monitor(&p, &SchemeConfig::default(), &setup, 16, 3).unwrap();
    // N·σ_N + C(1, 64) = 1 + 31.5
    assert!((small.fitted["hcal_asymptote"] - 32.5).abs() < 1e-12);
    let large = run_moment_monitor(&p, &SchemeConfig::default(), &setup, 64, 3).unwrap();
    let last = small.time_grid.len() - 1;
    let ratio = large.observed["Hcal"].stderr[last] / small.observed["Hcal"].stderr[last];
    assert!((0.3..0.75).contains(&ratio), "ratio {ratio}");
}

#[test]
fn simulate_flags_the_uncovered_regime() {
    let setup = SimulateSetup {
        t_end: 0.25,
        ..SimulateSetup::default()
    };
    let p = quad(8, 1.0, 1.0, SigmaRule::Constant(0.5));
    let (report, trajectories) = run_simulate(&p, &SchemeConfig::default(), &setup, 2, 0).unwrap();
    assert!(report.warnings.iter().any(|w| w == NONCOLLISION_WARNING));
    assert_eq!(trajectories.len(), 2);
    assert_eq!(report.counters["ordering_violations"], 0);
}

#[test]
fn pass_flags_recompute_from_the_report() {
    let setup = ContractionSetup {
        t_end: 0.5,
        ..ContractionSetup::default()
    };
    let report = run_contraction(&quad(8, 1.5, 1.0, SigmaRule::OneOverN), &SchemeConfig::default(), &setup, 2, 9).unwrap();
    let parsed: rieszgas::experiments::ExperimentReport = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert_eq!(parsed.recompute_pass().unwrap(), report.pass);
}

#[test]
fn noiseless_pair_contracts_at_the_exact_rate() {
    let setup = ContractionSetup {
        initial: InitialCondition::Explicit { points: vec![-1.0, 1.0] },
        initial_alt: InitialCondition::Explicit { points: vec![-0.5, 0.5] },
        t_end: 1.0,
        sample_dt: 0.25,
        ..ContractionSetup::default()
    };
    let report = run_contraction(&quad(2, 1.0, 1.0, SigmaRule::Zero), &SchemeConfig::default(), &setup, 1, 0).unwrap();
    let d = &report.observed["D"].value;
    let last = d.len() - 1;
    assert!(d[last] / d[0] <= (-2.0f64).exp() * 1.02, "{d:?}");
}

#[test]
fn cauchy_start_is_the_distance_between_grids() {
    let setup = CauchySetup {
        times: vec![0.5],
        ..CauchySetup::default()
    };
    let p = quad(32, 1.0, 1.0, SigmaRule::OneOverN);
    let report = run_cauchy_bound(&p, &SchemeConfig::default(), &setup, 2, 0).unwrap();
    let grid = |n: usize| -> Vec<f64> { (1..=n).map(|i| -0.5 + (i as f64 - 0.5) / n as f64).collect() };
    let a = rieszgas::measures::build_empirical(&grid(32)).unwrap();
    let b = rieszgas::measures::build_empirical(&grid(64)).unwrap();
    let w0 = rieszgas::measures::wasserstein_pp_cross(&a, &b, 2.0).unwrap();
    assert!((report.observed["w2sq"].value[0] - w0).abs() < 1e-15);
    assert_eq!(report.observed["w2sq"].stderr[0], 0.0);
}

#[test]
fn single_particle_displacement_is_quadratic_in_time() {
    let setup = ContinuitySetup {
        sizes: vec![1],
        initial: InitialCondition::Explicit { points: vec![1.0] },
        ..ContinuitySetup::default()
    };
    let report = run_continuity(&quad(1, 1.0, 1.0, SigmaRule::Zero), &SchemeConfig::default(), &setup, 1, 0).unwrap();
    let d = &report.observed["displacement_N1"].value;
    for (t, v) in report.time_grid.iter().zip(d) {
        let exact = ((-t).exp() - 1.0).powi(2);
        assert!((v - exact).abs() <= 1e-3 * t * t + 1e-12, "t={t}: {v} vs {exact}");
        assert!(*v <= t * t);
    }
}

#[test]
fn equilibrium_start_keeps_hcal_constant() {
    let setup = MomentSetup {
        initial: InitialCondition::Equilibrium,
        t_end: 1.0,
        sample_dt: 0.25,
        ..MomentSetup::default()
    };
    let report = run_moment_monitor(&quad(8, 1.0, 1.0, SigmaRule::Zero), &SchemeConfig::default(), &setup, 2, 0).unwrap();
    let h = &report.observed["Hcal"].value;
    assert!(h.iter().all(|v| (v - h[0]).abs() < 1e-8), "{h:?}");
    assert!(report.pass["hcal_envelope"]);
}
