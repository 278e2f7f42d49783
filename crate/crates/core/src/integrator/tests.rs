use super::*;
use crate::brownian::PathSet;
use crate::dynamics::SigmaRule;
use crate::laws::equilibrium_points;

fn quad(n: usize, alpha: f64, sigma: SigmaRule) -> ModelParams {
    ModelParams::quadratic(n, alpha, 1.0, sigma).unwrap()
}

fn cfg(x: &[f64]) -> ParticleConfig {
    ParticleConfig::new(x.to_vec(), 0.0).unwrap()
}

#[test]
fn single_particle_relaxes_exponentially() {
    let scheme = SchemeConfig::default();
    let traj = simulate(&quad(1, 1.0, SigmaRule::Zero), &scheme, &cfg(&[1.0]), 1.0, &[], 0, 0).unwrap();
    let x = traj.final_state().positions()[0];
    assert!((x - (-1.0f64).exp()).abs() <= 10.0 * scheme.h_max, "x={x}");
}

#[test]
fn two_particle_equilibrium_is_fixed() {
    let traj = simulate(&quad(2, 1.0, SigmaRule::Zero), &SchemeConfig::default(), &cfg(&[-0.5, 0.5]), 1.0, &[], 0, 0).unwrap();
    let x = traj.final_state().positions();
    assert!((x[0] + 0.5).abs() < 1e-9 && (x[1] - 0.5).abs() < 1e-9);
}

#[test]
fn three_particles_converge_to_equilibrium() {
    let traj = simulate(&quad(3, 1.0, SigmaRule::Zero), &SchemeConfig::default(), &cfg(&[-0.1, 0.35, 2.2]), 50.0, &[], 0, 0).unwrap();
    let a = 0.5f64.sqrt();
    for (x, e) in traj.final_state().positions().iter().zip([-a, 0.0, a]) {
        assert!((x - e).abs() < 1e-6, "{x} vs {e}");
    }
}

#[test]
fn zero_horizon_returns_initial_state() {
    let traj = simulate(&quad(4, 1.0, SigmaRule::OneOverN), &SchemeConfig::default(), &cfg(&[0.0, 1.0, 2.0, 3.0]), 0.0, &[], 0, 0).unwrap();
    assert_eq!(traj.times, vec![0.0]);
    assert_eq!(traj.states[0].positions(), &[0.0, 1.0, 2.0, 3.0]);
}

#[test]
fn equilibrium_start_is_stationary() {
    let eq = equilibrium_points(8, 1.0).unwrap();
    let traj = simulate(&quad(8, 1.0, SigmaRule::Zero), &SchemeConfig::default(), &cfg(&eq.points), 2.0, &[0.5, 1.0, 1.5], 0, 0).unwrap();
    let d0 = traj.diagnostics[0];
    for d in &traj.diagnostics {
        for (a, b) in [(d.hcal, d0.hcal), (d.h_alpha, d0.h_alpha), (d.s_stat, d0.s_stat), (d.m2, d0.m2), (d.m4, d0.m4)] {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn identical_seed_is_bit_identical() {
    let p = quad(16, 1.0, SigmaRule::OneOverN);
    let x0: Vec<f64> = (0..16).map(|i| i as f64 / 16.0 - 0.5).collect();
    let a = simulate(&p, &SchemeConfig::default(), &cfg(&x0), 0.5, &[0.25], 9, 2).unwrap();
    let b = simulate(&p, &SchemeConfig::default(), &cfg(&x0), 0.5, &[0.25], 9, 2).unwrap();
    assert_eq!(a, b);
    let c = simulate(&p, &SchemeConfig::default(), &cfg(&x0), 0.5, &[0.25], 9, 3).unwrap();
    assert_ne!(a.final_state(), c.final_state());
}

#[test]
fn output_times_are_exact_and_validated() {
    let p = quad(3, 1.0, SigmaRule::OneOverN);
    let traj = simulate(&p, &SchemeConfig::default(), &cfg(&[-1.0, 0.0, 1.0]), 0.1, &[0.05, 0.025], 1, 0).unwrap();
    assert_eq!(traj.times, vec![0.0, 0.025, 0.05, 0.1]);
    assert!(simulate(&p, &SchemeConfig::default(), &cfg(&[-1.0, 0.0, 1.0]), 0.1, &[0.2], 1, 0).is_err());
    let shallow = SchemeConfig {
        path_depth: 6,
        ..SchemeConfig::default()
    };
    let err = simulate(&p, &shallow, &cfg(&[-1.0, 0.0, 1.0]), 0.1, &[0.0123456789], 1, 0);
    assert!(err.unwrap_err().to_string().contains("dyadic grid"));
    // fine default grid resolves arbitrary decimals
    let traj = simulate(&p, &SchemeConfig::default(), &cfg(&[-1.0, 0.0, 1.0]), 0.1, &[0.0123456789], 1, 0).unwrap();
    assert_eq!(traj.times[1], 0.0123456789);
}

#[test]
fn synchronous_pair_examples() {
    let p = quad(2, 1.0, SigmaRule::Zero);
    let scheme = SchemeConfig::default();
    let (x, y) = simulate_synchronous_pair(&p, &scheme, &cfg(&[-1.0, 1.0]), &cfg(&[-0.5, 0.5]), 1.0, &[], 0, 0).unwrap();
    let d = |a: &ParticleConfig, b: &ParticleConfig| -> f64 {
        a.positions().iter().zip(b.positions()).map(|(u, v)| (u - v).powi(2)).sum()
    };
    let d0 = d(&x.states[0], &y.states[0]);
    let d1 = d(x.final_state(), y.final_state());
    assert!(d1 <= (-2.0f64).exp() * d0 * 1.02, "{d1} vs {d0}");

    let q = quad(8, 1.0, SigmaRule::OneOverN);
    let a0: Vec<f64> = (0..8).map(|i| i as f64 * 0.3).collect();
    let b0: Vec<f64> = (0..8).map(|i| i as f64 * 0.2 - 1.0).collect();
    let (u, v) = simulate_synchronous_pair(&q, &scheme, &cfg(&a0), &cfg(&a0), 0.5, &[0.25], 4, 1).unwrap();
    assert_eq!(u.states, v.states);
    let (u, v) = simulate_synchronous_pair(&q, &scheme, &cfg(&a0), &cfg(&b0), 0.5, &[0.25], 4, 1).unwrap();
    let (v2, u2) = simulate_synchronous_pair(&q, &scheme, &cfg(&b0), &cfg(&a0), 0.5, &[0.25], 4, 1).unwrap();
    assert_eq!(u.states, u2.states);
    assert_eq!(v.states, v2.states);
}

#[test]
fn step_advances_exactly_h() {
    let p = quad(4, 1.5, SigmaRule::OneOverN);
    let scheme = SchemeConfig::default();
    let mut paths = PathSet::new(3, 0, 4, scheme.path_grid().unwrap());
    let s0 = cfg(&[-1.0, -0.2, 0.3, 1.0]);
    let s1 = step(&s0, scheme.h_max, &p, &scheme, &mut paths).unwrap();
    assert_eq!(s1.time, scheme.h_max);
    assert!(s1.positions().windows(2).all(|w| w[0] < w[1]));
    assert!(step(&s0, 2.0 * scheme.h_max, &p, &scheme, &mut paths).is_err());
}

#[test]
fn scheme_validation() {
    assert!(SchemeConfig::default().validate().is_ok());
    let mut s = SchemeConfig::default();
    s.theta_diff = 1.0;
    assert!(s.validate().is_err());
    let mut s = SchemeConfig::default();
    s.path_step = Some(3e-3);
    assert!(s.validate().is_err());
    s.path_step = Some(4e-3);
    assert!(s.validate().is_ok());
}

#[test]
fn csv_exports_have_headers() {
    let traj = simulate(&quad(2, 1.0, SigmaRule::Zero), &SchemeConfig::default(), &cfg(&[-0.5, 0.5]), 0.01, &[], 0, 0).unwrap();
    let mut buf = Vec::new();
    traj.write_positions_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("time,particle_index,position\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 2);
    let mut buf = Vec::new();
    traj.write_diagnostics_csv(&mut buf).unwrap();
    assert!(String::from_utf8(buf).unwrap().starts_with("time,Hcal,H_alpha,S_stat,m2,m4\n"));
}
