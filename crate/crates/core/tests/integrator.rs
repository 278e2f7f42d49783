use std::sync::Arc;

use proptest::prelude::*;
use rieszgas::dynamics::{Confinement, ModelParams, ParticleConfig, SigmaRule};
use rieszgas::integrator::{simulate, simulate_synchronous_pair, SchemeConfig};
use rieszgas::measures::{wasserstein_p_equal, EmpiricalMeasure};

fn ordered(n: usize) -> impl Strategy<Value = Vec<f64>> {
    (-2.0f64..2.0, prop::collection::vec(0.01f64..0.5, n - 1)).prop_map(|(start, gaps)| {
        let mut x = vec![start];
        for g in gaps {
            let last = *x.last().unwrap();
            x.push(last + g);
        }
        x
    })
}

fn sq_dist(a: &ParticleConfig, b: &ParticleConfig) -> f64 {
    a.positions().iter().zip(b.positions()).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn grid(t_end: f64, k: usize) -> Vec<f64> {
    (1..=k).map(|i| t_end * i as f64 / k as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn every_emitted_state_is_ordered(
        x in (2usize..24).prop_flat_map(ordered),
        alpha in prop::sample::select(vec![1.0, 1.5, 2.5]),
        seed in any::<u64>(),
    ) {
        let p = ModelParams::quadratic(x.len(), alpha, 1.0, SigmaRule::OneOverN).unwrap();
        let traj = simulate(&p, &SchemeConfig::default(), &ParticleConfig::new(x, 0.0).unwrap(), 0.5, &grid(0.5, 20), seed, 0).unwrap();
        for s in &traj.states {
            prop_assert!(s.positions().windows(2).all(|w| w[0] < w[1]));
        }
        prop_assert!(traj.min_gap > 0.0);
    }

    #[test]
    fn synchronous_pairs_contract(
        (x, y) in (2usize..16).prop_flat_map(|n| (ordered(n), ordered(n))),
        alpha in prop::sample::select(vec![1.0, 1.5]),
        lambda in 0.5f64..2.0,
        seed in any::<u64>(),
    ) {
        let p = ModelParams::quadratic(x.len(), alpha, lambda, SigmaRule::OneOverN).unwrap();
        let times = grid(1.0, 10);
        let (a, b) = simulate_synchronous_pair(
            &p,
            &SchemeConfig::default(),
            &ParticleConfig::new(x, 0.0).unwrap(),
            &ParticleConfig::new(y, 0.0).unwrap(),
            1.0,
            &times,
            seed,
            0,
        )
        .unwrap();
        let scaled: Vec<f64> = a
            .states
            .iter()
            .zip(&b.states)
            .zip(&a.times)
            .map(|((u, v), t)| (2.0 * lambda * t).exp() * sq_dist(u, v))
            .collect();
        for k in 1..scaled.len() {
            let dt = a.times[k] - a.times[k - 1];
            prop_assert!(scaled[k] <= scaled[k - 1] * (1.0 + 0.02 * dt), "{scaled:?}");
        }
    }
}

#[test]
fn lipschitz_confinement_expansion_bound() {
    let lip = 1.5;
    let confinement = Confinement::Lipschitz {
        grad: Arc::new(|x: f64| x.sin() + 0.5 * x),
        lipschitz: lip,
        offset: 0.0,
    };
    let p = ModelParams::new(6, 1.2, confinement, SigmaRule::OneOverN).unwrap();
    let x = ParticleConfig::new(vec![-1.0, -0.4, 0.1, 0.3, 0.9, 1.7], 0.0).unwrap();
    let y = ParticleConfig::new(vec![-1.3, -0.5, 0.0, 0.6, 1.0, 1.2], 0.0).unwrap();
    let times = grid(1.0, 8);
    for seed in 0..4 {
        let (a, b) = simulate_synchronous_pair(&p, &SchemeConfig::default(), &x, &y, 1.0, &times, seed, 0).unwrap();
        let d0 = sq_dist(&a.states[0], &b.states[0]);
        for ((u, v), t) in a.states.iter().zip(&b.states).zip(&a.times) {
            assert!(sq_dist(u, v) <= (2.0 * lip * t).exp() * d0 * 1.02);
        }
    }
}

#[test]
fn halving_the_step_shrinks_the_strong_error() {
    let p = ModelParams::quadratic(8, 1.0, 1.0, SigmaRule::OneOverN).unwrap();
    let x0 = ParticleConfig::new((0..8).map(|i| -0.7 + 0.2 * i as f64).collect(), 0.0).unwrap();
    let base = 1.0 / 16.0;
    let run = |h: f64, replica: u64| {
        let scheme = SchemeConfig {
            path_step: Some(base),
            ..SchemeConfig::default().with_h_max(h)
        };
        let traj = simulate(&p, &scheme, &x0, 1.0, &[], 7, replica).unwrap();
        EmpiricalMeasure::new(traj.final_state().positions()).unwrap()
    };
    let steps: Vec<f64> = (0..4).map(|k| base / 2f64.powi(k)).collect();
    let replicas = 8;
    let mut errors = vec![0.0; steps.len()];
    for r in 0..replicas {
        let reference = run(base / 256.0, r);
        for (k, h) in steps.iter().enumerate() {
            let w = wasserstein_p_equal(&run(*h, r), &reference, 2.0).unwrap();
            errors[k] += w * w / replicas as f64;
        }
    }
    let errors: Vec<f64> = errors.iter().map(|e| e.sqrt()).collect();
    for w in errors.windows(2) {
        assert!(w[0] >= 1.4 * w[1], "{errors:?}");
    }
}
