use proptest::prelude::*;
use rieszgas::dynamics::{
    c_alpha_n, full_drift, generator_fourth_moment, grid_force_norm, grid_force_norm_from_table, lyapunov_hcal,
    riesz_force, series_bound_check, series_bound_check_harmonic, ModelParams, SigmaRule,
};
use rieszgas::numeric::harmonic_table;

/// Strictly increasing configuration of length 1..=max_n with gaps ≥ 1e-3.
fn ordered(max_n: usize) -> impl Strategy<Value = Vec<f64>> {
    (-5.0f64..5.0, prop::collection::vec(1e-3f64..2.0, 0..max_n)).prop_map(|(start, gaps)| {
        let mut x = vec![start];
        for g in gaps {
            let last = *x.last().unwrap();
            x.push(last + g);
        }
        x
    })
}

fn params(n: usize, alpha: f64, lambda: f64, sigma: SigmaRule) -> ModelParams {
    ModelParams::quadratic(n, alpha, lambda, sigma).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn forces_sum_to_zero(x in ordered(40), alpha in 1.0f64..3.0) {
        let f = riesz_force(&x, &params(x.len(), alpha, 1.0, SigmaRule::Zero)).unwrap();
        let scale: f64 = f.iter().map(|v| v.abs()).sum::<f64>() + 1.0;
        prop_assert!(f.iter().sum::<f64>().abs() <= 1e-12 * scale);
    }

    #[test]
    fn force_is_translation_invariant(x in ordered(30), alpha in 1.0f64..3.0, c in -4.0f64..4.0) {
        let p = params(x.len(), alpha, 1.5, SigmaRule::Zero);
        // shift by a dyadic amount so the differences are unchanged in floating point
        let c = (c * 1024.0).round() / 1024.0;
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        prop_assume!(shifted.iter().zip(&x).all(|(s, v)| s - c == *v));
        let diffs_equal = x.windows(2).zip(shifted.windows(2)).all(|(a, b)| a[1] - a[0] == b[1] - b[0]);
        prop_assume!(diffs_equal);
        let f = riesz_force(&x, &p).unwrap();
        let g = riesz_force(&shifted, &p).unwrap();
        let scale: f64 = f.iter().map(|v| v.abs()).fold(0.0, f64::max) + 1.0;
        for (a, b) in f.iter().zip(&g) {
            prop_assert!((a - b).abs() <= 1e-12 * scale);
        }
        let d = full_drift(&x, &p).unwrap();
        let e = full_drift(&shifted, &p).unwrap();
        for i in 0..x.len() {
            let confinement = -1.5 * (shifted[i] - x[i]);
            prop_assert!((e[i] - d[i] - confinement).abs() <= 1e-12 * (scale + 1.5 * shifted[i].abs()));
        }
    }

    #[test]
    fn force_scales_under_dilation(x in ordered(30), alpha in 1.0f64..3.0, c in 0.1f64..10.0) {
        let p = params(x.len(), alpha, 1.0, SigmaRule::Zero);
        let f = riesz_force(&x, &p).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
        let g = riesz_force(&scaled, &p).unwrap();
        let k = c.powf(-alpha);
        for (a, b) in f.iter().zip(&g) {
            prop_assert!((b - k * a).abs() <= 1e-12 * (1.0 + (k * a).abs()) * x.len() as f64);
        }
    }

    #[test]
    fn hcal_lower_bound(x in ordered(64)) {
        let n = x.len() as f64;
        let half_sq: f64 = 0.5 * x.iter().map(|v| v * v).sum::<f64>();
        prop_assert!(lyapunov_hcal(&x) >= half_sq - n);
    }

    #[test]
    fn fourth_moment_generator_bound(x in ordered(48).prop_filter("two or more", |x| x.len() > 1),
                                     lambda in 0.25f64..4.0,
                                     sigma in prop::sample::select(vec![0.0, 0.5, 1.0])) {
        let n = x.len();
        let rule = if sigma == 0.0 { SigmaRule::OneOverN } else { SigmaRule::Constant(sigma) };
        let d = generator_fourth_moment(&x, &params(n, 1.0, lambda, rule)).unwrap();
        prop_assert!(d.generator <= d.bound + 1e-9 * (1.0 + d.bound.abs()), "{d:?}");
    }
}

#[test]
fn hcal_lower_bound_on_ten_thousand_draws() {
    use rand_core::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    for _ in 0..10_000 {
        let n = 1 + (64.0 * unit()) as usize;
        let spread = 0.01 + 20.0 * unit();
        let x: Vec<f64> = (0..n).map(|_| spread * (2.0 * unit() - 1.0)).collect();
        let half_sq: f64 = 0.5 * x.iter().map(|v| v * v).sum::<f64>();
        assert!(lyapunov_hcal(&x) >= half_sq - n as f64, "{x:?}");
    }
}

#[test]
fn series_lemma_on_the_grid() {
    for alpha in [1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0] {
        for n in 3..=10_000 {
            let c = series_bound_check(alpha, n).unwrap();
            assert!(c.holds, "alpha {alpha} N {n}: {c:?}");
        }
    }
    let c = series_bound_check(2.0, 2).unwrap();
    assert!(!c.holds);
    assert_eq!(c.partial_sum, 1.5);
    for n in 2..=10_000 {
        assert!(series_bound_check_harmonic(n).unwrap().holds, "N {n}");
    }
}

#[test]
fn grid_norm_ratio_stays_below_ceiling() {
    let table = harmonic_table(100_000);
    let mut n = 2;
    while n <= 100_000 {
        let r = grid_force_norm_from_table(n, &table) / (n as f64).powf(1.5);
        assert!(r <= 2.5, "N {n}: {r}");
        n += if n < 1000 { 1 } else { 997 };
    }
    let r = grid_force_norm(100_000).unwrap() / 1e5f64.powf(1.5);
    assert!((r - (std::f64::consts::PI.powi(2) / 3.0).sqrt()).abs() < 0.1, "{r}");
}

#[test]
fn interaction_constant_table() {
    assert_eq!(c_alpha_n(1.0, 5).unwrap(), 2.0);
    assert!((c_alpha_n(1.5, 8).unwrap() - 16.0).abs() < 1e-12);
    assert!((c_alpha_n(3.0, 4).unwrap() - 32.0).abs() < 1e-12);
}
