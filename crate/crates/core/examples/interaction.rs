// Forces, energies and the deterministic inequalities behind the moment bounds.

use rieszgas::dynamics::{
    c_alpha_n, energy_h_alpha, generator_fourth_moment, grid_force_norm, lyapunov_hcal, riesz_force,
    series_bound_check, series_bound_check_harmonic, weighted_interaction_stat, ModelParams, SigmaRule,
};

pub fn run_example() -> rieszgas::Result<()> {
    let x = [-1.2, -0.3, 0.1, 0.8, 2.0];
    for alpha in [1.0, 1.5, 2.5] {
        let p = ModelParams::quadratic(x.len(), alpha, 1.0, SigmaRule::OneOverN)?;
        let f = riesz_force(&x, &p)?;
        println!(
            "alpha = {alpha}: force {:?}, H_alpha {:.4}, S {:.4}, C(alpha, N) {:.3}",
            f.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>(),
            energy_h_alpha(&x, alpha)?,
            weighted_interaction_stat(&x, alpha)?,
            c_alpha_n(alpha, x.len())?
        );
    }
    let half_sq: f64 = 0.5 * x.iter().map(|v| v * v).sum::<f64>();
    println!("Hcal {:.4} >= {:.4}", lyapunov_hcal(&x), half_sq - x.len() as f64);

    let p = ModelParams::quadratic(x.len(), 1.0, 1.0, SigmaRule::OneOverN)?;
    let d = generator_fourth_moment(&x, &p)?;
    println!("fourth moment drift {:.4} <= {:.4}", d.generator, d.bound);

    println!("alpha = 2, N = 2: {:?}", series_bound_check(2.0, 2)?);
    println!("harmonic form:    {:?}", series_bound_check_harmonic(2)?);
    for n in [10, 1_000, 100_000] {
        println!("N = {n}: |A(grid)| / N^1.5 = {:.4}", grid_force_norm(n)? / (n as f64).powf(1.5));
    }
    Ok(())
}

fn main() -> rieszgas::Result<()> {
    run_example()
}
