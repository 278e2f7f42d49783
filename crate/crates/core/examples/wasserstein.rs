// Distances between empirical measures of different sizes and to the semicircle law.

use rieszgas::laws::semicircle_radius;
use rieszgas::measures::{
    build_empirical, wasserstein2_to_law, wasserstein_p_cross, wasserstein_p_equal, QuantileLaw, DEFAULT_NODES_PER_CELL,
};

pub fn run_example() -> rieszgas::Result<()> {
    let mu = build_empirical(&[0.0, 1.0, 5.0])?;
    let nu = build_empirical(&[3.0, 0.0, 2.0])?;
    let w = wasserstein_p_equal(&mu, &nu, 2.0)?;
    println!("W2 between equal sizes: {w:.6} (sqrt(5/3) = {:.6})", (5.0f64 / 3.0).sqrt());

    let a = build_empirical(&[0.0, 3.0])?;
    let b = build_empirical(&[0.0, 2.0, 4.0])?;
    println!("W2 between sizes 2 and 3: {:.6}", wasserstein_p_cross(&a, &b, 2.0)?);

    let law = QuantileLaw::Semicircle {
        radius: semicircle_radius(1.0),
    };
    for n in [8, 64, 512] {
        let mid: Vec<f64> = (0..n).map(|i| law.quantile((i as f64 + 0.5) / n as f64)).collect::<Result<_, _>>()?;
        let w = wasserstein2_to_law(&build_empirical(&mid)?, &law, DEFAULT_NODES_PER_CELL)?;
        println!("N = {n:4}: W2 of quantile midpoints to the semicircle = {w:.3e}");
    }
    Ok(())
}

fn main() -> rieszgas::Result<()> {
    run_example()
}
