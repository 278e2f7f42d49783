// Noiseless equilibria: zeros of the Hermite polynomial and the semicircle edge.

use rieszgas::laws::{equilibrium_points, hermite_physicists, semicircle_radius};

pub fn run_example() -> rieszgas::Result<()> {
    for n in [2, 3, 8] {
        let eq = equilibrium_points(n, 1.0)?;
        let worst = eq
            .points
            .iter()
            .map(|x| hermite_physicists(n, x * (n as f64).sqrt()).abs())
            .fold(0.0, f64::max);
        println!("N = {n}: points {:?}", eq.points);
        println!("       force residual {:.1e}, max |H_N(sqrt(N) x)| {worst:.1e}", eq.residual_norm);
    }
    for lambda in [0.5, 1.0, 2.0] {
        let edge = equilibrium_points(512, lambda)?.points.last().copied().unwrap_or(0.0);
        println!("lambda = {lambda}: largest of 512 points {edge:.4}, radius {:.4}", semicircle_radius(lambda));
    }
    Ok(())
}

fn main() -> rieszgas::Result<()> {
    run_example()
}
