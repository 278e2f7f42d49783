// One trajectory of the particle system with its diagnostics.

use rieszgas::dynamics::{ModelParams, ParticleConfig, SigmaRule};
use rieszgas::integrator::{simulate, SchemeConfig};

pub fn run_example() -> rieszgas::Result<()> {
    let n = 32;
    let params = ModelParams::quadratic(n, 1.0, 1.0, SigmaRule::OneOverN)?;
    let start = ParticleConfig::new((0..n).map(|i| (i as f64 + 0.5) / n as f64 - 0.5).collect(), 0.0)?;
    let times: Vec<f64> = (1..=8).map(|k| 0.25 * k as f64).collect();
    let traj = simulate(&params, &SchemeConfig::default(), &start, 2.0, &times, 7, 0)?;
    println!("   t      Hcal       m2        S");
    for (t, d) in traj.times.iter().zip(&traj.diagnostics) {
        println!("{t:5.2} {:9.4} {:9.4} {:9.4}", d.hcal, d.m2, d.s_stat);
    }
    println!(
        "steps accepted {}, rejected {}, smallest gap {:.3e}",
        traj.accepted, traj.rejected, traj.min_gap
    );
    Ok(())
}

fn main() -> rieszgas::Result<()> {
    run_example()
}
