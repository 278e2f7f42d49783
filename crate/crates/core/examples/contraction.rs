// Two systems driven by the same noise approach each other at rate e^{-2λt}.

use rieszgas::dynamics::{ModelParams, ParticleConfig, SigmaRule};
use rieszgas::integrator::{simulate_synchronous_pair, SchemeConfig};

pub fn run_example() -> rieszgas::Result<()> {
    let n = 16;
    let params = ModelParams::quadratic(n, 1.5, 1.0, SigmaRule::OneOverN)?;
    let x = ParticleConfig::new((0..n).map(|i| 0.1 * i as f64 - 0.75).collect(), 0.0)?;
    let y = ParticleConfig::new((0..n).map(|i| 0.25 * i as f64 - 2.0).collect(), 0.0)?;
    let times: Vec<f64> = (1..=6).map(|k| 0.5 * k as f64).collect();
    let (a, b) = simulate_synchronous_pair(&params, &SchemeConfig::default(), &x, &y, 3.0, &times, 3, 0)?;
    let d0: f64 = x.positions().iter().zip(y.positions()).map(|(u, v)| (u - v) * (u - v)).sum();
    for ((s, t), time) in a.states.iter().zip(&b.states).zip(&a.times) {
        let d: f64 = s.positions().iter().zip(t.positions()).map(|(u, v)| (u - v) * (u - v)).sum();
        println!("t = {time:3.1}: D = {d:10.4e}, e^(2t) D / D(0) = {:.4}", (2.0 * time).exp() * d / d0);
    }
    Ok(())
}

fn main() -> rieszgas::Result<()> {
    run_example()
}
