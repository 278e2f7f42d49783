// Distance of small systems to a large reference system, and its decay in N.

use rieszgas::dynamics::{ModelParams, SigmaRule};
use rieszgas::experiments::{run_chaos_rate, ChaosSetup};
use rieszgas::integrator::SchemeConfig;

pub fn run_example() -> rieszgas::Result<()> {
    let params = ModelParams::quadratic(64, 1.0, 1.0, SigmaRule::OneOverN)?;
    let setup = ChaosSetup {
        sizes: vec![8, 16, 32],
        n_ref: 256,
        t_eval: 1.0,
        ..ChaosSetup::default()
    };
    let report = run_chaos_rate(&params, &SchemeConfig::default(), &setup, 8, 0)?;
    for (key, s) in &report.observed {
        println!("{key:>10}: E W2^2 at t = 1 is {:.3e} ± {:.1e}", s.value[1], s.stderr[1]);
    }
    println!(
        "slope {:.3} (theory -{:.3}), passes: {}",
        report.fitted["slope"],
        report.fitted["theory_exponent"],
        report.all_pass()
    );
    Ok(())
}

fn main() -> rieszgas::Result<()> {
    run_example()
}
