// Monte Carlo moments against their explicit envelopes.

use rieszgas::dynamics::{ModelParams, SigmaRule};
use rieszgas::experiments::{run_moment_monitor, MomentSetup};
use rieszgas::integrator::SchemeConfig;

pub fn run_example() -> rieszgas::Result<()> {
    let params = ModelParams::quadratic(32, 1.0, 1.0, SigmaRule::OneOverN)?;
    let setup = MomentSetup {
        t_end: 1.0,
        sample_dt: 0.25,
        ..MomentSetup::default()
    };
    let report = run_moment_monitor(&params, &SchemeConfig::default(), &setup, 16, 0)?;
    let hcal = &report.observed["Hcal"];
    let env = &report.theoretical_bound["hcal_envelope"];
    for (k, t) in report.time_grid.iter().enumerate() {
        println!("t = {t:4.2}: E Hcal = {:8.4} ± {:.4}, envelope {:8.4}", hcal.value[k], hcal.stderr[k], env[k]);
    }
    for (name, pass) in &report.pass {
        println!("{name:>28}: {}", if *pass { "pass" } else { "FAIL" });
    }
    Ok(())
}

fn main() -> rieszgas::Result<()> {
    run_example()
}
