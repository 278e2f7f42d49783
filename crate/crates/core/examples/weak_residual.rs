// Residual of the limiting weak equation along simulated paths.

use rieszgas::dynamics::{ModelParams, SigmaRule};
use rieszgas::experiments::{run_pde_residual, PdeSetup, TestFunction};
use rieszgas::integrator::SchemeConfig;

pub fn run_example() -> rieszgas::Result<()> {
    let params = ModelParams::quadratic(64, 1.0, 1.0, SigmaRule::OneOverN)?;
    let setup = PdeSetup {
        sizes: vec![16, 64],
        test_functions: vec![TestFunction::Tanh, TestFunction::GaussBump],
        t_end: 0.5,
        dt: 1.0 / 32.0,
        ..PdeSetup::default()
    };
    let report = run_pde_residual(&params, &SchemeConfig::default(), &setup, 8, 0)?;
    for (key, s) in &report.observed {
        let last = s.value.len() - 1;
        println!("{key:>26}: E|R(0.5)| = {:.3e} ± {:.1e}", s.value[last], s.stderr[last]);
    }
    Ok(())
}

fn main() -> rieszgas::Result<()> {
    run_example()
}
