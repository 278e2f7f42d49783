//! Configuration, orchestration and artifact emission for the `rieszgas` binary.

mod config;

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use clap::Parser;

pub use config::{parse_config, read_config, ExperimentKind, ModelConfig, RunConfig, SigmaRuleName, Tolerances, ValidatedConfig};

use crate::error::{Error, Result};
use crate::experiments::{
    run_cauchy_bound, run_chaos_rate, run_continuity, run_contraction, run_moment_monitor, run_pde_residual,
    run_simulate, run_stationary, CauchySetup, ChaosSetup, ContinuitySetup, ContractionSetup, ExperimentReport,
    MomentSetup, PdeSetup, SimulateSetup, StationarySetup,
};

#[derive(Debug, Parser)]
#[command(name = "rieszgas", version, about = "Riesz gas simulations and their verification experiments")]
pub struct Args {
    pub experiment: ExperimentKind,
    #[arg(long)]
    pub config: std::path::PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    /// Worker threads for replicas; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Outcome of one run: the report and the files written.
#[derive(Debug)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub files: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.all_pass() {
            0
        } else {
            1
        }
    }
}

fn run_experiment(v: &ValidatedConfig, out: &Path) -> Result<(ExperimentReport, Vec<String>)> {
    let c = &v.config;
    let p = &v.params;
    let s = &c.scheme;
    let t = &c.tolerances;
    let mut files = Vec::new();
    let report = match v.experiment {
        ExperimentKind::Simulate => {
            let d = SimulateSetup::default();
            let setup = SimulateSetup {
                initial: c.initial.clone().unwrap_or(d.initial),
                t_end: c.t_end.unwrap_or(d.t_end),
                sample_dt: c.sample_dt.unwrap_or(d.sample_dt),
            };
            let (report, trajectories) = run_simulate(p, s, &setup, c.replicas, c.seed)?;
            if let Some(first) = trajectories.first() {
                first.write_positions_csv(BufWriter::new(fs::File::create(out.join("positions.csv"))?))?;
                first.write_diagnostics_csv(BufWriter::new(fs::File::create(out.join("diagnostics.csv"))?))?;
                files.push("positions.csv".to_string());
                files.push("diagnostics.csv".to_string());
            }
            report
        }
        ExperimentKind::Contraction => {
            let d = ContractionSetup::default();
            let setup = ContractionSetup {
                initial: c.initial.clone().unwrap_or(d.initial),
                initial_alt: c.initial_alt.clone().unwrap_or(d.initial_alt),
                t_end: c.t_end.unwrap_or(d.t_end),
                sample_dt: c.sample_dt.unwrap_or(d.sample_dt),
                tol_contract: t.tol_contract.unwrap_or(d.tol_contract),
            };
            run_contraction(p, s, &setup, c.replicas, c.seed)?
        }
        ExperimentKind::Cauchy => {
            let d = CauchySetup::default();
            let setup = CauchySetup {
                sizes: c.sizes.as_ref().map(|v| [v[0], v[1]]).unwrap_or(d.sizes),
                times: c.times.clone().unwrap_or(d.times),
                initial: c.initial.clone().unwrap_or(d.initial),
                initial_alt: c.initial_alt.clone().unwrap_or(d.initial_alt),
                coupling: c.coupling.unwrap_or(d.coupling),
                tol_mc: t.tol_mc.unwrap_or(d.tol_mc),
                stderr_mult: t.stderr_mult.unwrap_or(d.stderr_mult),
            };
            run_cauchy_bound(p, s, &setup, c.replicas, c.seed)?
        }
        ExperimentKind::ChaosRate => {
            let d = ChaosSetup::default();
            let setup = ChaosSetup {
                sizes: c.sizes.clone().unwrap_or(d.sizes),
                n_ref: c.n_ref.unwrap_or(d.n_ref),
                t_eval: c.t_end.unwrap_or(d.t_eval),
                initial: c.initial.clone().unwrap_or(d.initial),
                slope_fraction: t.slope_fraction.unwrap_or(d.slope_fraction),
            };
            run_chaos_rate(p, s, &setup, c.replicas, c.seed)?
        }
        ExperimentKind::Stationary => {
            let d = StationarySetup::default();
            let setup = StationarySetup {
                initial: c.initial.clone().unwrap_or(d.initial),
                deterministic_sizes: c.sizes.clone().unwrap_or(d.deterministic_sizes),
                t_end_deterministic: c.t_relax.unwrap_or(d.t_end_deterministic),
                t_end: c.t_end.unwrap_or(d.t_end),
                sample_dt: c.sample_dt.unwrap_or(d.sample_dt),
                tol_equilibrium: t.tol_equilibrium.unwrap_or(d.tol_equilibrium),
                tol_w2: t.tol_w2.unwrap_or(d.tol_w2),
            };
            run_stationary(p, s, &setup, c.replicas, c.seed)?
        }
        ExperimentKind::PdeResidual => {
            let d = PdeSetup::default();
            let setup = PdeSetup {
                sizes: c.sizes.clone().unwrap_or(d.sizes),
                test_functions: c.test_functions.clone().unwrap_or(d.test_functions),
                t_end: c.t_end.unwrap_or(d.t_end),
                dt: c.sample_dt.unwrap_or(d.dt),
                initial: c.initial.clone().unwrap_or(d.initial),
                tol_pde: t.tol_pde.unwrap_or(d.tol_pde),
                stderr_mult: t.stderr_mult.unwrap_or(d.stderr_mult),
            };
            run_pde_residual(p, s, &setup, c.replicas, c.seed)?
        }
        ExperimentKind::Continuity => {
            let d = ContinuitySetup::default();
            let setup = ContinuitySetup {
                sizes: c.sizes.clone().unwrap_or(d.sizes),
                times: c.times.clone().unwrap_or(d.times),
                initial: c.initial.clone().unwrap_or(d.initial),
                max_ratio: t.max_ratio.unwrap_or(d.max_ratio),
            };
            run_continuity(p, s, &setup, c.replicas, c.seed)?
        }
        ExperimentKind::Moments => {
            let d = MomentSetup::default();
            let setup = MomentSetup {
                initial: c.initial.clone().unwrap_or(d.initial),
                t_end: c.t_end.unwrap_or(d.t_end),
                sample_dt: c.sample_dt.unwrap_or(d.sample_dt),
                tol_envelope: t.tol_envelope.unwrap_or(d.tol_envelope),
                tol_mc: t.tol_mc.unwrap_or(d.tol_mc),
                stderr_mult: t.stderr_mult.unwrap_or(d.stderr_mult),
                reference_factor: d.reference_factor,
            };
            run_moment_monitor(p, s, &setup, c.replicas, c.seed)?
        }
    };
    Ok((report, files))
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Runs the configured experiment and writes report.json, one CSV per observed
/// series and manifest.json into the output directory. On failure the
/// manifest records the error and the error is returned.
pub fn execute(v: &ValidatedConfig) -> Result<Outcome> {
    let out = &v.config.output_dir;
    fs::create_dir_all(out)?;
    let started = Instant::now();
    let echo = serde_json::to_value(&v.config)?;
    let result = run_experiment(v, out).and_then(|(mut report, mut files)| {
        let mut config = echo.clone();
        if let Some(map) = config.as_object_mut() {
            map.remove("output_dir");
        }
        let effective = std::mem::take(&mut report.params_echo);
        report.params_echo = serde_json::json!({ "config": config, "effective": effective });
        report.warnings.splice(0..0, v.warnings.iter().cloned());
        fs::write(out.join("report.json"), report.to_json()?)?;
        files.push("report.json".to_string());
        files.extend(report.write_series_csvs(out)?);
        Ok((report, files))
    });
    let mut manifest = serde_json::json!({
        "experiment": v.experiment.name(),
        "config": echo,
        "seed": v.config.seed,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_seconds": started.elapsed().as_secs_f64(),
    });
    match result {
        Ok((report, files)) => {
            manifest["status"] = "completed".into();
            manifest["all_pass"] = report.all_pass().into();
            manifest["files"] = files.clone().into();
            write_json(&out.join("manifest.json"), &manifest)?;
            Ok(Outcome { report, files })
        }
        Err(e) => {
            manifest["status"] = "failed".into();
            manifest["error"] = e.to_string().into();
            write_json(&out.join("manifest.json"), &manifest)?;
            Err(e)
        }
    }
}

/// Entry point of the binary; returns the process exit status.
pub fn main_with_args(args: Args) -> i32 {
    let run = || -> Result<Outcome> {
        let text = fs::read_to_string(&args.config)?;
        let mut config = read_config(&text)?;
        if let Some(s) = args.seed {
            config.seed = s;
        }
        if let Some(r) = args.replicas {
            config.replicas = r;
        }
        if let Some(o) = &args.out {
            config.output_dir = o.clone();
        }
        let validated = config.validate(Some(args.experiment))?;
        for w in &validated.warnings {
            eprintln!("warning: {w}");
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads.unwrap_or(0))
            .build()
            .map_err(|e| Error::config("threads", e.to_string()))?;
        pool.install(|| execute(&validated))
    };
    match run() {
        Ok(outcome) => {
            for (name, pass) in &outcome.report.pass {
                println!("{:<32} {}", name, if *pass { "pass" } else { "FAIL" });
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
