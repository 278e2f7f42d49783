use serde::{Deserialize, Serialize};

use super::report::{Criterion, ExperimentReport, Series};
use super::{column_stats, model_echo, record_failures, require_lambda, run_replicas, uniform_times, InitialCondition};
use crate::brownian::mix_seed;
use crate::dynamics::{check_ordered, ModelParams, ParticleConfig, SigmaRule};
use crate::error::{Error, Result};
use crate::integrator::{simulate, simulate_synchronous_pair, SampledTrajectory, SchemeConfig};
use crate::laws::{equilibrium_points, hermite_physicists, semicircle_radius};
use crate::measures::{wasserstein2_to_law, EmpiricalMeasure, QuantileLaw};

/// {0} followed by the sampling grid up to `t_end`.
pub(crate) fn sample_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::param("t_end", "t_end must be finite and >= 0"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("sample_dt", "sample_dt must be finite and > 0"));
    }
    let mut grid = vec![0.0];
    if t_end > 0.0 {
        grid.extend(uniform_times(t_end, dt));
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionSetup {
    pub initial: InitialCondition,
    pub initial_alt: InitialCondition,
    pub t_end: f64,
    pub sample_dt: f64,
    pub tol_contract: f64,
}

impl Default for ContractionSetup {
    fn default() -> Self {
        Self {
            initial: InitialCondition::default(),
            initial_alt: InitialCondition::IidSorted {
                law: QuantileLaw::Semicircle { radius: 2f64.sqrt() },
            },
            t_end: 5.0,
            sample_dt: 0.25,
            tol_contract: 0.05,
        }
    }
}

/// Synchronous coupling of two starts: max over replicas and times of
/// e^{2λt}D(t)/D(0) with D = Σ(X − Y)².
pub fn run_contraction(
    params: &ModelParams,
    scheme: &SchemeConfig,
    setup: &ContractionSetup,
    replicas: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    let lambda = require_lambda(params, "contraction")?;
    let grid = sample_grid(setup.t_end, setup.sample_dt)?;
    let path_seed = mix_seed(seed, 0xC0);
    let (ok, failed) = run_replicas(replicas, |r| {
        let x0 = ParticleConfig::new(setup.initial.realize(params, seed, 1, r)?, 0.0)?;
        let y0 = ParticleConfig::new(setup.initial_alt.realize(params, seed, 2, r)?, 0.0)?;
        let (x, y) = simulate_synchronous_pair(params, scheme, &x0, &y0, setup.t_end, &grid[1..], path_seed, r)?;
        Ok(x.states
            .iter()
            .zip(&y.states)
            .map(|(a, b)| a.positions().iter().zip(b.positions()).map(|(u, v)| (u - v) * (u - v)).sum::<f64>())
            .collect::<Vec<f64>>())
    });
    let len = grid.len();
    let d: Vec<Vec<f64>> = ok.into_iter().map(|(_, d)| d).collect();
    let normalized: Vec<Vec<f64>> = d
        .iter()
        .map(|row| row.iter().map(|v| if row[0] > 0.0 { v / row[0] } else { 0.0 }).collect())
        .collect();
    let worst: Vec<f64> = (0..len).map(|k| normalized.iter().map(|r| r[k]).fold(0.0, f64::max)).collect();
    let envelope: Vec<f64> = grid.iter().map(|t| (-2.0 * lambda * t).exp()).collect();
    let max_scaled = worst.iter().zip(&envelope).map(|(w, e)| w / e).fold(0.0, f64::max);

    let echo = serde_json::json!({ "model": model_echo(params), "scheme": scheme, "setup": setup });
    let mut report = ExperimentReport::new("contraction", echo, seed, replicas, grid);
    report.observe("D", column_stats(&d, len));
    report.observe("normalized_D_mean", column_stats(&normalized, len));
    report.observe("normalized_D_max", Series::exact(worst));
    report.bound("envelope", envelope, "exp(-2*lambda*t)");
    report.fit("max_scaled_ratio", max_scaled);
    report.tolerance("tol_contract", setup.tol_contract);
    report.criterion(
        "contraction",
        Criterion::SeriesBelowBound {
            series: "normalized_D_max".into(),
            bound: "envelope".into(),
            rel_tol: setup.tol_contract,
            stderr_mult: 0.0,
        },
    );
    record_failures(&mut report, &failed);
    report.finalize()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationarySetup {
    pub initial: InitialCondition,
    /// Sizes of the noiseless runs compared with the equilibrium points.
    pub deterministic_sizes: Vec<usize>,
    pub t_end_deterministic: f64,
    /// Horizon of the noisy run; the last quarter is averaged.
    pub t_end: f64,
    pub sample_dt: f64,
    pub tol_equilibrium: f64,
    pub tol_w2: f64,
}

impl Default for StationarySetup {
    fn default() -> Self {
        Self {
            initial: InitialCondition::default(),
            deterministic_sizes: vec![2, 3, 8],
            t_end_deterministic: 50.0,
            t_end: 20.0,
            sample_dt: 0.25,
            tol_equilibrium: 1e-6,
            tol_w2: 0.05,
        }
    }
}

/// Distance from the equilibrium to the nearest root of H_N after rescaling
/// by sqrt(λN), estimated by one Newton correction per point.
fn hermite_root_error(points: &[f64], lambda: f64) -> f64 {
    let n = points.len();
    let scale = (lambda * n as f64).sqrt();
    points
        .iter()
        .map(|x| {
            let y = x * scale;
            let step = hermite_physicists(n, y) / (2.0 * n as f64 * hermite_physicists(n - 1, y));
            step.abs() / scale
        })
        .fold(0.0, f64::max)
}

/// Noiseless relaxation to the equilibrium points, and the long-run empirical
/// measure of the noisy system against the semicircle law.
pub fn run_stationary(
    params: &ModelParams,
    scheme: &SchemeConfig,
    setup: &StationarySetup,
    replicas: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    let lambda = require_lambda(params, "stationary")?;
    if params.alpha != 1.0 {
        return Err(Error::param("alpha", "stationary experiment needs alpha = 1"));
    }
    let grid = sample_grid(setup.t_end, setup.sample_dt)?;
    let echo = serde_json::json!({ "model": model_echo(params), "scheme": scheme, "setup": setup });
    let mut report = ExperimentReport::new("stationary", echo, seed, replicas, grid.clone());
    report.tolerance("tol_equilibrium", setup.tol_equilibrium);
    report.tolerance("tol_w2", setup.tol_w2);
    report.tolerance("equilibrium_residual", 1e-10);

    for &n in &setup.deterministic_sizes {
        let p = ModelParams::new(n, 1.0, params.confinement.clone(), SigmaRule::Zero)?;
        let eq = equilibrium_points(n, lambda)?;
        let x0 = ParticleConfig::new(setup.initial.realize(&p, seed, 1, 0)?, 0.0)?;
        let traj = simulate(&p, scheme, &x0, setup.t_end_deterministic, &[], seed, 0)?;
        let err = traj
            .final_state()
            .positions()
            .iter()
            .zip(&eq.points)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let key = format!("equilibrium_error_N{n}");
        report.fit(&key, err);
        report.criterion(&key, Criterion::FittedAtMost { key: key.clone(), limit: setup.tol_equilibrium });
        let key = format!("equilibrium_residual_N{n}");
        report.fit(&key, eq.residual_norm);
        report.criterion(&key, Criterion::FittedAtMost { key: key.clone(), limit: 1e-10 });
        if (1..=12).contains(&n) {
            let key = format!("hermite_root_error_N{n}");
            report.fit(&key, hermite_root_error(&eq.points, lambda));
            report.criterion(&key, Criterion::FittedAtMost { key: key.clone(), limit: setup.tol_equilibrium });
        }
    }

    let law = QuantileLaw::Semicircle {
        radius: semicircle_radius(lambda),
    };
    let (ok, failed) = run_replicas(replicas, |r| {
        let x0 = ParticleConfig::new(setup.initial.realize(params, seed, 2, r)?, 0.0)?;
        let traj = simulate(params, scheme, &x0, setup.t_end, &grid[1..], mix_seed(seed, 0x57), r)?;
        traj.states
            .iter()
            .map(|s| wasserstein2_to_law(&EmpiricalMeasure::new(s.positions())?, &law, crate::measures::DEFAULT_NODES_PER_CELL))
            .collect::<Result<Vec<f64>>>()
    });
    let rows: Vec<Vec<f64>> = ok.into_iter().map(|(_, v)| v).collect();
    let w2 = column_stats(&rows, grid.len());
    let tail: Vec<f64> = grid
        .iter()
        .zip(&w2.value)
        .filter(|(t, _)| **t >= 0.75 * setup.t_end)
        .map(|(_, v)| *v)
        .collect();
    let average = tail.iter().sum::<f64>() / tail.len() as f64;
    report.observe("w2_semicircle", w2);
    report.fit("w2_time_average", average);
    report.fit("semicircle_radius", semicircle_radius(lambda));
    report.criterion(
        "w2_semicircle",
        Criterion::FittedAtMost {
            key: "w2_time_average".into(),
            limit: setup.tol_w2,
        },
    );
    record_failures(&mut report, &failed);
    report.finalize()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSetup {
    pub initial: InitialCondition,
    pub t_end: f64,
    pub sample_dt: f64,
}

impl Default for SimulateSetup {
    fn default() -> Self {
        Self {
            initial: InitialCondition::default(),
            t_end: 1.0,
            sample_dt: 0.25,
        }
    }
}

pub const NONCOLLISION_WARNING: &str = "alpha = 1 with sigma_N > 1/N lies outside the proven non-collision regime";

fn is_near_collision(e: &Error) -> bool {
    match e {
        Error::NearCollision { .. } => true,
        Error::Trajectory { source, .. } => is_near_collision(source),
        _ => false,
    }
}

/// Plain replicated simulation with diagnostics, ordering and collision checks.
/// Successful trajectories are returned alongside the report.
pub fn run_simulate(
    params: &ModelParams,
    scheme: &SchemeConfig,
    setup: &SimulateSetup,
    replicas: u64,
    seed: u64,
) -> Result<(ExperimentReport, Vec<SampledTrajectory>)> {
    let grid = sample_grid(setup.t_end, setup.sample_dt)?;
    let (ok, failed) = run_replicas(replicas, |r| {
        let x0 = ParticleConfig::new(setup.initial.realize(params, seed, 1, r)?, 0.0)?;
        simulate(params, scheme, &x0, setup.t_end, &grid[1..], seed, r)
    });
    let trajectories: Vec<SampledTrajectory> = ok.into_iter().map(|(_, t)| t).collect();
    let len = grid.len();
    let violations = trajectories
        .iter()
        .flat_map(|t| &t.states)
        .filter(|s| check_ordered(s.positions()).is_err())
        .count() as u64;
    let near = failed.iter().filter(|(_, e)| is_near_collision(e)).count() as u64;
    let echo = serde_json::json!({ "model": model_echo(params), "scheme": scheme, "setup": setup });
    let mut report = ExperimentReport::new("simulate", echo, seed, replicas, grid);
    let column = |f: fn(&crate::integrator::Diagnostics) -> f64| -> Vec<Vec<f64>> {
        trajectories.iter().map(|t| t.diagnostics.iter().map(f).collect()).collect()
    };
    report.observe("Hcal", column_stats(&column(|d| d.hcal), len));
    report.observe("H_alpha", column_stats(&column(|d| d.h_alpha), len));
    report.observe("S_stat", column_stats(&column(|d| d.s_stat), len));
    report.observe("m2", column_stats(&column(|d| d.m2), len));
    report.observe("m4", column_stats(&column(|d| d.m4), len));
    report.count("ordering_violations", violations);
    report.count("near_collisions", near);
    report.count("accepted_steps", trajectories.iter().map(|t| t.accepted).sum());
    report.count("rejected_steps", trajectories.iter().map(|t| t.rejected).sum());
    report.fit("min_gap", trajectories.iter().map(|t| t.min_gap).fold(f64::MAX, f64::min));
    report.criterion(
        "ordering",
        Criterion::CounterAtMost {
            key: "ordering_violations".into(),
            limit: 0,
        },
    );
    report.criterion(
        "no_near_collisions",
        Criterion::CounterAtMost {
            key: "near_collisions".into(),
            limit: 0,
        },
    );
    if params.outside_noncollision_regime() {
        report.warnings.push(NONCOLLISION_WARNING.to_string());
    }
    record_failures(&mut report, &failed);
    Ok((report.finalize()?, trajectories))
}
