use serde::{Deserialize, Serialize};

use super::report::{Criterion, ExperimentReport};
use super::runs::sample_grid;
use super::{column_stats, model_echo, record_failures, require_lambda, run_replicas, InitialCondition};
use crate::brownian::mix_seed;
use crate::dynamics::{ModelParams, ParticleConfig};
use crate::error::{Error, Result};
use crate::integrator::{simulate, SchemeConfig};
use crate::measures::{wasserstein_pp_cross, EmpiricalMeasure};
use crate::numeric::ols_fit;

/// Whether the two systems of a pair share Brownian paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    #[default]
    Independent,
    Synchronous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CauchySetup {
    pub sizes: [usize; 2],
    pub times: Vec<f64>,
    pub initial: InitialCondition,
    pub initial_alt: InitialCondition,
    pub coupling: Coupling,
    pub tol_mc: f64,
    pub stderr_mult: f64,
}

impl Default for CauchySetup {
    fn default() -> Self {
        Self {
            sizes: [32, 64],
            times: vec![0.5, 1.0, 2.0, 4.0],
            initial: InitialCondition::default(),
            initial_alt: InitialCondition::default(),
            coupling: Coupling::Independent,
            tol_mc: 0.10,
            stderr_mult: 3.0,
        }
    }
}

fn sorted_times(times: &[f64]) -> Result<Vec<f64>> {
    let mut grid = vec![0.0];
    for &t in times {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::param("times", format!("sample times must be finite and > 0, got {t}")));
        }
        grid.push(t);
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// Sampled states are strictly ordered, so their atoms need no sorting.
pub(crate) fn measures_of(states: &[ParticleConfig]) -> Result<Vec<EmpiricalMeasure>> {
    Ok(states.iter().map(|s| EmpiricalMeasure::from_sorted_unchecked(s.positions().to_vec())).collect())
}

/// E W₂²(μ^N_t, μ^M_t) for independent systems against
/// e^{−2λt}E W₂²(0) + (1/2λ)(1/N + 1/M + 2(σ_N + σ_M)).
pub fn run_cauchy_bound(
    template: &ModelParams,
    scheme: &SchemeConfig,
    setup: &CauchySetup,
    replicas: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    let lambda = require_lambda(template, "cauchy bound")?;
    if template.alpha != 1.0 {
        return Err(Error::param("alpha", "the explicit Cauchy bound needs alpha = 1"));
    }
    let [n, m] = setup.sizes;
    let pn = template.with_n(n)?;
    let pm = template.with_n(m)?;
    let (sn, sm) = (pn.sigma_n(), pm.sigma_n());
    if sn > 1.0 / n as f64 || sm > 1.0 / m as f64 {
        return Err(Error::param("sigma_rule", "the Cauchy bound needs sigma_K <= 1/K"));
    }
    let grid = sorted_times(&setup.times)?;
    let t_end = *grid.last().expect("grid holds 0");
    let (seed_n, seed_m, stream_m) = match setup.coupling {
        Coupling::Independent => (mix_seed(seed, 1), mix_seed(seed, 2), 2),
        Coupling::Synchronous => (mix_seed(seed, 1), mix_seed(seed, 1), 1),
    };
    let (ok, failed) = run_replicas(replicas, |r| {
        let x0 = ParticleConfig::new(setup.initial.realize(&pn, seed, 1, r)?, 0.0)?;
        let y0 = ParticleConfig::new(setup.initial_alt.realize(&pm, seed, stream_m, r)?, 0.0)?;
        let x = simulate(&pn, scheme, &x0, t_end, &grid[1..], seed_n, r)?;
        let y = simulate(&pm, scheme, &y0, t_end, &grid[1..], seed_m, r)?;
        measures_of(&x.states)?
            .iter()
            .zip(&measures_of(&y.states)?)
            .map(|(a, b)| wasserstein_pp_cross(a, b, 2.0))
            .collect::<Result<Vec<f64>>>()
    });
    let rows: Vec<Vec<f64>> = ok.into_iter().map(|(_, v)| v).collect();
    let w2 = column_stats(&rows, grid.len());
    let asymptotic = (1.0 / n as f64 + 1.0 / m as f64 + 2.0 * (sn + sm)) / (2.0 * lambda);
    let w0 = w2.value[0];
    let bound: Vec<f64> = grid.iter().map(|t| (-2.0 * lambda * t).exp() * w0 + asymptotic).collect();

    let echo = serde_json::json!({ "model": model_echo(template), "scheme": scheme, "setup": setup });
    let mut report = ExperimentReport::new("cauchy", echo, seed, replicas, grid);
    report.observe("w2sq", w2);
    report.bound(
        "cauchy_bound",
        bound,
        "exp(-2*lambda*t)*E[W2^2](0) + (1/(2*lambda))*(1/N + 1/M + 2*(sigma_N + sigma_M))",
    );
    report.fit("asymptotic_term", asymptotic);
    report.fit("w2sq_initial", w0);
    report.tolerance("tol_mc", setup.tol_mc);
    report.tolerance("stderr_mult", setup.stderr_mult);
    report.criterion(
        "cauchy_bound",
        Criterion::SeriesBelowBound {
            series: "w2sq".into(),
            bound: "cauchy_bound".into(),
            rel_tol: setup.tol_mc,
            stderr_mult: setup.stderr_mult,
        },
    );
    record_failures(&mut report, &failed);
    report.finalize()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChaosSetup {
    pub sizes: Vec<usize>,
    pub n_ref: usize,
    pub t_eval: f64,
    pub initial: InitialCondition,
    /// The slope must be at most −slope_fraction·(2 − α)/α.
    pub slope_fraction: f64,
}

impl Default for ChaosSetup {
    fn default() -> Self {
        Self {
            sizes: vec![32, 64, 128, 256],
            n_ref: 2048,
            t_eval: 3.0,
            initial: InitialCondition::default(),
            slope_fraction: 0.8,
        }
    }
}

/// Log-log rate of E W₂²(μ^N_t, μ^{N_ref}_t) in N, replica r of every size
/// paired with replica r of the reference system.
pub fn run_chaos_rate(
    template: &ModelParams,
    scheme: &SchemeConfig,
    setup: &ChaosSetup,
    replicas: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    let alpha = template.alpha;
    if !(1.0..2.0).contains(&alpha) {
        return Err(Error::param("alpha", "chaos rate needs alpha in [1, 2)"));
    }
    if setup.sizes.len() < 2 || setup.sizes.windows(2).any(|w| w[0] >= w[1]) || setup.sizes[0] < 1 {
        return Err(Error::param("sizes", "sizes must hold at least two strictly increasing values"));
    }
    let largest = *setup.sizes.last().expect("checked non-empty");
    if setup.n_ref < 8 * largest {
        return Err(Error::param("n_ref", "n_ref must be at least 8 times the largest size"));
    }
    let grid = sample_grid(setup.t_eval, setup.t_eval.max(f64::MIN_POSITIVE))?;
    let run_size = |n: usize| -> Result<(Vec<Option<Vec<EmpiricalMeasure>>>, Vec<(u64, Error)>)> {
        let p = template.with_n(n)?;
        let (ok, failed) = run_replicas(replicas, |r| {
            let x0 = ParticleConfig::new(setup.initial.realize(&p, seed, n as u64, r)?, 0.0)?;
            let traj = simulate(&p, scheme, &x0, setup.t_eval, &[], mix_seed(seed, n as u64), r)?;
            measures_of(&traj.states)
        });
        let mut slots: Vec<Option<Vec<EmpiricalMeasure>>> = (0..replicas).map(|_| None).collect();
        for (r, v) in ok {
            slots[r as usize] = Some(v);
        }
        Ok((slots, failed))
    };
    let (reference, mut failed) = run_size(setup.n_ref)?;
    let echo = serde_json::json!({ "model": model_echo(template), "scheme": scheme, "setup": setup });
    let mut report = ExperimentReport::new("chaos-rate", echo, seed, replicas, grid.clone());
    let mut log_n = Vec::new();
    let mut log_w = Vec::new();
    let mut log_w0 = Vec::new();
    for &n in &setup.sizes {
        let (systems, f) = run_size(n)?;
        failed.extend(f);
        let rows = systems
            .iter()
            .zip(&reference)
            .filter_map(|(a, b)| Some((a.as_ref()?, b.as_ref()?)))
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(u, v)| wasserstein_pp_cross(u, v, 2.0))
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let s = column_stats(&rows, grid.len());
        log_n.push((n as f64).ln());
        log_w0.push(s.value[0].ln());
        log_w.push(s.value[grid.len() - 1].ln());
        report.observe(format!("w2sq_N{n}"), s);
    }
    let (slope, intercept) = ols_fit(&log_n, &log_w);
    let (slope0, intercept0) = ols_fit(&log_n, &log_w0);
    let exponent = (2.0 - alpha) / alpha;
    report.fit("slope", slope);
    report.fit("intercept", intercept);
    report.fit("slope_t0", slope0);
    report.fit("intercept_t0", intercept0);
    report.fit("theory_exponent", exponent);
    report.tolerance("slope_fraction", setup.slope_fraction);
    report.criterion(
        "rate",
        Criterion::FittedAtMost {
            key: "slope".into(),
            limit: -setup.slope_fraction * exponent,
        },
    );
    failed.sort_by_key(|(r, _)| *r);
    record_failures(&mut report, &failed);
    report.finalize()
}
