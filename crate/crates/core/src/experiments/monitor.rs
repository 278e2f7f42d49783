use serde::{Deserialize, Serialize};

use super::report::{Criterion, ExperimentReport, Series};
use super::runs::sample_grid;
use super::{column_stats, model_echo, record_failures, require_lambda, run_replicas, InitialCondition};
use crate::brownian::mix_seed;
use crate::dynamics::{c_alpha_n, continuity_bracket, interaction_vector_a, lyapunov_hcal, ModelParams, ParticleConfig, SigmaRule};
use crate::error::{Error, Result};
use crate::integrator::{simulate, SchemeConfig};
use crate::measures::{wasserstein_p_cross, EmpiricalMeasure};
use crate::numeric::slope_through_origin;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuitySetup {
    pub sizes: Vec<usize>,
    /// Sample times in (0, 0.1].
    pub times: Vec<f64>,
    pub initial: InitialCondition,
    pub max_ratio: f64,
}

impl Default for ContinuitySetup {
    fn default() -> Self {
        Self {
            sizes: vec![16, 64, 256],
            times: vec![0.0125, 0.025, 0.05, 0.1],
            initial: InitialCondition::default(),
            max_ratio: 2.0,
        }
    }
}

/// Short-time displacement E(1/N)Σ|X_t − x₀|², its slope through the origin,
/// and the ratio of that slope to the bracket built from |A(x₀)| and 𝓗(x₀).
pub fn run_continuity(
    template: &ModelParams,
    scheme: &SchemeConfig,
    setup: &ContinuitySetup,
    replicas: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    if !setup.initial.is_deterministic() {
        return Err(Error::param("initial", "continuity needs a deterministic start"));
    }
    if setup.times.is_empty() || setup.times.iter().any(|t| !(*t > 0.0 && *t <= 0.1)) {
        return Err(Error::param("times", "continuity sample times must lie in (0, 0.1]"));
    }
    let mut grid = vec![0.0];
    grid.extend(&setup.times);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let t_end = *grid.last().expect("non-empty");
    let echo = serde_json::json!({ "model": model_echo(template), "scheme": scheme, "setup": setup });
    let mut report = ExperimentReport::new("continuity", echo, seed, replicas, grid.clone());
    report.tolerance("max_ratio", setup.max_ratio);
    let mut failed = Vec::new();
    let mut ratio_keys = Vec::new();
    for &n in &setup.sizes {
        let p = template.with_n(n)?;
        let x0 = setup.initial.realize(&p, seed, n as u64, 0)?;
        let (ok, f) = run_replicas(replicas, |r| {
            let start = ParticleConfig::new(x0.clone(), 0.0)?;
            let traj = simulate(&p, scheme, &start, t_end, &grid[1..], mix_seed(seed, n as u64), r)?;
            Ok(traj
                .states
                .iter()
                .map(|s| s.positions().iter().zip(&x0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n as f64)
                .collect::<Vec<f64>>())
        });
        failed.extend(f);
        let rows: Vec<Vec<f64>> = ok.into_iter().map(|(_, v)| v).collect();
        let s = column_stats(&rows, grid.len());
        let slope = slope_through_origin(&grid, &s.value);
        let norm_a = interaction_vector_a(&x0, p.alpha)?.iter().map(|v| v * v).sum::<f64>().sqrt();
        let bracket = continuity_bracket(norm_a, lyapunov_hcal(&x0), n, p.sigma_n());
        report.observe(format!("displacement_N{n}"), s);
        report.fit(format!("slope_N{n}"), slope);
        report.fit(format!("bracket_N{n}"), bracket);
        report.fit(format!("ratio_N{n}"), slope / bracket);
        ratio_keys.push(format!("ratio_N{n}"));
    }
    if ratio_keys.len() > 1 {
        report.criterion(
            "ratio_spread",
            Criterion::RatioSpread {
                keys: ratio_keys,
                max_ratio: setup.max_ratio,
            },
        );
    }
    failed.sort_by_key(|(r, _)| *r);
    record_failures(&mut report, &failed);
    report.finalize()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MomentSetup {
    pub initial: InitialCondition,
    pub t_end: f64,
    pub sample_dt: f64,
    /// Relative slack on the 𝓗 envelope.
    pub tol_envelope: f64,
    /// Monte Carlo slack on the remaining envelopes.
    pub tol_mc: f64,
    pub stderr_mult: f64,
    /// Size multiple of the reference system for the non-growth monitor.
    pub reference_factor: usize,
}

impl Default for MomentSetup {
    fn default() -> Self {
        Self {
            initial: InitialCondition::default(),
            t_end: 5.0,
            sample_dt: 1.0 / 32.0,
            tol_envelope: 0.1,
            tol_mc: 0.1,
            stderr_mult: 3.0,
            reference_factor: 4,
        }
    }
}

fn cumulative_trapezoid(times: &[f64], f: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0];
    for k in 1..times.len() {
        let prev = out[k - 1];
        out.push(prev + 0.5 * (times[k] - times[k - 1]) * (f(k - 1) + f(k)));
    }
    out
}

/// E𝓗(X_t), E(1/N)Σx⁴ and the time integrals of S against their explicit
/// envelopes; for α = 1 with fixed σ also the distance to a larger reference
/// system, which must not grow.
pub fn run_moment_monitor(
    params: &ModelParams,
    scheme: &SchemeConfig,
    setup: &MomentSetup,
    replicas: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    let lambda = require_lambda(params, "moment monitor")?;
    let grid = sample_grid(setup.t_end, setup.sample_dt)?;
    let n = params.n;
    let nf = n as f64;
    let alpha = params.alpha;
    let sigma = params.sigma_n();
    let c = c_alpha_n(alpha, n)?;
    let with_reference = alpha == 1.0 && matches!(params.sigma, SigmaRule::Constant(_));
    let reference = params.with_n(setup.reference_factor.max(2) * n)?;

    struct Row {
        hcal: Vec<f64>,
        m4: Vec<f64>,
        s_int: Vec<f64>,
        s_weighted: Vec<f64>,
        w2_ref: Option<Vec<f64>>,
    }
    let (ok, failed) = run_replicas(replicas, |r| {
        let x0 = ParticleConfig::new(setup.initial.realize(params, seed, 1, r)?, 0.0)?;
        let traj = simulate(params, scheme, &x0, setup.t_end, &grid[1..], mix_seed(seed, 1), r)?;
        let d = &traj.diagnostics;
        let w2_ref = if with_reference {
            let y0 = ParticleConfig::new(setup.initial.realize(&reference, seed, 2, r)?, 0.0)?;
            let other = simulate(&reference, scheme, &y0, setup.t_end, &grid[1..], mix_seed(seed, 2), r)?;
            Some(
                traj.states
                    .iter()
                    .zip(&other.states)
                    .map(|(a, b)| wasserstein_p_cross(&EmpiricalMeasure::new(a.positions())?, &EmpiricalMeasure::new(b.positions())?, 2.0))
                    .collect::<Result<Vec<f64>>>()?,
            )
        } else {
            None
        };
        Ok(Row {
            hcal: d.iter().map(|v| v.hcal).collect(),
            m4: d.iter().map(|v| v.m4).collect(),
            s_int: cumulative_trapezoid(&grid, |k| d[k].s_stat),
            s_weighted: cumulative_trapezoid(&grid, |k| (2.0 * lambda * grid[k]).exp() * d[k].s_stat),
            w2_ref,
        })
    });
    let rows: Vec<Row> = ok.into_iter().map(|(_, v)| v).collect();
    let len = grid.len();
    let stats = |f: &dyn Fn(&Row) -> Vec<f64>| -> Series { column_stats(&rows.iter().map(f).collect::<Vec<_>>(), len) };
    let hcal = stats(&|r| r.hcal.clone());
    let m4 = stats(&|r| r.m4.clone());
    let s_int = stats(&|r| r.s_int.clone());
    let s_weighted = stats(&|r| r.s_weighted.clone());
    let h0 = hcal.value[0];
    let phi0 = m4.value[0];

    let echo = serde_json::json!({ "model": model_echo(params), "scheme": scheme, "setup": setup });
    let mut report = ExperimentReport::new("moments", echo, seed, replicas, grid.clone());
    report.tolerance("tol_envelope", setup.tol_envelope);
    report.tolerance("tol_mc", setup.tol_mc);
    report.tolerance("stderr_mult", setup.stderr_mult);
    report.fit("C_alpha_N", c);
    report.fit("hcal_asymptote", (nf * sigma + c / alpha) / lambda);

    let e = |t: f64| (-2.0 * lambda * t).exp();
    report.bound(
        "hcal_envelope",
        grid.iter().map(|t| e(*t) * h0 + (nf * sigma + c / alpha) / lambda).collect(),
        "exp(-2*lambda*t)*E[Hcal](0) + (N*sigma_N + C(alpha,N)/alpha)/lambda",
    );
    report.criterion(
        "hcal_envelope",
        Criterion::SeriesBelowBound {
            series: "Hcal".into(),
            bound: "hcal_envelope".into(),
            rel_tol: setup.tol_envelope,
            stderr_mult: 0.0,
        },
    );
    report.bound(
        "S_integral_bound",
        grid.iter()
            .map(|t| 0.5 * alpha * (h0 + nf + (2.0 * nf * sigma + 2.0 * lambda * nf) * t) + c * t)
            .collect(),
        "(alpha/2)*(E[Hcal](0) + N + (2*N*sigma_N + 2*lambda*N)*t) + C(alpha,N)*t",
    );
    report.bound(
        "S_weighted_integral_bound",
        grid.iter()
            .map(|t| {
                let g = ((2.0 * lambda * t).exp() - 1.0) / (2.0 * lambda);
                0.5 * alpha * (h0 + nf * (2.0 * lambda * t).exp() + 2.0 * nf * sigma * g) + c * g
            })
            .collect(),
        "(alpha/2)*(E[Hcal](0) + N*exp(2*lambda*t) + 2*N*sigma_N*(exp(2*lambda*t)-1)/(2*lambda)) + C(alpha,N)*(exp(2*lambda*t)-1)/(2*lambda)",
    );
    for (series, bound) in [("S_integral", "S_integral_bound"), ("S_weighted_integral", "S_weighted_integral_bound")] {
        report.criterion(
            bound,
            Criterion::SeriesBelowBound {
                series: series.into(),
                bound: bound.into(),
                rel_tol: setup.tol_mc,
                stderr_mult: setup.stderr_mult,
            },
        );
    }
    if alpha == 1.0 {
        let k = 9.0 * (2.0 * sigma + 1.0).powi(2) / (2.0 * lambda);
        report.bound(
            "m4_envelope",
            grid.iter().map(|t| e(*t) * phi0 + k / (2.0 * lambda) * (1.0 - e(*t))).collect(),
            "exp(-2*lambda*t)*E[m4](0) + K/(2*lambda)*(1 - exp(-2*lambda*t)), K = 9*(2*sigma_N + 1)^2/(2*lambda)",
        );
        report.criterion(
            "m4_envelope",
            Criterion::SeriesBelowBound {
                series: "m4".into(),
                bound: "m4_envelope".into(),
                rel_tol: setup.tol_mc,
                stderr_mult: setup.stderr_mult,
            },
        );
    }
    if with_reference {
        let w: Vec<Vec<f64>> = rows.iter().filter_map(|r| r.w2_ref.clone()).collect();
        report.observe("w2_reference", column_stats(&w, len));
        report.fit("reference_size", reference.n as f64);
        report.criterion(
            "w2_reference_non_growth",
            Criterion::NonGrowth {
                series: "w2_reference".into(),
                rel_tol: setup.tol_mc,
                stderr_mult: setup.stderr_mult,
            },
        );
    }
    report.observe("Hcal", hcal);
    report.observe("m4", m4);
    report.observe("S_integral", s_int);
    report.observe("S_weighted_integral", s_weighted);
    record_failures(&mut report, &failed);
    report.finalize()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_linear_exactly() {
        let t = [0.0, 0.5, 1.5, 2.0];
        let out = cumulative_trapezoid(&t, |k| 2.0 * t[k]);
        for (a, b) in out.iter().zip(t.iter().map(|x| x * x)) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn continuity_rejects_long_times() {
        let p = ModelParams::quadratic(4, 1.0, 1.0, SigmaRule::OneOverN).unwrap();
        let setup = ContinuitySetup {
            times: vec![0.5],
            ..ContinuitySetup::default()
        };
        assert!(run_continuity(&p, &SchemeConfig::default(), &setup, 1, 0).is_err());
    }
}
