use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::report::{Criterion, ExperimentReport};
use super::runs::sample_grid;
use super::{column_stats, model_echo, record_failures, run_replicas, InitialCondition};
use crate::brownian::mix_seed;
use crate::dynamics::{ModelParams, ParticleConfig};
use crate::error::{Error, Result};
use crate::integrator::{simulate, SchemeConfig};
use crate::numeric::CompensatedSum;

/// Built-in admissible test functions: bounded f, f′, f″ with f′U′ bounded for
/// quadratic U. `linear` is kept for the antisymmetry check despite being
/// unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TestFunction {
    Constant,
    Linear,
    Tanh,
    /// exp(−x²/2)
    GaussBump,
}

impl TestFunction {
    pub fn value(&self, x: f64) -> f64 {
        match self {
            TestFunction::Constant => 1.0,
            TestFunction::Linear => x,
            TestFunction::Tanh => x.tanh(),
            TestFunction::GaussBump => (-0.5 * x * x).exp(),
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            TestFunction::Constant => 0.0,
            TestFunction::Linear => 1.0,
            TestFunction::Tanh => {
                let c = x.cosh();
                1.0 / (c * c)
            }
            TestFunction::GaussBump => -x * (-0.5 * x * x).exp(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::Constant => "constant",
            TestFunction::Linear => "linear",
            TestFunction::Tanh => "tanh",
            TestFunction::GaussBump => "gauss_bump",
        }
    }

    /// True when the residual vanishes identically.
    fn is_trivial(&self) -> bool {
        matches!(self, TestFunction::Constant)
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "constant" => TestFunction::Constant,
            "linear" => TestFunction::Linear,
            "tanh" => TestFunction::Tanh,
            "gauss_bump" => TestFunction::GaussBump,
            other => return Err(Error::InadmissibleTestFunction(other.to_string())),
        })
    }
}

impl TryFrom<String> for TestFunction {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<TestFunction> for String {
    fn from(f: TestFunction) -> String {
        f.name().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeSetup {
    pub sizes: Vec<usize>,
    pub test_functions: Vec<TestFunction>,
    pub t_end: f64,
    /// Trapezoid step of the time integrals.
    pub dt: f64,
    pub initial: InitialCondition,
    pub tol_pde: f64,
    pub stderr_mult: f64,
}

impl Default for PdeSetup {
    fn default() -> Self {
        Self {
            sizes: vec![64, 512],
            test_functions: vec![TestFunction::Tanh],
            t_end: 1.0,
            dt: 1.0 / 64.0,
            initial: InitialCondition::default(),
            tol_pde: 0.02,
            stderr_mult: 3.0,
        }
    }
}

/// (μ(f), ∫f′U′dμ, ½∬_{x≠y}(f′(x) − f′(y))·sign(x − y)/|x − y|^α dμdμ).
fn weak_terms(x: &[f64], f: TestFunction, params: &ModelParams) -> (f64, f64, f64) {
    let n = x.len();
    let nf = n as f64;
    let df: Vec<f64> = x.iter().map(|v| f.derivative(*v)).collect();
    let mean = x.iter().map(|v| f.value(*v)).collect::<CompensatedSum>().value() / nf;
    let drift = x
        .iter()
        .zip(&df)
        .map(|(v, d)| d * params.confinement.grad(*v))
        .collect::<CompensatedSum>()
        .value()
        / nf;
    let mut pairs = CompensatedSum::new();
    if !f.is_trivial() {
        for j in 0..n {
            for i in 0..j {
                let d = x[j] - x[i];
                let w = if params.alpha == 1.0 { 1.0 / d } else { d.powf(-params.alpha) };
                pairs.add((df[j] - df[i]) * w);
            }
        }
    }
    (mean, drift, pairs.value() / (nf * nf))
}

/// R(t) = μ_t(f) − μ_0(f) + ∫₀ᵗ∫f′U′dμ_s ds − ∫₀ᵗ(interaction) ds along one
/// sampled path, trapezoid rule in time.
fn residual_path(states: &[ParticleConfig], times: &[f64], f: TestFunction, params: &ModelParams) -> Vec<f64> {
    let terms: Vec<(f64, f64, f64)> = states.iter().map(|s| weak_terms(s.positions(), f, params)).collect();
    let mut out = Vec::with_capacity(states.len());
    let mut integral = 0.0;
    for k in 0..states.len() {
        if k > 0 {
            let h = times[k] - times[k - 1];
            let g0 = terms[k - 1].1 - terms[k - 1].2;
            let g1 = terms[k].1 - terms[k].2;
            integral += 0.5 * h * (g0 + g1);
        }
        out.push(terms[k].0 - terms[0].0 + integral);
    }
    out
}

/// Time-integrated residual of the limiting weak equation for each size and
/// test function, replica mean of |R(t)|.
pub fn run_pde_residual(
    template: &ModelParams,
    scheme: &SchemeConfig,
    setup: &PdeSetup,
    replicas: u64,
    seed: u64,
) -> Result<ExperimentReport> {
    if setup.sizes.is_empty() || setup.test_functions.is_empty() {
        return Err(Error::param("sizes", "need at least one size and one test function"));
    }
    let grid = sample_grid(setup.t_end, setup.dt)?;
    let echo = serde_json::json!({ "model": model_echo(template), "scheme": scheme, "setup": setup });
    let mut report = ExperimentReport::new("pde-residual", echo, seed, replicas, grid.clone());
    report.tolerance("tol_pde", setup.tol_pde);
    report.tolerance("stderr_mult", setup.stderr_mult);
    let mut failed = Vec::new();
    for &n in &setup.sizes {
        let p = template.with_n(n)?;
        let (ok, f) = run_replicas(replicas, |r| {
            let x0 = ParticleConfig::new(setup.initial.realize(&p, seed, n as u64, r)?, 0.0)?;
            let traj = simulate(&p, scheme, &x0, setup.t_end, &grid[1..], mix_seed(seed, n as u64), r)?;
            Ok(setup
                .test_functions
                .iter()
                .map(|tf| residual_path(&traj.states, &traj.times, *tf, &p).iter().map(|v| v.abs()).collect())
                .collect::<Vec<Vec<f64>>>())
        });
        failed.extend(f);
        for (k, tf) in setup.test_functions.iter().enumerate() {
            let rows: Vec<Vec<f64>> = ok.iter().map(|(_, v)| v[k].clone()).collect();
            report.observe(format!("abs_residual_{tf}_N{n}"), column_stats(&rows, grid.len()));
        }
    }
    let small = setup.sizes.iter().min().expect("non-empty");
    let large = setup.sizes.iter().max().expect("non-empty");
    for tf in &setup.test_functions {
        let key_large = format!("abs_residual_{tf}_N{large}");
        report.criterion(
            format!("residual_small_{tf}"),
            Criterion::SeriesAtMost {
                series: key_large.clone(),
                limit: setup.tol_pde,
                final_only: true,
            },
        );
        if !tf.is_trivial() && small != large {
            report.criterion(
                format!("residual_decreases_{tf}"),
                Criterion::SeparatedDecrease {
                    small: format!("abs_residual_{tf}_N{small}"),
                    large: key_large,
                    stderr_mult: setup.stderr_mult,
                },
            );
        }
    }
    failed.sort_by_key(|(r, _)| *r);
    record_failures(&mut report, &failed);
    report.finalize()
}
