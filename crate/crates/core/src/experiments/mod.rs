//! Monte Carlo experiments that check the quantitative statements about the
//! particle system and emit [`ExperimentReport`]s.

mod chaos;
mod monitor;
mod pde;
mod report;
mod runs;

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brownian::mix_seed;
use crate::dynamics::{check_ordered, Confinement, ModelParams};
use crate::error::{Error, Result};
use crate::laws::equilibrium_points;
use crate::measures::QuantileLaw;
use crate::numeric::mean_and_stderr;

pub use chaos::{run_cauchy_bound, run_chaos_rate, CauchySetup, ChaosSetup, Coupling};
pub use monitor::{run_continuity, run_moment_monitor, ContinuitySetup, MomentSetup};
pub use pde::{run_pde_residual, PdeSetup, TestFunction};
pub use report::{Criterion, ExperimentReport, Series};
pub use runs::{run_contraction, run_simulate, run_stationary, ContractionSetup, SimulateSetup, StationarySetup, NONCOLLISION_WARNING};

/// How a replica's starting configuration is produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Cell midpoints a + (b − a)(i − ½)/N, i = 1..N.
    Grid { a: f64, b: f64 },
    /// N iid draws from `law`, sorted; ties are pushed apart by one ulp.
    IidSorted { law: QuantileLaw },
    /// Deterministic equilibrium of the noiseless quadratic model.
    Equilibrium,
    Explicit { points: Vec<f64> },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Grid { a: -0.5, b: 0.5 }
    }
}

impl InitialCondition {
    pub fn is_deterministic(&self) -> bool {
        !matches!(self, InitialCondition::IidSorted { .. })
    }

    /// Strictly ordered configuration for `replica`; `stream` separates
    /// independent families drawn under one seed.
    pub fn realize(&self, params: &ModelParams, seed: u64, stream: u64, replica: u64) -> Result<Vec<f64>> {
        let n = params.n;
        let x = match self {
            InitialCondition::Grid { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(Error::param("initial", "grid needs finite a < b"));
                }
                (1..=n).map(|i| a + (b - a) * (i as f64 - 0.5) / n as f64).collect()
            }
            InitialCondition::IidSorted { law } => {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(mix_seed(seed, stream), replica));
                let mut x = Vec::with_capacity(n);
                while x.len() < n {
                    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                    if u > 0.0 {
                        x.push(law.quantile(u)?);
                    }
                }
                x.sort_by(f64::total_cmp);
                for i in 1..n {
                    if x[i] <= x[i - 1] {
                        x[i] = x[i - 1].next_up();
                    }
                }
                x
            }
            InitialCondition::Equilibrium => {
                let lambda = params
                    .lambda()
                    .ok_or_else(|| Error::param("initial", "equilibrium start needs quadratic confinement"))?;
                equilibrium_points(n, lambda)?.points
            }
            InitialCondition::Explicit { points } => {
                if points.len() != n {
                    return Err(Error::SizeMismatch {
                        left: points.len(),
                        right: n,
                    });
                }
                points.clone()
            }
        };
        check_ordered(&x)?;
        Ok(x)
    }
}

/// Runs `f` for replicas 0..count on the current rayon pool, keeping replica
/// order; failures are returned separately.
pub(crate) fn run_replicas<T, F>(count: u64, f: F) -> (Vec<(u64, T)>, Vec<(u64, Error)>)
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let results: Vec<(u64, Result<T>)> = (0..count).into_par_iter().map(|r| (r, f(r))).collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (r, res) in results {
        match res {
            Ok(v) => ok.push((r, v)),
            Err(e) => failed.push((r, e)),
        }
    }
    (ok, failed)
}

/// Replica mean and standard error of each column of `rows`.
pub(crate) fn column_stats(rows: &[Vec<f64>], len: usize) -> Series {
    let mut value = Vec::with_capacity(len);
    let mut stderr = Vec::with_capacity(len);
    for k in 0..len {
        let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        let (m, s) = mean_and_stderr(&col);
        value.push(m);
        stderr.push(s);
    }
    Series { value, stderr }
}

pub(crate) fn model_echo(params: &ModelParams) -> serde_json::Value {
    let confinement = match &params.confinement {
        Confinement::Quadratic { lambda } => serde_json::json!({ "kind": "quadratic", "lambda": lambda }),
        Confinement::Lipschitz { lipschitz, offset, .. } => {
            serde_json::json!({ "kind": "lipschitz", "lipschitz": lipschitz, "offset": offset })
        }
    };
    serde_json::json!({
        "N": params.n,
        "alpha": params.alpha,
        "confinement": confinement,
        "sigma_rule": params.sigma,
    })
}

pub(crate) fn require_lambda(params: &ModelParams, what: &str) -> Result<f64> {
    params
        .lambda()
        .ok_or_else(|| Error::param("confinement", format!("{what} needs quadratic confinement")))
}

/// Records failed replicas as a counter, a criterion and warnings.
pub(crate) fn record_failures(report: &mut ExperimentReport, failed: &[(u64, Error)]) {
    report.count("failed_replicas", failed.len() as u64);
    report.criterion(
        "no_failed_replicas",
        Criterion::CounterAtMost {
            key: "failed_replicas".into(),
            limit: 0,
        },
    );
    for (r, e) in failed {
        report.warnings.push(format!("replica {r}: {e}"));
    }
}

/// Times 0 < t_1 < … evenly spaced with step `dt` up to `t_end`, plus t_end.
pub fn uniform_times(t_end: f64, dt: f64) -> Vec<f64> {
    let mut times = Vec::new();
    let mut k = 1u64;
    loop {
        let t = k as f64 * dt;
        if t >= t_end * (1.0 - 1e-12) {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(t_end);
    times
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::SigmaRule;

    fn quad(n: usize) -> ModelParams {
        ModelParams::quadratic(n, 1.0, 1.0, SigmaRule::OneOverN).unwrap()
    }

    #[test]
    fn grid_start_is_recentred_unit_grid() {
        let x = InitialCondition::default().realize(&quad(4), 0, 0, 0).unwrap();
        assert_eq!(x, vec![-0.375, -0.125, 0.125, 0.375]);
    }

    #[test]
    fn iid_start_is_ordered_and_replica_specific() {
        let ic = InitialCondition::IidSorted {
            law: QuantileLaw::Point { c: 0.0 },
        };
        let x = ic.realize(&quad(5), 1, 0, 0).unwrap();
        assert!(x.windows(2).all(|w| w[0] < w[1]));
        let ic = InitialCondition::IidSorted {
            law: QuantileLaw::Uniform { a: 0.0, b: 1.0 },
        };
        assert_ne!(ic.realize(&quad(5), 1, 0, 0).unwrap(), ic.realize(&quad(5), 1, 0, 1).unwrap());
        assert_eq!(ic.realize(&quad(5), 1, 0, 2).unwrap(), ic.realize(&quad(5), 1, 0, 2).unwrap());
    }

    #[test]
    fn explicit_start_is_validated() {
        let ic = InitialCondition::Explicit { points: vec![1.0, 0.0] };
        assert!(ic.realize(&quad(2), 0, 0, 0).is_err());
        assert!(ic.realize(&quad(3), 0, 0, 0).is_err());
    }

    #[test]
    fn uniform_times_end_exactly() {
        assert_eq!(uniform_times(1.0, 0.25), vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(uniform_times(0.3, 0.25), vec![0.25, 0.3]);
    }
}
