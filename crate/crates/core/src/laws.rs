//! Reference laws: the semicircle law and the finite-N force-balance equilibria
//! of the quadratically confined logarithmic gas.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Semicircle law of radius `R`: density (2/(πR²))·sqrt(R² − x²) on [−R, R].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemicircleLaw {
    radius: f64,
}

impl SemicircleLaw {
    pub fn new(radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let r = self.radius;
        if x.abs() >= r {
            0.0
        } else {
            2.0 / (PI * r * r) * (r * r - x * x).sqrt()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        cdf_unchecked(x, self.radius)
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        semicircle_quantile(u, self.radius)
    }

    pub fn second_moment(&self) -> f64 {
        self.radius * self.radius / 4.0
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::param("R", format!("radius must be finite and > 0, got {radius}")));
    }
    Ok(())
}

fn cdf_unchecked(x: f64, r: f64) -> f64 {
    if x <= -r {
        0.0
    } else if x >= r {
        1.0
    } else {
        let v = 0.5 + x * (r * r - x * x).sqrt() / (PI * r * r) + (x / r).asin() / PI;
        v.clamp(0.0, 1.0)
    }
}

/// Cumulative distribution function of the semicircle law of radius `r`.
pub fn semicircle_cdf(x: f64, r: f64) -> Result<f64> {
    check_radius(r)?;
    if x.is_nan() {
        return Err(Error::NonFinite { context: "semicircle_cdf" });
    }
    Ok(cdf_unchecked(x, r))
}

/// Quantile of the semicircle law.
///
/// Works in the angle variable x = R·sin θ, where the CDF becomes
/// 1/2 + (2θ + sin 2θ)/(2π); the resulting scalar equation is solved by Newton
/// steps safeguarded by a bisection bracket.
pub fn semicircle_quantile(u: f64, r: f64) -> Result<f64> {
    check_radius(r)?;
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::param("u", format!("quantile level must lie in (0,1), got {u}")));
    }
    let target = PI * (2.0 * u - 1.0);
    let g = |theta: f64| 2.0 * theta + (2.0 * theta).sin() - target;
    let (mut lo, mut hi) = (-FRAC_PI_2, FRAC_PI_2);
    let mut theta = target / 4.0;
    for _ in 0..200 {
        let value = g(theta);
        if value == 0.0 {
            break;
        }
        if value < 0.0 {
            lo = theta;
        } else {
            hi = theta;
        }
        let slope = 4.0 * theta.cos().powi(2);
        let newton = theta - value / slope;
        let next = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - theta).abs() <= 1e-16 || hi - lo <= 1e-16 {
            theta = next;
            break;
        }
        theta = next;
    }
    Ok(r * theta.sin())
}

/// Support radius of the large-N stationary law for confinement strength λ.
pub fn semicircle_radius(lambda: f64) -> f64 {
    (2.0 / lambda).sqrt()
}

/// Strictly increasing force-balance configuration together with its residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumConfig {
    pub points: Vec<f64>,
    /// max_i |λx_i − (1/N)Σ_{j≠i} 1/(x_i − x_j)|
    pub residual_norm: f64,
    pub tolerance: f64,
    pub iterations: usize,
}

impl EquilibriumConfig {
    /// One-column CSV with header `position`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["position"])?;
        for p in &self.points {
            w.write_record([format!("{p:?}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

const EQUILIBRIUM_TOLERANCE: f64 = 1e-10;
const EQUILIBRIUM_MAX_ITER: usize = 200;

/// Max-norm residual of λx_i = (1/N)Σ_{j≠i} 1/(x_i − x_j).
pub fn force_balance_residual(points: &[f64], lambda: f64) -> f64 {
    let n = points.len();
    let nf = n as f64;
    (0..n)
        .map(|i| {
            let mut acc = CompensatedSum::new();
            for j in 0..n {
                if j != i {
                    acc.add(1.0 / (points[i] - points[j]));
                }
            }
            (lambda * points[i] - acc.value() / nf).abs()
        })
        .fold(0.0, f64::max)
}

fn is_strictly_increasing(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] < w[1])
}

/// Stationary configuration of the noiseless logarithmic gas with confinement λ.
///
/// Damped Newton on the force balance starting from a uniform grid on the
/// limiting support; steps that would break the ordering are halved.
pub fn equilibrium_points(n: usize, lambda: f64) -> Result<EquilibriumConfig> {
    if n == 0 {
        return Err(Error::param("N", "N must be >= 1"));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::param("lambda", "lambda must be finite and > 0"));
    }
    if n == 1 {
        return Ok(EquilibriumConfig {
            points: vec![0.0],
            residual_norm: 0.0,
            tolerance: EQUILIBRIUM_TOLERANCE,
            iterations: 0,
        });
    }
    let nf = n as f64;
    let radius = semicircle_radius(lambda);
    let mut x: Vec<f64> = (0..n)
        .map(|i| -radius + 2.0 * radius * (i as f64 + 0.5) / nf)
        .collect();
    let mut residual = force_balance_residual(&x, lambda);
    let mut best = residual;
    let mut stalled = 0;
    let mut iterations = 0;
    while iterations < EQUILIBRIUM_MAX_ITER {
        if residual <= 1e-14 {
            break;
        }
        iterations += 1;
        let mut jac = DMatrix::<f64>::zeros(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for i in 0..n {
            let mut force = CompensatedSum::new();
            let mut diag = CompensatedSum::new();
            for j in 0..n {
                if j == i {
                    continue;
                }
                let inv = 1.0 / (x[i] - x[j]);
                force.add(inv);
                diag.add(inv * inv);
                jac[(i, j)] = -inv * inv / nf;
            }
            jac[(i, i)] = lambda + diag.value() / nf;
            rhs[i] = -(lambda * x[i] - force.value() / nf);
        }
        let delta = match jac.cholesky() {
            Some(chol) => chol.solve(&rhs),
            None => {
                return Err(Error::NewtonFailed {
                    iterations,
                    residual,
                })
            }
        };
        let mut scale = 1.0;
        let mut trial: Vec<f64>;
        loop {
            trial = x.iter().zip(delta.iter()).map(|(a, d)| a + scale * d).collect();
            if is_strictly_increasing(&trial) {
                break;
            }
            scale *= 0.5;
            if scale < 1e-12 {
                return Err(Error::NewtonFailed {
                    iterations,
                    residual,
                });
            }
        }
        // the solution is antisymmetric; project out rounding asymmetry
        let sym: Vec<f64> = (0..n).map(|i| 0.5 * (trial[i] - trial[n - 1 - i])).collect();
        x = sym;
        residual = force_balance_residual(&x, lambda);
        if residual < best * 0.5 {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
            if residual <= EQUILIBRIUM_TOLERANCE && stalled >= 3 {
                break;
            }
        }
    }
    if residual > EQUILIBRIUM_TOLERANCE {
        return Err(Error::NewtonFailed {
            iterations,
            residual,
        });
    }
    Ok(EquilibriumConfig {
        points: x,
        residual_norm: residual,
        tolerance: EQUILIBRIUM_TOLERANCE,
        iterations,
    })
}

/// Physicists' Hermite polynomial H_n(x) by its three-term recurrence.
pub fn hermite_physicists(n: usize, x: f64) -> f64 {
    let mut h0 = 1.0;
    if n == 0 {
        return h0;
    }
    let mut h1 = 2.0 * x;
    for k in 1..n {
        let h2 = 2.0 * x * h1 - 2.0 * k as f64 * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}
