//! Model definition, drift evaluation, and the diagnostic functionals of the
//! particle system.

use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use rand_core::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{harmonic_table, CompensatedSum};

/// Diffusion coefficient regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaRule {
    Zero,
    #[serde(rename = "one_over_N")]
    OneOverN,
    Constant(f64),
}

impl SigmaRule {
    pub fn value(&self, n: usize) -> f64 {
        match *self {
            SigmaRule::Zero => 0.0,
            SigmaRule::OneOverN => 1.0 / n as f64,
            SigmaRule::Constant(s) => s,
        }
    }
}

pub type Gradient = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Confining potential, given through its derivative U′.
#[derive(Clone)]
pub enum Confinement {
    /// U(x) = λx²/2.
    Quadratic { lambda: f64 },
    /// Opaque U′ with declared constants: |U′(x) − U′(y)| ≤ L|x − y| and |U′(x)| ≤ L|x| + A.
    Lipschitz {
        grad: Gradient,
        lipschitz: f64,
        offset: f64,
    },
}

impl fmt::Debug for Confinement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Confinement::Quadratic { lambda } => f.debug_struct("Quadratic").field("lambda", lambda).finish(),
            Confinement::Lipschitz { lipschitz, offset, .. } => f
                .debug_struct("Lipschitz")
                .field("lipschitz", lipschitz)
                .field("offset", offset)
                .finish_non_exhaustive(),
        }
    }
}

impl Confinement {
    #[inline]
    pub fn grad(&self, x: f64) -> f64 {
        match self {
            Confinement::Quadratic { lambda } => lambda * x,
            Confinement::Lipschitz { grad, .. } => grad(x),
        }
    }

    /// Lipschitz constant of U′ (λ for the quadratic case).
    pub fn lipschitz(&self) -> f64 {
        match self {
            Confinement::Quadratic { lambda } => *lambda,
            Confinement::Lipschitz { lipschitz, .. } => *lipschitz,
        }
    }

    pub fn lambda(&self) -> Option<f64> {
        match self {
            Confinement::Quadratic { lambda } => Some(*lambda),
            Confinement::Lipschitz { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Confinement::Quadratic { lambda } => {
                if !(lambda.is_finite() && *lambda > 0.0) {
                    return Err(Error::param("lambda", "lambda must be finite and > 0"));
                }
            }
            Confinement::Lipschitz { grad, lipschitz, offset } => {
                if !(lipschitz.is_finite() && *lipschitz >= 0.0 && offset.is_finite() && *offset >= 0.0) {
                    return Err(Error::param("confinement", "declared L_U and A must be finite and >= 0"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c0de);
                let mut draw = || {
                    let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                    20.0 * u - 10.0
                };
                for _ in 0..1000 {
                    let (x, y) = (draw(), draw());
                    let (gx, gy) = (grad(x), grad(y));
                    if !(gx.is_finite() && gy.is_finite()) {
                        return Err(Error::NonFinite { context: "confinement gradient" });
                    }
                    let slack = 1e-9 * (1.0 + gx.abs() + gy.abs());
                    if (gx - gy).abs() > lipschitz * (x - y).abs() + slack {
                        return Err(Error::param(
                            "confinement",
                            format!("declared Lipschitz constant {lipschitz} violated between {x} and {y}"),
                        ));
                    }
                    if gx.abs() > lipschitz * x.abs() + offset + slack {
                        return Err(Error::param(
                            "confinement",
                            format!("growth bound |U'(x)| <= L|x| + A violated at {x}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Every model symbol of the particle system.
#[derive(Debug, Clone)]
pub struct ModelParams {
    pub n: usize,
    pub alpha: f64,
    pub confinement: Confinement,
    pub sigma: SigmaRule,
}

impl ModelParams {
    pub fn new(n: usize, alpha: f64, confinement: Confinement, sigma: SigmaRule) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("N", "N must be >= 1"));
        }
        if !(alpha.is_finite() && alpha >= 1.0) {
            return Err(Error::param("alpha", "alpha must be ≥ 1"));
        }
        if let SigmaRule::Constant(s) = sigma {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::param("sigma", "sigma must be finite and >= 0"));
            }
        }
        confinement.validate()?;
        Ok(Self {
            n,
            alpha,
            confinement,
            sigma,
        })
    }

    pub fn quadratic(n: usize, alpha: f64, lambda: f64, sigma: SigmaRule) -> Result<Self> {
        Self::new(n, alpha, Confinement::Quadratic { lambda }, sigma)
    }

    /// The diffusion coefficient σ_N.
    pub fn sigma_n(&self) -> f64 {
        self.sigma.value(self.n)
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.alpha, self.confinement.clone(), self.sigma)
    }

    pub fn lambda(&self) -> Option<f64> {
        self.confinement.lambda()
    }

    /// Logarithmic interaction with σ_N above 1/N, where non-collision is not guaranteed.
    pub fn outside_noncollision_regime(&self) -> bool {
        self.alpha == 1.0 && self.sigma_n() > 1.0 / self.n as f64
    }
}

/// Strictly increasing particle positions at a time instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleConfig {
    positions: Vec<f64>,
    pub time: f64,
}

impl ParticleConfig {
    pub fn new(positions: Vec<f64>, time: f64) -> Result<Self> {
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::param("time", "time must be finite and >= 0"));
        }
        check_ordered(&positions)?;
        Ok(Self { positions, time })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn into_positions(self) -> Vec<f64> {
        self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// Checks finiteness and strict increase; equal neighbours are a collision.
pub fn check_ordered(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::param("positions", "at least one particle required"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { context: "positions" });
    }
    for (i, w) in x.windows(2).enumerate() {
        if w[0] == w[1] {
            return Err(Error::Collision {
                i,
                j: i + 1,
                position: w[0],
            });
        }
        if w[0] > w[1] {
            return Err(Error::NotOrdered { index: i + 1 });
        }
    }
    Ok(())
}

#[inline]
fn inv_pow(d: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        1.0 / d
    } else if alpha == 2.0 {
        1.0 / (d * d)
    } else {
        d.powf(-alpha)
    }
}

/// Riesz potential V(d) for d > 0.
#[inline]
pub fn riesz_potential(d: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        -d.ln()
    } else {
        d.powf(1.0 - alpha) / (alpha - 1.0)
    }
}

/// A_i = Σ_{j≠i} sign(x_i − x_j)/|x_i − x_j|^α, the unnormalized repulsion.
pub fn interaction_vector_a(x: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_ordered(x)?;
    let n = x.len();
    Ok((0..n)
        .map(|i| {
            let mut acc = CompensatedSum::new();
            for (j, xj) in x.iter().enumerate() {
                if j < i {
                    acc.add(inv_pow(x[i] - xj, alpha));
                } else if j > i {
                    acc.add(-inv_pow(xj - x[i], alpha));
                }
            }
            acc.value()
        })
        .collect())
}

/// Repulsive drift (1/N)·A_i, by compensated O(N²) summation.
pub fn riesz_force(x: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    let nf = x.len() as f64;
    let mut a = interaction_vector_a(x, params.alpha)?;
    for v in &mut a {
        *v /= nf;
    }
    Ok(a)
}

/// Total drift −U′(x_i) + riesz_force_i.
pub fn full_drift(x: &[f64], params: &ModelParams) -> Result<Vec<f64>> {
    let mut f = riesz_force(x, params)?;
    for (fi, xi) in f.iter_mut().zip(x) {
        *fi -= params.confinement.grad(*xi);
    }
    Ok(f)
}

/// H_α = (1/2N)Σ_{i≠j}V(x_i − x_j) + Σx_i²/2.
pub fn energy_h_alpha(x: &[f64], alpha: f64) -> Result<f64> {
    check_ordered(x)?;
    let n = x.len();
    let mut pairs = CompensatedSum::new();
    for i in 0..n {
        for j in (i + 1)..n {
            pairs.add(riesz_potential(x[j] - x[i], alpha));
        }
    }
    let quad: CompensatedSum = x.iter().map(|v| 0.5 * v * v).collect();
    Ok(pairs.value() / n as f64 + quad.value())
}

/// 𝓗(x) = Σx_i² − (1/2N)Σ_{i≠j}|x_i − x_j|; any finite configuration.
pub fn lyapunov_hcal(x: &[f64]) -> f64 {
    let n = x.len();
    if n == 0 {
        return 0.0;
    }
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut spread = CompensatedSum::new();
    let mut sq = CompensatedSum::new();
    for (k, v) in sorted.iter().enumerate() {
        spread.add(v * (2.0 * k as f64 - n as f64 + 1.0));
        sq.add(v * v);
    }
    sq.value() - spread.value() / n as f64
}

/// S(x) = (1/N²)Σ_{i>j}(i − j)/|x_i − x_j|^α.
pub fn weighted_interaction_stat(x: &[f64], alpha: f64) -> Result<f64> {
    check_ordered(x)?;
    let n = x.len();
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        for j in 0..i {
            acc.add((i - j) as f64 * inv_pow(x[i] - x[j], alpha));
        }
    }
    Ok(acc.value() / (n * n) as f64)
}

/// (2/N²)Σ_{i>j}|x_i − x_j|^{−e}; the off-diagonal mass (N−1)/N at e = 0.
pub fn pair_power_stat(x: &[f64], exponent: f64) -> Result<f64> {
    if !(exponent.is_finite() && exponent >= 0.0) {
        return Err(Error::param("exponent", "exponent must be finite and >= 0"));
    }
    check_ordered(x)?;
    let n = x.len();
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        for j in 0..i {
            let d = x[i] - x[j];
            acc.add(if exponent == 0.0 { 1.0 } else { d.powf(-exponent) });
        }
    }
    Ok(2.0 * acc.value() / (n * n) as f64)
}

/// Euclidean norm of A for the grid x_i = i/N, via A_i = N(H_{i−1} − H_{N−i}).
pub fn grid_force_norm(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::param("N", "grid force norm needs N >= 2"));
    }
    Ok(grid_force_norm_from_table(n, &harmonic_table(n)))
}

/// Same as [`grid_force_norm`] with a precomputed harmonic table of length ≥ n.
pub fn grid_force_norm_from_table(n: usize, harmonic: &[f64]) -> f64 {
    assert!(harmonic.len() >= n, "harmonic table too short");
    let mut sum = 0.0;
    for i in 1..=n {
        let a = harmonic[i - 1] - harmonic[n - i];
        sum += a * a;
    }
    n as f64 * sum.sqrt()
}

/// The interaction constant C(α, N).
pub fn c_alpha_n(alpha: f64, n: usize) -> Result<f64> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::param("alpha", "alpha must be ≥ 1"));
    }
    if n == 0 {
        return Err(Error::param("N", "N must be >= 1"));
    }
    let nf = n as f64;
    if alpha == 1.0 {
        Ok((nf - 1.0) / 2.0)
    } else if alpha < 2.0 {
        Ok(nf / (2.0 - alpha))
    } else if alpha == 2.0 {
        if n < 2 {
            return Err(Error::param("N", "alpha = 2 requires N >= 2 (2 N ln N degenerates at N = 1)"));
        }
        Ok(2.0 * nf * nf.ln())
    } else {
        Ok((1.0 + 1.0 / (alpha - 2.0)) * nf.powf(alpha - 1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesCheck {
    pub partial_sum: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Σ_{i=1}^N i^{1−α} against N^{2−α}/(2−α) (α < 2), 2 ln N (α = 2), 1 + 1/(α−2) (α > 2).
pub fn series_bound_check(alpha: f64, n: usize) -> Result<SeriesCheck> {
    if !(alpha.is_finite() && alpha >= 1.0) {
        return Err(Error::param("alpha", "alpha must be ≥ 1"));
    }
    if n == 0 {
        return Err(Error::param("N", "N must be >= 1"));
    }
    let partial_sum = series_partial_sum(alpha, n);
    let nf = n as f64;
    let bound = if alpha < 2.0 {
        nf.powf(2.0 - alpha) / (2.0 - alpha)
    } else if alpha == 2.0 {
        2.0 * nf.ln()
    } else {
        1.0 + 1.0 / (alpha - 2.0)
    };
    Ok(SeriesCheck {
        partial_sum,
        bound,
        holds: partial_sum <= bound,
    })
}

/// The α = 2 harmonic bound 1 + ln N that the integral comparison actually yields.
pub fn series_bound_check_harmonic(n: usize) -> Result<SeriesCheck> {
    if n == 0 {
        return Err(Error::param("N", "N must be >= 1"));
    }
    let partial_sum = series_partial_sum(2.0, n);
    let bound = 1.0 + (n as f64).ln();
    Ok(SeriesCheck {
        partial_sum,
        bound,
        holds: partial_sum <= bound,
    })
}

fn series_partial_sum(alpha: f64, n: usize) -> f64 {
    let e = 1.0 - alpha;
    (1..=n)
        .map(|i| {
            let f = i as f64;
            if alpha == 1.0 {
                1.0
            } else if alpha == 2.0 {
                1.0 / f
            } else {
                f.powf(e)
            }
        })
        .collect::<CompensatedSum>()
        .value()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FourthMomentDrift {
    /// 𝓛φ for φ = (1/N)Σx_i⁴.
    pub generator: f64,
    /// 9(2σ_N + 1)²/(2λ) − 2λφ.
    pub bound: f64,
    pub phi: f64,
}

/// Generator of the fourth empirical moment under quadratic confinement:
/// 12σ_N·m2 − (4λ/N)Σx_i⁴ + (4/N²)Σ_{i≠j}x_i³·sign(x_i − x_j)/|x_i − x_j|^α.
pub fn generator_fourth_moment(x: &[f64], params: &ModelParams) -> Result<FourthMomentDrift> {
    let lambda = params
        .lambda()
        .ok_or_else(|| Error::param("confinement", "fourth-moment generator needs quadratic confinement"))?;
    check_ordered(x)?;
    let n = x.len();
    let nf = n as f64;
    let sigma = params.sigma_n();
    let m2 = x.iter().map(|v| v * v).collect::<CompensatedSum>().value() / nf;
    let phi = x.iter().map(|v| v.powi(4)).collect::<CompensatedSum>().value() / nf;
    let mut inter = CompensatedSum::new();
    for i in 0..n {
        let c = x[i].powi(3);
        for j in 0..n {
            if j < i {
                inter.add(c * inv_pow(x[i] - x[j], params.alpha));
            } else if j > i {
                inter.add(-c * inv_pow(x[j] - x[i], params.alpha));
            }
        }
    }
    let generator = 12.0 * sigma * m2 - 4.0 * lambda * phi + 4.0 * inter.value() / (nf * nf);
    let bound = 9.0 * (2.0 * sigma + 1.0).powi(2) / (2.0 * lambda) - 2.0 * lambda * phi;
    Ok(FourthMomentDrift { generator, bound, phi })
}

/// The logarithmic-case interaction part of 𝓛φ through the symmetrized pair
/// sum (4/N²)Σ_{j<i}(x_i² + x_i x_j + x_j²), which has no singular denominator.
pub fn fourth_moment_interaction_symmetrized(x: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = CompensatedSum::new();
    for i in 0..n {
        for j in 0..i {
            acc.add(x[i] * x[i] + x[i] * x[j] + x[j] * x[j]);
        }
    }
    4.0 * acc.value() / (n * n) as f64
}

/// |A|𝓗/N^{5/2} + (1 + σ)|A|/N^{3/2} + 𝓗/N + 1 + σ.
pub fn continuity_bracket(norm_a: f64, hcal: f64, n: usize, sigma: f64) -> f64 {
    let nf = n as f64;
    norm_a * hcal / nf.powf(2.5) + (1.0 + sigma) * norm_a / nf.powf(1.5) + hcal / nf + 1.0 + sigma
}
