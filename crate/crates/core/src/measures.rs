//! Empirical measures and exact one-dimensional Wasserstein distances.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::semicircle_quantile;
use crate::numeric::{gauss_legendre, CompensatedSum};

/// Equal-weight atoms sorted non-decreasingly. Ties are allowed.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct EmpiricalMeasure {
    atoms: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn new(samples: &[f64]) -> Result<Self> {
        Self::from_vec(samples.to_vec())
    }

    pub fn from_vec(mut atoms: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyMeasure);
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFinite {
                context: "empirical measure",
            });
        }
        atoms.sort_by(f64::total_cmp);
        Ok(Self { atoms })
    }

    /// Wraps atoms that are already sorted and finite (e.g. a particle configuration).
    pub(crate) fn from_sorted_unchecked(atoms: Vec<f64>) -> Self {
        debug_assert!(atoms.windows(2).all(|w| w[0] <= w[1]));
        Self { atoms }
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_vec(self.atoms.iter().map(|a| a * c).collect())
    }

    pub fn moment(&self, k: i32) -> f64 {
        let sum: CompensatedSum = self.atoms.iter().map(|a| a.powi(k)).collect();
        sum.value() / self.len() as f64
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["position"])?;
        for a in &self.atoms {
            w.write_record([format!("{a:?}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut atoms = Vec::new();
        for record in r.records() {
            let record = record?;
            let field = record.get(0).unwrap_or("");
            let value: f64 = field.trim().parse().map_err(|_| Error::NonFinite {
                context: "csv atom",
            })?;
            atoms.push(value);
        }
        Self::from_vec(atoms)
    }
}

impl<'de> Deserialize<'de> for EmpiricalMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let atoms = Vec::<f64>::deserialize(deserializer)?;
        EmpiricalMeasure::from_vec(atoms).map_err(serde::de::Error::custom)
    }
}

/// Sorts and wraps samples.
pub fn build_empirical(samples: &[f64]) -> Result<EmpiricalMeasure> {
    EmpiricalMeasure::new(samples)
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::param("p", format!("p must be finite and >= 1, got {p}")));
    }
    Ok(())
}

#[inline]
fn pow_abs(d: f64, p: f64) -> f64 {
    let d = d.abs();
    if p == 2.0 {
        d * d
    } else if p == 1.0 {
        d
    } else {
        d.powf(p)
    }
}

/// W_p between equal-size measures via the monotone pairing of sorted atoms.
pub fn wasserstein_p_equal(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, p: f64) -> Result<f64> {
    check_p(p)?;
    if mu.len() != nu.len() {
        return Err(Error::SizeMismatch {
            left: mu.len(),
            right: nu.len(),
        });
    }
    let sum: CompensatedSum = mu
        .atoms
        .iter()
        .zip(&nu.atoms)
        .map(|(x, y)| pow_abs(x - y, p))
        .collect();
    Ok((sum.value() / mu.len() as f64).powf(1.0 / p))
}

/// W_p^p between measures of arbitrary sizes.
///
/// Sweeps the merged breakpoints {k/N} ∪ {k/M} of the two piecewise-constant
/// quantile functions. Breakpoints are compared as integers (k·M vs l·N) so the
/// cell masses are exact rationals with denominator N·M.
pub fn wasserstein_pp_cross(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, p: f64) -> Result<f64> {
    check_p(p)?;
    let n = mu.len() as u128;
    let m = nu.len() as u128;
    let total = (n * m) as f64;
    let (mut i, mut j) = (0usize, 0usize);
    let mut pos: u128 = 0;
    let mut acc = CompensatedSum::new();
    while (i as u128) < n && (j as u128) < m {
        let next_i = (i as u128 + 1) * m;
        let next_j = (j as u128 + 1) * n;
        let next = next_i.min(next_j);
        let width = (next - pos) as f64;
        acc.add(width * pow_abs(mu.atoms[i] - nu.atoms[j], p));
        pos = next;
        if next_i == next {
            i += 1;
        }
        if next_j == next {
            j += 1;
        }
    }
    Ok(acc.value() / total)
}

/// W_p between measures of arbitrary sizes; equals the equal-size distance of
/// the M-fold and N-fold replications.
pub fn wasserstein_p_cross(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, p: f64) -> Result<f64> {
    Ok(wasserstein_pp_cross(mu, nu, p)?.powf(1.0 / p))
}

/// Target law given by its quantile function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum QuantileLaw {
    Semicircle { radius: f64 },
    Uniform { a: f64, b: f64 },
    Point { c: f64 },
    /// A large reference sample standing in for an unknown limit law.
    EmpiricalProxy { measure: EmpiricalMeasure },
}

impl QuantileLaw {
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::param("u", format!("quantile level must lie in (0,1), got {u}")));
        }
        match self {
            QuantileLaw::Semicircle { radius } => semicircle_quantile(u, *radius),
            QuantileLaw::Uniform { a, b } => Ok(a + (b - a) * u),
            QuantileLaw::Point { c } => Ok(*c),
            QuantileLaw::EmpiricalProxy { measure } => {
                let n = measure.len();
                let k = ((u * n as f64).ceil() as usize).clamp(1, n);
                Ok(measure.atoms[k - 1])
            }
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            QuantileLaw::Semicircle { radius } => radius * radius / 4.0,
            QuantileLaw::Uniform { a, b } => (a * a + a * b + b * b) / 3.0,
            QuantileLaw::Point { c } => c * c,
            QuantileLaw::EmpiricalProxy { measure } => measure.moment(2),
        }
    }
}

pub const DEFAULT_NODES_PER_CELL: usize = 8;

/// W_2 between an empirical measure and a law, integrating |Q_mu − Q_law|² cell
/// by cell with Gauss–Legendre quadrature.
pub fn wasserstein2_to_law(mu: &EmpiricalMeasure, law: &QuantileLaw, nodes_per_cell: usize) -> Result<f64> {
    if nodes_per_cell < 2 {
        return Err(Error::param("nodes_per_cell", "at least 2 quadrature nodes per cell"));
    }
    if let QuantileLaw::EmpiricalProxy { measure } = law {
        return wasserstein_p_cross(mu, measure, 2.0);
    }
    let (nodes, weights) = gauss_legendre(nodes_per_cell);
    let n = mu.len();
    let cell = 1.0 / n as f64;
    let mut acc = CompensatedSum::new();
    for (k, atom) in mu.atoms.iter().enumerate() {
        let lo = k as f64 * cell;
        for (xi, wi) in nodes.iter().zip(&weights) {
            let u = lo + 0.5 * cell * (xi + 1.0);
            let d = atom - law.quantile(u)?;
            acc.add(0.5 * cell * wi * d * d);
        }
    }
    Ok(acc.value().max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(v: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::new(v).unwrap()
    }

    #[test]
    fn build_sorts_and_validates() {
        assert_eq!(m(&[0.3, -1.0, 2.0]).atoms(), &[-1.0, 0.3, 2.0]);
        assert_eq!(m(&[0.0]).atoms(), &[0.0]);
        assert_eq!(m(&[1.0, 1.0]).atoms(), &[1.0, 1.0]);
        assert!(matches!(build_empirical(&[]), Err(Error::EmptyMeasure)));
        assert!(build_empirical(&[1.0, f64::NAN]).is_err());
        assert!(build_empirical(&[f64::INFINITY]).is_err());
    }

    #[test]
    fn equal_size_examples() {
        assert_eq!(wasserstein_p_equal(&m(&[0.0, 2.0]), &m(&[1.0, 3.0]), 2.0).unwrap(), 1.0);
        assert_eq!(wasserstein_p_equal(&m(&[0.0, 1.0, 5.0]), &m(&[0.0, 1.0, 5.0]), 2.0).unwrap(), 0.0);
        let w = wasserstein_p_equal(&m(&[0.0, 1.0, 5.0]), &m(&[0.0, 2.0, 3.0]), 2.0).unwrap();
        assert!((w - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let err = wasserstein_p_equal(&m(&[0.0]), &m(&[0.0, 1.0]), 2.0).unwrap_err();
        assert!(err.to_string().contains("wasserstein_p_cross"));
        assert!(wasserstein_p_equal(&m(&[0.0]), &m(&[1.0]), 0.5).is_err());
    }

    #[test]
    fn cross_size_examples() {
        let w = wasserstein_p_cross(&m(&[0.0]), &m(&[0.0, 1.0]), 2.0).unwrap();
        assert!((w - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(wasserstein_p_cross(&m(&[0.0, 1.0]), &m(&[0.0, 1.0]), 2.0).unwrap(), 0.0);
        let w = wasserstein_p_cross(&m(&[0.0, 3.0]), &m(&[0.0, 2.0, 4.0]), 2.0).unwrap();
        assert!((w - (7.0f64 / 6.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn law_examples() {
        let unif = QuantileLaw::Uniform { a: 0.0, b: 1.0 };
        let w = wasserstein2_to_law(&m(&[0.5]), &unif, 8).unwrap();
        assert!((w - (1.0f64 / 12.0).sqrt()).abs() < 1e-14);
        let w = wasserstein2_to_law(&m(&[0.25, 0.75]), &unif, 8).unwrap();
        assert!((w - (1.0f64 / 48.0).sqrt()).abs() < 1e-14);
        assert_eq!(wasserstein2_to_law(&m(&[0.0]), &QuantileLaw::Point { c: 0.0 }, 8).unwrap(), 0.0);
        assert!(wasserstein2_to_law(&m(&[0.0]), &unif, 1).is_err());
    }

    #[test]
    fn law_second_moments_match_quadrature() {
        let (nodes, weights) = gauss_legendre(32);
        for law in [
            QuantileLaw::Semicircle { radius: 2.0 },
            QuantileLaw::Uniform { a: -1.0, b: 3.0 },
            QuantileLaw::Point { c: 1.5 },
        ] {
            let cells = 200;
            let mut total = 0.0;
            for k in 0..cells {
                let lo = k as f64 / cells as f64;
                for (x, w) in nodes.iter().zip(&weights) {
                    let u = lo + 0.5 / cells as f64 * (x + 1.0);
                    total += 0.5 / cells as f64 * w * law.quantile(u).unwrap().powi(2);
                }
            }
            assert!((total - law.second_moment()).abs() < 1e-6, "{law:?}: {total}");
        }
    }

    #[test]
    fn csv_and_json_round_trip() {
        let mu = m(&[0.1, -2.5, 3.25]);
        let mut buf = Vec::new();
        mu.write_csv(&mut buf).unwrap();
        assert_eq!(EmpiricalMeasure::read_csv(buf.as_slice()).unwrap(), mu);
        let json = serde_json::to_string(&mu).unwrap();
        assert_eq!(json, "[-2.5,0.1,3.25]");
        assert_eq!(serde_json::from_str::<EmpiricalMeasure>(&json).unwrap(), mu);
        assert!(serde_json::from_str::<EmpiricalMeasure>("[]").is_err());
    }
}
