//! Structured experiment reports with pass flags that can be recomputed from
//! the emitted numbers alone.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Replica mean and standard error at every point of the time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub value: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl Series {
    pub fn exact(value: Vec<f64>) -> Self {
        let stderr = vec![0.0; value.len()];
        Self { value, stderr }
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

/// A pass condition stated over named entries of the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// value ≤ bound + rel_tol·|bound| + stderr_mult·stderr at every time.
    SeriesBelowBound {
        series: String,
        bound: String,
        rel_tol: f64,
        stderr_mult: f64,
    },
    /// value ≤ limit at every time, or only at the last time.
    SeriesAtMost { series: String, limit: f64, final_only: bool },
    FittedAtMost { key: String, limit: f64 },
    CounterAtMost { key: String, limit: u64 },
    /// Final |large| < final |small| by at least stderr_mult combined standard errors.
    SeparatedDecrease { small: String, large: String, stderr_mult: f64 },
    /// max/min of the fitted values is below max_ratio (all values positive).
    RatioSpread { keys: Vec<String>, max_ratio: f64 },
    /// Max over the second half of the grid ≤ (1 + rel_tol)·max over the first
    /// half + stderr_mult·largest stderr.
    NonGrowth { series: String, rel_tol: f64, stderr_mult: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub params_echo: serde_json::Value,
    pub seed: u64,
    pub replica_count: u64,
    pub time_grid: Vec<f64>,
    pub observed: BTreeMap<String, Series>,
    pub theoretical_bound: BTreeMap<String, Vec<f64>>,
    pub bound_formulas: BTreeMap<String, String>,
    pub fitted: BTreeMap<String, f64>,
    pub counters: BTreeMap<String, u64>,
    pub criteria: BTreeMap<String, Criterion>,
    pub pass: BTreeMap<String, bool>,
    pub tolerances: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

fn missing(what: &str, key: &str) -> Error {
    Error::config(key.to_string(), format!("criterion refers to unknown {what}"))
}

impl ExperimentReport {
    pub fn new(name: &str, params_echo: serde_json::Value, seed: u64, replica_count: u64, time_grid: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            params_echo,
            seed,
            replica_count,
            time_grid,
            observed: BTreeMap::new(),
            theoretical_bound: BTreeMap::new(),
            bound_formulas: BTreeMap::new(),
            fitted: BTreeMap::new(),
            counters: BTreeMap::new(),
            criteria: BTreeMap::new(),
            pass: BTreeMap::new(),
            tolerances: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    pub fn observe(&mut self, key: impl Into<String>, series: Series) {
        self.observed.insert(key.into(), series);
    }

    pub fn bound(&mut self, key: impl Into<String>, values: Vec<f64>, formula: impl Into<String>) {
        let key = key.into();
        self.bound_formulas.insert(key.clone(), formula.into());
        self.theoretical_bound.insert(key, values);
    }

    pub fn fit(&mut self, key: impl Into<String>, value: f64) {
        self.fitted.insert(key.into(), value);
    }

    pub fn count(&mut self, key: impl Into<String>, value: u64) {
        self.counters.insert(key.into(), value);
    }

    pub fn criterion(&mut self, key: impl Into<String>, c: Criterion) {
        self.criteria.insert(key.into(), c);
    }

    pub fn tolerance(&mut self, key: impl Into<String>, value: f64) {
        self.tolerances.insert(key.into(), value);
    }

    fn series(&self, key: &str) -> Result<&Series> {
        self.observed.get(key).ok_or_else(|| missing("series", key))
    }

    fn fitted_value(&self, key: &str) -> Result<f64> {
        self.fitted.get(key).copied().ok_or_else(|| missing("fitted value", key))
    }

    /// Evaluates one criterion against the stored numbers.
    pub fn evaluate(&self, c: &Criterion) -> Result<bool> {
        Ok(match c {
            Criterion::SeriesBelowBound {
                series,
                bound,
                rel_tol,
                stderr_mult,
            } => {
                let s = self.series(series)?;
                let b = self.theoretical_bound.get(bound).ok_or_else(|| missing("bound", bound))?;
                s.len() == b.len()
                    && s.value
                        .iter()
                        .zip(&s.stderr)
                        .zip(b)
                        .all(|((v, se), b)| *v <= b + rel_tol * b.abs() + stderr_mult * se)
            }
            Criterion::SeriesAtMost { series, limit, final_only } => {
                let s = self.series(series)?;
                if *final_only {
                    s.value.last().is_some_and(|v| v <= limit)
                } else {
                    s.value.iter().all(|v| v <= limit)
                }
            }
            Criterion::FittedAtMost { key, limit } => self.fitted_value(key)? <= *limit,
            Criterion::CounterAtMost { key, limit } => {
                *self.counters.get(key).ok_or_else(|| missing("counter", key))? <= *limit
            }
            Criterion::SeparatedDecrease {
                small,
                large,
                stderr_mult,
            } => {
                let (s, l) = (self.series(small)?, self.series(large)?);
                match (s.value.last(), s.stderr.last(), l.value.last(), l.stderr.last()) {
                    (Some(vs), Some(es), Some(vl), Some(el)) => {
                        vs.abs() - vl.abs() > stderr_mult * (es * es + el * el).sqrt()
                    }
                    _ => false,
                }
            }
            Criterion::RatioSpread { keys, max_ratio } => {
                let values = keys.iter().map(|k| self.fitted_value(k)).collect::<Result<Vec<_>>>()?;
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                lo > 0.0 && hi / lo < *max_ratio
            }
            Criterion::NonGrowth {
                series,
                rel_tol,
                stderr_mult,
            } => {
                let s = self.series(series)?;
                let half = s.len().div_ceil(2);
                if half == 0 {
                    return Ok(false);
                }
                let early = s.value[..half].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let late = s.value[half..].iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let se = s.stderr.iter().copied().fold(0.0, f64::max);
                late <= (1.0 + rel_tol) * early + stderr_mult * se
            }
        })
    }

    /// Pass flags recomputed from the criteria.
    pub fn recompute_pass(&self) -> Result<BTreeMap<String, bool>> {
        self.criteria
            .iter()
            .map(|(k, c)| Ok((k.clone(), self.evaluate(c)?)))
            .collect()
    }

    /// Checks internal consistency, flags non-finite numbers and fills `pass`.
    pub fn finalize(mut self) -> Result<Self> {
        let n = self.time_grid.len();
        for (k, s) in &self.observed {
            if s.value.len() != n || s.stderr.len() != n {
                return Err(Error::config(k.clone(), format!("series length differs from the time grid ({n})")));
            }
        }
        for (k, b) in &self.theoretical_bound {
            if b.len() != n {
                return Err(Error::config(k.clone(), format!("bound length differs from the time grid ({n})")));
            }
        }
        let mut warnings = Vec::new();
        for (k, s) in &self.observed {
            if s.value.iter().chain(&s.stderr).any(|v| !v.is_finite()) {
                warnings.push(format!("series {k} contains non-finite values"));
            }
        }
        for (k, v) in &self.fitted {
            if !v.is_finite() {
                warnings.push(format!("fitted value {k} is not finite"));
            }
        }
        self.warnings.extend(warnings);
        self.pass = self.recompute_pass()?;
        Ok(self)
    }

    pub fn all_pass(&self) -> bool {
        self.pass.values().all(|p| *p)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    /// Writes one CSV per observed series with columns t, value, stderr, bound.
    /// The bound column holds the series' entry of the first criterion pairing
    /// it with a bound, and is empty otherwise.
    pub fn write_series_csvs(&self, dir: &Path) -> Result<Vec<String>> {
        let mut names = Vec::new();
        for (key, s) in &self.observed {
            let bound = self.criteria.values().find_map(|c| match c {
                Criterion::SeriesBelowBound { series, bound, .. } if series == key => self.theoretical_bound.get(bound),
                _ => None,
            });
            let name = format!("{key}.csv");
            let file = std::fs::File::create(dir.join(&name))?;
            let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
            w.write_record(["t", "value", "stderr", "bound"])?;
            for (k, t) in self.time_grid.iter().enumerate() {
                let b = bound.map(|b| format!("{:?}", b[k])).unwrap_or_default();
                w.write_record([format!("{t:?}"), format!("{:?}", s.value[k]), format!("{:?}", s.stderr[k]), b])?;
            }
            w.into_inner().map_err(|e| Error::Io(e.into_error()))?.flush()?;
            names.push(name);
        }
        Ok(names)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> ExperimentReport {
        let mut r = ExperimentReport::new("t", serde_json::Value::Null, 1, 4, vec![0.0, 1.0, 2.0]);
        r.observe("a", Series { value: vec![1.0, 0.5, 0.4], stderr: vec![0.0, 0.1, 0.1] });
        r.bound("env", vec![1.0, 0.45, 0.45], "exp(-t)");
        r.fit("x", 2.0);
        r.fit("y", 3.0);
        r.count("fail", 0);
        r
    }

    #[test]
    fn criteria_evaluate_from_stored_numbers() {
        let r = report();
        let below = |rel_tol, stderr_mult| Criterion::SeriesBelowBound {
            series: "a".into(),
            bound: "env".into(),
            rel_tol,
            stderr_mult,
        };
        assert!(!r.evaluate(&below(0.0, 0.0)).unwrap());
        assert!(r.evaluate(&below(0.0, 1.0)).unwrap());
        assert!(r.evaluate(&below(0.12, 0.0)).unwrap());
        let spread = |m| Criterion::RatioSpread { keys: vec!["x".into(), "y".into()], max_ratio: m };
        assert!(r.evaluate(&spread(2.0)).unwrap());
        assert!(!r.evaluate(&spread(1.5)).unwrap());
        assert!(r.evaluate(&Criterion::CounterAtMost { key: "fail".into(), limit: 0 }).unwrap());
        assert!(r.evaluate(&Criterion::FittedAtMost { key: "zzz".into(), limit: 0.0 }).is_err());
        let final_only = Criterion::SeriesAtMost { series: "a".into(), limit: 0.45, final_only: true };
        assert!(r.evaluate(&final_only).unwrap());
    }

    #[test]
    fn finalize_rejects_misaligned_series() {
        let mut r = report();
        r.observe("short", Series::exact(vec![1.0]));
        assert!(r.finalize().is_err());
    }

    #[test]
    fn json_round_trip_preserves_pass_flags() {
        let mut r = report();
        r.criterion("c", Criterion::NonGrowth { series: "a".into(), rel_tol: 0.0, stderr_mult: 0.0 });
        let r = r.finalize().unwrap();
        let back: ExperimentReport = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        assert_eq!(back.recompute_pass().unwrap(), r.pass);
        assert!(r.pass["c"]);
    }
}
