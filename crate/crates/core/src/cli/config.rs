use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dynamics::{ModelParams, SigmaRule};
use crate::error::{Error, Result};
use crate::experiments::{Coupling, InitialCondition, TestFunction, NONCOLLISION_WARNING};
use crate::integrator::SchemeConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    Contraction,
    Cauchy,
    ChaosRate,
    Stationary,
    PdeResidual,
    Continuity,
    Moments,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Simulate => "simulate",
            ExperimentKind::Contraction => "contraction",
            ExperimentKind::Cauchy => "cauchy",
            ExperimentKind::ChaosRate => "chaos-rate",
            ExperimentKind::Stationary => "stationary",
            ExperimentKind::PdeResidual => "pde-residual",
            ExperimentKind::Continuity => "continuity",
            ExperimentKind::Moments => "moments",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SigmaRuleName {
    #[serde(rename = "zero")]
    Zero,
    #[serde(rename = "one_over_N")]
    OneOverN,
    #[serde(rename = "constant")]
    Constant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub sigma_rule: SigmaRuleName,
    /// Only read when sigma_rule is "constant".
    pub sigma: Option<f64>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n: 64,
            alpha: 1.0,
            lambda: 1.0,
            sigma_rule: SigmaRuleName::OneOverN,
            sigma: None,
        }
    }
}

impl ModelConfig {
    pub fn params(&self) -> Result<ModelParams> {
        let sigma = match (self.sigma_rule, self.sigma) {
            (SigmaRuleName::Constant, Some(s)) => {
                if !(s.is_finite() && s >= 0.0) {
                    return Err(Error::config("model.sigma", "sigma must be finite and >= 0"));
                }
                SigmaRule::Constant(s)
            }
            (SigmaRuleName::Constant, None) => {
                return Err(Error::config("model.sigma", "sigma is required when sigma_rule is \"constant\""))
            }
            (_, Some(_)) => {
                return Err(Error::config("model.sigma", "sigma is only allowed with sigma_rule \"constant\""))
            }
            (SigmaRuleName::Zero, None) => SigmaRule::Zero,
            (SigmaRuleName::OneOverN, None) => SigmaRule::OneOverN,
        };
        ModelParams::quadratic(self.n, self.alpha, self.lambda, sigma).map_err(|e| match e {
            Error::InvalidParameter { name, constraint } => Error::config(format!("model.{name}"), constraint),
            other => other,
        })
    }
}

/// Named tolerances; unset entries keep the experiment defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub tol_contract: Option<f64>,
    pub tol_mc: Option<f64>,
    pub stderr_mult: Option<f64>,
    pub slope_fraction: Option<f64>,
    pub tol_equilibrium: Option<f64>,
    pub tol_w2: Option<f64>,
    pub tol_pde: Option<f64>,
    pub max_ratio: Option<f64>,
    pub tol_envelope: Option<f64>,
}

/// Configuration document of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Option<ExperimentKind>,
    pub model: ModelConfig,
    pub scheme: SchemeConfig,
    pub sizes: Option<Vec<usize>>,
    pub n_ref: Option<usize>,
    pub times: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    /// Horizon of the noiseless relaxation runs.
    pub t_relax: Option<f64>,
    pub sample_dt: Option<f64>,
    pub replicas: u64,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub initial: Option<InitialCondition>,
    pub initial_alt: Option<InitialCondition>,
    pub test_functions: Option<Vec<TestFunction>>,
    pub coupling: Option<Coupling>,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            model: ModelConfig::default(),
            scheme: SchemeConfig::default(),
            sizes: None,
            n_ref: None,
            times: None,
            t_end: None,
            t_relax: None,
            sample_dt: None,
            replicas: 16,
            seed: 0,
            output_dir: PathBuf::from("out"),
            initial: None,
            initial_alt: None,
            test_functions: None,
            coupling: None,
            tolerances: Tolerances::default(),
        }
    }
}

/// A validated configuration with its model and the warnings raised while
/// checking it.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub config: RunConfig,
    pub experiment: ExperimentKind,
    pub params: ModelParams,
    pub warnings: Vec<String>,
}

fn positive(key: &str, v: Option<f64>) -> Result<()> {
    match v {
        Some(x) if !(x.is_finite() && x > 0.0) => Err(Error::config(key, "must be finite and > 0")),
        _ => Ok(()),
    }
}

impl RunConfig {
    /// Keys that `experiment` reads besides model, scheme, replicas, seed and
    /// output_dir.
    fn used_keys(experiment: ExperimentKind) -> &'static [&'static str] {
        match experiment {
            ExperimentKind::Simulate => &["t_end", "sample_dt", "initial"],
            ExperimentKind::Contraction => &["t_end", "sample_dt", "initial", "initial_alt", "tolerances"],
            ExperimentKind::Cauchy => &["sizes", "times", "initial", "initial_alt", "coupling", "tolerances"],
            ExperimentKind::ChaosRate => &["sizes", "n_ref", "t_end", "initial", "tolerances"],
            ExperimentKind::Stationary => &["sizes", "t_end", "t_relax", "sample_dt", "initial", "tolerances"],
            ExperimentKind::PdeResidual => &["sizes", "t_end", "sample_dt", "initial", "test_functions", "tolerances"],
            ExperimentKind::Continuity => &["sizes", "times", "initial", "tolerances"],
            ExperimentKind::Moments => &["t_end", "sample_dt", "initial", "tolerances"],
        }
    }

    fn present_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut mark = |present: bool, key: &'static str| {
            if present {
                keys.push(key);
            }
        };
        mark(self.sizes.is_some(), "sizes");
        mark(self.n_ref.is_some(), "n_ref");
        mark(self.times.is_some(), "times");
        mark(self.t_end.is_some(), "t_end");
        mark(self.t_relax.is_some(), "t_relax");
        mark(self.sample_dt.is_some(), "sample_dt");
        mark(self.initial.is_some(), "initial");
        mark(self.initial_alt.is_some(), "initial_alt");
        mark(self.test_functions.is_some(), "test_functions");
        mark(self.coupling.is_some(), "coupling");
        mark(self.tolerances != Tolerances::default(), "tolerances");
        keys
    }

    /// Validates every field; `experiment` overrides or supplies the config's
    /// experiment.
    pub fn validate(self, experiment: Option<ExperimentKind>) -> Result<ValidatedConfig> {
        let params = self.model.params()?;
        self.scheme.validate().map_err(|e| match e {
            Error::InvalidParameter { name, constraint } => Error::config(format!("scheme.{name}"), constraint),
            other => other,
        })?;
        let kind = match (experiment, self.experiment) {
            (Some(a), Some(b)) if a != b => {
                return Err(Error::config(
                    "experiment",
                    format!("config names {} but {} was requested", b.name(), a.name()),
                ))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(Error::config("experiment", "no experiment given")),
        };
        if self.replicas == 0 {
            return Err(Error::config("replicas", "must be >= 1"));
        }
        positive("t_end", self.t_end)?;
        positive("t_relax", self.t_relax)?;
        positive("sample_dt", self.sample_dt)?;
        if let Some(times) = &self.times {
            if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
                return Err(Error::config("times", "every time must be finite and > 0"));
            }
        }
        if let Some(sizes) = &self.sizes {
            if sizes.is_empty() || sizes.contains(&0) {
                return Err(Error::config("sizes", "must be non-empty with every size >= 1"));
            }
            if kind == ExperimentKind::Cauchy && sizes.len() != 2 {
                return Err(Error::config("sizes", "cauchy takes exactly two sizes [N, M]"));
            }
        }
        let t = &self.tolerances;
        for (key, v) in [
            ("tolerances.tol_contract", t.tol_contract),
            ("tolerances.tol_mc", t.tol_mc),
            ("tolerances.slope_fraction", t.slope_fraction),
            ("tolerances.tol_equilibrium", t.tol_equilibrium),
            ("tolerances.tol_w2", t.tol_w2),
            ("tolerances.tol_pde", t.tol_pde),
            ("tolerances.max_ratio", t.max_ratio),
            ("tolerances.tol_envelope", t.tol_envelope),
        ] {
            positive(key, v)?;
        }
        if let Some(m) = t.stderr_mult {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::config("tolerances.stderr_mult", "must be finite and >= 0"));
            }
        }
        let mut warnings = Vec::new();
        if params.outside_noncollision_regime() {
            warnings.push(NONCOLLISION_WARNING.to_string());
        }
        let used = Self::used_keys(kind);
        for key in self.present_keys() {
            if !used.contains(&key) {
                warnings.push(format!("key `{key}` is not used by experiment {}", kind.name()));
            }
        }
        Ok(ValidatedConfig {
            config: RunConfig {
                experiment: Some(kind),
                ..self
            },
            experiment: kind,
            params,
            warnings,
        })
    }
}

/// Parses a JSON configuration document without validating it.
pub fn read_config(text: &str) -> Result<RunConfig> {
    serde_json::from_str(text).map_err(|e| Error::config(json_key_hint(&e), e.to_string()))
}

/// Parses and validates a JSON configuration document.
pub fn parse_config(text: &str, experiment: Option<ExperimentKind>) -> Result<ValidatedConfig> {
    read_config(text)?.validate(experiment)
}

/// Best-effort name of the offending key in a serde error message.
fn json_key_hint(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "<document>".to_string())
}
