use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty measure")]
    EmptyMeasure,

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("measure sizes differ ({left} vs {right}); use wasserstein_p_cross for unequal sizes")]
    SizeMismatch { left: usize, right: usize },

    #[error("invalid parameter {name}: {constraint}")]
    InvalidParameter { name: &'static str, constraint: String },

    #[error("collision: particles {i} and {j} share position {position}")]
    Collision { i: usize, j: usize, position: f64 },

    #[error("configuration not strictly ordered at index {index}")]
    NotOrdered { index: usize },

    #[error("newton solver did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },

    #[error("path resolution exhausted: requested level {level} exceeds max depth {max_depth}")]
    PathResolutionExhausted { level: u32, max_depth: u32 },

    #[error("time {time} is not on the dyadic grid of base step {base_step}")]
    OffGrid { time: f64, base_step: f64 },

    #[error("step failure at t={time} after {rejections} rejections; state: {state:?}")]
    StepFailure {
        time: f64,
        rejections: usize,
        state: Vec<f64>,
    },

    #[error("near-collision at t={time}: gap {gap:e} below floor {floor:e}")]
    NearCollision { time: f64, gap: f64, floor: f64 },

    #[error("replica {replica} failed at t={time}: {source}")]
    Trajectory {
        replica: u64,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config key `{key}`: {constraint}")]
    Config { key: String, constraint: String },

    #[error("test function outside the admissible family: {0}")]
    InadmissibleTestFunction(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, constraint: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            constraint: constraint.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            constraint: constraint.into(),
        }
    }
}
