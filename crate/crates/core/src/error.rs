use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("matrix is not symmetric (max deviation {deviation:e})")]
    Asymmetric { deviation: f64 },

    #[error("point is not an equilibrium: |f(x0)| = {residual:e}")]
    NotEquilibrium { residual: f64 },

    #[error("Jacobian inconsistent with vector field at {point:?}: relative deviation {deviation:e}")]
    InconsistentJacobian { point: Vec<f64>, deviation: f64 },

    #[error("duplicate collocation points: #{first} and #{second} coincide")]
    DuplicatePoints { first: usize, second: usize },

    #[error("collocation matrix is not numerically positive definite (pivot {pivot} of {dim})")]
    NotPositiveDefinite { pivot: usize, dim: usize },

    #[error("matrix is not positive definite")]
    NotPositiveDefiniteInput,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("system `{0}` has no exact metric")]
    NoExactMetric(String),

    #[error("at alpha = {alpha}: {source}")]
    AtAlpha {
        alpha: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerical pipeline (as opposed to bad input
    /// or configuration).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NotPositiveDefinite { .. } | Error::NotPositiveDefiniteInput => true,
            Error::AtAlpha { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
