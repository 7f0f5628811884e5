use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network size {n}: at least {min} nodes required")]
    InvalidSize { n: usize, min: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A model assumption is violated. `label` is the assumption tag, e.g. `1(ii)`.
    #[error("violates assumption {label}: {detail}")]
    Assumption { label: &'static str, detail: String },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("ill-conditioned system (condition estimate {estimate:.3e})")]
    Conditioning { estimate: f64 },

    #[error("horizon too short: tail bound {achievable:.3e} exceeds tolerance {requested:.3e}")]
    InsufficientHorizon { achievable: f64, requested: f64 },

    #[error("gamma = 1 (log utility) is not supported")]
    UnsupportedGamma,

    #[error("invalid cost: {0}")]
    InvalidCost(String),

    #[error("comparison not applicable: {0}")]
    ComparisonNotApplicable(String),

    #[error("inadmissible control at t = {time}: {quantity} ({detail})")]
    Inadmissible {
        time: f64,
        quantity: String,
        detail: String,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable kind, used in the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidSize { .. } => "invalid_size",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::Assumption { .. } => "assumption",
            Error::Domain(_) => "domain",
            Error::NonFinite(_) => "non_finite",
            Error::Singular(_) => "singular",
            Error::Conditioning { .. } => "conditioning",
            Error::InsufficientHorizon { .. } => "insufficient_horizon",
            Error::UnsupportedGamma => "unsupported_gamma",
            Error::InvalidCost(_) => "invalid_cost",
            Error::ComparisonNotApplicable(_) => "comparison_not_applicable",
            Error::Inadmissible { .. } => "inadmissible",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn assumption(label: &'static str, detail: impl Into<String>) -> Self {
        Error::Assumption {
            label,
            detail: detail.into(),
        }
    }
}
