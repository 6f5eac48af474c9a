use thiserror::Error;

/// Errors surfaced by the numerical kernels.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("group membership failed: {0}")]
    Membership(String),

    #[error("invalid model: {0}")]
    Model(String),

    #[error("disorder word does not cover [{lo}, {hi}]")]
    Coverage { lo: f64, hi: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("singular configuration: condition number {cond:.3e} exceeds limit")]
    SingularConfiguration { cond: f64 },

    #[error("data quality: {0}")]
    DataQuality(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
