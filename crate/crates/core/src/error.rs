use thiserror::Error;

/// Errors raised by the geometry and verification routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eigenvalue:e}, tolerance {tolerance:e})")]
    NotPsd { min_eigenvalue: f64, tolerance: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("degenerate plane (Gram determinant {gram:e})")]
    DegeneratePlane { gram: f64 },

    #[error("truncation oracle did not converge by T = {t_max} (last increment {last_increment:e})")]
    OracleFailure { t_max: f64, last_increment: f64 },

    #[error("direction translation did not converge: last iterates differ by {gap:e}")]
    TranslationFailure { gap: f64 },

    #[error("degenerate chart frame (Gram determinant {gram:e})")]
    ChartDegeneracy { gram: f64 },

    #[error("ball volume is only available for Euclidean and hyperbolic factors")]
    UnsupportedVolume,

    #[error("parse error at `{token}`: {message}")]
    Parse { token: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
