use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(String),
    #[error("matrix is not Hermitian: anti-Hermitian part {antihermitian:.3e} exceeds {limit:.3e}")]
    NotHermitian { antihermitian: f64, limit: f64 },
    #[error("{0} is singular or numerically singular")]
    Singular(String),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("generators do not commute: commutator norm {norm:.3e} exceeds {limit:.3e}")]
    NonCommuting { norm: f64, limit: f64 },
    #[error("generator is not dissipative: min eigenvalue of -(A+A*)/2 is {min_eig:.3e}")]
    NotDissipative { min_eig: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("spec error: {0}")]
    Spec(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
