//! Error types shared across the crate.

use crate::C64;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("steady-state iteration did not converge: residual {residual:.3e} after {iterations} iterations")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("multiple steady states found: {0:?}")]
    Multistability(Vec<(C64, C64)>),

    #[error("target coupling {target:.6e} rad/s not attainable: {reason}")]
    NotAttainable { target: f64, reason: String },

    #[error("integration step too large: local error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    StepSizeTooLarge { estimate: f64, tolerance: f64 },

    #[error("characteristic polynomial has non-real coefficients: relative imaginary residue {residue:.3e}")]
    ComplexCharPoly { residue: f64 },

    #[error("singular transfer matrix at nu = {nu:.6e} rad/s")]
    SingularMatrix { nu: f64 },

    #[error("classical probe transients persist past {limit:.3e} s")]
    NotConverged { limit: f64 },

    #[error("system is unstable: max eigenvalue real part {max_real_part:.6e} rad/s")]
    UnstableSystem { max_real_part: f64 },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("missing required keys: {}", .0.join(", "))]
    MissingKeys(Vec<String>),

    #[error("line {line}: cannot parse value in `{text}`")]
    UnparsableValue { line: usize, text: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// CLI exit code: 1 for validation problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_)
            | Error::UnknownKey { .. }
            | Error::MissingKeys(_)
            | Error::UnparsableValue { .. }
            | Error::Io(_)
            | Error::Json(_) => 1,
            Error::NonConvergence { .. }
            | Error::Multistability(_)
            | Error::NotAttainable { .. }
            | Error::StepSizeTooLarge { .. }
            | Error::ComplexCharPoly { .. }
            | Error::SingularMatrix { .. }
            | Error::NotConverged { .. }
            | Error::UnstableSystem { .. } => 2,
        }
    }
}
