use thiserror::Error;

/// Which of the two game solvability conditions was violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DefinitenessCondition {
    /// `B_uᵀ P B_u + R_u` must be positive definite (minimizer convexity).
    MinimizerConvexity,
    /// `B_vᵀ P B_v − R_v` must be negative definite (maximizer concavity).
    MaximizerConcavity,
}

impl std::fmt::Display for DefinitenessCondition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::MinimizerConvexity => write!(f, "B_u'PB_u + R_u > 0"),
            Self::MaximizerConcavity => write!(f, "B_v'PB_v - R_v < 0"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("game not solvable at step {step}: condition {condition} violated (extreme eigenvalue {eigenvalue:e})")]
    Solvability {
        step: usize,
        condition: DefinitenessCondition,
        eigenvalue: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("non-finite state at step {step}")]
    Blowup { step: usize },

    #[error("assignment infeasible: {0}")]
    Infeasible(String),

    #[error("validation failed at `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
