use thiserror::Error;

/// Errors raised by the analysis, simulation and optimization routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range. `param` names it.
    #[error("invalid {param}: {reason}")]
    Domain { param: &'static str, reason: String },

    #[error("stationary solve did not reach residual {tolerance:e} (best {residual:e})")]
    NonConvergence { residual: f64, tolerance: f64 },

    #[error("chain has {classes} closed communicating classes; stationary law is not unique")]
    DegenerateChain { classes: usize },

    #[error("no user is ever active; success probability is undefined")]
    NoActiveUsers,

    #[error("invalid horizon: {0}")]
    Horizon(String),

    #[error("need at least {needed} receptions for moment estimates, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("search grid is empty")]
    EmptyGrid,

    #[error("optimum is not separated from {competitor}: confidence intervals overlap")]
    AmbiguousOptimum { competitor: String },

    #[error("internal numerical error: {0}")]
    Numerical(String),

    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(param: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            param,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
