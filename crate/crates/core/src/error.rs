use std::path::PathBuf;

use thiserror::Error;

use crate::mfg::ItvpSolution;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a simplex point: ({x1}, {x2}, {x3}) sums to {sum}")]
    NotASimplex { x1: f64, x2: f64, x3: f64, sum: f64 },

    #[error("integration step too large: state left the admissible set by {excess:e} at t = {time}")]
    StepTooLarge { time: f64, excess: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last change {last_change:e})")]
    NoConvergence {
        iterations: usize,
        last_change: f64,
        last: Box<ItvpSolution>,
    },

    #[error("degenerate reduced system: determinant {determinant:e}")]
    Degenerate { determinant: f64 },

    #[error("no real equilibrium in the third quadrant: squared values ({u}, {w})")]
    NoRealEquilibrium { u: f64, w: f64 },

    #[error("point is not an equilibrium: residual {residual:e}")]
    NotAnEquilibrium { residual: f64 },

    #[error("no stationary distribution found: {0}")]
    NoRoot(String),

    #[error("degenerate mapping: {0}")]
    DegenerateMapping(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("value {value} at index {index} is outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Stable machine-readable tag, used by the CLI error stream and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotASimplex { .. } => "NotASimplex",
            Error::StepTooLarge { .. } => "StepTooLarge",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::Degenerate { .. } => "Degenerate",
            Error::NoRealEquilibrium { .. } => "NoRealEquilibrium",
            Error::NotAnEquilibrium { .. } => "NotAnEquilibrium",
            Error::NoRoot(_) => "NoRoot",
            Error::DegenerateMapping(_) => "DegenerateMapping",
            Error::HypothesisViolated(_) => "HypothesisViolated",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::InvalidGraph(_) => "InvalidGraph",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::Io { .. } => "Io",
            Error::Json { .. } => "Json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
