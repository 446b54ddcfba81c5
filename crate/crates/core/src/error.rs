use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("validation error: {message}{}", format_point(*.x, *.t))]
    Validation {
        message: String,
        x: Option<f64>,
        t: Option<f64>,
    },

    #[error("singular tridiagonal system (zero pivot at row {row})")]
    SingularSystem { row: usize },

    #[error("power iteration did not converge after {max_iter} iterations (last residual {last_residual:e})")]
    NoConvergence { max_iter: usize, last_residual: f64 },

    #[error("moving interval width {width:e} below minimum at t={t}")]
    DegenerateWidth { t: f64, width: f64 },

    #[error("hypothesis violation: {0}")]
    HypothesisViolation(String),

    #[error("ambiguous sign of temporal drift near t={t}")]
    AmbiguousSign { t: f64 },

    #[error("i/o error on {path:?}: {message}")]
    Io { path: PathBuf, message: String },
}

fn format_point(x: Option<f64>, t: Option<f64>) -> String {
    match (x, t) {
        (Some(x), Some(t)) => format!(" at (x={x}, t={t})"),
        (None, Some(t)) => format!(" at t={t}"),
        (Some(x), None) => format!(" at x={x}"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub fn validation(message: impl Into<String>) -> Self {
        Error::Validation {
            message: message.into(),
            x: None,
            t: None,
        }
    }

    pub fn validation_at(message: impl Into<String>, x: Option<f64>, t: Option<f64>) -> Self {
        Error::Validation {
            message: message.into(),
            x,
            t,
        }
    }
}
