use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument is outside the set where the quantity is defined.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// A numerical procedure did not reach its tolerance.
    #[error("numeric error in {op}: {msg} (achieved error {achieved:.3e})")]
    Numeric {
        op: &'static str,
        msg: String,
        achieved: f64,
    },

    /// Inconsistent or insufficient configuration.
    #[error("configuration error: {0}")]
    Config(String),

    /// The parametrix series failed to decay.
    #[error("parametrix series diverged; weighted term norms {norms:?}")]
    Divergence { norms: Vec<f64> },

    /// The grid is too coarse for the requested kernel.
    #[error("resolution error: {0}")]
    Resolution(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }

    pub(crate) fn numeric(op: &'static str, msg: impl Into<String>, achieved: f64) -> Self {
        Error::Numeric {
            op,
            msg: msg.into(),
            achieved,
        }
    }
}
