use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input lies outside the range where the model is defined.
    #[error("{quantity} = {value:e} is outside the valid range {valid}")]
    Domain {
        quantity: &'static str,
        value: f64,
        valid: String,
    },

    /// The waveguide supports no fundamental mode at this frequency.
    #[error("no guided mode at omega = {omega:e} rad/s: {reason}")]
    ModeCutoff { omega: f64, reason: String },

    /// A numerical procedure failed (bracketing, convergence, ...).
    #[error("numerical failure in {stage}: {detail}")]
    Numerical { stage: &'static str, detail: String },

    /// Inputs violate an operation's preconditions (grid shapes, spans, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A design target cannot be met with the given inputs.
    #[error("infeasible design: {0}")]
    Infeasible(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(quantity: &'static str, value: f64, valid: impl Into<String>) -> Self {
        Error::Domain {
            quantity,
            value,
            valid: valid.into(),
        }
    }

    pub(crate) fn numerical(stage: &'static str, detail: impl Into<String>) -> Self {
        Error::Numerical {
            stage,
            detail: detail.into(),
        }
    }
}
