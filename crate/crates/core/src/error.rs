use thiserror::Error;

/// Errors shared by all modules of the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A constructor or operation was given an invalid parameter.
    /// `field` names the offending input.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// An outer attack point violates the feasibility set; `constraint`
    /// names the violated constraint.
    #[error("infeasible attack point: {constraint}")]
    Infeasible { constraint: String },

    /// A quadrature grid cannot deliver the promised accuracy.
    #[error("quadrature precision failure: {reason}")]
    Precision { reason: String },
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    pub(crate) fn infeasible(constraint: impl Into<String>) -> Self {
        Error::Infeasible {
            constraint: constraint.into(),
        }
    }
}
