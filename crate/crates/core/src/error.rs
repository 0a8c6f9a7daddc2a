use thiserror::Error;

/// Errors raised by the risk engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiskError {
    #[error("dimension mismatch: expected {expected} atoms, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid probability weights: {0}")]
    InvalidWeights(String),

    #[error("invalid random variable: {0}")]
    InvalidVariable(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("utility function is not normalized (requires v(0) = 0 and -1 in the subdifferential at 0)")]
    NotNormalized,

    #[error("utility function violates the attainment condition on its recession function")]
    AttainmentConditionFails,

    #[error("objective is identically +infinity")]
    EmptyDomain,

    #[error("value is not finite: {0}")]
    NotFinite(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("infeasible constraint set: {0}")]
    Infeasible(String),
}

impl RiskError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        RiskError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by numerical failure rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            RiskError::NonConvergence(_) | RiskError::Infeasible(_) | RiskError::NotFinite(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, RiskError>;
