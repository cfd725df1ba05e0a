use crate::quadrature::Integral;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("argument {value} is outside the domain: {reason}")]
    Domain { value: f64, reason: &'static str },

    #[error("integrand is not finite at h = {at}")]
    IntegrandNotFinite { at: f64 },

    #[error(
        "quadrature did not reach the requested tolerance after {refinements} refinements \
         (best estimate {} +/- {})", best.value, best.error
    )]
    ToleranceNotMet { best: Integral, refinements: u32 },

    #[error("specification error: {0}")]
    Specification(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("evaluation budget exceeded: plan needs ~{needed:.3e} integrand evaluations, budget is {budget:.3e}")]
    BudgetExceeded { needed: f64, budget: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
