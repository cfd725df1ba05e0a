//! Bounds, modulus estimates and comparison reports.

pub mod bounds;
pub mod modulus;
pub mod report;

pub use bounds::{
    bound_E, bound_T, bound_derivative, bound_taylor, bound_taylor_derivative, centered_moment_bound, iterated_bound,
    jackson_bound, modulus_of, moment_bound, taylor_remainder_bound, BoundQuery, TaylorBound,
};
pub use modulus::{estimate_modulus, linspace, modulus_from_samples, uniform_grid};
pub use report::{bound_ratio, centered_moments, compare, sup_deviation, taylor_residuals, BoundReport, GridSpec};
