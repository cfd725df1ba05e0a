//! Convolution-type neural network operators built on a symmetrized
//! generalized logistic density.
//!
//! The density `Psi` comes from the deformed sigmoid
//! `nu(x) = 1 / (1 + q B^(-beta x))`. The crate evaluates `Psi`, integrates
//! against it with certified truncation, applies the direct, Kantorovich and
//! quadrature operators (and their iterates), and computes the closed-form
//! approximation bounds they satisfy.

pub mod activation;
pub mod analysis;
pub mod error;
pub mod function;
pub mod gauss;
pub mod operators;
pub mod quadrature;

pub use activation::{eval_g, eval_nu, eval_psi, psi_envelope, ActivationParams, DensityKernel};
pub use error::{Error, Result};
pub use function::TargetFunction;
pub use operators::{CommutationCheck, IterationPlan, OperatorEngine, OperatorKind, OperatorSpec};
pub use quadrature::{integrate_weighted, tail_mass, truncation_radius, Integral, QuadratureConfig, TruncationWindow};
