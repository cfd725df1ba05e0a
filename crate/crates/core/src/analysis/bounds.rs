//! Closed-form approximation bounds.

use std::cmp::Ordering;

use crate::activation::ActivationParams;
use crate::analysis::modulus::estimate_modulus;
use crate::error::{Error, Result};
use crate::function::TargetFunction;
use crate::operators::{IterationPlan, OperatorKind};

/// Window used when a function has no closed-form modulus.
pub const MODULUS_WINDOW: (f64, f64) = (-5.0, 5.0);
/// Grid step used with [`MODULUS_WINDOW`].
pub const MODULUS_STEP: f64 = 1e-3;

/// Which bound to evaluate: scale `n`, exponent `alpha`, operator kind,
/// derivative order `k` and Taylor order `taylor_order` (0 for the plain bounds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery {
    pub alpha: f64,
    pub n: u32,
    pub kind: OperatorKind,
    pub k: usize,
    pub taylor_order: usize,
}

impl BoundQuery {
    pub fn new(kind: OperatorKind, n: u32, alpha: f64) -> Result<Self> {
        let query = Self {
            alpha,
            n,
            kind,
            k: 0,
            taylor_order: 0,
        };
        query.validate()?;
        Ok(query)
    }

    pub fn with_derivative(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_taylor_order(mut self, order: usize) -> Self {
        self.taylor_order = order;
        self
    }

    /// `n^(1 - alpha)`.
    pub fn scale(&self) -> f64 {
        (self.n as f64).powf(1.0 - self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: self.alpha,
                reason: "must lie in (0, 1)",
            });
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if self.scale().partial_cmp(&2.0) != Some(Ordering::Greater) {
            return Err(Error::Precondition(format!(
                "n^(1-alpha) = {} must exceed 2 (n = {}, alpha = {})",
                self.scale(),
                self.n,
                self.alpha
            )));
        }
        Ok(())
    }

    /// Modulus argument: `n^-alpha` for the direct kind, `1/n + n^-alpha` otherwise.
    pub fn modulus_argument(&self) -> f64 {
        let n = self.n as f64;
        match self.kind {
            OperatorKind::Direct => n.powf(-self.alpha),
            _ => 1.0 / n + n.powf(-self.alpha),
        }
    }
}

/// `omega(f, theta)`: the declared closed form, else the grid estimate on [`MODULUS_WINDOW`].
pub fn modulus_of(f: &TargetFunction, theta: f64) -> Result<f64> {
    match f.exact_modulus(theta) {
        Some(w) => Ok(w),
        None => estimate_modulus(f, theta, MODULUS_WINDOW, MODULUS_STEP.min(theta)),
    }
}

/// `2 (q + 1/q) ||f|| / B^(beta (n^(1-alpha) - 1))`.
pub fn tail_term(params: &ActivationParams, norm: f64, query: &BoundQuery) -> f64 {
    2.0 * params.deformation_sum() * norm * (-params.rate() * (query.scale() - 1.0)).exp()
}

fn jackson(f: &TargetFunction, query: &BoundQuery, params: &ActivationParams) -> Result<f64> {
    query.validate()?;
    Ok(modulus_of(f, query.modulus_argument())? + tail_term(params, f.sup_norm(), query))
}

fn plain_query(query: &BoundQuery, allowed: &[OperatorKind], name: &str) -> Result<()> {
    if !allowed.contains(&query.kind) {
        return Err(Error::Precondition(format!(
            "{name} does not apply to the {} kind",
            query.kind
        )));
    }
    if query.taylor_order != 0 {
        return Err(Error::Precondition(format!(
            "{name} is a plain bound, Taylor order must be 0"
        )));
    }
    Ok(())
}

/// Direct-kind bound `T = omega(f, n^-alpha) + 2 (q + 1/q) ||f|| / B^(beta (n^(1-alpha) - 1))`.
#[allow(non_snake_case)]
pub fn bound_T(f: &TargetFunction, query: &BoundQuery, params: &ActivationParams) -> Result<f64> {
    plain_query(query, &[OperatorKind::Direct], "T")?;
    jackson(f, query, params)
}

/// Kantorovich/quadrature bound `E`, as `T` with modulus argument `1/n + n^-alpha`.
#[allow(non_snake_case)]
pub fn bound_E(f: &TargetFunction, query: &BoundQuery, params: &ActivationParams) -> Result<f64> {
    plain_query(query, &[OperatorKind::Kantorovich, OperatorKind::Quadrature], "E")?;
    jackson(f, query, params)
}

/// `T` or `E` by kind.
pub fn jackson_bound(f: &TargetFunction, query: &BoundQuery, params: &ActivationParams) -> Result<f64> {
    match query.kind {
        OperatorKind::Direct => bound_T(f, query, params),
        _ => bound_E(f, query, params),
    }
}

/// `T_k` / `E_k`: the plain bound evaluated on `f^(k)`.
pub fn bound_derivative(f: &TargetFunction, query: &BoundQuery, params: &ActivationParams) -> Result<f64> {
    let g = f.derivative(query.k)?;
    jackson_bound(&g, &BoundQuery { k: 0, ..*query }, params)
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// `(B^beta - 1) / ((B^beta + 1)(k + 1)) + (q + 1/q) B^beta k! / (beta ln B)^k`,
/// an upper bound for `int |h|^k Psi(h) dh`.
pub fn moment_bound(params: &ActivationParams, k: usize) -> f64 {
    let bb = params.base_pow_beta();
    (bb - 1.0) / ((bb + 1.0) * (k as f64 + 1.0))
        + params.deformation_sum() * bb * factorial(k) / params.rate().powi(k as i32)
}

/// Bound on `|Op((. - x)^k)(x)|`: `moment_bound / n^k` for the direct kind,
/// `2^(k-1) / n^k (1 + moment_bound)` for the other two.
pub fn centered_moment_bound(params: &ActivationParams, kind: OperatorKind, n: u32, k: usize) -> f64 {
    let nk = (n as f64).powi(k as i32);
    match kind {
        OperatorKind::Direct => moment_bound(params, k) / nk,
        _ => 2f64.powi(k as i32 - 1) / nk * (1.0 + moment_bound(params, k)),
    }
}

/// Taylor-type bounds of order `N` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorBound {
    /// Bound on `|Op f(x) - f(x) - sum_k f^(k)(x)/k! Op((. - x)^k)(x)|`.
    pub remainder_bound: f64,
    /// `moment_bounds[k - 1]` bounds the `k`-th centered moment.
    pub moment_bounds: Vec<f64>,
    /// `sum_k |f^(k)(x)|/k! moment_bounds[k - 1] + remainder_bound`, a bound on `|Op f(x) - f(x)|`.
    pub full_bound: f64,
}

/// The order-`N` remainder bound alone.
pub fn taylor_remainder_bound(f: &TargetFunction, query: &BoundQuery, params: &ActivationParams) -> Result<f64> {
    query.validate()?;
    let order = query.taylor_order;
    if order == 0 {
        return Err(Error::Precondition("Taylor bounds need order N >= 1".into()));
    }
    let top = f.derivative(order)?;
    let norm = top.sup_norm();
    let n = query.n as f64;
    let nf = factorial(order);
    let beta_n = params.beta().powi(order as i32);
    let decay = (-0.5 * params.rate() * query.scale()).exp();
    let spread = params.deformation_sum() * params.base_pow_beta();
    let theta = query.modulus_argument();
    let omega = modulus_of(&top, theta)?;
    Ok(match query.kind {
        OperatorKind::Direct => {
            omega / (n.powf(query.alpha * order as f64) * nf)
                + 2f64.powi(order as i32 + 2) * norm * spread / (n.powi(order as i32) * beta_n) * decay
        }
        _ => {
            omega * theta.powi(order as i32) / nf
                + 2f64.powi(order as i32) * norm / (n.powi(order as i32) * nf)
                    * spread
                    * (1.0 + 2f64.powi(order as i32 + 1) * nf / beta_n)
                    * decay
        }
    })
}

/// Taylor bounds of order `query.taylor_order` at `x`.
pub fn bound_taylor(f: &TargetFunction, query: &BoundQuery, params: &ActivationParams, x: f64) -> Result<TaylorBound> {
    let remainder_bound = taylor_remainder_bound(f, query, params)?;
    let order = query.taylor_order;
    let moment_bounds: Vec<f64> = (1..=order)
        .map(|k| centered_moment_bound(params, query.kind, query.n, k))
        .collect();
    let mut full_bound = remainder_bound;
    for (k, m) in (1..=order).zip(&moment_bounds) {
        full_bound += f.derivative(k)?.eval(x).abs() / factorial(k) * m;
    }
    Ok(TaylorBound {
        remainder_bound,
        moment_bounds,
        full_bound,
    })
}

/// [`bound_taylor`] applied to `f^(k)` with `k = query.k`.
pub fn bound_taylor_derivative(
    f: &TargetFunction,
    query: &BoundQuery,
    params: &ActivationParams,
    x: f64,
) -> Result<TaylorBound> {
    let g = f.derivative(query.k)?;
    bound_taylor(&g, &BoundQuery { k: 0, ..*query }, params, x)
}

/// Sum over the stages of the plain bound at each stage's scale and kind.
///
/// For `r` copies of one operator this is `r` times the single-stage bound.
pub fn iterated_bound(f: &TargetFunction, plan: &IterationPlan, params: &ActivationParams, alpha: f64) -> Result<f64> {
    plan.stages()
        .iter()
        .map(|spec| jackson_bound(f, &BoundQuery::new(spec.kind(), spec.n(), alpha)?, params))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    fn unit() -> ActivationParams {
        ActivationParams::new(1.0, 1.0, E).unwrap()
    }

    fn lipschitz_sine() -> TargetFunction {
        TargetFunction::new("sin", f64::sin, 1.0)
            .unwrap()
            .with_modulus(|t| t)
            .with_derivative_modulus(f64::cos, 1.0, |t| t)
            .unwrap()
    }

    #[test]
    fn query_precondition() {
        assert!(BoundQuery::new(OperatorKind::Direct, 16, 0.5).is_ok());
        assert!(matches!(
            BoundQuery::new(OperatorKind::Direct, 4, 0.5),
            Err(Error::Precondition(_))
        ));
        assert!(BoundQuery::new(OperatorKind::Direct, 16, 1.0).is_err());
    }

    #[test]
    fn plain_bounds_closed_forms() {
        let c = TargetFunction::constant("c", 1.0, 0).unwrap();
        let q = BoundQuery::new(OperatorKind::Direct, 16, 0.5).unwrap();
        let tail = 4.0 * (-3.0f64).exp();
        assert_abs_diff_eq!(bound_T(&c, &q, &unit()).unwrap(), tail, epsilon = 1e-15);
        assert_abs_diff_eq!(tail, 0.199148, epsilon = 1e-6);
        let s = lipschitz_sine();
        assert_abs_diff_eq!(bound_T(&s, &q, &unit()).unwrap(), 0.25 + tail, epsilon = 1e-15);
        let qe = BoundQuery::new(OperatorKind::Kantorovich, 16, 0.5).unwrap();
        assert_abs_diff_eq!(bound_E(&s, &qe, &unit()).unwrap(), 0.3125 + tail, epsilon = 1e-15);
        assert!(bound_T(&s, &qe, &unit()).is_err());
    }

    #[test]
    fn moment_bound_values() {
        assert_abs_diff_eq!(
            moment_bound(&unit(), 1),
            (E - 1.0) / (2.0 * (E + 1.0)) + 2.0 * E,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(moment_bound(&unit(), 1), 5.66762, epsilon = 1e-5);
        let second = (E - 1.0) / (3.0 * (E + 1.0)) + 4.0 * E;
        assert_abs_diff_eq!(moment_bound(&unit(), 2), second, epsilon = 1e-14);
        assert_abs_diff_eq!(second, 11.027, epsilon = 1e-3);
        let direct = centered_moment_bound(&unit(), OperatorKind::Direct, 10, 2);
        assert_abs_diff_eq!(direct, second / 100.0, epsilon = 1e-16);
    }

    #[test]
    fn direct_taylor_remainder_example() {
        let q = BoundQuery::new(OperatorKind::Direct, 100, 0.5)
            .unwrap()
            .with_taylor_order(1);
        let r = taylor_remainder_bound(&lipschitz_sine(), &q, &unit()).unwrap();
        assert_abs_diff_eq!(r, 0.01 + 16.0 * (-4.0f64).exp() / 100.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 0.0129305, epsilon = 1e-7);
    }

    #[test]
    fn vanishing_derivatives_leave_the_remainder() {
        let q = BoundQuery::new(OperatorKind::Kantorovich, 64, 0.5)
            .unwrap()
            .with_taylor_order(1);
        let s = lipschitz_sine();
        let b = bound_taylor(&s, &q, &unit(), std::f64::consts::FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(b.full_bound, b.remainder_bound, epsilon = 1e-16);
        let zero = TargetFunction::constant("0", 0.0, 3).unwrap();
        let b = bound_taylor(&zero, &q.with_taylor_order(2), &unit(), 0.3).unwrap();
        assert_eq!(b.full_bound, 0.0);
    }

    #[test]
    fn iterated_bound_sums_stages() {
        use crate::operators::OperatorSpec;
        let s = lipschitz_sine();
        let single = bound_T(&s, &BoundQuery::new(OperatorKind::Direct, 16, 0.5).unwrap(), &unit()).unwrap();
        let plan = IterationPlan::repeated(OperatorSpec::direct(16).unwrap(), 3).unwrap();
        assert_abs_diff_eq!(
            iterated_bound(&s, &plan, &unit(), 0.5).unwrap(),
            3.0 * single,
            epsilon = 1e-15
        );
        let bad = IterationPlan::repeated(OperatorSpec::direct(4).unwrap(), 2).unwrap();
        assert!(iterated_bound(&s, &bad, &unit(), 0.5).is_err());
    }
}
