//! The deformed, parametrized, `B`-generalized logistic function and the
//! densities built from it.
//!
//! For a deformation `q > 0`, steepness `beta > 0` and base `B > 1`:
//!
//! ```text
//! nu(x)  = 1 / (1 + q B^(-beta x))
//! G(x)   = (nu(x + 1) - nu(x - 1)) / 2
//! Psi(x) = (G_q(x) + G_{1/q}(x)) / 2
//! ```
//!
//! `Psi` is even, strictly positive and has unit mass. Everything else in the
//! crate integrates against it.

use crate::error::{Error, Result};

/// Below this value of `ln B` every tail constant (which scales like `1/ln B`)
/// becomes very large; [`ActivationParams::has_small_log_base`] reports it.
pub const SMALL_LOG_BASE: f64 = 1e-6;

/// The triple `(q, beta, B)`.
///
/// Validated once at construction so that the evaluation paths stay branch-free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivationParams {
    q: f64,
    beta: f64,
    base: f64,
    ln_q: f64,
    ln_base: f64,
}

impl ActivationParams {
    pub fn new(q: f64, beta: f64, base: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::InvalidParameter {
                name: "q",
                value: q,
                reason: "deformation must be a finite positive number",
            });
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "must be a finite positive number",
            });
        }
        if !(base.is_finite() && base > 1.0) {
            return Err(Error::InvalidParameter {
                name: "base",
                value: base,
                reason: "base must be a finite number greater than 1",
            });
        }
        let ln_base = base.ln();
        if !(ln_base.is_finite() && ln_base > 0.0) {
            return Err(Error::InvalidParameter {
                name: "base",
                value: base,
                reason: "ln(base) must be finite and positive",
            });
        }
        Ok(Self {
            q,
            beta,
            base,
            ln_q: q.ln(),
            ln_base,
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn base(&self) -> f64 {
        self.base
    }

    pub fn ln_base(&self) -> f64 {
        self.ln_base
    }

    pub fn ln_q(&self) -> f64 {
        self.ln_q
    }

    /// The mirrored triple `(1/q, beta, B)`. `ln(1/q)` is stored as `-ln q`
    /// exactly, which keeps the deformed symmetry bit-exact.
    pub fn reciprocal(&self) -> Self {
        Self {
            q: 1.0 / self.q,
            ln_q: -self.ln_q,
            ..*self
        }
    }

    /// `beta * ln B`, the exponential decay rate of every tail.
    pub fn rate(&self) -> f64 {
        self.beta * self.ln_base
    }

    /// `q + 1/q`.
    pub fn deformation_sum(&self) -> f64 {
        self.q + 1.0 / self.q
    }

    /// `B^beta`.
    pub fn base_pow_beta(&self) -> f64 {
        self.rate().exp()
    }

    pub fn has_small_log_base(&self) -> bool {
        self.ln_base < SMALL_LOG_BASE
    }

    /// Exponent of the logistic: `beta x ln B - ln q`.
    #[inline]
    fn exponent(&self, x: f64) -> f64 {
        self.rate() * x - self.ln_q
    }

    /// `nu(x)` without argument checks.
    #[inline]
    pub fn nu(&self, x: f64) -> f64 {
        sigmoid(self.exponent(x))
    }

    /// `G(x)` without argument checks.
    ///
    /// Uses `sigma(a) - sigma(b) = sinh((a-b)/2) / (2 cosh(a/2) cosh(b/2))`,
    /// which has no cancellation for large `|x|` and is exactly mirror
    /// symmetric under `(q, x) -> (1/q, -x)`.
    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        let c = self.rate();
        let z = self.exponent(x);
        scaled_logistic_difference(c, z)
    }
}

/// Two-branch logistic `1 / (1 + e^-z)` that never overflows.
#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `(sigma(z + c) - sigma(z - c)) / 2` for `c > 0`.
#[inline]
fn scaled_logistic_difference(c: f64, z: f64) -> f64 {
    let numerator = 0.25 * c.sinh();
    let upper = 0.5 * (z + c);
    let lower = 0.5 * (z - c);
    if numerator.is_finite() {
        // The product keeps the result invariant under z -> -z bit for bit.
        numerator / (upper.cosh() * lower.cosh())
    } else {
        (ln_sinh(c) - 4f64.ln() - (ln_cosh(upper) + ln_cosh(lower))).exp()
    }
}

fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

fn ln_sinh(c: f64) -> f64 {
    c + (-(-2.0 * c).exp()).ln_1p() - std::f64::consts::LN_2
}

/// `Psi` together with its closed-form structural constants.
///
/// The derived fields are computed in [`DensityKernel::new`] and the type is
/// immutable, so they can never drift from `params`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityKernel {
    params: ActivationParams,
    mirror: ActivationParams,
    max_location: f64,
    max_value: f64,
}

impl DensityKernel {
    pub fn new(params: ActivationParams) -> Self {
        let max_location = params.ln_q() / params.rate();
        let b_beta = params.base_pow_beta();
        let max_value = if b_beta.is_finite() {
            (b_beta - 1.0) / (2.0 * (b_beta + 1.0))
        } else {
            0.5
        };
        Self {
            params,
            mirror: params.reciprocal(),
            max_location,
            max_value,
        }
    }

    pub fn params(&self) -> &ActivationParams {
        &self.params
    }

    pub fn log_base(&self) -> f64 {
        self.params.ln_base()
    }

    /// `log_B(q) / beta`, where `G_{q,beta}` peaks.
    pub fn max_location(&self) -> f64 {
        self.max_location
    }

    /// `(B^beta - 1) / (2 (B^beta + 1))`, the peak value of `G_{q,beta}`.
    pub fn max_value(&self) -> f64 {
        self.max_value
    }

    #[inline]
    pub fn nu(&self, x: f64) -> f64 {
        self.params.nu(x)
    }

    #[inline]
    pub fn g(&self, x: f64) -> f64 {
        self.params.g(x)
    }

    /// `G_{1/q,beta}(x)`.
    #[inline]
    pub fn g_mirror(&self, x: f64) -> f64 {
        self.mirror.g(x)
    }

    /// The symmetrized density.
    #[inline]
    pub fn psi(&self, x: f64) -> f64 {
        0.5 * (self.params.g(x) + self.mirror.g(x))
    }

    /// Upper envelope of `Psi` on `[1, inf)`:
    /// `(q + 1/q) / 2 * beta * ln B * B^(-beta (x - 1))`.
    pub fn envelope(&self, x: f64) -> f64 {
        let p = &self.params;
        0.5 * p.deformation_sum() * p.rate() * (-p.rate() * (x - 1.0)).exp()
    }
}

impl From<ActivationParams> for DensityKernel {
    fn from(params: ActivationParams) -> Self {
        Self::new(params)
    }
}

fn finite_arg(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain {
            value: x,
            reason: "argument must be finite",
        })
    }
}

/// Checked `nu_{q,beta}(x)`.
pub fn eval_nu(params: &ActivationParams, x: f64) -> Result<f64> {
    Ok(params.nu(finite_arg(x)?))
}

/// Checked `G_{q,beta}(x)`.
pub fn eval_g(params: &ActivationParams, x: f64) -> Result<f64> {
    Ok(params.g(finite_arg(x)?))
}

/// Checked `Psi(x)`.
pub fn eval_psi(params: &ActivationParams, x: f64) -> Result<f64> {
    let x = finite_arg(x)?;
    Ok(0.5 * (params.g(x) + params.reciprocal().g(x)))
}

/// Checked envelope; only defined for `x >= 1`.
pub fn psi_envelope(params: &ActivationParams, x: f64) -> Result<f64> {
    let x = finite_arg(x)?;
    if x < 1.0 {
        return Err(Error::Domain {
            value: x,
            reason: "the envelope is only established for x >= 1",
        });
    }
    Ok(DensityKernel::new(*params).envelope(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    fn params(q: f64, beta: f64, base: f64) -> ActivationParams {
        ActivationParams::new(q, beta, base).unwrap()
    }

    fn naive_nu(p: &ActivationParams, x: f64) -> f64 {
        1.0 / (1.0 + p.q() * p.base().powf(-p.beta() * x))
    }

    #[test]
    fn rejects_invalid_triples() {
        assert!(ActivationParams::new(0.0, 1.0, E).is_err());
        assert!(ActivationParams::new(-1.0, 1.0, E).is_err());
        assert!(ActivationParams::new(1.0, 0.0, E).is_err());
        assert!(ActivationParams::new(1.0, 1.0, 1.0).is_err());
        assert!(ActivationParams::new(1.0, 1.0, 0.5).is_err());
        assert!(ActivationParams::new(f64::NAN, 1.0, 2.0).is_err());
        assert!(ActivationParams::new(1.0, f64::INFINITY, 2.0).is_err());
    }

    #[test]
    fn flags_bases_close_to_one() {
        assert!(params(1.0, 1.0, 1.0 + 1e-8).has_small_log_base());
        assert!(!params(1.0, 1.0, 2.0).has_small_log_base());
    }

    #[test]
    fn nu_at_zero() {
        assert_eq!(eval_nu(&params(1.0, 1.0, E), 0.0).unwrap(), 0.5);
        assert_abs_diff_eq!(eval_nu(&params(3.0, 2.0, 2.0), 0.0).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn nu_saturates() {
        let v = eval_nu(&params(2.0, 1.0, E), 50.0).unwrap();
        // 1 - 2 e^-50 ~ 1 - 3.9e-22
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-12);
        assert!(eval_nu(&params(2.0, 1.0, E), -800.0).unwrap() >= 0.0);
        assert_eq!(eval_nu(&params(2.0, 1.0, E), 800.0).unwrap(), 1.0);
    }

    #[test]
    fn non_finite_arguments_are_domain_errors() {
        let p = params(1.0, 1.0, E);
        assert!(matches!(eval_nu(&p, f64::NAN), Err(Error::Domain { .. })));
        assert!(matches!(eval_g(&p, f64::INFINITY), Err(Error::Domain { .. })));
        assert!(matches!(eval_psi(&p, f64::NEG_INFINITY), Err(Error::Domain { .. })));
    }

    #[test]
    fn g_matches_definition() {
        let p = params(1.0, 1.0, E);
        let expected = 0.5 * (1.0 / (1.0 + (-1.0f64).exp()) - 1.0 / (1.0 + E));
        assert_abs_diff_eq!(eval_g(&p, 0.0).unwrap(), expected, epsilon = 1e-15);
        assert_abs_diff_eq!(expected, 0.2310585786, epsilon = 1e-10);
        for &x in &[-3.0, -0.4, 0.0, 0.9, 2.5] {
            for &(q, b, base) in &[(2.0, 1.0, E), (0.3, 0.7, 3.0), (5.0, 2.0, 10.0)] {
                let p = params(q, b, base);
                let direct = 0.5 * (naive_nu(&p, x + 1.0) - naive_nu(&p, x - 1.0));
                assert_abs_diff_eq!(p.g(x), direct, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn deformed_symmetry() {
        let p = params(2.0, 1.0, E);
        let lhs = eval_g(&p, -0.7).unwrap();
        let rhs = eval_g(&p.reciprocal(), 0.7).unwrap();
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-14);
    }

    #[test]
    fn global_maximum_of_g() {
        let k = DensityKernel::new(params(2.0, 1.0, E));
        assert_abs_diff_eq!(k.max_location(), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(k.g(2f64.ln()), (E - 1.0) / (2.0 * (E + 1.0)), epsilon = 1e-15);
        assert_abs_diff_eq!(k.max_value(), 0.2310585786, epsilon = 1e-10);
    }

    #[test]
    fn psi_is_even_and_collapses_at_unit_q() {
        let p = params(3.0, 0.5, 2.0);
        assert_eq!(eval_psi(&p, 1.3).unwrap(), eval_psi(&p, -1.3).unwrap());
        let unit = DensityKernel::new(params(1.0, 0.8, 3.0));
        for &x in &[-5.0, -1.0, 0.0, 0.25, 7.0] {
            assert_eq!(unit.psi(x), unit.g(x));
        }
    }

    #[test]
    fn extreme_parameters_stay_finite() {
        let k = DensityKernel::new(params(1e3, 600.0, 10.0));
        for &x in &[-2.0, -0.001, 0.0, 0.5, 3.0] {
            let v = k.psi(x);
            assert!(v.is_finite() && v >= 0.0, "psi({x}) = {v}");
        }
        assert_abs_diff_eq!(k.max_value(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn envelope_values_and_domain() {
        let p = params(1.0, 1.0, E);
        assert_abs_diff_eq!(psi_envelope(&p, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(psi_envelope(&p, 0.99).is_err());

        let p = params(2.0, 1.5, 2.0);
        for &x in &[1.0, 2.0, 4.0, 8.0] {
            assert!(eval_psi(&p, x).unwrap() < psi_envelope(&p, x).unwrap());
        }

        let shift = 1.0 / (p.beta() * p.ln_base());
        let ratio = psi_envelope(&p, 3.0 + shift).unwrap() / psi_envelope(&p, 3.0).unwrap();
        assert_abs_diff_eq!(ratio, (-1.0f64).exp(), epsilon = 1e-14);
    }

    #[test]
    fn stable_nu_agrees_with_naive_form() {
        for &q in &[0.1, 1.0, 10.0] {
            for &beta in &[0.25, 1.0, 4.0] {
                for &base in &[1.5, E, 10.0] {
                    let p = params(q, beta, base);
                    let mut x = -40.0;
                    while x <= 40.0 {
                        let naive = naive_nu(&p, x);
                        if naive.is_finite() && naive > 1e-300 {
                            let stable = p.nu(x);
                            assert!(
                                ((stable - naive) / naive).abs() <= 1e-12,
                                "q={q} beta={beta} B={base} x={x}: {stable} vs {naive}"
                            );
                        }
                        x += 0.37;
                    }
                }
            }
        }
    }
}
