//! Target functions with the metadata the bounds need.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A shareable real function.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Returns the non-smooth points of a function inside `[a, b]`, ascending.
pub type KinkFn = Arc<dyn Fn(f64, f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
struct Derivative {
    eval: RealFn,
    sup_norm: f64,
    modulus: Option<RealFn>,
}

/// A function `f` together with `||f||`, optional derivatives and an optional
/// closed-form modulus of continuity.
///
/// When `sup_window` is set the declared norm only holds on that window.
/// This is how unbounded functions such as the identity are admitted.
#[derive(Clone)]
pub struct TargetFunction {
    label: String,
    eval: RealFn,
    sup_norm: f64,
    sup_window: Option<(f64, f64)>,
    derivatives: Vec<Derivative>,
    exact_modulus: Option<RealFn>,
    kinks: Option<KinkFn>,
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TargetFunction")
            .field("label", &self.label)
            .field("sup_norm", &self.sup_norm)
            .field("sup_window", &self.sup_window)
            .field("derivative_order", &self.derivatives.len())
            .field("exact_modulus", &self.exact_modulus.is_some())
            .field("kinks", &self.kinks.is_some())
            .finish()
    }
}

fn check_norm(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "a declared sup-norm must be finite and nonnegative",
        })
    }
}

impl TargetFunction {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sup_norm: f64,
    ) -> Result<Self> {
        check_norm("sup_norm", sup_norm)?;
        Ok(Self {
            label: label.into(),
            eval: Arc::new(eval),
            sup_norm,
            sup_window: None,
            derivatives: Vec::new(),
            exact_modulus: None,
            kinks: None,
        })
    }

    /// `f = value` everywhere; all derivatives vanish.
    pub fn constant(label: impl Into<String>, value: f64, derivative_order: usize) -> Result<Self> {
        let mut f = Self::new(label, move |_| value, value.abs())?.with_modulus(|_| 0.0);
        for _ in 0..derivative_order {
            f = f.with_derivative_modulus(|_| 0.0, 0.0, |_| 0.0)?;
        }
        Ok(f)
    }

    /// Restricts the declared norm to `[a, b]`.
    pub fn with_sup_window(mut self, a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Domain {
                value: b - a,
                reason: "sup window must be finite with a < b",
            });
        }
        self.sup_window = Some((a, b));
        Ok(self)
    }

    /// Appends the next derivative `f^(k+1)` with its sup-norm.
    pub fn with_derivative(self, eval: impl Fn(f64) -> f64 + Send + Sync + 'static, sup_norm: f64) -> Result<Self> {
        self.push_derivative(Arc::new(eval), sup_norm, None)
    }

    /// As [`with_derivative`](Self::with_derivative) with a closed-form modulus for that derivative.
    pub fn with_derivative_modulus(
        self,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        sup_norm: f64,
        modulus: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        self.push_derivative(Arc::new(eval), sup_norm, Some(Arc::new(modulus)))
    }

    fn push_derivative(mut self, eval: RealFn, sup_norm: f64, modulus: Option<RealFn>) -> Result<Self> {
        check_norm("derivative sup_norm", sup_norm)?;
        self.derivatives.push(Derivative {
            eval,
            sup_norm,
            modulus,
        });
        Ok(self)
    }

    pub fn with_modulus(mut self, modulus: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.exact_modulus = Some(Arc::new(modulus));
        self
    }

    /// Declares where `f` fails to be smooth. Integration splits panels there.
    pub fn with_kinks(mut self, kinks: impl Fn(f64, f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.kinks = Some(Arc::new(kinks));
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    pub fn evaluator(&self) -> RealFn {
        Arc::clone(&self.eval)
    }

    pub fn sup_norm(&self) -> f64 {
        self.sup_norm
    }

    pub fn sup_window(&self) -> Option<(f64, f64)> {
        self.sup_window
    }

    /// Highest derivative order carried.
    pub fn derivative_order(&self) -> usize {
        self.derivatives.len()
    }

    /// Declared `||f^(k)||`; `k = 0` is `f` itself.
    pub fn derivative_sup_norm(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Ok(self.sup_norm);
        }
        self.derivatives
            .get(k - 1)
            .map(|d| d.sup_norm)
            .ok_or_else(|| self.missing(k))
    }

    fn missing(&self, k: usize) -> Error {
        Error::Specification(format!(
            "`{}` carries derivatives up to order {}, order {k} was requested",
            self.label,
            self.derivatives.len()
        ))
    }

    /// `f^(k)` as a function of its own, carrying the remaining derivatives.
    pub fn derivative(&self, k: usize) -> Result<TargetFunction> {
        if k == 0 {
            return Ok(self.clone());
        }
        let d = self.derivatives.get(k - 1).ok_or_else(|| self.missing(k))?;
        Ok(TargetFunction {
            label: format!("{}^({k})", self.label),
            eval: Arc::clone(&d.eval),
            sup_norm: d.sup_norm,
            sup_window: self.sup_window,
            derivatives: self.derivatives[k..].to_vec(),
            exact_modulus: d.modulus.clone(),
            kinks: None,
        })
    }

    /// The closed-form modulus `omega(f, theta)`, if declared.
    pub fn exact_modulus(&self, theta: f64) -> Option<f64> {
        self.exact_modulus.as_ref().map(|m| m(theta))
    }

    pub fn has_exact_modulus(&self) -> bool {
        self.exact_modulus.is_some()
    }

    pub fn has_kinks(&self) -> bool {
        self.kinks.is_some()
    }

    /// Kinks inside `[a, b]`, ascending.
    pub fn kinks_in(&self, a: f64, b: f64) -> Vec<f64> {
        match &self.kinks {
            Some(k) => {
                let mut out: Vec<f64> = k(a, b).into_iter().filter(|t| *t >= a && *t <= b).collect();
                out.sort_by(f64::total_cmp);
                out.dedup();
                out
            }
            None => Vec::new(),
        }
    }

    /// Spot-checks `|f(x)| <= sup_norm` at the given points (inside the sup window, if any).
    pub fn check_sup_norm(&self, points: &[f64]) -> Result<()> {
        let limit = self.sup_norm * (1.0 + 1e-12) + 1e-15;
        for &x in points {
            if let Some((a, b)) = self.sup_window {
                if x < a || x > b {
                    continue;
                }
            }
            let v = self.eval(x);
            if v.abs().partial_cmp(&limit).map_or(true, Ordering::is_gt) {
                return Err(Error::Specification(format!(
                    "`{}`: |f({x})| = {} exceeds the declared sup-norm {}",
                    self.label,
                    v.abs(),
                    self.sup_norm
                )));
            }
        }
        Ok(())
    }
}
