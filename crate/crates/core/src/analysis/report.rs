//! Empirical deviations set against the matching bounds.

use crate::analysis::bounds::{jackson_bound, BoundQuery};
use crate::error::{Error, Result};
use crate::function::TargetFunction;
use crate::operators::{OperatorEngine, OperatorSpec};
use crate::quadrature::Integral;

/// Quadrature must be this many times tighter than a bound for a verdict.
pub const CONCLUSIVE_FACTOR: f64 = 100.0;

/// Allowed excess of `empirical / bound` over 1 in conclusive runs.
pub const RATIO_SLACK: f64 = 1e-3;

/// Shape of the evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl GridSpec {
    pub fn of(xs: &[f64]) -> Self {
        Self {
            start: xs.first().copied().unwrap_or(f64::NAN),
            end: xs.last().copied().unwrap_or(f64::NAN),
            points: xs.len(),
        }
    }
}

/// One empirical-versus-theoretical comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub label: String,
    pub q: f64,
    pub beta: f64,
    pub base: f64,
    pub query: BoundQuery,
    pub grid: GridSpec,
    /// Grid sup of `|Op f^(k) - f^(k)|`.
    pub empirical: f64,
    pub theoretical: f64,
    pub ratio: f64,
    /// Largest quadrature error estimate over the grid.
    pub quad_error: f64,
    pub conclusive: bool,
}

impl BoundReport {
    /// False only for a conclusive run whose ratio exceeds `1 + RATIO_SLACK`.
    pub fn passes(&self) -> bool {
        !self.conclusive || self.ratio <= 1.0 + RATIO_SLACK
    }
}

/// `empirical / bound`, with `0/0 = 0` and `x/0 = inf`.
pub fn bound_ratio(empirical: f64, bound: f64) -> f64 {
    if bound > 0.0 {
        empirical / bound
    } else if empirical == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// Grid sup of `|values - f|` and the largest error estimate.
pub fn sup_deviation(f: &TargetFunction, xs: &[f64], values: &[Integral]) -> (f64, f64) {
    xs.iter().zip(values).fold((0.0f64, 0.0f64), |(dev, err), (&x, v)| {
        (dev.max((v.value - f.eval(x)).abs()), err.max(v.error))
    })
}

/// Grid sup of `|Op f - f|` (of `f^(k)` when `query.k > 0`) against `T` or `E`.
pub fn compare(
    f: &TargetFunction,
    spec: &OperatorSpec,
    query: &BoundQuery,
    xs: &[f64],
    engine: &OperatorEngine,
) -> Result<BoundReport> {
    if spec.kind() != query.kind || spec.n() != query.n {
        return Err(Error::Specification(format!(
            "operator {spec} does not match the bound query ({} at n = {})",
            query.kind, query.n
        )));
    }
    let params = *engine.kernel().params();
    let theoretical = jackson_bound(&f.derivative(query.k)?, &BoundQuery { k: 0, ..*query }, &params)?;
    let target = f.derivative(query.k)?;
    let values = engine.apply_grid(&target, spec, xs)?;
    let (empirical, quad_error) = sup_deviation(&target, xs, &values);
    Ok(BoundReport {
        label: f.label().to_string(),
        q: params.q(),
        beta: params.beta(),
        base: params.base(),
        query: *query,
        grid: GridSpec::of(xs),
        empirical,
        theoretical,
        ratio: bound_ratio(empirical, theoretical),
        quad_error,
        conclusive: quad_error * CONCLUSIVE_FACTOR <= theoretical,
    })
}

/// `Op((. - x)^k)(x)` for `k = 1..=order`. These do not depend on `x`.
pub fn centered_moments(engine: &OperatorEngine, spec: &OperatorSpec, order: usize) -> Result<Vec<Integral>> {
    (1..=order as u32)
        .map(|k| engine.centered_moment(spec, 0.0, k))
        .collect()
}

/// `|Op f(x) - f(x) - sum_{k=1}^N f^(k)(x)/k! Op((. - x)^k)(x)|` on the grid,
/// with `N = moments.len()` and `values[i] = Op f(xs[i])`, plus the largest
/// error estimate involved.
pub fn taylor_residuals(
    f: &TargetFunction,
    xs: &[f64],
    values: &[Integral],
    moments: &[Integral],
) -> Result<(Vec<f64>, f64)> {
    if xs.len() != values.len() {
        return Err(Error::Specification(format!(
            "{} grid points but {} operator values",
            xs.len(),
            values.len()
        )));
    }
    let derivatives = (1..=moments.len())
        .map(|k| f.derivative(k))
        .collect::<Result<Vec<_>>>()?;
    let mut error = 0.0f64;
    let mut residuals = Vec::with_capacity(xs.len());
    for (&x, v) in xs.iter().zip(values) {
        let mut expansion = f.eval(x);
        let mut factorial = 1.0;
        let mut local = v.error;
        for (k, (d, m)) in derivatives.iter().zip(moments).enumerate() {
            factorial *= (k + 1) as f64;
            let coeff = d.eval(x) / factorial;
            expansion += coeff * m.value;
            local += coeff.abs() * m.error;
        }
        residuals.push((v.value - expansion).abs());
        error = error.max(local);
    }
    Ok((residuals, error))
}
