//! The direct, Kantorovich and quadrature operators and their iterates.
//!
//! All three are evaluated after the substitution `h = n x - v`, so that
//!
//! ```text
//! direct       A_n f(x)  = int f(x - h/n) Psi(h) dh
//! Kantorovich  A*_n f(x) = int n int_0^{1/n} f(t + x - h/n) dt Psi(h) dh
//! quadrature   Ā_n f(x)  = int sum_s w_s f(x - h/n + s/(n r)) Psi(h) dh
//! ```
//!
//! and one truncation window serves every `x` and `n`.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::activation::DensityKernel;
use crate::error::{Error, Result};
use crate::function::TargetFunction;
use crate::gauss::GaussRule;
use crate::quadrature::{Integral, QuadratureConfig, WeightedQuadrature};

/// Order of the fixed rule for the Kantorovich inner average.
pub const KANTOROVICH_NODES: usize = 6;

/// Default cap on integrand evaluations for one iterated run.
pub const DEFAULT_EVALUATION_BUDGET: f64 = 2e10;

const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum OperatorKind {
    Direct,
    Kantorovich,
    Quadrature,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 3] = [
        OperatorKind::Direct,
        OperatorKind::Kantorovich,
        OperatorKind::Quadrature,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::Direct => "direct",
            OperatorKind::Kantorovich => "kantorovich",
            OperatorKind::Quadrature => "quadrature",
        }
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "direct" => Ok(OperatorKind::Direct),
            "kantorovich" => Ok(OperatorKind::Kantorovich),
            "quadrature" => Ok(OperatorKind::Quadrature),
            other => Err(Error::Specification(format!("unknown operator kind `{other}`"))),
        }
    }
}

/// One operator: kind, scale `n` and, for the quadrature kind, the weights `w_1..w_r`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    kind: OperatorKind,
    n: u32,
    weights: Vec<f64>,
}

impl OperatorSpec {
    pub fn direct(n: u32) -> Result<Self> {
        Self::new(OperatorKind::Direct, n, Vec::new())
    }

    pub fn kantorovich(n: u32) -> Result<Self> {
        Self::new(OperatorKind::Kantorovich, n, Vec::new())
    }

    pub fn quadrature(n: u32, weights: Vec<f64>) -> Result<Self> {
        Self::new(OperatorKind::Quadrature, n, weights)
    }

    /// Quadrature kind with `w_s = 1/r`.
    pub fn uniform_quadrature(n: u32, r: usize) -> Result<Self> {
        Self::quadrature(n, vec![1.0 / r.max(1) as f64; r])
    }

    /// Builds a spec of any kind; `weights` are ignored unless the kind is quadrature.
    pub fn new(kind: OperatorKind, n: u32, weights: Vec<f64>) -> Result<Self> {
        let spec = Self {
            kind,
            n,
            weights: if kind == OperatorKind::Quadrature {
                weights
            } else {
                Vec::new()
            },
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                reason: "the operator scale must be at least 1",
            });
        }
        if self.kind != OperatorKind::Quadrature {
            return Ok(());
        }
        if self.weights.is_empty() {
            return Err(Error::Specification(
                "quadrature operator needs at least one weight".into(),
            ));
        }
        if let Some(w) = self.weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::Specification(format!(
                "quadrature weight {w} is not a nonnegative real"
            )));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::Specification(format!(
                "quadrature weights sum to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of quadrature weights, 0 for the other kinds.
    pub fn r(&self) -> usize {
        self.weights.len()
    }

    /// Integrand calls per outer node.
    fn fan_out(&self) -> f64 {
        match self.kind {
            OperatorKind::Direct => 1.0,
            OperatorKind::Kantorovich => KANTOROVICH_NODES as f64,
            OperatorKind::Quadrature => self.weights.len() as f64,
        }
    }
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            OperatorKind::Quadrature => write!(f, "quadrature[{}](r={})", self.n, self.weights.len()),
            kind => write!(f, "{kind}[{}]", self.n),
        }
    }
}

/// A chain of operators applied innermost first.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationPlan {
    chain: Vec<OperatorSpec>,
    monotone: bool,
}

impl IterationPlan {
    pub fn new(chain: Vec<OperatorSpec>) -> Result<Self> {
        if chain.is_empty() {
            return Err(Error::Specification(
                "an iteration plan needs at least one stage".into(),
            ));
        }
        for spec in &chain {
            spec.validate()?;
        }
        Ok(Self { chain, monotone: false })
    }

    /// A plan tagged monotone: scales must be nondecreasing from the innermost stage out.
    pub fn monotone(chain: Vec<OperatorSpec>) -> Result<Self> {
        let mut plan = Self::new(chain)?;
        if plan.chain.windows(2).any(|w| w[0].n > w[1].n) {
            return Err(Error::Specification(
                "a monotone plan needs nondecreasing scales k_1 <= k_2 <= ...".into(),
            ));
        }
        plan.monotone = true;
        Ok(plan)
    }

    /// `spec` applied `r` times.
    pub fn repeated(spec: OperatorSpec, r: usize) -> Result<Self> {
        Self::new(vec![spec; r])
    }

    pub fn stages(&self) -> &[OperatorSpec] {
        &self.chain
    }

    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    pub fn is_homogeneous(&self) -> bool {
        self.chain.windows(2).all(|w| w[0] == w[1])
    }
}

/// Both sides of `(Op f)^(k)(x) = Op(f^(k))(x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommutationCheck {
    /// Central finite difference of `x -> Op f(x)`.
    pub lhs: f64,
    pub rhs: f64,
    pub step: f64,
    /// Finite-difference truncation estimate plus propagated quadrature error.
    pub tolerance: f64,
}

impl CommutationCheck {
    pub fn holds(&self) -> bool {
        (self.lhs - self.rhs).abs() <= self.tolerance
    }
}

#[derive(Debug, Clone, Copy)]
enum Sweep {
    Adaptive,
    Fixed(u32),
}

/// Evaluates operators for one kernel and quadrature configuration.
///
/// Cloning is cheap; clones share the cached quadrature tables.
#[derive(Debug, Clone)]
pub struct OperatorEngine {
    quad: Arc<WeightedQuadrature>,
    inner: Arc<GaussRule>,
    budget: f64,
}

impl OperatorEngine {
    pub fn new(kernel: DensityKernel, config: QuadratureConfig) -> Result<Self> {
        Ok(Self {
            quad: Arc::new(WeightedQuadrature::new(kernel, config)?),
            inner: Arc::new(GaussRule::new(KANTOROVICH_NODES)),
            budget: DEFAULT_EVALUATION_BUDGET,
        })
    }

    /// Sets the evaluation budget for iterated runs.
    pub fn with_budget(mut self, budget: f64) -> Self {
        self.budget = budget;
        self
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn quadrature(&self) -> &WeightedQuadrature {
        &self.quad
    }

    pub fn kernel(&self) -> &DensityKernel {
        self.quad.kernel()
    }

    pub fn config(&self) -> &QuadratureConfig {
        self.quad.config()
    }

    fn run<G: Fn(f64) -> f64>(&self, g: G, breaks: &[f64], sweep: Sweep) -> Result<Integral> {
        match sweep {
            Sweep::Adaptive => self.quad.integrate_with_breaks(g, breaks),
            Sweep::Fixed(level) => Ok(Integral {
                value: self.quad.sum_at_level(g, breaks, level)?,
                error: 0.0,
                refinements: level,
            }),
        }
    }

    /// `(1/width) int_y^{y+width} f`, split at the kinks of `f`.
    fn average(&self, f: &TargetFunction, y: f64, width: f64, kinks: &[f64]) -> f64 {
        let hi = y + width;
        let piece = |a: f64, b: f64| self.inner.mapped(a, b).map(|(u, w)| w * f.eval(u)).sum::<f64>();
        if kinks.is_empty() {
            return piece(y, hi) / width;
        }
        let first = kinks.partition_point(|b| *b <= y);
        let last = kinks.partition_point(|b| *b < hi);
        let mut a = y;
        let mut total = 0.0;
        for &b in &kinks[first..last] {
            total += piece(a, b);
            a = b;
        }
        total += piece(a, hi);
        total / width
    }

    fn evaluate(&self, f: &TargetFunction, spec: &OperatorSpec, x: f64, sweep: Sweep) -> Result<Integral> {
        let n = spec.n as f64;
        let radius = self.quad.window().radius();
        match spec.kind {
            OperatorKind::Direct => {
                let breaks: Vec<f64> = f
                    .kinks_in(x - radius / n, x + radius / n)
                    .iter()
                    .map(|b| n * (x - b))
                    .collect();
                self.run(|h| f.eval(x - h / n), &breaks, sweep)
            }
            OperatorKind::Kantorovich => {
                let kinks = f.kinks_in(x - radius / n, x + (radius + 1.0) / n);
                let breaks: Vec<f64> = kinks.iter().flat_map(|b| [n * (x - b), n * (x - b) + 1.0]).collect();
                let width = 1.0 / n;
                self.run(|h| self.average(f, x - h / n, width, &kinks), &breaks, sweep)
            }
            OperatorKind::Quadrature => {
                let r = spec.weights.len() as f64;
                let kinks = f.kinks_in(x - radius / n, x + (radius + 1.0) / n);
                let breaks: Vec<f64> = kinks
                    .iter()
                    .flat_map(|b| (1..=spec.weights.len()).map(move |s| n * (x - b) + s as f64 / r))
                    .collect();
                let shift = 1.0 / (n * r);
                self.run(
                    |h| {
                        let y = x - h / n;
                        spec.weights
                            .iter()
                            .enumerate()
                            .map(|(s, w)| w * f.eval(y + (s + 1) as f64 * shift))
                            .sum()
                    },
                    &breaks,
                    sweep,
                )
            }
        }
    }

    /// `Op f(x)` for any operator kind.
    pub fn apply(&self, f: &TargetFunction, spec: &OperatorSpec, x: f64) -> Result<Integral> {
        spec.validate()?;
        self.evaluate(f, spec, x, Sweep::Adaptive)
    }

    pub fn apply_direct(&self, f: &TargetFunction, n: u32, x: f64) -> Result<Integral> {
        self.apply(f, &OperatorSpec::direct(n)?, x)
    }

    pub fn apply_kantorovich(&self, f: &TargetFunction, n: u32, x: f64) -> Result<Integral> {
        self.apply(f, &OperatorSpec::kantorovich(n)?, x)
    }

    pub fn apply_quadrature_op(&self, f: &TargetFunction, spec: &OperatorSpec, x: f64) -> Result<Integral> {
        if spec.kind != OperatorKind::Quadrature {
            return Err(Error::Specification(format!(
                "{spec} is not a quadrature-type operator"
            )));
        }
        self.apply(f, spec, x)
    }

    /// One sweep at a fixed refinement level, without a convergence check.
    pub fn apply_at_level(&self, f: &TargetFunction, spec: &OperatorSpec, x: f64, level: u32) -> Result<f64> {
        Ok(self.evaluate(f, spec, x, Sweep::Fixed(level))?.value)
    }

    /// `Op f` on every grid point. Points run in parallel; the first failing
    /// point in grid order decides the error.
    pub fn apply_grid(&self, f: &TargetFunction, spec: &OperatorSpec, xs: &[f64]) -> Result<Vec<Integral>> {
        spec.validate()?;
        let results: Vec<Result<Integral>> = xs
            .par_iter()
            .map(|&x| self.evaluate(f, spec, x, Sweep::Adaptive))
            .collect();
        results.into_iter().collect()
    }

    /// `Op((. - x)^k)(x)`. It does not depend on `x`.
    pub fn centered_moment(&self, spec: &OperatorSpec, x: f64, k: u32) -> Result<Integral> {
        if k == 0 {
            return Err(Error::Domain {
                value: 0.0,
                reason: "moment order must be at least 1",
            });
        }
        let power = k as i32;
        let f = TargetFunction::new(format!("(.-x)^{k}"), move |u| (u - x).powi(power), f64::MAX)?;
        self.apply(&f, spec, x)
    }

    /// Compares the `k`-th central difference of `Op f` at `x` with `Op(f^(k))(x)`.
    ///
    /// The step is `1e-4` for `k <= 2` and `1e-3` for `k = 3, 4`.
    pub fn derivative_commutation_check(
        &self,
        f: &TargetFunction,
        spec: &OperatorSpec,
        x: f64,
        k: usize,
    ) -> Result<CommutationCheck> {
        let (offsets, coeffs, constant): (&[f64], &[f64], f64) = match k {
            1 => (&[-1.0, 1.0], &[-0.5, 0.5], 1.0 / 6.0),
            2 => (&[-1.0, 0.0, 1.0], &[1.0, -2.0, 1.0], 1.0 / 12.0),
            3 => (&[-2.0, -1.0, 1.0, 2.0], &[-0.5, 1.0, -1.0, 0.5], 0.25),
            4 => (&[-2.0, -1.0, 0.0, 1.0, 2.0], &[1.0, -4.0, 6.0, -4.0, 1.0], 1.0 / 6.0),
            _ => {
                return Err(Error::Specification(format!(
                    "derivative commutation is checked for orders 1..=4, got {k}"
                )))
            }
        };
        let derivative = f.derivative(k)?;
        let step: f64 = if k <= 2 { 1e-4 } else { 1e-3 };
        let scale = step.powi(k as i32);

        let mut lhs = 0.0;
        let mut noise = 0.0;
        for (&o, &c) in offsets.iter().zip(coeffs) {
            let v = self.apply(f, spec, x + o * step)?;
            lhs += c * v.value;
            noise += c.abs() * (v.error + f64::EPSILON * v.value.abs());
        }
        lhs /= scale;
        noise /= scale;

        let rhs = self.apply(&derivative, spec, x)?;
        // Truncation needs sup |f^(k+2)|; without it the highest declared
        // derivative norm stands in.
        let top = f.derivative_order();
        let curvature = f.derivative_sup_norm((k + 2).min(top))?;
        let tolerance = constant * step * step * curvature + noise + rhs.error;
        Ok(CommutationCheck {
            lhs,
            rhs: rhs.value,
            step,
            tolerance,
        })
    }

    /// Integrand evaluations for one adaptive outer sweep pair (levels 0 and 1).
    fn outer_cost(&self, spec: &OperatorSpec) -> f64 {
        (self.quad.nodes_at(0) + self.quad.nodes_at(1)) as f64 * spec.fan_out()
    }

    fn stage_cost(&self, spec: &OperatorSpec, level: u32) -> f64 {
        self.quad.nodes_at(level) as f64 * spec.fan_out()
    }

    /// Lower estimate of integrand evaluations for `plan` on `points` grid points.
    pub fn estimated_cost(&self, plan: &IterationPlan, points: usize, inner_levels: &[u32]) -> f64 {
        let (outer, inner) = plan.chain.split_last().expect("plan is nonempty");
        let mut cost = points as f64 * self.outer_cost(outer);
        for (i, spec) in inner.iter().enumerate() {
            cost *= self.stage_cost(spec, inner_levels.get(i).copied().unwrap_or(0));
        }
        cost
    }

    fn check_budget(&self, plan: &IterationPlan, points: usize, levels: &[u32]) -> Result<()> {
        let needed = self.estimated_cost(plan, points, levels);
        if needed > self.budget {
            return Err(Error::BudgetExceeded {
                needed,
                budget: self.budget,
            });
        }
        Ok(())
    }

    /// The lazily evaluated output of `spec` applied to `f` at a fixed level.
    fn stage_function(&self, f: &TargetFunction, spec: &OperatorSpec, level: u32) -> Result<TargetFunction> {
        let engine = self.clone();
        let inner = f.clone();
        let stage = spec.clone();
        let g = TargetFunction::new(
            format!("{stage}({})", f.label()),
            move |y| engine.apply_at_level(&inner, &stage, y, level).unwrap_or(f64::NAN),
            f.sup_norm(),
        )?;
        match f.sup_window() {
            Some((a, b)) => g.with_sup_window(a, b),
            None => Ok(g),
        }
    }

    /// Builds the lazy inner stages. Each inner stage is calibrated once at
    /// `probe` and then evaluated at one level below the accepted one, whose
    /// distance to the accepted value is the refinement residual.
    fn calibrate(
        &self,
        f: &TargetFunction,
        plan: &IterationPlan,
        probe: f64,
        points: usize,
    ) -> Result<(Vec<TargetFunction>, Vec<f64>)> {
        let inner = &plan.chain[..plan.chain.len() - 1];
        let mut stages = vec![f.clone()];
        let mut levels = Vec::with_capacity(inner.len());
        let mut residuals = Vec::with_capacity(inner.len());
        for spec in inner {
            let current = stages.last().expect("seeded with f");
            let calibration = self.evaluate(current, spec, probe, Sweep::Adaptive)?;
            levels.push(calibration.refinements.saturating_sub(1));
            residuals.push(calibration.error);
            self.check_budget(plan, points, &levels)?;
            stages.push(self.stage_function(current, spec, *levels.last().expect("just pushed"))?);
        }
        Ok((stages, residuals))
    }

    fn iterate(
        &self,
        f: &TargetFunction,
        plan: &IterationPlan,
        xs: &[f64],
        every_stage: bool,
    ) -> Result<Vec<Vec<Integral>>> {
        self.check_budget(plan, xs.len(), &[])?;
        let probe = if xs.is_empty() { 0.0 } else { xs[xs.len() / 2] };
        let (stages, residuals) = self.calibrate(f, plan, probe, xs.len())?;
        let last = plan.chain.len() - 1;
        let first = if every_stage { 0 } else { last };
        (first..=last)
            .map(|p| {
                let inherited: f64 = residuals[..p].iter().sum();
                let mut values = self.apply_grid(&stages[p], &plan.chain[p], xs)?;
                for v in &mut values {
                    v.error += inherited;
                }
                Ok(values)
            })
            .collect()
    }

    /// The chain applied to `f` on every grid point.
    ///
    /// The error estimate of each value adds the calibration residuals of the
    /// inner stages to the outer quadrature error.
    pub fn apply_iterated(&self, f: &TargetFunction, plan: &IterationPlan, xs: &[f64]) -> Result<Vec<Integral>> {
        Ok(self.iterate(f, plan, xs, false)?.pop().expect("one output stage"))
    }

    /// Every prefix of the chain on the grid: entry `p` holds stages `1..=p+1` applied.
    pub fn apply_iterated_stages(
        &self,
        f: &TargetFunction,
        plan: &IterationPlan,
        xs: &[f64],
    ) -> Result<Vec<Vec<Integral>>> {
        self.iterate(f, plan, xs, true)
    }
}
