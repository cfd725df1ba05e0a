//! `Psi`-weighted integration over the real line.
//!
//! The line is truncated to `[-R, R]` where `R` inverts the tail estimate
//! `(q + 1/q) B^(-beta (R - 1)) = tail_epsilon`, so the discarded mass is
//! certified to be below `tail_epsilon`. The window is cut into equal panels
//! of width at most `panel_width`, each integrated with a 10-point
//! Gauss-Legendre rule. Refinement halves every panel until two successive
//! levels agree to `rel_tol`.
//!
//! Sums always run left to right over panels and in node order, so results
//! are bit-reproducible.

use std::sync::OnceLock;

use crate::activation::{ActivationParams, DensityKernel};
use crate::error::{Error, Result};
use crate::gauss::GaussRule;

/// Nodes per panel.
pub const PANEL_NODES: usize = 10;

/// Largest accepted truncation budget.
pub const MAX_TAIL_EPSILON: f64 = 1e-6;

/// Levels whose node/weight tables are cached. Deeper levels are evaluated on the fly.
const CACHED_LEVELS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    /// Mass allowed outside the truncation window.
    pub tail_epsilon: f64,
    /// Relative change between successive levels at which refinement stops.
    pub rel_tol: f64,
    pub max_refinements: u32,
    pub panel_width: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            tail_epsilon: 1e-12,
            rel_tol: 1e-10,
            max_refinements: 20,
            panel_width: 1.0,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon <= MAX_TAIL_EPSILON) {
            return Err(Error::InvalidParameter {
                name: "tail_epsilon",
                value: self.tail_epsilon,
                reason: "must lie in (0, 1e-6]",
            });
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter {
                name: "rel_tol",
                value: self.rel_tol,
                reason: "must be a finite positive number",
            });
        }
        if self.max_refinements < 1 {
            return Err(Error::InvalidParameter {
                name: "max_refinements",
                value: self.max_refinements as f64,
                reason: "at least one refinement is required",
            });
        }
        if !(self.panel_width.is_finite() && self.panel_width > 0.0) {
            return Err(Error::InvalidParameter {
                name: "panel_width",
                value: self.panel_width,
                reason: "must be a finite positive number",
            });
        }
        Ok(())
    }
}

/// Symmetric truncation window `[-radius, radius]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWindow {
    radius: f64,
}

impl TruncationWindow {
    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// `R = 1 + log_B((q + 1/q) / tail_epsilon) / beta`.
///
/// Any budget in `(0, q + 1/q]` is inverted; [`QuadratureConfig`] narrows the
/// range used for integration to `(0, 1e-6]`.
pub fn truncation_radius(params: &ActivationParams, tail_epsilon: f64) -> Result<TruncationWindow> {
    if !(tail_epsilon > 0.0 && tail_epsilon <= params.deformation_sum()) {
        return Err(Error::InvalidParameter {
            name: "tail_epsilon",
            value: tail_epsilon,
            reason: "must lie in (0, q + 1/q]",
        });
    }
    let radius = 1.0 + (params.deformation_sum() / tail_epsilon).ln() / params.rate();
    Ok(TruncationWindow {
        radius: radius.max(1.0),
    })
}

/// A quadrature result with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Integral {
    pub value: f64,
    /// Last refinement residual plus the truncation allowance.
    pub error: f64,
    /// Refinement level at which the result was accepted.
    pub refinements: u32,
}

#[derive(Debug, Default, Clone, Copy)]
struct Accumulator {
    value: f64,
    magnitude: f64,
}

impl Accumulator {
    #[inline]
    fn add(&mut self, h: f64, weight: f64, v: f64) -> Result<()> {
        if !v.is_finite() {
            return Err(Error::IntegrandNotFinite { at: h });
        }
        self.value += weight * v;
        self.magnitude += weight * v.abs();
        Ok(())
    }
}

#[derive(Debug)]
struct LevelTable {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// The integration engine for one kernel and one configuration.
///
/// Node positions and `weight * Psi(node)` products are cached per level, so
/// repeated integrals against the same kernel only pay for integrand calls.
#[derive(Debug)]
pub struct WeightedQuadrature {
    kernel: DensityKernel,
    config: QuadratureConfig,
    window: TruncationWindow,
    panels: usize,
    rule: GaussRule,
    tables: Vec<OnceLock<LevelTable>>,
}

impl WeightedQuadrature {
    pub fn new(kernel: DensityKernel, config: QuadratureConfig) -> Result<Self> {
        config.validate()?;
        let window = truncation_radius(kernel.params(), config.tail_epsilon)?;
        let panels = ((2.0 * window.radius) / config.panel_width).ceil().max(1.0) as usize;
        Ok(Self {
            kernel,
            config,
            window,
            panels,
            rule: GaussRule::new(PANEL_NODES),
            tables: (0..=CACHED_LEVELS).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn kernel(&self) -> &DensityKernel {
        &self.kernel
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.config
    }

    pub fn window(&self) -> TruncationWindow {
        self.window
    }

    /// Number of base panels covering `[-R, R]`.
    pub fn panel_count(&self) -> usize {
        self.panels
    }

    /// Integrand evaluations for one sweep at `level`.
    pub fn nodes_at(&self, level: u32) -> usize {
        (self.panels << level) * PANEL_NODES
    }

    fn subpanel(&self, level: u32, j: usize) -> (f64, f64) {
        let r = self.window.radius;
        let width = 2.0 * r / (self.panels << level) as f64;
        (-r + j as f64 * width, -r + (j + 1) as f64 * width)
    }

    fn table(&self, level: u32) -> Option<&LevelTable> {
        let slot = self.tables.get(level as usize)?;
        Some(slot.get_or_init(|| {
            let count = self.panels << level;
            let mut nodes = Vec::with_capacity(count * PANEL_NODES);
            let mut weights = Vec::with_capacity(count * PANEL_NODES);
            for j in 0..count {
                let (lo, hi) = self.subpanel(level, j);
                for (h, w) in self.rule.mapped(lo, hi) {
                    nodes.push(h);
                    weights.push(w * self.kernel.psi(h));
                }
            }
            LevelTable { nodes, weights }
        }))
    }

    #[inline]
    fn panel_direct<F: Fn(f64) -> f64>(&self, g: &F, a: f64, b: f64, acc: &mut Accumulator) -> Result<()> {
        for (h, w) in self.rule.mapped(a, b) {
            acc.add(h, w * self.kernel.psi(h), g(h))?;
        }
        Ok(())
    }

    /// Breakpoints falling strictly inside a subpanel at `level`, as
    /// `(subpanel, position)` sorted left to right.
    fn interior_breaks(&self, breaks: &[f64], level: u32) -> Vec<(usize, f64)> {
        if breaks.is_empty() {
            return Vec::new();
        }
        let r = self.window.radius;
        let count = self.panels << level;
        let width = 2.0 * r / count as f64;
        let margin = 1e-12 * width;
        let mut out: Vec<(usize, f64)> = breaks
            .iter()
            .filter(|b| **b > -r && **b < r)
            .filter_map(|&b| {
                let j = (((b + r) / width).floor() as usize).min(count - 1);
                let (lo, hi) = self.subpanel(level, j);
                (b - lo > margin && hi - b > margin).then_some((j, b))
            })
            .collect();
        out.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        out.dedup();
        out
    }

    fn level_sum<F: Fn(f64) -> f64>(&self, g: &F, breaks: &[f64], level: u32) -> Result<Accumulator> {
        let count = self.panels << level;
        let split = self.interior_breaks(breaks, level);
        let table = self.table(level);
        let mut acc = Accumulator::default();
        let mut next = 0;
        for j in 0..count {
            if next < split.len() && split[next].0 == j {
                let (lo, hi) = self.subpanel(level, j);
                let mut a = lo;
                while next < split.len() && split[next].0 == j {
                    let b = split[next].1;
                    self.panel_direct(g, a, b, &mut acc)?;
                    a = b;
                    next += 1;
                }
                self.panel_direct(g, a, hi, &mut acc)?;
            } else if let Some(t) = table {
                let range = j * PANEL_NODES..(j + 1) * PANEL_NODES;
                for (&h, &w) in t.nodes[range.clone()].iter().zip(&t.weights[range]) {
                    acc.add(h, w, g(h))?;
                }
            } else {
                let (lo, hi) = self.subpanel(level, j);
                self.panel_direct(g, lo, hi, &mut acc)?;
            }
        }
        Ok(acc)
    }

    /// `int g(h) Psi(h) dh` with refinement to `rel_tol`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> Result<Integral> {
        self.integrate_with_breaks(g, &[])
    }

    /// As [`integrate`](Self::integrate), splitting panels at the given
    /// `h`-positions where `g` is not smooth.
    pub fn integrate_with_breaks<F: Fn(f64) -> f64>(&self, g: F, breaks: &[f64]) -> Result<Integral> {
        let r = self.window.radius;
        let left = g(-r);
        let right = g(r);
        if !left.is_finite() {
            return Err(Error::IntegrandNotFinite { at: -r });
        }
        if !right.is_finite() {
            return Err(Error::IntegrandNotFinite { at: r });
        }
        let truncation = self.config.tail_epsilon * left.abs().max(right.abs());

        let mut previous = self.level_sum(&g, breaks, 0)?;
        let mut last_delta = f64::INFINITY;
        for level in 1..=self.config.max_refinements {
            let current = self.level_sum(&g, breaks, level)?;
            let delta = (current.value - previous.value).abs();
            last_delta = delta;
            let scale = current.magnitude.max(current.value.abs());
            if delta <= self.config.rel_tol * scale {
                return Ok(Integral {
                    value: current.value,
                    error: delta + truncation,
                    refinements: level,
                });
            }
            previous = current;
        }
        Err(Error::ToleranceNotMet {
            best: Integral {
                value: previous.value,
                error: last_delta + truncation,
                refinements: self.config.max_refinements,
            },
            refinements: self.config.max_refinements,
        })
    }

    /// One sweep at a fixed level, no convergence check.
    pub fn sum_at_level<F: Fn(f64) -> f64>(&self, g: F, breaks: &[f64], level: u32) -> Result<f64> {
        Ok(self.level_sum(&g, breaks, level)?.value)
    }

    /// `int_a^b g(h) Psi(h) dh` on a panel grid of its own.
    pub fn integrate_interval<F: Fn(f64) -> f64>(&self, g: F, a: f64, b: f64) -> Result<Integral> {
        if !(a.is_finite() && b.is_finite() && a <= b) {
            return Err(Error::Domain {
                value: b - a,
                reason: "interval must be finite and ordered",
            });
        }
        if a == b {
            return Ok(Integral::default());
        }
        let base = ((b - a) / self.config.panel_width).ceil().max(1.0) as usize;
        let sweep = |level: u32| -> Result<Accumulator> {
            let count = base << level;
            let width = (b - a) / count as f64;
            let mut acc = Accumulator::default();
            for j in 0..count {
                let lo = a + j as f64 * width;
                let hi = a + (j + 1) as f64 * width;
                self.panel_direct(&g, lo, hi, &mut acc)?;
            }
            Ok(acc)
        };
        let mut previous = sweep(0)?;
        let mut last_delta = f64::INFINITY;
        for level in 1..=self.config.max_refinements {
            let current = sweep(level)?;
            let delta = (current.value - previous.value).abs();
            last_delta = delta;
            if delta <= self.config.rel_tol * current.magnitude.max(current.value.abs()) {
                return Ok(Integral {
                    value: current.value,
                    error: delta,
                    refinements: level,
                });
            }
            previous = current;
        }
        Err(Error::ToleranceNotMet {
            best: Integral {
                value: previous.value,
                error: last_delta,
                refinements: self.config.max_refinements,
            },
            refinements: self.config.max_refinements,
        })
    }

    /// `int_{|h| >= threshold} Psi(h) dh`.
    pub fn tail_mass(&self, threshold: f64) -> Result<Integral> {
        if !(threshold.is_finite() && threshold >= 1.0) {
            return Err(Error::Domain {
                value: threshold,
                reason: "tail mass is defined for thresholds >= 1",
            });
        }
        // Beyond `threshold + R - 1` the envelope leaves at most
        // tail_epsilon * B^(-beta (threshold - 1)).
        let upper = threshold + (self.window.radius - 1.0).max(self.config.panel_width);
        let half = self.integrate_interval(|_| 1.0, threshold, upper)?;
        let params = self.kernel.params();
        let beyond = self.config.tail_epsilon * (-params.rate() * (threshold - 1.0)).exp();
        Ok(Integral {
            value: 2.0 * half.value,
            error: 2.0 * half.error + beyond,
            refinements: half.refinements,
        })
    }
}

/// One-shot `int g Psi` over the line.
pub fn integrate_weighted<F: Fn(f64) -> f64>(
    kernel: &DensityKernel,
    g: F,
    config: &QuadratureConfig,
) -> Result<Integral> {
    WeightedQuadrature::new(*kernel, *config)?.integrate(g)
}

/// One-shot tail mass.
pub fn tail_mass(kernel: &DensityKernel, threshold: f64, config: &QuadratureConfig) -> Result<f64> {
    Ok(WeightedQuadrature::new(*kernel, *config)?.tail_mass(threshold)?.value)
}
