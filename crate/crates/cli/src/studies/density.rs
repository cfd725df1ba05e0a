//! Normalization, symmetry, maximum and tail checks of the density.

use psiconv_core::analysis::{linspace, uniform_grid};
use psiconv_core::quadrature::WeightedQuadrature;
use psiconv_core::{ActivationParams, DensityKernel};

use super::{assemble, describe, param_cells, Outcome, Partial};
use crate::config::StudyConfig;
use crate::error::CliError;

pub const COLUMNS: [&str; 14] = [
    "q",
    "beta",
    "B",
    "n",
    "alpha",
    "mass",
    "mass_error",
    "symmetry_residual",
    "deformed_residual",
    "argmax_residual",
    "max_value_residual",
    "tail_mass",
    "tail_bound",
    "pass",
];

pub const MASS_TOLERANCE: f64 = 1e-8;
pub const SYMMETRY_TOLERANCE: f64 = 1e-13;
pub const DEFORMED_TOLERANCE: f64 = 1e-14;
pub const ARGMAX_TOLERANCE: f64 = 1e-3;
pub const MAX_VALUE_TOLERANCE: f64 = 1e-10;

/// Points for the symmetry residuals, on `[-SYMMETRY_SPAN, SYMMETRY_SPAN]`.
const SYMMETRY_POINTS: usize = 1001;
const SYMMETRY_SPAN: f64 = 10.0;
/// Grid for locating the maximum of `G`.
const ARGMAX_SPAN: f64 = 50.0;
const ARGMAX_STEP: f64 = 1e-3;

/// Golden-section search for the maximum of a unimodal `f` on `[a, b]`.
fn refine_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 1e-15 * (1.0 + a.abs()) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn check_triple(p: &ActivationParams, config: &StudyConfig) -> Partial {
    let mut out = Partial::default();
    let context = describe(p);
    let kernel = DensityKernel::new(*p);
    let quad = match WeightedQuadrature::new(kernel, config.quadrature) {
        Ok(q) => q,
        Err(e) => {
            out.error(&context, &e);
            return out;
        }
    };
    let mass = out.integral(&format!("{context} mass"), quad.integrate(|_| 1.0));
    let (mass, mass_error) = (mass.value, mass.error);

    let xs = linspace(-SYMMETRY_SPAN, SYMMETRY_SPAN, SYMMETRY_POINTS);
    let symmetry = xs
        .iter()
        .map(|&x| (kernel.psi(x) - kernel.psi(-x)).abs())
        .fold(0.0, f64::max);
    let deformed = xs
        .iter()
        .map(|&x| (kernel.g(-x) - kernel.g_mirror(x)).abs())
        .fold(0.0, f64::max);

    let grid = uniform_grid(-ARGMAX_SPAN, ARGMAX_SPAN, ARGMAX_STEP).expect("static grid");
    let argmax = grid
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |(bx, bv), x| {
            let v = kernel.g(x);
            if v > bv {
                (x, v)
            } else {
                (bx, bv)
            }
        })
        .0;
    let (_, peak) = refine_max(|x| kernel.g(x), argmax - ARGMAX_STEP, argmax + ARGMAX_STEP);
    let argmax_residual = (argmax - kernel.max_location()).abs();
    let bb = p.base_pow_beta();
    let max_value_residual = (peak - (bb - 1.0) / (2.0 * (bb + 1.0))).abs();

    let shared_ok = out.check((mass - 1.0).abs() <= MASS_TOLERANCE, || {
        format!("{context}: mass {mass} is not 1")
    }) & out.check(symmetry < SYMMETRY_TOLERANCE, || {
        format!("{context}: Psi evenness residual {symmetry:e}")
    }) & out.check(deformed <= DEFORMED_TOLERANCE, || {
        format!("{context}: deformed symmetry residual {deformed:e}")
    }) & out.check(argmax_residual <= ARGMAX_TOLERANCE, || {
        format!("{context}: argmax off by {argmax_residual:e}")
    }) & out.check(max_value_residual <= MAX_VALUE_TOLERANCE, || {
        format!("{context}: maximum value off by {max_value_residual:e}")
    });

    for &n in &config.tail_n {
        let threshold = (n as f64).powf(1.0 - config.alpha);
        let bound = p.deformation_sum() * (-p.rate() * (threshold - 1.0)).exp();
        let tail = out
            .integral(&format!("{context} n={n} tail"), quad.tail_mass(threshold))
            .value;
        let tail_ok = out.check(tail < bound, || {
            format!("{context} n={n}: tail mass {tail:e} >= bound {bound:e}")
        });
        let [q, beta, base] = param_cells(p);
        out.row(
            vec![q.clone(), beta.clone(), base.clone(), n.into()],
            vec![
                q,
                beta,
                base,
                n.into(),
                config.alpha.into(),
                mass.into(),
                mass_error.into(),
                symmetry.into(),
                deformed.into(),
                argmax_residual.into(),
                max_value_residual.into(),
                tail.into(),
                bound.into(),
                (shared_ok && tail_ok).into(),
            ],
        );
    }
    out
}

pub fn run(config: &StudyConfig) -> Result<Outcome, CliError> {
    let triples = config.triples()?;
    Ok(assemble(&COLUMNS, &triples, |p| check_triple(p, config)))
}
