//! Built-in target functions.

use std::f64::consts::PI;

use psiconv_core::{Result as CoreResult, TargetFunction};

use crate::error::CliError;

pub const LABELS: [&str; 8] = ["constant", "id", "sin", "cos", "runge", "gauss", "ramp", "abs_sin"];

/// Value of the `constant` entry.
pub const CONSTANT: f64 = 0.75;

/// The identity is only bounded on this window.
pub const ID_WINDOW: f64 = 20.0;

/// A registry entry.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    pub label: &'static str,
    pub function: TargetFunction,
    pub note: &'static str,
}

fn trig_modulus(t: f64) -> f64 {
    2.0 * (t.min(PI) / 2.0).sin()
}

fn with_trig_tower(f: TargetFunction, phase: usize) -> CoreResult<TargetFunction> {
    // d^k/dx^k sin = sin(x + k pi/2); cosine starts one step later.
    let cycle: [fn(f64) -> f64; 4] = [f64::sin, f64::cos, |x| -x.sin(), |x| -x.cos()];
    let mut f = f;
    for k in 1..=4 {
        f = f.with_derivative_modulus(cycle[(phase + k) % 4], 1.0, trig_modulus)?;
    }
    Ok(f)
}

fn build(label: &str) -> CoreResult<Option<CorpusEntry>> {
    let entry = match label {
        "constant" => CorpusEntry {
            label: "constant",
            function: TargetFunction::constant("constant", CONSTANT, 4)?,
            note: "bounded, all derivatives vanish",
        },
        "id" => CorpusEntry {
            label: "id",
            function: TargetFunction::new("id", |x| x, ID_WINDOW)?
                .with_sup_window(-ID_WINDOW, ID_WINDOW)?
                .with_modulus(|t| t)
                .with_derivative_modulus(|_| 1.0, 1.0, |_| 0.0)?,
            note: "unbounded; sup-norm is local to [-20, 20], which contains every active window",
        },
        "sin" => CorpusEntry {
            label: "sin",
            function: with_trig_tower(TargetFunction::new("sin", f64::sin, 1.0)?.with_modulus(trig_modulus), 0)?,
            note: "bounded and uniformly continuous with bounded derivatives",
        },
        "cos" => CorpusEntry {
            label: "cos",
            function: with_trig_tower(TargetFunction::new("cos", f64::cos, 1.0)?.with_modulus(trig_modulus), 1)?,
            note: "bounded and uniformly continuous with bounded derivatives",
        },
        "runge" => CorpusEntry {
            label: "runge",
            function: TargetFunction::new("runge", |x| 1.0 / (1.0 + x * x), 1.0)?
                .with_derivative(|x| -2.0 * x / (1.0 + x * x).powi(2), 3.0 * 3f64.sqrt() / 8.0)?
                .with_derivative(|x| (6.0 * x * x - 2.0) / (1.0 + x * x).powi(3), 2.0)?,
            note: "bounded rational function, slow algebraic decay",
        },
        "gauss" => CorpusEntry {
            label: "gauss",
            function: TargetFunction::new("gauss", |x| (-x * x).exp(), 1.0)?
                .with_derivative(|x| -2.0 * x * (-x * x).exp(), 2f64.sqrt() * (-0.5f64).exp())?
                .with_derivative(|x| (4.0 * x * x - 2.0) * (-x * x).exp(), 2.0)?
                .with_derivative(
                    |x| (-8.0 * x.powi(3) + 12.0 * x) * (-x * x).exp(),
                    3.903_566_145_539_902_4,
                )?
                .with_derivative(|x| (16.0 * x.powi(4) - 48.0 * x * x + 12.0) * (-x * x).exp(), 12.0)?,
            note: "bounded with bounded derivatives, fast decay",
        },
        "ramp" => CorpusEntry {
            label: "ramp",
            function: TargetFunction::new("ramp", |x: f64| x.clamp(-1.0, 1.0), 1.0)?
                .with_modulus(|t| t.min(2.0))
                .with_kinks(|a, b| [-1.0, 1.0].into_iter().filter(|k| *k >= a && *k <= b).collect()),
            note: "Lipschitz, not differentiable at +-1",
        },
        "abs_sin" => CorpusEntry {
            label: "abs_sin",
            function: TargetFunction::new("abs_sin", |x: f64| x.sin().abs(), 1.0)?
                .with_modulus(|t| t.min(PI / 2.0).sin())
                .with_kinks(|a, b| {
                    let first = (a / PI).ceil() as i64;
                    let last = (b / PI).floor() as i64;
                    (first..=last).map(|k| k as f64 * PI).collect()
                }),
            note: "uniformly continuous, not differentiable at multiples of pi",
        },
        _ => return Ok(None),
    };
    Ok(Some(entry))
}

/// Resolves a label against the registry.
pub fn lookup(label: &str) -> Result<CorpusEntry, CliError> {
    build(label).map_err(CliError::Core)?.ok_or_else(|| {
        CliError::Config(format!(
            "unknown corpus function `{label}` (known: {})",
            LABELS.join(", ")
        ))
    })
}

/// Resolves labels and spot-checks each declared sup-norm on `grid`.
pub fn load(labels: &[String], grid: &[f64]) -> Result<Vec<CorpusEntry>, CliError> {
    labels
        .iter()
        .map(|label| {
            let entry = lookup(label)?;
            entry
                .function
                .check_sup_norm(grid)
                .map_err(|e| CliError::Config(e.to_string()))?;
            for k in 1..=entry.function.derivative_order() {
                entry
                    .function
                    .derivative(k)
                    .and_then(|d| d.check_sup_norm(grid))
                    .map_err(|e| CliError::Config(e.to_string()))?;
            }
            Ok(entry)
        })
        .collect()
}
