//! Moduli of continuity of operator outputs against those of the inputs.

use psiconv_core::analysis::{estimate_modulus, modulus_from_samples, uniform_grid};
use psiconv_core::{ActivationParams, DensityKernel, OperatorEngine, OperatorKind, OperatorSpec, TargetFunction};

use super::{assemble, describe, param_cells, Outcome, Partial};
use crate::config::StudyConfig;
use crate::corpus::{self, CorpusEntry};
use crate::error::CliError;

pub const COLUMNS: [&str; 11] = [
    "kind",
    "q",
    "beta",
    "B",
    "n",
    "label",
    "theta",
    "omega_f",
    "omega_op",
    "quad_error",
    "pass",
];

/// How far beyond the sample window the input modulus is estimated.
pub const INPUT_MARGIN: f64 = 5.0;

struct Item {
    params: ActivationParams,
    kind: OperatorKind,
    n: u32,
}

/// Modulus of `f`: the declared one, or a fine-grid estimate around `window`.
fn input_modulus(f: &TargetFunction, theta: f64, window: (f64, f64), step: f64) -> psiconv_core::Result<f64> {
    match f.exact_modulus(theta) {
        Some(w) => Ok(w),
        None => estimate_modulus(f, theta, (window.0 - INPUT_MARGIN, window.1 + INPUT_MARGIN), step),
    }
}

fn run_item(item: &Item, config: &StudyConfig, corpus: &[CorpusEntry], grid: &[f64]) -> Partial {
    let mut out = Partial::default();
    let context = format!("{} {} n={}", item.kind, describe(&item.params), item.n);
    let setup = || -> psiconv_core::Result<_> {
        let engine = OperatorEngine::new(DensityKernel::new(item.params), config.quadrature)?;
        let spec = OperatorSpec::new(item.kind, item.n, config.weights.clone())?;
        Ok((engine, spec))
    };
    let (engine, spec) = match setup() {
        Ok(s) => s,
        Err(e) => {
            out.error(&context, &e);
            return out;
        }
    };
    let step = config.smooth_step;
    for entry in corpus {
        let f = &entry.function;
        let values = match engine.apply_grid(f, &spec, grid) {
            Ok(v) => v,
            Err(e) => {
                out.error(&format!("{context} {}", entry.label), &e);
                continue;
            }
        };
        let quad_error = values.iter().map(|v| v.error).fold(0.0, f64::max);
        let op: Vec<f64> = values.iter().map(|v| v.value).collect();
        for &theta in &config.thetas {
            let [q, beta, base] = param_cells(&item.params);
            let key = vec![
                item.kind.name().into(),
                q.clone(),
                beta.clone(),
                base.clone(),
                item.n.into(),
                entry.label.into(),
                theta.into(),
            ];
            let moduli = input_modulus(f, theta, config.window, step)
                .and_then(|wf| Ok((wf, modulus_from_samples(&op, step, theta)?)));
            let (omega_f, omega_op) = match moduli {
                Ok(m) => m,
                Err(e) => {
                    out.error(&format!("{context} {} theta={theta}", entry.label), &e);
                    (f64::NAN, f64::NAN)
                }
            };
            let label = entry.label;
            let mut pass = out.check(omega_op <= omega_f + 2.0 * quad_error, || {
                format!(
                    "{context} {label} theta={theta}: output modulus {omega_op:e} exceeds input modulus {omega_f:e}"
                )
            });
            if label == "id" {
                pass &= out.check(
                    (omega_f - theta).abs() <= step && (omega_op - theta).abs() <= step,
                    || format!("{context} id theta={theta}: moduli {omega_f:e}, {omega_op:e} are not theta"),
                );
            }
            out.row(
                key,
                vec![
                    item.kind.name().into(),
                    q,
                    beta,
                    base,
                    item.n.into(),
                    label.into(),
                    theta.into(),
                    omega_f.into(),
                    omega_op.into(),
                    quad_error.into(),
                    pass.into(),
                ],
            );
        }
    }
    out
}

pub fn run(config: &StudyConfig) -> Result<Outcome, CliError> {
    let grid = uniform_grid(config.window.0, config.window.1, config.smooth_step)?;
    let corpus = corpus::load(&config.functions, &grid)?;
    let mut items = Vec::new();
    for params in config.triples()? {
        for &kind in &config.kinds {
            for &n in &config.smooth_n {
                items.push(Item { params, kind, n });
            }
        }
    }
    Ok(assemble(&COLUMNS, &items, |item| {
        run_item(item, config, &corpus, &grid)
    }))
}
