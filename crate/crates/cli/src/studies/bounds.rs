//! Moment bounds, centered moments and Taylor remainders.

use psiconv_core::analysis::report::RATIO_SLACK;
use psiconv_core::analysis::{
    bound_ratio, centered_moment_bound, centered_moments, moment_bound, taylor_remainder_bound, taylor_residuals,
    uniform_grid, BoundQuery,
};
use psiconv_core::{ActivationParams, DensityKernel, Integral, OperatorEngine, OperatorKind, OperatorSpec};

use super::{assemble, describe, param_cells, Outcome, Partial};
use crate::config::StudyConfig;
use crate::corpus::{self, CorpusEntry};
use crate::error::CliError;
use crate::report::Cell;

pub const COLUMNS: [&str; 15] = [
    "table",
    "kind",
    "q",
    "beta",
    "B",
    "n",
    "alpha",
    "label",
    "k",
    "N",
    "x",
    "empirical",
    "bound",
    "ratio",
    "pass",
];

/// Highest centered moment reported.
pub const CENTERED_ORDER: usize = 4;
/// Odd centered moments of the direct operator vanish up to this.
pub const ODD_MOMENT_TOLERANCE: f64 = 1e-9;

/// Optional cells of one row.
#[derive(Default)]
struct RowSpec {
    kind: Option<OperatorKind>,
    n: Option<u32>,
    label: Option<&'static str>,
    k: Option<usize>,
    order: Option<usize>,
    x: Option<f64>,
}

fn opt<T: Into<Cell>>(v: Option<T>) -> Cell {
    v.map_or(Cell::Missing, Into::into)
}

/// Pushes a row with `result = (empirical, bound, pass)`.
fn push_row(out: &mut Partial, p: &ActivationParams, alpha: f64, table: &str, s: RowSpec, result: (f64, f64, bool)) {
    let (emp, bound, pass) = result;
    let [q, beta, base] = param_cells(p);
    let kind = opt(s.kind.map(|k| k.name()));
    let key = vec![
        table.into(),
        kind.clone(),
        q.clone(),
        beta.clone(),
        base.clone(),
        opt(s.n),
        opt(s.label),
        opt(s.k),
        opt(s.order),
    ];
    out.row(
        key,
        vec![
            table.into(),
            kind,
            q,
            beta,
            base,
            opt(s.n),
            if s.n.is_some() { alpha.into() } else { Cell::Missing },
            opt(s.label),
            opt(s.k),
            opt(s.order),
            opt(s.x),
            emp.into(),
            bound.into(),
            bound_ratio(emp, bound).into(),
            pass.into(),
        ],
    );
}

fn moments(out: &mut Partial, p: &ActivationParams, engine: &OperatorEngine, config: &StudyConfig) {
    let context = describe(p);
    for k in 1..=config.moment_order {
        let moment = engine
            .quadrature()
            .integrate_with_breaks(|h| h.abs().powi(k as i32), &[0.0]);
        let value = out.integral(&format!("{context} moment k={k}"), moment).value;
        let bound = moment_bound(p, k);
        let pass = out.check(value < bound, || {
            format!("{context}: absolute moment {k} = {value:e} >= {bound:e}")
        });
        let spec = RowSpec {
            k: Some(k),
            ..RowSpec::default()
        };
        push_row(out, p, config.alpha, "moment", spec, (value, bound, pass));
    }
}

/// Shared inputs of the Taylor rows.
struct Inputs<'a> {
    config: &'a StudyConfig,
    corpus: &'a [CorpusEntry],
    grid: &'a [f64],
}

fn taylor(
    out: &mut Partial,
    p: &ActivationParams,
    engine: &OperatorEngine,
    spec: &OperatorSpec,
    centered: &[Integral],
    inputs: &Inputs,
) {
    let Inputs { config, corpus, grid } = *inputs;
    let context = format!("{spec} {}", describe(p));
    for entry in corpus {
        let values = match engine.apply_grid(&entry.function, spec, grid) {
            Ok(v) => v,
            Err(e) => {
                out.error(&format!("{context} {}", entry.label), &e);
                continue;
            }
        };
        for &order in &config.taylor_orders {
            let row = RowSpec {
                kind: Some(spec.kind()),
                n: Some(spec.n()),
                label: Some(entry.label),
                order: Some(order),
                ..RowSpec::default()
            };
            let computed = BoundQuery::new(spec.kind(), spec.n(), config.alpha).and_then(|query| {
                let bound = taylor_remainder_bound(&entry.function, &query.with_taylor_order(order), p)?;
                let (residuals, _) = taylor_residuals(&entry.function, grid, &values, &centered[..order])?;
                Ok((bound, residuals))
            });
            match computed {
                Ok((bound, residuals)) => {
                    let (i, worst) =
                        residuals
                            .iter()
                            .copied()
                            .enumerate()
                            .fold(
                                (0, f64::NEG_INFINITY),
                                |best, (i, r)| if r > best.1 { (i, r) } else { best },
                            );
                    let pass = out.check(bound_ratio(worst, bound) <= 1.0 + RATIO_SLACK, || {
                        format!(
                            "{context} {} N={order}: remainder {worst:e} exceeds bound {bound:e}",
                            entry.label
                        )
                    });
                    push_row(
                        out,
                        p,
                        config.alpha,
                        "taylor",
                        RowSpec {
                            x: Some(grid[i]),
                            ..row
                        },
                        (worst, bound, pass),
                    );
                }
                Err(e) => {
                    out.error(&format!("{context} {} N={order}", entry.label), &e);
                    push_row(out, p, config.alpha, "taylor", row, (f64::NAN, f64::NAN, false));
                }
            }
        }
    }
}

fn check_triple(p: &ActivationParams, inputs: &Inputs) -> Partial {
    let config = inputs.config;
    let mut out = Partial::default();
    let context = describe(p);
    let engine = match OperatorEngine::new(DensityKernel::new(*p), config.quadrature) {
        Ok(e) => e,
        Err(e) => {
            out.error(&context, &e);
            return out;
        }
    };
    moments(&mut out, p, &engine, config);

    let order = CENTERED_ORDER.max(config.taylor_orders.iter().copied().max().unwrap_or(0));
    for &kind in &config.kinds {
        for &n in &config.taylor_n {
            let spec = match OperatorSpec::new(kind, n, config.weights.clone()) {
                Ok(s) => s,
                Err(e) => {
                    out.error(&context, &e);
                    continue;
                }
            };
            let centered = match centered_moments(&engine, &spec, order) {
                Ok(c) => c,
                Err(e) => {
                    out.error(&format!("{spec} {context} centered moments"), &e);
                    continue;
                }
            };
            for (k, m) in (1..=CENTERED_ORDER).zip(&centered) {
                let bound = centered_moment_bound(p, kind, n, k);
                let value = m.value.abs();
                let mut pass = out.check(value <= bound, || {
                    format!("{spec} {context}: centered moment {k} = {value:e} exceeds {bound:e}")
                });
                if kind == OperatorKind::Direct && k % 2 == 1 {
                    pass &= out.check(value <= ODD_MOMENT_TOLERANCE, || {
                        format!("{spec} {context}: odd centered moment {k} = {value:e} does not vanish")
                    });
                }
                let row = RowSpec {
                    kind: Some(kind),
                    n: Some(n),
                    k: Some(k),
                    ..RowSpec::default()
                };
                push_row(&mut out, p, config.alpha, "centered", row, (value, bound, pass));
            }
            taylor(&mut out, p, &engine, &spec, &centered, inputs);
        }
    }
    out
}

pub fn run(config: &StudyConfig) -> Result<Outcome, CliError> {
    let grid = uniform_grid(config.window.0, config.window.1, config.step)?;
    let corpus = corpus::load(&config.taylor_functions, &grid)?;
    let triples = config.triples()?;
    let inputs = Inputs {
        config,
        corpus: &corpus,
        grid: &grid,
    };
    Ok(assemble(&COLUMNS, &triples, |p| check_triple(p, &inputs)))
}
