//! Iterated operator chains against single-stage deviations and bounds.

use psiconv_core::analysis::{iterated_bound, jackson_bound, linspace, sup_deviation, uniform_grid, BoundQuery};
use psiconv_core::{
    ActivationParams, DensityKernel, Integral, IterationPlan, OperatorEngine, OperatorSpec, TargetFunction,
};

use super::{assemble, describe, param_cells, Outcome, Partial};
use crate::config::{ChainSpec, StudyConfig};
use crate::corpus::{self, CorpusEntry};
use crate::error::CliError;
use crate::report::Cell;

pub const COLUMNS: [&str; 14] = [
    "chain",
    "kind",
    "q",
    "beta",
    "B",
    "label",
    "r",
    "empirical",
    "single_empirical",
    "r_fold_bound",
    "sum_bound",
    "max_stage_sup",
    "quad_error",
    "pass",
];

/// Per-stage allowance for the lazily evaluated inner stages.
pub const STAGE_SLACK: f64 = 1e-7;

struct Item<'a> {
    chain: &'a ChainSpec,
    entry: &'a CorpusEntry,
}

fn plan_of(specs: Vec<OperatorSpec>) -> psiconv_core::Result<IterationPlan> {
    if specs.windows(2).all(|w| w[0].n() <= w[1].n()) {
        IterationPlan::monotone(specs)
    } else {
        IterationPlan::new(specs)
    }
}

/// Chain outputs on the coarse grid, one entry per prefix.
struct Evaluated {
    specs: Vec<OperatorSpec>,
    stages: Vec<Vec<Integral>>,
    /// Sup deviation of one stage of a homogeneous chain on the fine grid,
    /// with its error estimate.
    single: Option<(f64, f64)>,
}

fn evaluate(
    chain: &ChainSpec,
    f: &TargetFunction,
    params: ActivationParams,
    config: &StudyConfig,
    grids: (&[f64], &[f64]),
) -> psiconv_core::Result<Evaluated> {
    let (xs, fine) = grids;
    let engine = OperatorEngine::new(DensityKernel::new(params), config.iterate_quadrature)?;
    let specs = chain
        .stages
        .iter()
        .map(|&(kind, n)| OperatorSpec::new(kind, n, config.weights.clone()))
        .collect::<psiconv_core::Result<Vec<_>>>()?;
    let stages = engine.apply_iterated_stages(f, &plan_of(specs.clone())?, xs)?;
    let single = if chain.is_homogeneous() {
        Some(sup_deviation(f, fine, &engine.apply_grid(f, &specs[0], fine)?))
    } else {
        None
    };
    Ok(Evaluated { specs, stages, single })
}

/// Summed stage bounds of the first `r` stages, and `r` times the
/// single-stage bound for homogeneous chains.
fn prefix_bounds(
    f: &TargetFunction,
    specs: &[OperatorSpec],
    r: usize,
    params: &ActivationParams,
    alpha: f64,
) -> psiconv_core::Result<(f64, Option<f64>)> {
    let prefix = plan_of(specs[..r].to_vec())?;
    let sum = iterated_bound(f, &prefix, params, alpha)?;
    let fold = if prefix.is_homogeneous() {
        let single = BoundQuery::new(specs[0].kind(), specs[0].n(), alpha)?;
        Some(r as f64 * jackson_bound(f, &single, params)?)
    } else {
        None
    };
    Ok((sum, fold))
}

fn run_item(item: &Item, params: ActivationParams, config: &StudyConfig, grids: (&[f64], &[f64])) -> Partial {
    let mut out = Partial::default();
    let chain = item.chain;
    let f = &item.entry.function;
    let label = item.entry.label;
    let xs = grids.0;
    let full = chain.prefix_label(chain.stages.len());
    let context = format!("{full} {} {label}", describe(&params));
    let [q, beta, base] = param_cells(&params);
    let row = |out: &mut Partial, r: usize, cells: [Cell; 7]| {
        let key = vec![full.clone().into(), label.into(), r.into()];
        let mut all = vec![
            full.clone().into(),
            chain.kind_label().into(),
            q.clone(),
            beta.clone(),
            base.clone(),
            label.into(),
            r.into(),
        ];
        all.extend(cells);
        out.row(key, all);
    };

    let evaluated = match evaluate(chain, f, params, config, grids) {
        Ok(e) => e,
        Err(e) => {
            out.error(&context, &e);
            for r in 1..=chain.stages.len() {
                let mut cells: [Cell; 7] = std::array::from_fn(|_| Cell::Float(f64::NAN));
                cells[6] = false.into();
                row(&mut out, r, cells);
            }
            return out;
        }
    };

    for (i, values) in evaluated.stages.iter().enumerate() {
        let r = i + 1;
        let (empirical, quad_error) = sup_deviation(f, xs, values);
        let max_stage_sup = values.iter().map(|v| v.value.abs()).fold(0.0, f64::max);
        let (sum_bound, fold) = match prefix_bounds(f, &evaluated.specs, r, &params, config.alpha) {
            Ok(b) => b,
            Err(e) => {
                out.error(&format!("{context} r={r}"), &e);
                (f64::NAN, Some(f64::NAN))
            }
        };
        let mut pass = out.check(empirical <= sum_bound, || {
            format!("{context} r={r}: deviation {empirical:e} exceeds the summed bound {sum_bound:e}")
        }) & out.check(max_stage_sup <= f.sup_norm() + STAGE_SLACK, || {
            format!("{context} r={r}: sup {max_stage_sup:e} exceeds the sup-norm of f")
        });
        if let Some((single, single_error)) = evaluated.single {
            let allowance = r as f64 * (single + single_error + STAGE_SLACK) + quad_error;
            pass &= out.check(empirical <= allowance, || {
                format!("{context} r={r}: deviation {empirical:e} exceeds {r} x single-stage deviation {single:e}")
            });
        }
        if let Some(fold) = fold {
            pass &= out.check(empirical <= fold, || {
                format!("{context} r={r}: deviation {empirical:e} exceeds {r} x single-stage bound {fold:e}")
            });
        }
        row(
            &mut out,
            r,
            [
                empirical.into(),
                evaluated.single.map_or(Cell::Missing, |s| s.0.into()),
                fold.map_or(Cell::Missing, Cell::from),
                sum_bound.into(),
                max_stage_sup.into(),
                quad_error.into(),
                pass.into(),
            ],
        );
    }
    out
}

pub fn run(config: &StudyConfig) -> Result<Outcome, CliError> {
    let params = config.iterate_triple()?;
    let xs = linspace(config.window.0, config.window.1, config.iterate_points);
    let fine = uniform_grid(config.window.0, config.window.1, config.step)?;
    let corpus = corpus::load(&config.iterate_functions, &fine)?;
    let items: Vec<Item> = config
        .chains
        .iter()
        .flat_map(|chain| corpus.iter().map(move |entry| Item { chain, entry }))
        .collect();
    Ok(assemble(&COLUMNS, &items, |item| {
        run_item(item, params, config, (&xs, &fine))
    }))
}
