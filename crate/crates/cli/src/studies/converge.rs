//! Grid sup errors of every operator against the Jackson-type bounds.

use std::collections::BTreeMap;

use psiconv_core::analysis::{compare, uniform_grid, BoundQuery, BoundReport};
use psiconv_core::{ActivationParams, DensityKernel, OperatorEngine, OperatorKind};
use rayon::prelude::*;

use super::{describe, merge, param_cells, Outcome, Partial};
use crate::config::StudyConfig;
use crate::corpus::{self, CorpusEntry};
use crate::error::CliError;

pub const COLUMNS: [&str; 12] = [
    "kind",
    "q",
    "beta",
    "B",
    "n",
    "alpha",
    "label",
    "sup_error",
    "bound",
    "ratio",
    "quad_error",
    "conclusive",
];

/// Absolute allowance when checking that the sup error does not grow with `n`.
pub const MONOTONE_SLACK: f64 = 1e-12;

struct Item {
    params: ActivationParams,
    kind: OperatorKind,
    n: u32,
}

fn run_item(item: &Item, config: &StudyConfig, corpus: &[CorpusEntry], grid: &[f64]) -> (Partial, Vec<BoundReport>) {
    let mut out = Partial::default();
    let mut reports = Vec::new();
    let context = format!("{} {} n={}", item.kind, describe(&item.params), item.n);
    let setup = || -> psiconv_core::Result<_> {
        let engine = OperatorEngine::new(DensityKernel::new(item.params), config.quadrature)?;
        let spec = psiconv_core::OperatorSpec::new(item.kind, item.n, config.weights.clone())?;
        let query = BoundQuery::new(item.kind, item.n, config.alpha)?;
        Ok((engine, spec, query))
    };
    let (engine, spec, query) = match setup() {
        Ok(s) => s,
        Err(e) => {
            out.error(&context, &e);
            return (out, reports);
        }
    };
    for entry in corpus {
        let [q, beta, base] = param_cells(&item.params);
        let key = vec![
            item.kind.name().into(),
            q.clone(),
            beta.clone(),
            base.clone(),
            item.n.into(),
            entry.label.into(),
        ];
        match compare(&entry.function, &spec, &query, grid, &engine) {
            Ok(report) => {
                out.check(report.passes(), || {
                    format!(
                        "{context} {}: sup error {:e} exceeds bound {:e} (ratio {})",
                        entry.label, report.empirical, report.theoretical, report.ratio
                    )
                });
                out.row(
                    key,
                    vec![
                        item.kind.name().into(),
                        q,
                        beta,
                        base,
                        item.n.into(),
                        config.alpha.into(),
                        entry.label.into(),
                        report.empirical.into(),
                        report.theoretical.into(),
                        report.ratio.into(),
                        report.quad_error.into(),
                        report.conclusive.into(),
                    ],
                );
                reports.push(report);
            }
            Err(e) => {
                out.error(&format!("{context} {}", entry.label), &e);
                let nan = f64::NAN;
                out.row(
                    key,
                    vec![
                        item.kind.name().into(),
                        q,
                        beta,
                        base,
                        item.n.into(),
                        config.alpha.into(),
                        entry.label.into(),
                        nan.into(),
                        nan.into(),
                        nan.into(),
                        nan.into(),
                        false.into(),
                    ],
                );
            }
        }
    }
    (out, reports)
}

/// Sup error must not grow with `n` beyond the quadrature errors involved.
fn monotonicity_failures(reports: &[BoundReport]) -> Vec<String> {
    let mut series: BTreeMap<(String, String, [u64; 3]), Vec<&BoundReport>> = BTreeMap::new();
    for r in reports {
        let key = (
            r.query.kind.name().to_string(),
            r.label.clone(),
            [r.q.to_bits(), r.beta.to_bits(), r.base.to_bits()],
        );
        series.entry(key).or_default().push(r);
    }
    let mut failures = Vec::new();
    for ((kind, label, _), mut rows) in series {
        rows.sort_by_key(|r| r.query.n);
        for w in rows.windows(2) {
            let slack = w[0].quad_error + w[1].quad_error + MONOTONE_SLACK;
            if w[1].empirical > w[0].empirical + slack {
                failures.push(format!(
                    "{kind} q={} beta={} B={} {label}: sup error grows from {:e} (n={}) to {:e} (n={})",
                    w[0].q, w[0].beta, w[0].base, w[0].empirical, w[0].query.n, w[1].empirical, w[1].query.n
                ));
            }
        }
    }
    failures
}

pub fn run(config: &StudyConfig) -> Result<Outcome, CliError> {
    let grid = uniform_grid(config.window.0, config.window.1, config.step)?;
    let corpus = corpus::load(&config.functions, &grid)?;
    let mut items = Vec::new();
    for params in config.triples()? {
        for &kind in &config.kinds {
            for &n in &config.n {
                items.push(Item { params, kind, n });
            }
        }
    }
    let results: Vec<(Partial, Vec<BoundReport>)> = items
        .par_iter()
        .map(|item| run_item(item, config, &corpus, &grid))
        .collect();
    let (partials, reports): (Vec<Partial>, Vec<Vec<BoundReport>>) = results.into_iter().unzip();
    let reports: Vec<BoundReport> = reports.into_iter().flatten().collect();
    let mut outcome = merge(&COLUMNS, partials);
    outcome.failures.extend(monotonicity_failures(&reports));
    outcome.failures.sort();
    Ok(outcome)
}
