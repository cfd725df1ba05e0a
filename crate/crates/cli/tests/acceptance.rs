//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Studies run in-process on the default configuration; the determinism
//! criterion drives the binary on a reduced configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::E;
use std::path::Path;
use std::process::{Command as Process, ExitCode};
use std::time::Instant;

use psiconv_cli::{corpus, run, Cell, Command, Outcome, StudyConfig, Table};
use psiconv_core::analysis::{linspace, sup_deviation};
use psiconv_core::{
    ActivationParams, DensityKernel, OperatorEngine, OperatorKind, OperatorSpec, QuadratureConfig, TargetFunction,
};

type Check = Result<String, String>;
type Criterion = (&'static str, fn(&Studies) -> Check);
/// `(kind, label, triple bits)` to `(n, sup_error, quad_error)` rows.
type Series = BTreeMap<(String, String, [u64; 3]), Vec<(f64, f64, f64)>>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

/// Rows of a table addressed by column name.
struct View<'a> {
    table: &'a Table,
    index: BTreeMap<&'static str, usize>,
}

impl<'a> View<'a> {
    fn new(table: &'a Table) -> Self {
        let index = table.columns().iter().enumerate().map(|(i, c)| (*c, i)).collect();
        Self { table, index }
    }

    fn rows(&self) -> impl Iterator<Item = Row<'_>> {
        self.table.rows().map(move |cells| Row {
            cells,
            index: &self.index,
        })
    }
}

#[derive(Clone, Copy)]
struct Row<'a> {
    cells: &'a [Cell],
    index: &'a BTreeMap<&'static str, usize>,
}

impl<'a> Row<'a> {
    fn cell(&self, column: &str) -> &'a Cell {
        &self.cells[*self.index.get(column).unwrap_or_else(|| panic!("no column {column}"))]
    }

    fn num(&self, column: &str) -> f64 {
        self.cell(column).as_f64().unwrap_or(f64::NAN)
    }

    fn text(&self, column: &str) -> &'a str {
        match self.cell(column) {
            Cell::Text(s) => s,
            _ => "",
        }
    }

    fn flag(&self, column: &str) -> bool {
        matches!(self.cell(column), Cell::Bool(true))
    }

    fn triple(&self) -> (f64, f64, f64) {
        (self.num("q"), self.num("beta"), self.num("B"))
    }

    fn is_triple(&self, q: f64, beta: f64, base: f64) -> bool {
        self.triple() == (q, beta, base)
    }
}

fn clean(outcome: &Outcome) -> Result<(), String> {
    let mut all = outcome.failures.clone();
    all.extend(outcome.numerical.iter().cloned());
    ensure(all.is_empty(), || {
        format!("{} study failures, first: {}", all.len(), all[0])
    })
}

fn params(q: f64, beta: f64, base: f64) -> ActivationParams {
    ActivationParams::new(q, beta, base).expect("valid triple")
}

/// `G` straight from the logistic function, without any rearrangement.
fn naive_g(q: f64, beta: f64, base: f64, x: f64) -> f64 {
    let nu = |t: f64| 1.0 / (1.0 + q * base.powf(-beta * t));
    0.5 * (nu(x + 1.0) - nu(x - 1.0))
}

fn naive_psi(q: f64, beta: f64, base: f64, x: f64) -> f64 {
    0.5 * (naive_g(q, beta, base, x) + naive_g(1.0 / q, beta, base, x))
}

fn softplus(y: f64) -> f64 {
    y.max(0.0) + (-y.abs()).exp().ln_1p()
}

/// `int_{|x| >= t} Psi` from the antiderivative of the logistic function.
fn closed_form_tail(q: f64, beta: f64, base: f64, t: f64) -> f64 {
    let c = beta * base.ln();
    let one_sided = |ln_q: f64| {
        let z = |x: f64| c * x - ln_q;
        0.5 * (softplus(-z(t - 1.0)) - softplus(-z(t + 1.0))) / c
    };
    one_sided(q.ln()) + one_sided(-q.ln())
}

/// Composite trapezoid rule for `int |h|^k Psi(h) dh` with `0` as a node.
fn trapezoid_moment(q: f64, beta: f64, base: f64, k: i32) -> f64 {
    let (span, step) = (80.0, 1e-3);
    let count = (span / step) as usize;
    let mut sum = 0.0;
    for i in 1..=count {
        let h = i as f64 * step;
        let w = if i == count { 0.5 } else { 1.0 };
        sum += w * h.powi(k) * (naive_psi(q, beta, base, h) + naive_psi(q, beta, base, -h));
    }
    sum * step
}

struct Studies {
    density: Outcome,
    converge: Outcome,
    bounds: Outcome,
    smoothness: Outcome,
    iterate: Outcome,
    config: StudyConfig,
}

fn density_normalization(s: &Studies) -> Check {
    clean(&s.density)?;
    let view = View::new(&s.density.table);
    let triples: BTreeSet<_> = view.rows().map(|r| r.triple().map_bits()).collect();
    ensure(triples.len() == 18, || {
        format!("{} triples, expected 18", triples.len())
    })?;
    let mut worst_mass = 0.0f64;
    let mut worst_sym = 0.0f64;
    for r in view.rows() {
        worst_mass = worst_mass.max((r.num("mass") - 1.0).abs());
        worst_sym = worst_sym.max(r.num("symmetry_residual"));
    }
    ensure(worst_mass <= 1e-8, || format!("mass off by {worst_mass:e}"))?;
    ensure(worst_sym < 1e-13, || format!("evenness residual {worst_sym:e}"))?;
    let xs = linspace(-10.0, 10.0, 1001);
    for p in s.config.triples().map_err(|e| e.to_string())? {
        let (a, b) = (DensityKernel::new(p), DensityKernel::new(p.reciprocal()));
        ensure(xs.iter().all(|&x| a.psi(x) == b.psi(x)), || {
            format!("q and 1/q differ at {p:?}")
        })?;
        let deviation = xs
            .iter()
            .map(|&x| (a.psi(x) - naive_psi(p.q(), p.beta(), p.base(), x)).abs())
            .fold(0.0, f64::max);
        ensure(deviation <= 1e-14, || {
            format!("Psi differs from the logistic form by {deviation:e}")
        })?;
    }
    Ok(format!(
        "18 triples, max |mass - 1| = {worst_mass:.2e}, max evenness residual = {worst_sym:.2e}"
    ))
}

trait Bits {
    fn map_bits(self) -> [u64; 3];
}

impl Bits for (f64, f64, f64) {
    fn map_bits(self) -> [u64; 3] {
        [self.0.to_bits(), self.1.to_bits(), self.2.to_bits()]
    }
}

fn deformed_symmetry(s: &Studies) -> Check {
    let view = View::new(&s.density.table);
    let reported = view.rows().map(|r| r.num("deformed_residual")).fold(0.0, f64::max);
    ensure(reported <= 1e-14, || format!("reported residual {reported:e}"))?;
    let xs = linspace(-10.0, 10.0, 1001);
    let mut naive = 0.0f64;
    for p in s.config.triples().map_err(|e| e.to_string())? {
        let (q, beta, base) = (p.q(), p.beta(), p.base());
        let kernel = DensityKernel::new(p);
        for &x in &xs {
            naive = naive.max((naive_g(q, beta, base, -x) - naive_g(1.0 / q, beta, base, x)).abs());
            naive = naive.max((kernel.g(x) - naive_g(q, beta, base, x)).abs());
        }
    }
    ensure(naive <= 1e-14, || format!("logistic-form residual {naive:e}"))?;
    Ok(format!(
        "max residual {reported:.2e} (library), {naive:.2e} (logistic form)"
    ))
}

fn global_maximum(s: &Studies) -> Check {
    let view = View::new(&s.density.table);
    let arg = view.rows().map(|r| r.num("argmax_residual")).fold(0.0, f64::max);
    let value = view.rows().map(|r| r.num("max_value_residual")).fold(0.0, f64::max);
    ensure(arg <= 1e-3, || format!("argmax residual {arg:e}"))?;
    ensure(value <= 1e-10, || format!("max value residual {value:e}"))?;
    let grid = linspace(-20.0, 20.0, 40001);
    for p in s.config.triples().map_err(|e| e.to_string())? {
        let (q, beta, base) = (p.q(), p.beta(), p.base());
        let location = q.ln() / base.ln() / beta;
        let peak = (base.powf(beta) - 1.0) / (2.0 * (base.powf(beta) + 1.0));
        let kernel = DensityKernel::new(p);
        ensure((kernel.max_location() - location).abs() <= 1e-12, || {
            format!("max location at {p:?}")
        })?;
        let best = grid
            .iter()
            .copied()
            .max_by(|a, b| naive_g(q, beta, base, *a).total_cmp(&naive_g(q, beta, base, *b)))
            .expect("nonempty grid");
        ensure((best - location).abs() <= 1e-3, || {
            format!("grid argmax {best} vs {location} at {p:?}")
        })?;
        let at = naive_g(q, beta, base, location);
        ensure((at - peak).abs() <= 1e-10, || format!("peak {at} vs {peak} at {p:?}"))?;
    }
    Ok(format!("argmax residual {arg:.2e}, value residual {value:.2e}"))
}

fn tail_domination(s: &Studies) -> Check {
    let view = View::new(&s.density.table);
    let ns: BTreeSet<i64> = view.rows().map(|r| r.num("n") as i64).collect();
    ensure(ns == BTreeSet::from([9, 16, 25, 36, 64]), || {
        format!("tail scales {ns:?}")
    })?;
    let mut oracle_gap = 0.0f64;
    let mut spot = None;
    for r in view.rows() {
        let (tail, bound) = (r.num("tail_mass"), r.num("tail_bound"));
        ensure(tail < bound, || {
            format!("tail {tail:e} >= {bound:e} at {:?} n={}", r.triple(), r.num("n"))
        })?;
        let (q, beta, base) = r.triple();
        let exact = closed_form_tail(q, beta, base, r.num("n").powf(1.0 - r.num("alpha")));
        oracle_gap = oracle_gap.max((tail - exact).abs());
        if r.is_triple(1.0, 1.0, E) && r.num("n") == 16.0 {
            spot = Some(bound);
        }
    }
    ensure(oracle_gap <= 1e-10, || {
        format!("tail mass differs from the closed form by {oracle_gap:e}")
    })?;
    let spot = spot.ok_or("no (1, 1, e, 16) row")?;
    ensure((spot - 2.0 * (-3.0f64).exp()).abs() <= 1e-15, || {
        format!("spot bound {spot}")
    })?;
    ensure((spot - 0.09957).abs() <= 5e-6, || {
        format!("spot bound {spot} vs 0.09957")
    })?;
    Ok(format!(
        "{} rows strictly dominated, closed-form gap {oracle_gap:.2e}, spot bound {spot:.5}",
        view.table.len()
    ))
}

fn moment_domination(s: &Studies) -> Check {
    clean(&s.bounds)?;
    let view = View::new(&s.bounds.table);
    let mut count = 0;
    let mut spot = None;
    let mut oracle_gap = 0.0f64;
    for r in view.rows().filter(|r| r.text("table") == "moment") {
        count += 1;
        let (value, bound) = (r.num("empirical"), r.num("bound"));
        ensure(value < bound, || {
            format!("moment {} at {:?}: {value} >= {bound}", r.num("k"), r.triple())
        })?;
        if r.is_triple(1.0, 1.0, E) {
            let k = r.num("k") as i32;
            oracle_gap = oracle_gap.max((value / trapezoid_moment(1.0, 1.0, E, k) - 1.0).abs());
            if k == 1 {
                spot = Some(bound);
            }
        }
    }
    ensure(count == 18 * 5, || format!("{count} moment rows, expected 90"))?;
    ensure(oracle_gap <= 1e-6, || {
        format!("moments differ from the trapezoid oracle by {oracle_gap:e} (relative)")
    })?;
    let spot = spot.ok_or("no (1, 1, e, k = 1) row")?;
    let closed = (E - 1.0) / (2.0 * (E + 1.0)) + 2.0 * E;
    ensure((spot - closed).abs() <= 1e-12, || {
        format!("spot bound {spot} vs closed form {closed}")
    })?;
    ensure((spot - 5.66761).abs() <= 2e-5, || {
        format!("spot bound {spot} vs 5.66761")
    })?;
    Ok(format!(
        "{count} rows strictly dominated, relative trapezoid gap {oracle_gap:.2e}, spot bound {spot:.6}"
    ))
}

fn jackson_domination(s: &Studies) -> Check {
    clean(&s.converge)?;
    let view = View::new(&s.converge.table);
    ensure(view.table.len() == 18 * 3 * 3 * 8, || {
        format!("{} rows", view.table.len())
    })?;
    let mut worst = 0.0f64;
    let mut conclusive = 0;
    let mut series: Series = BTreeMap::new();
    let mut e_bounds: BTreeMap<(String, [u64; 3], i64), Vec<f64>> = BTreeMap::new();
    for r in view.rows() {
        let ratio = r.num("ratio");
        ensure(ratio.is_finite() && ratio >= 0.0, || format!("ratio {ratio}"))?;
        ensure(ratio <= 1.0 + 1e-3, || {
            format!("ratio {ratio} at {:?} {}", r.triple(), r.text("label"))
        })?;
        if r.flag("conclusive") {
            conclusive += 1;
        }
        worst = worst.max(ratio);
        let key = (
            r.text("kind").to_string(),
            r.text("label").to_string(),
            r.triple().map_bits(),
        );
        series
            .entry(key)
            .or_default()
            .push((r.num("n"), r.num("sup_error"), r.num("quad_error")));
        if r.text("kind") != "direct" {
            e_bounds
                .entry((r.text("label").to_string(), r.triple().map_bits(), r.num("n") as i64))
                .or_default()
                .push(r.num("bound"));
        }
        if r.text("label") == "constant" {
            ensure(r.num("sup_error") <= 1e-8, || {
                format!("constant sup error {}", r.num("sup_error"))
            })?;
        }
    }
    for ((kind, label, _), mut rows) in series {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in rows.windows(2) {
            let slack = w[0].2 + w[1].2 + 1e-12;
            ensure(w[1].1 <= w[0].1 + slack, || {
                format!("{kind} {label}: sup error grows at n = {}", w[1].0)
            })?;
            if kind == "direct" && label == "sin" {
                ensure(w[1].1 < w[0].1, || {
                    format!("direct sin: sup error not decreasing at n = {}", w[1].0)
                })?;
            }
        }
    }
    for (key, bounds) in e_bounds {
        ensure(bounds.len() == 2 && bounds[0] == bounds[1], || {
            format!("E differs between kinds at {key:?}")
        })?;
    }
    Ok(format!(
        "{} rows, {conclusive} conclusive, max ratio {worst:.3}",
        view.table.len()
    ))
}

fn exactness(_: &Studies) -> Check {
    let constant = corpus::lookup("constant").map_err(|e| e.to_string())?.function;
    let id = corpus::lookup("id").map_err(|e| e.to_string())?.function;
    let value = corpus::CONSTANT;
    let xs = linspace(-3.0, 3.0, 13);
    let mut worst = 0.0f64;
    for (q, beta, base) in [(0.5, 0.5, 2.0), (1.0, 1.0, E), (2.0, 2.0, E), (2.0, 0.5, 2.0)] {
        let engine = OperatorEngine::new(DensityKernel::new(params(q, beta, base)), QuadratureConfig::default())
            .map_err(|e| e.to_string())?;
        for n in [16, 64, 256] {
            for kind in OperatorKind::ALL {
                let spec = OperatorSpec::new(kind, n, vec![0.25; 4]).map_err(|e| e.to_string())?;
                for v in engine.apply_grid(&constant, &spec, &xs).map_err(|e| e.to_string())? {
                    worst = worst.max((v.value - value).abs());
                }
            }
            let direct = engine
                .apply_grid(&id, &OperatorSpec::direct(n).map_err(|e| e.to_string())?, &xs)
                .map_err(|e| e.to_string())?;
            let averaged = engine
                .apply_grid(&id, &OperatorSpec::kantorovich(n).map_err(|e| e.to_string())?, &xs)
                .map_err(|e| e.to_string())?;
            for ((x, d), a) in xs.iter().zip(&direct).zip(&averaged) {
                worst = worst.max((d.value - x).abs());
                worst = worst.max((a.value - (x + 0.5 / n as f64)).abs());
            }
        }
    }
    ensure(worst <= 1e-8, || format!("worst deviation {worst:e}"))?;
    Ok(format!("worst deviation {worst:.2e}"))
}

fn smoothness_preservation(s: &Studies) -> Check {
    clean(&s.smoothness)?;
    let view = View::new(&s.smoothness.table);
    let step = s.config.smooth_step;
    let thetas: BTreeSet<u64> = view.rows().map(|r| r.num("theta").to_bits()).collect();
    let expected: BTreeSet<u64> = [0.05f64, 0.1, 0.5, 1.0].iter().map(|t| t.to_bits()).collect();
    ensure(thetas == expected, || "theta list differs".to_string())?;
    let kinds: BTreeSet<&str> = view.rows().map(|r| r.text("kind")).collect();
    ensure(kinds.len() == 3, || format!("kinds {kinds:?}"))?;
    let labels: BTreeSet<&str> = view.rows().map(|r| r.text("label")).collect();
    ensure(labels.len() == corpus::LABELS.len(), || format!("labels {labels:?}"))?;
    let mut id_rows = 0;
    for r in view.rows() {
        let (wf, wo, qe, theta) = (r.num("omega_f"), r.num("omega_op"), r.num("quad_error"), r.num("theta"));
        ensure(wo <= wf + 2.0 * qe, || {
            format!("{} {:?} theta={theta}: {wo} > {wf}", r.text("label"), r.triple())
        })?;
        match r.text("label") {
            "id" => {
                id_rows += 1;
                ensure((wf - theta).abs() <= step && (wo - theta).abs() <= step, || {
                    format!("id moduli {wf}, {wo} at theta = {theta}")
                })?;
            }
            "constant" => ensure(wf == 0.0 && wo.abs() <= 2.0 * qe, || {
                format!("constant moduli {wf}, {wo}")
            })?,
            _ => {}
        }
    }
    Ok(format!("{} rows, {id_rows} id sharpness rows", view.table.len()))
}

fn derivative_commutation(_: &Studies) -> Check {
    let mut worst = 0.0f64;
    let mut count = 0;
    for label in ["sin", "gauss"] {
        let f = corpus::lookup(label).map_err(|e| e.to_string())?.function;
        for (q, beta, base) in [(1.0, 1.0, E), (0.5, 2.0, 2.0), (2.0, 0.5, E)] {
            let engine = OperatorEngine::new(DensityKernel::new(params(q, beta, base)), QuadratureConfig::default())
                .map_err(|e| e.to_string())?;
            for kind in OperatorKind::ALL {
                let spec = OperatorSpec::new(kind, 16, vec![0.25; 4]).map_err(|e| e.to_string())?;
                for x in [-1.3, 0.0, 0.4, 2.2] {
                    for k in [1, 2] {
                        let check = engine
                            .derivative_commutation_check(&f, &spec, x, k)
                            .map_err(|e| e.to_string())?;
                        let gap = (check.lhs - check.rhs).abs();
                        ensure(gap <= 1e-3, || format!("{label} {kind} k={k} x={x}: gap {gap:e}"))?;
                        worst = worst.max(gap);
                        count += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{count} checks, worst gap {worst:.2e}"))
}

fn taylor_remainder(s: &Studies) -> Check {
    let view = View::new(&s.bounds.table);
    let mut taylor = 0;
    let mut worst = 0.0f64;
    let mut cover = BTreeSet::new();
    let mut spot = None;
    for r in view.rows() {
        match r.text("table") {
            "taylor" => {
                taylor += 1;
                let (emp, bound) = (r.num("empirical"), r.num("bound"));
                ensure(emp <= bound * (1.0 + 1e-3), || {
                    format!(
                        "{} {} N={} n={}: {emp:e} > {bound:e}",
                        r.text("kind"),
                        r.text("label"),
                        r.num("N"),
                        r.num("n")
                    )
                })?;
                worst = worst.max(emp / bound);
                cover.insert((
                    r.text("kind").to_string(),
                    r.text("label").to_string(),
                    r.num("N") as i64,
                    r.num("n") as i64,
                ));
                if r.is_triple(1.0, 1.0, E)
                    && r.text("kind") == "direct"
                    && r.text("label") == "sin"
                    && r.num("N") == 1.0
                    && r.num("n") == 100.0
                {
                    spot = Some((emp, bound));
                }
            }
            "centered" if r.text("kind") == "direct" && r.num("k") as i64 % 2 == 1 => {
                let v = r.num("empirical");
                ensure(v <= 1e-9, || {
                    format!("odd direct centered moment {} = {v:e}", r.num("k"))
                })?;
            }
            _ => {}
        }
    }
    ensure(cover.len() == 3 * 2 * 2 * 2, || {
        format!("{} (kind, f, N, n) combinations", cover.len())
    })?;
    let (emp, bound) = spot.ok_or("no direct sin N=1 n=100 row at (1, 1, e)")?;
    ensure((bound - 0.0129305).abs() <= 1e-5, || {
        format!("spot bound {bound} vs 0.0129305")
    })?;
    Ok(format!(
        "{taylor} rows, max remainder/bound {worst:.3}, spot {emp:.2e} <= {bound:.7}"
    ))
}

fn iterated_bounds(s: &Studies) -> Check {
    clean(&s.iterate)?;
    let view = View::new(&s.iterate.table);
    let mut homogeneous = BTreeSet::new();
    let mut monotone = 0;
    for r in view.rows() {
        let (emp, rr, qe) = (r.num("empirical"), r.num("r"), r.num("quad_error"));
        let label = format!("{} {} r={rr}", r.text("chain"), r.text("label"));
        ensure(r.num("max_stage_sup") <= 1.0 + 1e-7, || {
            format!("{label}: not non-expansive")
        })?;
        ensure(emp <= r.num("sum_bound"), || format!("{label}: above the summed bound"))?;
        if let Some(single) = r.cell("single_empirical").as_f64() {
            homogeneous.insert(rr as i64);
            ensure(emp <= rr * single + rr * 1e-7 + qe, || {
                format!("{label}: {emp:e} > {rr} x {single:e}")
            })?;
            ensure(emp <= r.num("r_fold_bound"), || {
                format!("{label}: above the r-fold bound")
            })?;
        }
        if r.text("chain") == "direct:9>direct:16>direct:25" {
            monotone += 1;
        }
    }
    ensure(homogeneous.is_superset(&BTreeSet::from([2, 3])), || {
        format!("homogeneous lengths {homogeneous:?}")
    })?;
    ensure(monotone == 6, || format!("{monotone} monotone chain rows"))?;

    // The first stage of a chain is a plain application.
    let (q, beta, base) = s.config.iterate_params;
    let engine = OperatorEngine::new(DensityKernel::new(params(q, beta, base)), QuadratureConfig::default())
        .map_err(|e| e.to_string())?;
    let xs = linspace(s.config.window.0, s.config.window.1, s.config.iterate_points);
    let f: TargetFunction = corpus::lookup("sin").map_err(|e| e.to_string())?.function;
    let values = engine
        .apply_grid(&f, &OperatorSpec::direct(16).map_err(|e| e.to_string())?, &xs)
        .map_err(|e| e.to_string())?;
    let (single, _) = sup_deviation(&f, &xs, &values);
    let first = view
        .rows()
        .find(|r| r.text("chain") == "direct:16x3" && r.text("label") == "sin" && r.num("r") == 1.0)
        .ok_or("no direct:16x3 sin r=1 row")?
        .num("empirical");
    ensure((first - single).abs() <= 1e-8, || {
        format!("r=1 row {first:e} vs direct application {single:e}")
    })?;
    Ok(format!(
        "{} rows, homogeneous lengths {homogeneous:?}, monotone chain within the summed bound",
        view.table.len()
    ))
}

const REDUCED: &str = "\
q = 0.5, 2
beta = 1
base = e
n = 16, 64
functions = sin, ramp, id
tail_n = 9, 16
taylor_n = 64
thetas = 0.1, 0.5
smooth_step = 0.02
iterate_points = 5
chains = direct:16x2; kantorovich:16>quadrature:16
";

fn invoke(config: &Path, command: &str, out: &Path, format: &str, threads: &str) -> Result<Vec<u8>, String> {
    let status = Process::new(env!("CARGO_BIN_EXE_psiconv"))
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--format", format])
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!(
            "{command} exited with {:?}: {}",
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        )
    })?;
    std::fs::read(out).map_err(|e| e.to_string())
}

fn determinism(_: &Studies) -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = dir.path().join("study.cfg");
    std::fs::write(&config, REDUCED).map_err(|e| e.to_string())?;
    let mut bytes = 0;
    for command in ["density-check", "converge", "bounds", "iterate", "smoothness"] {
        for format in ["csv", "json"] {
            let a = invoke(
                &config,
                command,
                &dir.path().join(format!("{command}-a.{format}")),
                format,
                "1",
            )?;
            let b = invoke(
                &config,
                command,
                &dir.path().join(format!("{command}-b.{format}")),
                format,
                "4",
            )?;
            ensure(!a.is_empty() && a == b, || {
                format!("{command} {format} output differs between runs")
            })?;
            bytes += a.len();
        }
    }
    Ok(format!(
        "5 subcommands x 2 formats byte-identical across 1 and 4 threads ({bytes} bytes)"
    ))
}

fn main() -> ExitCode {
    let config = StudyConfig::default();
    let started = Instant::now();
    let study = |command| run(command, &config).unwrap_or_else(|e| panic!("{} failed to run: {e}", command.name()));
    let studies = Studies {
        density: study(Command::DensityCheck),
        converge: study(Command::Converge),
        bounds: study(Command::Bounds),
        smoothness: study(Command::Smoothness),
        iterate: study(Command::Iterate),
        config: config.clone(),
    };
    println!("default studies ran in {:.1} s", started.elapsed().as_secs_f64());

    let criteria: [Criterion; 12] = [
        ("density normalization", density_normalization),
        ("deformed symmetry", deformed_symmetry),
        ("global maximum", global_maximum),
        ("tail domination", tail_domination),
        ("moment domination", moment_domination),
        ("Jackson-type domination", jackson_domination),
        ("exactness cases", exactness),
        ("smoothness preservation", smoothness_preservation),
        ("derivative commutation", derivative_commutation),
        ("Taylor remainder", taylor_remainder),
        ("iterated bounds", iterated_bounds),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check(&studies) {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
