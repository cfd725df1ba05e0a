//! Study configuration: a `key = value` file plus command-line overrides.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::f64::consts::E;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use psiconv_core::{ActivationParams, OperatorKind, OperatorSpec, QuadratureConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(CliError::Config(format!(
                "unknown format `{other}` (expected csv or json)"
            ))),
        }
    }
}

/// One iterated chain, innermost stage first.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    pub stages: Vec<(OperatorKind, u32)>,
}

impl ChainSpec {
    /// Parses `kind:n x r` (homogeneous) or `kind:n > kind:n > ...`.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let text = text.trim();
        let stage = |s: &str| -> Result<(OperatorKind, u32), CliError> {
            let (kind, n) = s
                .trim()
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("chain stage `{s}` must look like kind:n")))?;
            let kind = kind
                .parse::<OperatorKind>()
                .map_err(|e| CliError::Config(e.to_string()))?;
            Ok((kind, parse_scalar::<u32>("chain scale", n)?))
        };
        let stages = if let Some((head, r)) = text.split_once('x') {
            let r = parse_scalar::<usize>("chain length", r)?;
            if r == 0 {
                return Err(CliError::Config(format!("chain `{text}` has length 0")));
            }
            vec![stage(head)?; r]
        } else {
            text.split('>').map(stage).collect::<Result<Vec<_>, _>>()?
        };
        Ok(Self { stages })
    }

    pub fn is_homogeneous(&self) -> bool {
        self.stages.windows(2).all(|w| w[0] == w[1])
    }

    /// Text form of the first `r` stages.
    pub fn prefix_label(&self, r: usize) -> String {
        let part = &self.stages[..r];
        if part.len() > 1 && self.is_homogeneous() {
            format!("{}:{}x{}", part[0].0, part[0].1, r)
        } else {
            part.iter()
                .map(|(k, n)| format!("{k}:{n}"))
                .collect::<Vec<_>>()
                .join(">")
        }
    }

    /// Outermost kind, or `mixed`.
    pub fn kind_label(&self) -> String {
        let first = self.stages[0].0;
        if self.stages.iter().all(|(k, _)| *k == first) {
            first.to_string()
        } else {
            "mixed".to_string()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub q: Vec<f64>,
    pub beta: Vec<f64>,
    pub base: Vec<f64>,
    pub kinds: Vec<OperatorKind>,
    pub n: Vec<u32>,
    pub alpha: f64,
    pub functions: Vec<String>,
    /// Evaluation window and step of the x-grid.
    pub window: (f64, f64),
    pub step: f64,
    /// Quadrature-operator weights.
    pub weights: Vec<f64>,
    pub quadrature: QuadratureConfig,
    /// Scales at which tail masses are compared (density-check).
    pub tail_n: Vec<u32>,
    /// Highest absolute moment (bounds).
    pub moment_order: usize,
    pub taylor_n: Vec<u32>,
    pub taylor_orders: Vec<usize>,
    pub taylor_functions: Vec<String>,
    /// Finer step for the modulus study.
    pub smooth_step: f64,
    pub smooth_n: Vec<u32>,
    pub thetas: Vec<f64>,
    /// Kernel, grid, functions and quadrature of the iterate study.
    pub iterate_params: (f64, f64, f64),
    pub iterate_points: usize,
    pub iterate_functions: Vec<String>,
    pub iterate_quadrature: QuadratureConfig,
    pub chains: Vec<ChainSpec>,
    pub format: Format,
    pub out: Option<PathBuf>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            q: vec![0.5, 1.0, 2.0],
            beta: vec![0.5, 1.0, 2.0],
            base: vec![2.0, E],
            kinds: OperatorKind::ALL.to_vec(),
            n: vec![16, 64, 256],
            alpha: 0.5,
            functions: crate::corpus::LABELS.iter().map(|s| s.to_string()).collect(),
            window: (-3.0, 3.0),
            step: 0.02,
            weights: vec![0.25; 4],
            quadrature: QuadratureConfig::default(),
            tail_n: vec![9, 16, 25, 36, 64],
            moment_order: 5,
            taylor_n: vec![64, 100],
            taylor_orders: vec![1, 2],
            taylor_functions: vec!["sin".into(), "gauss".into()],
            smooth_step: 0.01,
            smooth_n: vec![16],
            thetas: vec![0.05, 0.1, 0.5, 1.0],
            iterate_params: (2.0, 2.0, E),
            iterate_points: 7,
            iterate_functions: vec!["sin".into(), "gauss".into()],
            iterate_quadrature: QuadratureConfig {
                tail_epsilon: 1e-10,
                ..QuadratureConfig::default()
            },
            chains: [
                "direct:16x3",
                "kantorovich:16x2",
                "quadrature:16x2",
                "kantorovich:16>quadrature:16",
                "direct:9>direct:16>direct:25",
            ]
            .iter()
            .map(|c| ChainSpec::parse(c).expect("default chains parse"))
            .collect(),
            format: Format::Csv,
            out: None,
        }
    }
}

fn parse_scalar<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.trim()
        .parse::<T>()
        .map_err(|_| CliError::Config(format!("`{key}`: cannot parse `{}`", raw.trim())))
}

/// A real number; `e` stands for Euler's number.
fn parse_real(key: &str, raw: &str) -> Result<f64, CliError> {
    let v = match raw.trim() {
        "e" => E,
        other => parse_scalar::<f64>(key, other)?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("`{key}`: `{}` is not finite", raw.trim())))
    }
}

fn parse_list<T>(key: &str, raw: &str, item: impl Fn(&str, &str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    let items = raw
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| item(key, s))
        .collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err(CliError::Config(format!("`{key}` must not be empty")));
    }
    Ok(items)
}

fn parse_pair(key: &str, raw: &str) -> Result<(f64, f64), CliError> {
    match parse_list(key, raw, parse_real)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(CliError::Config(format!("`{key}` takes two values a,b"))),
    }
}

fn strings(key: &str, raw: &str) -> Result<Vec<String>, CliError> {
    parse_list(key, raw, |_, s| Ok(s.trim().to_string()))
}

impl StudyConfig {
    /// Reads `key = value` lines. `#` starts a comment.
    pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>, CliError> {
        let mut entries = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            entries.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(entries)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::default();
        for (key, value) in Self::parse_entries(&text)? {
            config.set(&key, &value)?;
        }
        Ok(config)
    }

    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "q" => self.q = parse_list(key, value, parse_real)?,
            "beta" => self.beta = parse_list(key, value, parse_real)?,
            "base" | "B" => self.base = parse_list(key, value, parse_real)?,
            "kinds" => {
                self.kinds = parse_list(key, value, |_, s| {
                    s.parse::<OperatorKind>().map_err(|e| CliError::Config(e.to_string()))
                })?
            }
            "n" => self.n = parse_list(key, value, parse_scalar)?,
            "alpha" => self.alpha = parse_real(key, value)?,
            "functions" => self.functions = strings(key, value)?,
            "window" => self.window = parse_pair(key, value)?,
            "step" => self.step = parse_real(key, value)?,
            "weights" => self.weights = parse_list(key, value, parse_real)?,
            "tail_eps" => self.quadrature.tail_epsilon = parse_real(key, value)?,
            "rel_tol" => self.quadrature.rel_tol = parse_real(key, value)?,
            "max_refinements" => self.quadrature.max_refinements = parse_scalar(key, value)?,
            "panel_width" => self.quadrature.panel_width = parse_real(key, value)?,
            "tail_n" => self.tail_n = parse_list(key, value, parse_scalar)?,
            "moment_order" => self.moment_order = parse_scalar(key, value)?,
            "taylor_n" => self.taylor_n = parse_list(key, value, parse_scalar)?,
            "taylor_orders" => self.taylor_orders = parse_list(key, value, parse_scalar)?,
            "taylor_functions" => self.taylor_functions = strings(key, value)?,
            "smooth_step" => self.smooth_step = parse_real(key, value)?,
            "smooth_n" => self.smooth_n = parse_list(key, value, parse_scalar)?,
            "thetas" => self.thetas = parse_list(key, value, parse_real)?,
            "iterate_params" => match parse_list(key, value, parse_real)?.as_slice() {
                [q, b, base] => self.iterate_params = (*q, *b, *base),
                _ => return Err(CliError::Config("`iterate_params` takes q,beta,B".into())),
            },
            "iterate_points" => self.iterate_points = parse_scalar(key, value)?,
            "iterate_functions" => self.iterate_functions = strings(key, value)?,
            "iterate_tail_eps" => self.iterate_quadrature.tail_epsilon = parse_real(key, value)?,
            "iterate_rel_tol" => self.iterate_quadrature.rel_tol = parse_real(key, value)?,
            "chains" => {
                self.chains = value
                    .split(';')
                    .filter(|s| !s.trim().is_empty())
                    .map(ChainSpec::parse)
                    .collect::<Result<_, _>>()?
            }
            "format" => self.format = value.parse()?,
            "out" => self.out = Some(PathBuf::from(value.trim())),
            other => return Err(CliError::Config(format!("unknown configuration key `{other}`"))),
        }
        Ok(())
    }

    /// Every activation triple, in `q`, `beta`, `B` order.
    pub fn triples(&self) -> Result<Vec<ActivationParams>, CliError> {
        let mut out = Vec::new();
        for &q in &self.q {
            for &beta in &self.beta {
                for &base in &self.base {
                    out.push(ActivationParams::new(q, beta, base).map_err(|e| CliError::Config(e.to_string()))?);
                }
            }
        }
        Ok(out)
    }

    pub fn iterate_triple(&self) -> Result<ActivationParams, CliError> {
        let (q, beta, base) = self.iterate_params;
        ActivationParams::new(q, beta, base).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn spec(&self, kind: OperatorKind, n: u32) -> Result<OperatorSpec, CliError> {
        OperatorSpec::new(kind, n, self.weights.clone()).map_err(|e| CliError::Config(e.to_string()))
    }

    fn check_scales(&self, key: &str, scales: &[u32]) -> Result<(), CliError> {
        for &n in scales {
            if (n as f64).powf(1.0 - self.alpha).partial_cmp(&2.0) != Some(Ordering::Greater) {
                return Err(CliError::Config(format!(
                    "`{key}`: n = {n} violates n^(1-alpha) > 2 for alpha = {}",
                    self.alpha
                )));
            }
        }
        Ok(())
    }

    /// Checks everything that can be checked before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.triples()?;
        self.iterate_triple()?;
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(CliError::Config(format!("alpha = {} must lie in (0, 1)", self.alpha)));
        }
        self.check_scales("n", &self.n)?;
        self.check_scales("tail_n", &self.tail_n)?;
        self.check_scales("taylor_n", &self.taylor_n)?;
        self.check_scales("smooth_n", &self.smooth_n)?;
        for chain in &self.chains {
            let scales: Vec<u32> = chain.stages.iter().map(|s| s.1).collect();
            self.check_scales("chains", &scales)?;
        }
        for kind in OperatorKind::ALL {
            self.spec(kind, 16)?;
        }
        self.quadrature
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.iterate_quadrature
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let (a, b) = self.window;
        if !(a < b && self.step > 0.0 && self.step <= b - a) {
            return Err(CliError::Config(format!(
                "window {a},{b} with step {} is not a grid",
                self.step
            )));
        }
        if !(self.smooth_step > 0.0 && self.smooth_step <= b - a) {
            return Err(CliError::Config(format!(
                "smooth_step {} is not usable",
                self.smooth_step
            )));
        }
        if let Some(t) = self
            .thetas
            .iter()
            .find(|t| (**t).partial_cmp(&self.smooth_step).map_or(true, Ordering::is_lt))
        {
            return Err(CliError::Config(format!(
                "theta {t} is below smooth_step {}",
                self.smooth_step
            )));
        }
        if self.moment_order == 0 || self.taylor_orders.contains(&0) {
            return Err(CliError::Config("moment and Taylor orders start at 1".into()));
        }
        if self.iterate_points == 0 {
            return Err(CliError::Config("iterate_points must be positive".into()));
        }
        for label in self
            .functions
            .iter()
            .chain(&self.taylor_functions)
            .chain(&self.iterate_functions)
        {
            crate::corpus::lookup(label)?;
        }
        Ok(())
    }
}
