//! The five studies behind the subcommands.

use psiconv_core::{ActivationParams, Error as CoreError, Integral};
use rayon::prelude::*;

use crate::config::StudyConfig;
use crate::error::{core_exit_code, exit, CliError};
use crate::report::{Cell, Table};

pub mod bounds;
pub mod converge;
pub mod density;
pub mod iterate;
pub mod smoothness;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    DensityCheck,
    Converge,
    Bounds,
    Iterate,
    Smoothness,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DensityCheck => "density-check",
            Command::Converge => "converge",
            Command::Bounds => "bounds",
            Command::Iterate => "iterate",
            Command::Smoothness => "smoothness",
        }
    }
}

/// A finished study: the full table plus every failed assertion.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: Table,
    /// Assertion failures (exit code 1).
    pub failures: Vec<String>,
    /// Numerical failures such as unmet tolerances (exit code 3).
    pub numerical: Vec<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if !self.numerical.is_empty() {
            exit::TOLERANCE
        } else if !self.failures.is_empty() {
            exit::ASSERTION
        } else {
            exit::SUCCESS
        }
    }

    pub fn passed(&self) -> bool {
        self.exit_code() == exit::SUCCESS
    }
}

/// Rows and failures from one independent work item.
#[derive(Debug, Default)]
pub(crate) struct Partial {
    pub rows: Vec<(Vec<Cell>, Vec<Cell>)>,
    pub failures: Vec<String>,
    pub numerical: Vec<String>,
}

impl Partial {
    pub fn row(&mut self, key: Vec<Cell>, cells: Vec<Cell>) {
        self.rows.push((key, cells));
    }

    pub fn error(&mut self, context: &str, e: &CoreError) {
        if core_exit_code(e) == exit::TOLERANCE {
            self.numerical.push(format!("{context}: {e}"));
        } else {
            self.failures.push(format!("{context}: {e}"));
        }
    }

    /// The value of `result`; on failure the error is recorded and the best
    /// estimate of an unmet tolerance is kept.
    pub fn integral(&mut self, context: &str, result: psiconv_core::Result<Integral>) -> Integral {
        match result {
            Ok(v) => v,
            Err(e) => {
                self.error(context, &e);
                match e {
                    CoreError::ToleranceNotMet { best, .. } => best,
                    _ => Integral {
                        value: f64::NAN,
                        error: f64::NAN,
                        refinements: 0,
                    },
                }
            }
        }
    }

    /// Asserts `ok`, recording `message` otherwise.
    pub fn check(&mut self, ok: bool, message: impl FnOnce() -> String) -> bool {
        if !ok {
            self.failures.push(message());
        }
        ok
    }
}

/// Runs `items` in parallel and assembles a sorted table.
pub(crate) fn assemble<T: Sync>(
    columns: &[&'static str],
    items: &[T],
    work: impl Fn(&T) -> Partial + Sync + Send,
) -> Outcome {
    merge(columns, items.par_iter().map(work).collect())
}

/// Merges partial results into a sorted table.
pub(crate) fn merge(columns: &[&'static str], partials: Vec<Partial>) -> Outcome {
    let mut table = Table::new(columns);
    let mut failures = Vec::new();
    let mut numerical = Vec::new();
    for p in partials {
        for (key, cells) in p.rows {
            table.push(key, cells);
        }
        failures.extend(p.failures);
        numerical.extend(p.numerical);
    }
    table.sort();
    failures.sort();
    numerical.sort();
    Outcome {
        table,
        failures,
        numerical,
    }
}

pub(crate) fn param_cells(p: &ActivationParams) -> [Cell; 3] {
    [p.q().into(), p.beta().into(), p.base().into()]
}

pub(crate) fn describe(p: &ActivationParams) -> String {
    format!("q={} beta={} B={}", p.q(), p.beta(), p.base())
}

/// Validates `config` and runs `command`.
pub fn run(command: Command, config: &StudyConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    match command {
        Command::DensityCheck => density::run(config),
        Command::Converge => converge::run(config),
        Command::Bounds => bounds::run(config),
        Command::Iterate => iterate::run(config),
        Command::Smoothness => smoothness::run(config),
    }
}
