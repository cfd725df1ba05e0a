use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use psiconv_cli::{exit, run, CliError, Command, StudyConfig};

#[derive(Debug, Parser)]
#[command(
    name = "psiconv",
    version,
    about = "Approximation studies for deformed-sigmoid density operators"
)]
struct Cli {
    #[command(subcommand)]
    command: Study,

    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Report destination; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// `csv` or `json`.
    #[arg(long, global = true)]
    format: Option<String>,

    /// Truncation tail mass of the weighted quadrature.
    #[arg(long, global = true)]
    tail_eps: Option<String>,

    /// Relative tolerance of the weighted quadrature.
    #[arg(long, global = true)]
    rel_tol: Option<String>,

    /// Sample window as `a,b`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,

    /// Grid spacing; for `smoothness` this is the modulus grid spacing.
    #[arg(long, global = true)]
    step: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Study {
    /// Normalization, symmetry, maximum and tail mass of the density.
    DensityCheck,
    /// Grid sup errors against the approximation bounds.
    Converge,
    /// Absolute and centered moments and Taylor remainders.
    Bounds,
    /// Iterated operator chains.
    Iterate,
    /// Moduli of continuity of operator outputs.
    Smoothness,
}

impl From<Study> for Command {
    fn from(s: Study) -> Self {
        match s {
            Study::DensityCheck => Command::DensityCheck,
            Study::Converge => Command::Converge,
            Study::Bounds => Command::Bounds,
            Study::Iterate => Command::Iterate,
            Study::Smoothness => Command::Smoothness,
        }
    }
}

fn configure(cli: &Cli) -> Result<StudyConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => StudyConfig::from_file(path)?,
        None => StudyConfig::default(),
    };
    let overrides = [
        ("format", &cli.format),
        ("tail_eps", &cli.tail_eps),
        ("rel_tol", &cli.rel_tol),
        ("window", &cli.window),
        ("step", &cli.step),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            config.set(key, v)?;
        }
    }
    if let (Study::Smoothness, Some(step)) = (cli.command, &cli.step) {
        config.set("smooth_step", step)?;
    }
    if let Some(out) = &cli.out {
        config.out = Some(out.clone());
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = Command::from(cli.command);
    let result = configure(&cli).and_then(|config| {
        let outcome = run(command, &config)?;
        outcome.table.write(config.format, config.out.as_deref())?;
        Ok(outcome)
    });
    let code = match result {
        Ok(outcome) => {
            for message in outcome.numerical.iter().chain(&outcome.failures) {
                eprintln!("FAIL {message}");
            }
            eprintln!(
                "{}: {} rows, {} assertion failures, {} numerical failures",
                command.name(),
                outcome.table.len(),
                outcome.failures.len(),
                outcome.numerical.len()
            );
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    debug_assert!((exit::SUCCESS..=exit::TOLERANCE).contains(&code));
    ExitCode::from(code as u8)
}
