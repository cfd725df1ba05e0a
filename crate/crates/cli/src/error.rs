use psiconv_core::Error as CoreError;

/// Failures that stop a run before its report is complete.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
}

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const ASSERTION: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const TOLERANCE: i32 = 3;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Core(e) => core_exit_code(e),
            CliError::Io(_) => exit::CONFIG,
        }
    }
}

/// Numerical failures map to 3, precondition and specification errors to 2.
pub fn core_exit_code(e: &CoreError) -> i32 {
    match e {
        CoreError::ToleranceNotMet { .. } | CoreError::IntegrandNotFinite { .. } | CoreError::BudgetExceeded { .. } => {
            exit::TOLERANCE
        }
        _ => exit::CONFIG,
    }
}
