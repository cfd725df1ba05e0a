//! Studies, configuration and report output behind the `psiconv` binary.

pub mod config;
pub mod corpus;
pub mod error;
pub mod report;
pub mod studies;

pub use config::{ChainSpec, Format, StudyConfig};
pub use error::{exit, CliError};
pub use report::{Cell, Table};
pub use studies::{run, Command, Outcome};
