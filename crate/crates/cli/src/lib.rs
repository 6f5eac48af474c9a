//! Library side of the experiment driver: configuration parsing, command
//! dispatch and plot-data export. The binary is a thin wrapper mapping
//! errors to exit codes.

pub mod config;
pub mod emit;
pub mod runner;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),

    #[error(transparent)]
    Run(#[from] dirac_loc_core::CoreError),
}

impl CliError {
    /// Exit code contract: 2 for configuration problems, 3 for numerical or
    /// data-quality failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Run(e) => match e {
                dirac_loc_core::CoreError::Model(_) | dirac_loc_core::CoreError::Parameter(_) => 2,
                _ => 3,
            },
        }
    }
}

pub use config::{Command, ExperimentConfig};
pub use emit::{emit_plot_data, PlotKind, Table};
pub use runner::{run, RunOutput};
