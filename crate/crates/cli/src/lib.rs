//! Command-line driver internals: config parsing, dataset ingestion, report
//! rendering, trace plots, and the subcommand implementations.

pub mod commands;
pub mod config;
pub mod data;
pub mod report;
pub mod svg;

/// CLI errors grouped by exit code: usage/config 1, data 2, numerical 3.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(metro_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
            CliError::Numeric(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<metro_core::Error> for CliError {
    fn from(e: metro_core::Error) -> Self {
        use metro_core::Error;
        match e {
            Error::InvalidDataset(_) => CliError::Data(e.to_string()),
            Error::InvalidParameter(_)
            | Error::InvalidConfig(_)
            | Error::NotPositiveSemidefinite => CliError::Usage(e.to_string()),
            other => CliError::Numeric(other),
        }
    }
}
