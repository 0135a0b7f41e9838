use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Process exit statuses.
pub mod exit {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const INFEASIBLE: u8 = 4;
    pub const TIME_CAP: u8 = 5;
    pub const EMPTY_REPORTS: u8 = 6;
    pub const FILESYSTEM: u8 = 7;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {}: {source}", path.display())]
    Read { path: PathBuf, source: io::Error },

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: io::Error },

    #[error("{}: {source}", path.display())]
    Parse {
        path: PathBuf,
        source: relcon_core::Error,
    },

    #[error("{context}: {source}")]
    Run {
        context: String,
        source: relcon_core::Error,
    },

    #[error("no slot reports to write")]
    EmptyReports,

    #[error("time cap reached in {slots} slot(s); incumbents written")]
    TimeCapReached { slots: usize },

    #[error("{0}")]
    Usage(String),

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

fn core_code(e: &relcon_core::Error) -> u8 {
    use relcon_core::Error as E;
    match e {
        E::Infeasible(_) => exit::INFEASIBLE,
        E::InvalidTimeCap => exit::USAGE,
        E::Scenario(_) | E::InvalidSpec(_) => exit::PARSE,
        E::Slot { source, .. } => core_code(source),
        _ => exit::FAILURE,
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Read { .. } | CliError::Write { .. } => exit::FILESYSTEM,
            CliError::Parse { .. } => exit::PARSE,
            CliError::Run { source, .. } => core_code(source),
            CliError::EmptyReports => exit::EMPTY_REPORTS,
            CliError::TimeCapReached { .. } => exit::TIME_CAP,
            CliError::Usage(_) => exit::USAGE,
            CliError::Csv(_) => exit::FAILURE,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
