//! Library side of the `hyperclust` command-line tool.

pub mod commands;
pub mod experiment;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or configuration; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Anything that failed while running; exit code 1.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<hyperclust::Error> for CliError {
    fn from(e: hyperclust::Error) -> Self {
        use hyperclust::Error as E;
        let mut root = &e;
        while let E::Stage { source, .. } = root {
            root = source;
        }
        match root {
            E::Json(_) | E::InvalidModel(_) | E::RankTooLarge { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
