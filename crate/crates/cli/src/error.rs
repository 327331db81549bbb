use reslab_core::{EnsembleError, GraphError, SolveError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("graph file: {0}")]
    Format(#[from] crate::format::FormatError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for bad input, 3 for numerical failure, 4 for policy violations.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Solve(SolveError::OriginExcluded | SolveError::OriginOnContour) => 4,
            CliError::Solve(SolveError::InvalidRectangle(_) | SolveError::InvalidArgument(_) | SolveError::NotClosed) => 2,
            CliError::Solve(_) => 3,
            _ => 2,
        }
    }
}
