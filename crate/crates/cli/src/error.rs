use thiserror::Error;

/// Exit code for invalid configuration or input data.
pub const EXIT_VALIDATION: u8 = 2;
/// Exit code for a numerical failure; any partial report is still written.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Numerical(String),

    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Numerical(_) | CliError::Output { .. } => EXIT_NUMERICAL,
        }
    }
}

impl From<densmap::Error> for CliError {
    fn from(e: densmap::Error) -> Self {
        use densmap::Error as E;
        match e {
            E::InvalidGrid(_)
            | E::SizeMismatch { .. }
            | E::GridMismatch
            | E::InvalidArgument(_)
            | E::ZeroField
            | E::PauliExclusion
            | E::IncompatibleInitialState(_)
            | E::NegativeDensity { .. }
            | E::Format(_)
            | E::Io(_) => CliError::Validation(e.to_string()),
            E::EigenSolver(_)
            | E::LinearSolve(_)
            | E::NonFinite { .. }
            | E::DegenerateWeight { .. }
            | E::IncompatibleRhs { .. }
            | E::NonConvergence { .. } => CliError::Numerical(e.to_string()),
        }
    }
}
