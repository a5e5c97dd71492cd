use thiserror::Error;

/// Scenario failure, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("truncation insufficient: {0}")]
    Truncation(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) => 1,
            RunError::Config(_) => 2,
            RunError::Solver(_) => 3,
            RunError::Truncation(_) => 4,
        }
    }
}

impl From<fockres::Error> for RunError {
    fn from(e: fockres::Error) -> Self {
        use fockres::Error as E;
        let msg = e.to_string();
        match e {
            E::TruncationInsufficient { .. } => RunError::Truncation(msg),
            E::OutOfRange { .. }
            | E::InvalidParameter { .. }
            | E::DimensionMismatch { .. }
            | E::NoSteadyState(_)
            | E::TruncationTooSmall { .. }
            | E::Infeasible(_) => RunError::Config(msg),
            // states handed to the CLI come from the solvers, so a bad one is a solver fault
            E::InvalidState(_)
            | E::DimensionOverflow { .. }
            | E::StepSizeUnderflow { .. }
            | E::NonConvergence(_)
            | E::DegenerateNullSpace { .. } => RunError::Solver(msg),
        }
    }
}
