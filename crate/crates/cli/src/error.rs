use thiserror::Error;

/// Failures of a CLI invocation, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] infodyn::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 1 for configuration and input errors, 2 when the problem has no
    /// (finite) solution, 3 when a solver fails to converge.
    pub fn exit_code(&self) -> i32 {
        use infodyn::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Core(e) => match e.root() {
                E::Infeasible(_)
                | E::InfiniteInfimum(_)
                | E::PriorSupport(_)
                | E::Unbounded
                | E::DegenerateConditioning { .. } => 2,
                E::NonConvergence { .. } => 3,
                _ => 1,
            },
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
