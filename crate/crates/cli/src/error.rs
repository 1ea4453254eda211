use thiserror::Error;

/// Failures surfaced by the command-line front end, each mapped to an exit
/// code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("model is not stationary: {0}")]
    NonStationary(String),

    #[error("estimation failed: {0}")]
    Estimation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::NonStationary(_) => 3,
            CliError::Estimation(_) => 4,
        }
    }
}

impl From<varlp::Error> for CliError {
    fn from(e: varlp::Error) -> Self {
        use varlp::Error as E;
        let msg = e.to_string();
        match e {
            E::NotStationary | E::UnstableModel(_) | E::Overflow => CliError::NonStationary(msg),
            E::AllColumnsInfeasible(_)
            | E::NoConvergence { .. }
            | E::NotOptimal
            | E::PivotLimit(_) => CliError::Estimation(msg),
            E::Io(_) | E::Parse(_) => CliError::Input(msg),
            _ => CliError::Config(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
