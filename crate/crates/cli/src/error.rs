use std::path::PathBuf;

use krein_core::ScatterError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),
    #[error("{path}: {msg}")]
    Csv { path: PathBuf, msg: String },
    #[error("{0}")]
    Ingest(String),
    #[error(transparent)]
    Core(#[from] ScatterError),
}

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INGEST: i32 = 2;
pub const EXIT_INDEX: i32 = 3;
pub const EXIT_POSITIVITY: i32 = 4;
pub const EXIT_CONVERGENCE: i32 = 5;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(..) | CliError::Csv { .. } | CliError::Ingest(_) => EXIT_INGEST,
            CliError::Core(e) => match e {
                ScatterError::NonzeroIndex(_) | ScatterError::IndexMismatch { .. } | ScatterError::InvalidGamma(_) => {
                    EXIT_INDEX
                }
                ScatterError::SymbolNotPositive { .. } => EXIT_POSITIVITY,
                ScatterError::NoConvergence(_)
                | ScatterError::NoContraction(_)
                | ScatterError::SingularSystem { .. }
                | ScatterError::BlowUp { .. }
                | ScatterError::OdeFailure(_) => EXIT_CONVERGENCE,
                ScatterError::InvalidGrid(_)
                | ScatterError::LengthMismatch { .. }
                | ScatterError::NonDecayedInput { .. }
                | ScatterError::InvalidInput(_) => EXIT_INGEST,
                _ => EXIT_FAILURE,
            },
        }
    }

    /// Extra guidance printed after the error itself.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core(ScatterError::NonzeroIndex(_)) => Some(
                "bound states present: list their momenta under \"bound_states\" (with \"gamma\" for odd index) \
                 so the Blaschke-factor bound-state reduction brings the index to zero",
            ),
            CliError::Core(ScatterError::SymbolNotPositive { .. }) => {
                Some("the Krein kernel symbol is not positive; the data are not admissible for this inversion")
            }
            _ => None,
        }
    }
}
