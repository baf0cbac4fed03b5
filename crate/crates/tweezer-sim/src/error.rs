//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide error type.
///
/// Variants map onto the process exit codes used by the `tweezer-sim` binary:
/// configuration problems exit with 2, numerical failures with 3 and
/// verification failures with 4 (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// An input value is outside the domain of the requested operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A geometric precondition does not hold (e.g. expansion point is not a
    /// potential minimum).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// Arrays defined on different grids were combined.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A numerical routine failed to converge or produced non-finite values.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// Probability amplitude reached the edge of the simulation domain.
    #[error("domain overflow: {0}")]
    DomainOverflow(String),

    /// Light-shift evaluation requested exactly on a line center.
    #[error("resonant wavelength: {0}")]
    Resonance(String),

    /// No zero crossing of the light shift exists for the requested state and
    /// polarization.
    #[error("no light-shift null: {0}")]
    NoNull(String),

    /// The requested state combination is not supported by the model.
    #[error("unsupported states: {0}")]
    UnsupportedStates(String),

    /// A gate has no well-defined duration for the given interaction energies.
    #[error("gate undefined: {0}")]
    NoGate(String),

    /// Configuration file is malformed or contains unknown keys.
    #[error("config error at line {line}, column {column}: {message}")]
    Config {
        line: usize,
        column: usize,
        message: String,
    },

    /// A `--verify` consistency re-run disagreed with the primary run.
    #[error("verification failed: {0}")]
    Verify(String),

    /// File I/O while writing scenario outputs.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 4 verification, 3 numerics.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } => 2,
            Error::Verify(_) => 4,
            _ => 3,
        }
    }
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
