use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("basis mismatch between superoperators")]
    BasisMismatch,

    #[error("{n} qubits exceeds the dense cap of {cap}")]
    TooManyQubits { n: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("map is not trace preserving (violation norm {violation:.3e})")]
    NotTracePreserving { violation: f64 },

    #[error("matrix is not unitary (deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("group {group} with {order} elements is too large to enumerate without a sample budget")]
    GroupTooLarge { group: String, order: u128 },

    #[error("channel generation failed after {retries} retries (minimum eigenvalue of the completion {min_eigenvalue:.3e})")]
    ChannelGeneration { retries: usize, min_eigenvalue: f64 },

    #[error("unsupported gate in circuit: {0}")]
    UnsupportedGate(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit did not converge after {iterations} iterations (cost {cost:.3e})")]
    FitNotConverged { iterations: usize, cost: f64 },

    #[error("bootstrap degenerate: {failed} of {total} resamples failed to fit")]
    BootstrapDegenerate { failed: usize, total: usize },

    #[error("zero standard error at entry {0}")]
    ZeroStderr(usize),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures of the numerical pipeline rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotTracePreserving { .. }
                | Error::NotUnitary { .. }
                | Error::ChannelGeneration { .. }
                | Error::FitNotConverged { .. }
                | Error::BootstrapDegenerate { .. }
                | Error::ZeroStderr(_)
                | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
