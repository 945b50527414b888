use std::path::PathBuf;

/// Errors raised by the spectral machinery, the solvers and the error analysis.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("field is blown up (non-finite sample at index {index})")]
    BlownUpField { index: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field has nonzero mean {mean:e} (tolerance {tolerance:e}); no periodic antiderivative exists")]
    NonzeroMean { mean: f64, tolerance: f64 },

    #[error("time step {dt} exceeds the stability bound {bound} for this scheme")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("unsupported scheme: {0}")]
    UnsupportedScheme(String),

    #[error("blow-up detected at t = {time} (sup norm {linf:e})")]
    BlowUp { time: f64, linf: f64 },

    #[error("snapshot times differ: {0} vs {1}")]
    TimeMismatch(f64, f64),

    #[error("state belongs to family {found}, expected {expected}")]
    FamilyMismatch { expected: String, found: String },

    #[error("need at least {needed} snapshots, got {got}")]
    TooFewSnapshots { needed: usize, got: usize },

    #[error("energy squared is negative ({0:e}): state is outside the small-amplitude regime")]
    NegativeEnergy(f64),

    #[error("snapshot format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
