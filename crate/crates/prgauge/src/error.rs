//! Crate-wide error type.
//!
//! Two variants are load-bearing signals rather than failures: [`Error::EmptyPairing`]
//! tells a curve builder to skip a batch, and [`Error::DegeneratePal`] tells a scorer
//! to record a missing value for that model instead of aborting the run.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("layer index {index} out of range (network has {len} layers)")]
    LayerOutOfRange { index: usize, len: usize },

    #[error("empty dataset")]
    EmptyData,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("training diverged: non-finite loss at epoch {epoch}, batch {batch}")]
    TrainingDiverged { epoch: usize, batch: usize },

    /// No pairs survived the label-match filter; the caller skips the batch.
    #[error("no surviving pairs in batch after label filtering")]
    EmptyPairing,

    #[error("all batches dropped at alpha = {alpha}")]
    AllBatchesDropped { alpha: f64 },

    /// Bottom trapezoid segment has zero area; the Pal ratio is undefined.
    #[error("degenerate Pal-score: zero-area segment at the bottom index")]
    DegeneratePal,

    #[error("Pal-score refused for signed-range perturbation `{kind}` (PR curve is not monotone); set force_pal to override")]
    PalRefused { kind: String },

    #[error("curve has no normalized magnitudes; call normalize() first")]
    UnnormalizedCurve,

    #[error("degenerate magnitude range [{min}, {max}]")]
    DegenerateRange { min: f64, max: f64 },

    #[error("column `{name}` has zero variance and cannot be standardized")]
    ZeroVariance { name: String },

    #[error("power iteration did not converge after {steps} steps")]
    PowerIterationFailed { steps: usize },

    #[error("score matrix: {0}")]
    ScoreMatrix(String),

    #[error("malformed {format} data at line {line}: {msg}")]
    Malformed {
        format: &'static str,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn shape(expected: impl Into<String>, got: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            expected: expected.into(),
            got: got.into(),
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
