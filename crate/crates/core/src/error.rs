use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = EsnError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum EsnError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("{0} is empty")]
    Empty(&'static str),

    /// Spherical projection of a (numerically) zero pre-activation.
    #[error("degenerate spherical activation: pre-activation norm {norm:e}")]
    DegenerateActivation { norm: f64 },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<EsnError>,
    },

    #[error("spectral rescale failed after {attempts} draws: recurrent matrix is nilpotent")]
    RescaleFailed { attempts: usize },

    #[error("eigenvalue computation did not converge")]
    EigenFailed,

    #[error("singular readout system with lambda = 0; use a ridge coefficient > 0")]
    SingularReadout,

    #[error("QR re-orthonormalization broke down at step {step}")]
    QrBreakdown { step: usize },

    #[error("series too short: need {needed} samples, have {available}")]
    SeriesTooShort { needed: usize, available: usize },

    #[error("channel {channel} has zero variance")]
    ZeroVariance { channel: usize },

    #[error("integration diverged at step {step}")]
    Divergence { step: usize },

    #[error("{path}: line {line}: cannot parse {content:?}")]
    Parse {
        path: PathBuf,
        line: usize,
        content: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialization(String),

    #[error("analysis failed for sr = {sr}, seed = {seed}: {source}")]
    Cell {
        sr: f64,
        seed: u64,
        #[source]
        source: Box<EsnError>,
    },
}

impl EsnError {
    pub(crate) fn at_step(self, step: usize) -> Self {
        EsnError::StepFailed {
            step,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EsnError::Io {
            path: path.into(),
            source,
        }
    }
}
