use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid dimensions {0:?}: every mode must be at least 1")]
    InvalidDims((usize, usize, usize)),

    #[error("inverse DFT left an imaginary residue of {residue:.3e} (tensor norm {norm:.3e})")]
    ImaginaryResidueTooLarge { residue: f64, norm: f64 },

    #[error("SVD of Fourier slice {slice} did not converge")]
    SvdFailure { slice: usize },

    #[error("non-finite value produced by {0}")]
    NonFiniteOutput(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("the support mask has no observed entries")]
    EmptyMask,

    #[error("failed to spawn external denoiser `{command}`: {source}")]
    SpawnFailure {
        command: String,
        #[source]
        source: std::io::Error,
    },

    #[error("external denoiser handshake failed: {0}")]
    HandshakeFailure(String),

    #[error("external denoiser failure: {0}")]
    ExternalDenoiserFailure(String),

    #[error("Bayer sampling needs n3 = 3 and even n1, n2; got {0:?}")]
    BayerDimsInvalid((usize, usize, usize)),

    #[error("sampling rate {0} is outside (0, 1]")]
    RateOutOfRange(f64),

    #[error("slice of size {n1}x{n2} is smaller than the 11x11 SSIM window")]
    SliceTooSmall { n1: usize, n2: usize },

    #[error("reference tensor has zero norm")]
    ZeroReference,

    #[error("cannot read image {path}: {reason}")]
    UnreadableImage { path: PathBuf, reason: String },

    #[error("inconsistent image dimensions: {0}")]
    InconsistentDims(String),

    #[error("cannot write {path}: {reason}")]
    WriteFailure { path: PathBuf, reason: String },

    #[error("malformed tensor file: {0}")]
    MalformedFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
