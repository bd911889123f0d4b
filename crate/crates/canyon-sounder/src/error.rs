//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by bundle I/O, PDP processing, fitting and sampling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid bundle:\n{0}")]
    InvalidBundle(String),

    #[error("payload size mismatch in {file}: expected {expected} bytes, found {actual}")]
    PayloadSizeMismatch {
        file: String,
        expected: u64,
        actual: u64,
    },

    #[error("invalid OTA: {0}")]
    InvalidOta(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("unsupported schema version {found}: this reader handles major version {supported}")]
    SchemaVersion { found: String, supported: u32 },

    #[error("bad metadata in {path}: {message}")]
    BadMetadata { path: String, message: String },

    #[error("pointing index out of range: {0}")]
    PointingOutOfRange(String),

    #[error("all-zero PDP: noise floor is undefined")]
    AllZeroPdp,

    #[error("zero total power in PDP")]
    ZeroPower,

    #[error("no signal above threshold")]
    NoSignal,

    #[error("zero-power APS: circular statistics are undefined")]
    ZeroPowerAps,

    #[error("no local maxima in PDP")]
    NoLocalMaxima,

    #[error("too few samples for {what}: got {got}, need at least {need}")]
    TooFewSamples {
        what: &'static str,
        got: usize,
        need: usize,
    },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("nonpositive sample in field {field}: {value}")]
    NonPositiveSample { field: &'static str, value: f64 },

    #[error("nonpositive distance d_m = {0}")]
    NonPositiveDistance(f64),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("invalid scene: {0}")]
    InvalidScene(String),

    #[error("path delay {delay_s} s reaches the alias limit tau_max = {tau_max_s} s; refusing to wrap")]
    DelayBeyondAlias { delay_s: f64, tau_max_s: f64 },

    #[error("bad input in {path}: {message}")]
    BadInput { path: String, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
