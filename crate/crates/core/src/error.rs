use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-positive rate {0}")]
    NonPositiveRate(f64),

    #[error("no enabled channel")]
    NoEnabledChannel,

    #[error("negative propensity {value} in channel {channel}")]
    NegativePropensity { channel: usize, value: f64 },

    #[error("negative propensity {value} in voxel {voxel}, channel {channel}")]
    NegativeVoxelPropensity {
        voxel: usize,
        channel: usize,
        value: f64,
    },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("log/state mismatch: {0}")]
    LogStateMismatch(String),

    #[error("unsorted event log: event {index} at t = {t} precedes t = {previous}")]
    UnsortedLog { index: usize, t: f64, previous: f64 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
