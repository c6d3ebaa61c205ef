use thiserror::Error;

/// Errors surfaced by the exploration stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sampling starved: {got} of {want} requested nodes survived")]
    SamplingStarved { got: usize, want: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u16),

    #[error("malformed frame: {0}")]
    Malformed(String),

    #[error("invalid message: {0}")]
    InvalidMessage(String),

    #[error("protocol timeout waiting for {0}")]
    Timeout(String),

    #[error("transport closed")]
    TransportClosed,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("mission failure: {0}")]
    Mission(String),
}

pub type Result<T> = std::result::Result<T, Error>;
