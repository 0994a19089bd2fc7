use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("city {to} is unreachable from city {from}")]
    Unreachable { from: usize, to: usize },

    #[error("network is disconnected: {pairs} unreachable city pairs")]
    Disconnected { pairs: usize },

    #[error("chain search exceeded the work cap of {cap} node visits; use a smaller n or d0")]
    WorkCap { cap: u64 },

    /// A structural invariant failed. This indicates a defect, never bad input.
    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }
}
