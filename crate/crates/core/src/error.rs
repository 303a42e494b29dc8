use thiserror::Error;

/// Failures raised across the crate.
///
/// The split between [`Error::Validation`] and [`Error::Degenerate`] is
/// load-bearing: callers (notably the CLI) map them to different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs violate a documented precondition.
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    /// A numerical computation hit a degenerate configuration
    /// (rank deficiency, non-finite values).
    #[error("numerical degeneracy: {0}")]
    Degenerate(String),

    /// Integer arithmetic left the representable range.
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),

    /// Requested enumeration is too large to brute force.
    #[error("combinatorial guard: {count} candidates exceeds the limit of {limit}")]
    TooLarge { count: u128, limit: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Degenerate(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
