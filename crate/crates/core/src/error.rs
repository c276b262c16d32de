//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by scenario generation, the simulation loop, and the
/// remote decision backend.
#[derive(Debug, Error)]
pub enum Error {
    /// Scenario parameters are unusable (zero pairs, nonpositive limits, ...).
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// A vector or matrix does not match the scenario dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A direct link gain is zero; the feasibility system is undefined.
    #[error("degenerate link: direct gain of pair {0} is zero")]
    DegenerateLink(usize),

    /// The round protocol was violated (e.g. a round applied twice).
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    /// The divergent-scenario filter hit its draw budget before collecting
    /// the requested number of scenarios.
    #[error(
        "divergent-scenario filter exhausted: {accepted}/{requested} accepted after {draws} draws"
    )]
    FilterExhausted {
        draws: usize,
        accepted: usize,
        requested: usize,
    },

    /// The remote endpoint did not answer within the configured budget.
    #[error("request timed out after {attempts} attempt(s)")]
    Timeout { attempts: u32 },

    /// The remote endpoint answered with a non-success HTTP status.
    #[error("HTTP status {0} from remote endpoint")]
    HttpStatus(u16),

    /// The remote endpoint answered 2xx but the body was not a usable
    /// chat completion.
    #[error("malformed response: {0}")]
    MalformedResponse(String),

    /// The remote backend was selected but no API key is available.
    #[error("missing API key: set the {0} environment variable")]
    MissingApiKey(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
