use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tail spec: {0}")]
    InvalidSpec(String),

    #[error("invalid conductance law: {0}")]
    InvalidLaw(String),

    #[error("site {x} outside window [{left}, {right}]")]
    OutOfWindow { x: i64, left: i64, right: i64 },

    #[error("walk hit the left window edge at step {step}; enlarge the reserve")]
    LeftEdgeHit { step: u64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
