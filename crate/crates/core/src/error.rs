use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid inflation: {0}")]
    InvalidInflation(String),

    #[error("invalid behavior: {0}")]
    InvalidBehavior(String),

    #[error("behavior is signalling: {0}")]
    Signalling(String),

    #[error("conditioning undefined: event `{0}` has zero probability")]
    ConditioningUndefined(String),

    #[error("party mismatch: {0}")]
    PartyMismatch(String),

    #[error("{what} exceeds the configured limit ({count} > {limit})")]
    TooLarge {
        what: &'static str,
        count: u128,
        limit: u128,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("inequality undefined: {0}")]
    Singular(String),

    #[error("sweep endpoints do not bracket: lower end is {lower}, upper end is {upper}")]
    NonBracketing { lower: String, upper: String },

    #[error("certificate does not match system: {0}")]
    CertificateMismatch(String),

    #[error("parse error: {0}")]
    Parse(String),
}
