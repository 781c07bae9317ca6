use thiserror::Error;

/// Errors raised by the model, filter, planner and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParams { name: &'static str, reason: String },

    #[error("step outcome not covered by the engagement update: {0}")]
    UncoveredOutcome(String),

    #[error("observation has zero likelihood under the current belief")]
    ImpossibleObservation,

    #[error("invalid belief: {0}")]
    InvalidBelief(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
