use thiserror::Error;

/// Errors raised by models, planners, filters and the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("action index {action} out of range for a model with {count} actions")]
    InvalidAction { action: usize, count: usize },

    #[error("belief has no particles")]
    EmptyBelief,

    #[error("belief weights sum to {0}, expected 1")]
    UnnormalizedBelief(f64),

    #[error("observation has zero probability under every successor state")]
    ImpossibleObservation,

    #[error("exact solver horizon {0} exceeds the supported maximum of {max}", max = crate::problems::exact::MAX_EXACT_HORIZON)]
    HorizonTooLarge(usize),

    #[error("cannot summarize an empty list of returns")]
    EmptyReturns,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
