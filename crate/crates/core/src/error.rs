use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid weight {input:?}: {reason}")]
    InvalidWeight { input: String, reason: &'static str },

    #[error("weight arithmetic overflowed 128-bit fixed point")]
    WeightOverflow,

    #[error("invalid transcript: {0}")]
    InvalidTranscript(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("operation requires a binary proposal, got {num_choices} choices")]
    NotBinary { num_choices: usize },

    #[error("instance of size {size} exceeds the limit of {limit}")]
    InstanceTooLarge { size: usize, limit: usize },

    #[error("no voters to receive a budget of {budget}")]
    EmptyTargetSet { budget: f64 },

    #[error("no strategy reached the target success probability within a budget of {max_budget}")]
    BudgetExhausted { max_budget: f64 },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
