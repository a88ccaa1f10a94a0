use thiserror::Error;

use crate::mdp::StateId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed model: {0}")]
    InvalidModel(String),
    #[error("policy does not match the model: {0}")]
    InvalidPolicy(String),
    #[error("unknown state id {0}")]
    UnknownState(StateId),
    #[error("parameter `{name}` out of range: {detail}")]
    InvalidParameter { name: &'static str, detail: String },
    #[error("models do not share a state/action structure: {0}")]
    StructureMismatch(String),
    #[error("policy is not unichain from state {0}")]
    NotUnichain(StateId),
    #[error("model is not communicating")]
    NotCommunicating,
    #[error("chain is not regular: {0}")]
    NotRegular(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("enumeration would visit {terms} terms, above the guard of {guard}")]
    GuardExceeded { terms: u128, guard: u128 },
    #[error("singular linear system")]
    Singular,
    #[error("inconsistent reward observation at ({state}, {action}): {first} then {second}")]
    InconsistentReward {
        state: StateId,
        action: usize,
        first: f64,
        second: f64,
    },
    #[error("integer overflow while computing {0}")]
    Overflow(&'static str),
    #[error("robustness assumption failed: {0}")]
    AssumptionFailed(String),
    #[error("config field `{field}`: {detail}")]
    Config { field: String, detail: String },
    #[error("model file: {0}")]
    ModelFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(name: &'static str, detail: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        detail: detail.into(),
    }
}
