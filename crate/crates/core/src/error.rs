use thiserror::Error;

use crate::instance::{FeasibilityReport, ValidationReport};

pub type Result<T, E = GmkError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum GmkError {
    #[error("input error: {0}")]
    Input(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(ValidationReport),

    #[error("infeasible solution: {0}")]
    Infeasible(FeasibilityReport),

    #[error("unsupported for this variant: {0}")]
    Unsupported(String),

    #[error("horizon {horizon} exceeds the reduction cap {cap}; the schedule reduction enumerates 2^T schedules per item")]
    HorizonCap { horizon: usize, cap: usize },

    #[error("budget exceeded: {what} needs more than {budget} steps; {hint}")]
    BudgetExceeded {
        what: String,
        budget: u64,
        hint: String,
    },

    #[error("profit-cost ratio bound violated: item {item} has cost {cost} at stage {cost_stage} but profit {profit} at stage {profit_stage} (ratio {ratio} > phi {phi})")]
    PhiBound {
        item: String,
        cost_stage: usize,
        cost: i64,
        profit_stage: usize,
        profit: i64,
        ratio: String,
        phi: u64,
    },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl GmkError {
    pub fn input(msg: impl Into<String>) -> Self {
        GmkError::Input(msg.into())
    }

    /// Short machine-readable kind tag.
    pub fn kind(&self) -> &'static str {
        match self {
            GmkError::Input(_) => "input",
            GmkError::InvalidInstance(_) => "invalid-instance",
            GmkError::Infeasible(_) => "infeasible",
            GmkError::Unsupported(_) => "unsupported",
            GmkError::HorizonCap { .. } => "horizon-cap",
            GmkError::BudgetExceeded { .. } => "budget-exceeded",
            GmkError::PhiBound { .. } => "phi-bound",
            GmkError::Contract(_) => "contract-violation",
            GmkError::Json(_) => "json",
            GmkError::Io(_) => "io",
        }
    }
}
