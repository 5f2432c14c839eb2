//! Displacement matching, error taxonomy, Elo ratings and ranks.

mod displacement;
mod elo;
mod hungarian;

pub use displacement::{
    classify_errors, displacement_error, DisplacementReport, ErrorCategory, ErrorLabel, ErrorThresholds,
    MatchedPair, PADDING_COST_M,
};
pub use elo::{
    bootstrap_ci, compute_elo, compute_rank, expected_score, read_vote_log, vote_log_line, BootstrapInterval,
    EloConfig, EloEntry, EloTable, VoteOutcome, VoteRecord,
};
pub use hungarian::{hungarian, Assignment};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("shape error: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("vote log line {line}: {reason}")]
    VoteLog { line: usize, reason: String },
}
