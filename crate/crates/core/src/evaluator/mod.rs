//! Criterion checks on trial workspaces and entropy-weighted TOPSIS ranking
//! of agents.

mod criteria;
mod matrix;
mod scoring;

pub use criteria::{
    check_criterion, default_criteria, evaluate_workspace, load_criteria, Criterion, CriterionKind,
    NU_PATTERN,
};
pub use matrix::{score_table, scores_csv, FulfillmentMatrix};
pub use scoring::{entropy_weights, normalize_matrix, score_matrix, topsis_scores, Normalized, ScoreBundle};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("at least 2 agents are needed, got {0}")]
    TooFewAgents(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("criterion {id}: {message}")]
    BadCriterion { id: String, message: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
}
