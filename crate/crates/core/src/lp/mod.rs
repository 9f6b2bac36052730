//! Linear-programming representation, solver contract and LP-text I/O.

mod backend;
mod model;
mod text;

pub use backend::{verify, BackendContract, HighsBackend, LpBackend, Solution, ACCEPTANCE_TOLERANCE};
pub use model::{LinExpr, LpBuilder, LpModel, Row, RowSense, Var, Variable};
pub use text::{parse_lp_text, write_lp_text, ParseError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LpError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("invalid name `{0}`")]
    InvalidName(String),
    #[error("invalid bounds [{lower}, {upper}] for `{name}`")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("unknown variable index {0}")]
    UnknownVariable(usize),
    #[error("model is infeasible")]
    Infeasible,
    #[error("model is unbounded")]
    Unbounded,
    #[error("solver failure: {0}")]
    Backend(String),
    #[error("solution check failed: {0}")]
    Verification(String),
}
