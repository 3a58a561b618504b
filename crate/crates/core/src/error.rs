use crate::term::{TermId, Var};
use thiserror::Error;

/// Unified error type for the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("variable `{0}` is missing from the valuation")]
    MissingVariable(Var),

    #[error("type mismatch for `{var}`: {expected} value required in {theory} theory")]
    TypeMismatch {
        var: Var,
        expected: &'static str,
        theory: &'static str,
    },

    #[error("contract `{name}`: inputs and outputs overlap on {vars:?}")]
    AlphabetOverlap { name: String, vars: Vec<Var> },

    #[error("contract `{name}`: {section} term `{term}` mentions out-of-scope variables {vars:?}")]
    ScopeViolation {
        name: String,
        section: &'static str,
        term: String,
        vars: Vec<Var>,
    },

    #[error("contract `{name}` mixes term theories")]
    MixedTheories { name: String },

    #[error("elimination failure on `{term}`: {reason}")]
    EliminationFailure { term: String, reason: String },

    #[error("implication query over {nvars} variables exceeds the {max}-variable capacity")]
    Capacity { nvars: usize, max: usize },

    #[error("alphabet mismatch between `{left}` and `{right}`: refinement requires identical interfaces")]
    AlphabetMismatch { left: String, right: String },

    #[error("composition stage `{stage}`: {source}")]
    Composition {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown vertex {0} in diagnostics graph")]
    UnknownVertex(TermId),

    #[error("unknown component `{0}` in composition order")]
    UnknownComponent(String),

    #[error("system assumption `{term}` is violated by the log; not a system-level failure")]
    AssumptionViolated { term: String },

    #[error("guarantee `{term}` is satisfied by the log; no violation to diagnose")]
    NoViolation { term: String },

    #[error("invalid system spec: {0}")]
    Spec(String),

    #[error("invalid log: {0}")]
    Log(String),

    #[error("fault injection found no witness after {tries} attempts")]
    NoWitness { tries: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
