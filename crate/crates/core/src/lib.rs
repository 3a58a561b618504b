//! Assume-guarantee IO contracts with compositional fault diagnosis.
//!
//! The crate models components as contracts `(name, inputs, outputs,
//! assumptions, guarantees)` over either linear-arithmetic or propositional
//! terms, composes them while tracking which context terms each transformed
//! term depends on, and uses the resulting provenance graph to localize
//! faults from observed logs.

pub mod contract;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod io;
pub mod term;

pub use contract::{compose, refines, CompositionGraph, IOContract, Status};
pub use diagnostics::{
    build_system, diagnose, CompositionOrder, DiagnosisReport, Evaluation, SystemModel, TraceNode,
    TraceVerdict,
};
pub use error::{Error, Result};
pub use term::{
    eliminate, implies, parse_terms, Direction, Eliminated, Section, Term, TermId, Theory,
    Valuation, Value, Var,
};
