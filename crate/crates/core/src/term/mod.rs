//! Terms: the predicates contracts are made of.
//!
//! Two theories are supported: affine inequalities over the rationals
//! (`LinearTerm`) and propositional formulas (`PropTerm`). Both share the
//! variable namespace, the `TermId` provenance scheme and the valuation type.

pub mod linear;
pub mod prop;

use crate::error::{Error, Result};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use linear::LinearTerm;
pub use prop::PropTerm;

/// Variable name. Identifiers start with a letter or underscore; digits,
/// underscores, primes and `@` may follow (`@` carries timestep suffixes,
/// e.g. `c_T1@2`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Var(pub String);

impl Var {
    pub fn new(s: impl Into<String>) -> Self {
        Var(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Checks the identifier grammar shared by both term parsers.
    pub fn is_valid(s: &str) -> bool {
        let mut chars = s.chars();
        match chars.next() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return false,
        }
        chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'' || c == '@')
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for Var {
    fn from(s: &str) -> Self {
        Var(s.to_owned())
    }
}

/// Which half of a contract a term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    Assumption,
    Guarantee,
}

impl Section {
    fn tag(self) -> &'static str {
        match self {
            Section::Assumption => "a",
            Section::Guarantee => "g",
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            Section::Assumption => "assumption",
            Section::Guarantee => "guarantee",
        }
    }
}

/// Stable identity of a term: owning contract (or composition stage), section
/// and ordinal within the section. Ordering is (owner, section, index); this
/// order is the tie-break used everywhere a context term has to be picked.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TermId {
    pub owner: String,
    pub section: Section,
    pub index: usize,
}

impl TermId {
    pub fn new(owner: impl Into<String>, section: Section, index: usize) -> Self {
        TermId {
            owner: owner.into(),
            section,
            index,
        }
    }
}

impl fmt::Display for TermId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}{}", self.owner, self.section.tag(), self.index)
    }
}

/// Term theory marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Theory {
    Linear,
    Prop,
}

impl fmt::Display for Theory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theory::Linear => f.write_str("linear"),
            Theory::Prop => f.write_str("prop"),
        }
    }
}

/// A concrete observed value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Rational(BigRational),
    Bool(bool),
}

impl Value {
    pub fn as_rational(&self, var: &Var) -> Result<&BigRational> {
        match self {
            Value::Rational(r) => Ok(r),
            Value::Bool(_) => Err(Error::TypeMismatch {
                var: var.clone(),
                expected: "rational",
                theory: "linear",
            }),
        }
    }

    pub fn as_bool(&self, var: &Var) -> Result<bool> {
        match self {
            Value::Bool(b) => Ok(*b),
            Value::Rational(_) => Err(Error::TypeMismatch {
                var: var.clone(),
                expected: "Boolean",
                theory: "prop",
            }),
        }
    }
}

/// Observed values for a set of variables (a log after flattening).
pub type Valuation = BTreeMap<Var, Value>;

/// A term of either theory. Composition may degenerate a term to a constant;
/// constants are legal list members in both theories (`LinearTerm` encodes
/// them as coefficient-free inequalities, `PropTerm` has `Const`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Linear(LinearTerm),
    Prop(PropTerm),
}

impl Term {
    pub fn theory(&self) -> Theory {
        match self {
            Term::Linear(_) => Theory::Linear,
            Term::Prop(_) => Theory::Prop,
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        match self {
            Term::Linear(t) => t.vars(),
            Term::Prop(t) => t.vars(),
        }
    }

    /// `Some(b)` when the term is constantly `b` regardless of valuation.
    pub fn as_const(&self) -> Option<bool> {
        match self {
            Term::Linear(t) => t.as_const(),
            Term::Prop(t) => t.as_const(),
        }
    }

    /// True when the term can never constrain a valuation: constant `true`,
    /// or a propositional tautology (within the enumeration capacity —
    /// larger terms are conservatively kept).
    pub fn is_vacuous(&self) -> bool {
        match self {
            Term::Linear(t) => t.as_const() == Some(true),
            Term::Prop(t) => prop::is_tautology_prop(t),
        }
    }

    pub fn evaluate(&self, valuation: &Valuation) -> Result<bool> {
        match self {
            Term::Linear(t) => t.evaluate(valuation),
            Term::Prop(t) => t.evaluate(valuation),
        }
    }

    pub fn render(&self) -> String {
        match self {
            Term::Linear(t) => t.render(),
            Term::Prop(t) => t.render(),
        }
    }

    /// Applies a variable substitution; identity for unmapped variables.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Result<Term> {
        Ok(match self {
            Term::Linear(t) => Term::Linear(t.rename(map)?),
            Term::Prop(t) => Term::Prop(t.rename(map)),
        })
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Outcome of transforming one term during composition: the residual term and
/// the context `TermId`s that were combined to justify it.
#[derive(Debug, Clone)]
pub struct Eliminated {
    pub term: Term,
    pub used: Vec<TermId>,
}

/// Direction of a variable elimination.
///
/// Refinement keeps `(t' ∧ context) ⟹ t` (assumption side); relaxation keeps
/// `(t ∧ context) ⟹ t'` (guarantee side).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Refinement,
    Relaxation,
}

/// Decides `⋀ context ⟹ t` within the term's theory. Exact in both theories;
/// the propositional side enforces its variable capacity.
pub fn implies(context: &[Term], t: &Term) -> Result<bool> {
    match t {
        Term::Linear(goal) => {
            let ctx: Vec<&LinearTerm> = context
                .iter()
                .map(|c| match c {
                    Term::Linear(l) => Ok(l),
                    Term::Prop(_) => Err(Error::Spec("mixed theories in implication".into())),
                })
                .collect::<Result<_>>()?;
            Ok(linear::implies_linear(&ctx, goal))
        }
        Term::Prop(goal) => {
            let ctx: Vec<&PropTerm> = context
                .iter()
                .map(|c| match c {
                    Term::Prop(p) => Ok(p),
                    Term::Linear(_) => Err(Error::Spec("mixed theories in implication".into())),
                })
                .collect::<Result<_>>()?;
            prop::implies_prop(&ctx, goal)
        }
    }
}

/// Eliminates `elim` variables from `t` in the requested direction, drawing
/// on `context` in the given priority order.
pub fn eliminate(
    t: &Term,
    elim: &BTreeSet<Var>,
    context: &[(TermId, Term)],
    direction: Direction,
) -> Result<Eliminated> {
    match t {
        Term::Linear(lt) => {
            let ctx: Vec<(TermId, &LinearTerm)> = context
                .iter()
                .filter_map(|(id, c)| match c {
                    Term::Linear(l) => Some((id.clone(), l)),
                    Term::Prop(_) => None,
                })
                .collect();
            let (term, used) = linear::eliminate_linear(lt, elim, &ctx, direction)?;
            Ok(Eliminated {
                term: Term::Linear(term),
                used,
            })
        }
        Term::Prop(pt) => {
            let ctx: Vec<(TermId, &PropTerm)> = context
                .iter()
                .filter_map(|(id, c)| match c {
                    Term::Prop(p) => Some((id.clone(), p)),
                    Term::Linear(_) => None,
                })
                .collect();
            let (term, used) = prop::eliminate_prop(pt, elim, &ctx, direction)?;
            Ok(Eliminated {
                term: Term::Prop(term),
                used,
            })
        }
    }
}

/// Parses a term in the given theory. `=` in the linear theory desugars to a
/// pair of inequalities, so a single source string may yield two terms.
pub fn parse_terms(theory: Theory, text: &str) -> Result<Vec<Term>> {
    match theory {
        Theory::Linear => Ok(linear::parse_linear_multi(text)?
            .into_iter()
            .map(Term::Linear)
            .collect()),
        Theory::Prop => Ok(vec![Term::Prop(prop::parse_prop(text)?)]),
    }
}
