//! Propositional terms.
//!
//! Operator precedence (tightest first): `!`, `&`, `|`, `=>` (right
//! associative), `<=>`. `&`/`|` nodes are n-ary and kept flat; double
//! negation is collapsed on construction.
//!
//! `implies_prop` decides entailment by assignment enumeration and is exact
//! up to [`MAX_QUERY_VARS`] variables. Elimination prefers substituting a
//! definitional `<=>` from the context, then plain Boolean quantification
//! (universal for refinement, existential for relaxation), then
//! quantification of the target combined with a single context term — the
//! propositional analogue of a resolution step. Each context term is combined
//! at most once per call and residuals are size-capped (both in total and
//! per combination), which keeps cyclic or ballooning context chains in
//! check; when the options run out, relaxation weakens to `true` and
//! refinement reports failure.

use super::{Direction, TermId, Valuation, Var};
use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};

/// Hard cap for `implies_prop` enumeration.
pub const MAX_QUERY_VARS: usize = 24;

/// Hard cap on residual size during elimination. Residuals past this size are
/// runaway combinations, not useful contract terms.
pub const MAX_TERM_NODES: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropTerm {
    Const(bool),
    Var(Var),
    Not(Box<PropTerm>),
    And(Vec<PropTerm>),
    Or(Vec<PropTerm>),
    Implies(Box<PropTerm>, Box<PropTerm>),
    Iff(Box<PropTerm>, Box<PropTerm>),
}

impl PropTerm {
    pub fn var(name: impl Into<String>) -> Self {
        PropTerm::Var(Var::new(name))
    }

    pub fn negated(t: PropTerm) -> Self {
        match t {
            PropTerm::Not(inner) => *inner,
            other => PropTerm::Not(Box::new(other)),
        }
    }

    /// n-ary conjunction; flattens nested `And`s and collapses singletons.
    pub fn and(children: Vec<PropTerm>) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                PropTerm::And(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => PropTerm::Const(true),
            1 => flat.pop().unwrap(),
            _ => PropTerm::And(flat),
        }
    }

    pub fn or(children: Vec<PropTerm>) -> Self {
        let mut flat = Vec::with_capacity(children.len());
        for c in children {
            match c {
                PropTerm::Or(inner) => flat.extend(inner),
                other => flat.push(other),
            }
        }
        match flat.len() {
            0 => PropTerm::Const(false),
            1 => flat.pop().unwrap(),
            _ => PropTerm::Or(flat),
        }
    }

    pub fn implies(a: PropTerm, b: PropTerm) -> Self {
        PropTerm::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: PropTerm, b: PropTerm) -> Self {
        PropTerm::Iff(Box::new(a), Box::new(b))
    }

    pub fn as_const(&self) -> Option<bool> {
        match self {
            PropTerm::Const(b) => Some(*b),
            _ => None,
        }
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    /// Number of AST nodes.
    pub fn size(&self) -> usize {
        match self {
            PropTerm::Const(_) | PropTerm::Var(_) => 1,
            PropTerm::Not(t) => 1 + t.size(),
            PropTerm::And(ts) | PropTerm::Or(ts) => 1 + ts.iter().map(PropTerm::size).sum::<usize>(),
            PropTerm::Implies(a, b) | PropTerm::Iff(a, b) => 1 + a.size() + b.size(),
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            PropTerm::Const(_) => {}
            PropTerm::Var(v) => {
                out.insert(v.clone());
            }
            PropTerm::Not(t) => t.collect_vars(out),
            PropTerm::And(ts) | PropTerm::Or(ts) => {
                for t in ts {
                    t.collect_vars(out);
                }
            }
            PropTerm::Implies(a, b) | PropTerm::Iff(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn evaluate(&self, valuation: &Valuation) -> Result<bool> {
        match self {
            PropTerm::Const(b) => Ok(*b),
            PropTerm::Var(v) => valuation
                .get(v)
                .ok_or_else(|| Error::MissingVariable(v.clone()))?
                .as_bool(v),
            PropTerm::Not(t) => Ok(!t.evaluate(valuation)?),
            PropTerm::And(ts) => {
                for t in ts {
                    if !t.evaluate(valuation)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            PropTerm::Or(ts) => {
                for t in ts {
                    if t.evaluate(valuation)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
            PropTerm::Implies(a, b) => Ok(!a.evaluate(valuation)? || b.evaluate(valuation)?),
            PropTerm::Iff(a, b) => Ok(a.evaluate(valuation)? == b.evaluate(valuation)?),
        }
    }

    /// Applies a variable substitution; identity for unmapped variables.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> PropTerm {
        match self {
            PropTerm::Const(_) => self.clone(),
            PropTerm::Var(v) => PropTerm::Var(map.get(v).unwrap_or(v).clone()),
            PropTerm::Not(t) => PropTerm::negated(t.rename(map)),
            PropTerm::And(ts) => PropTerm::and(ts.iter().map(|t| t.rename(map)).collect()),
            PropTerm::Or(ts) => PropTerm::or(ts.iter().map(|t| t.rename(map)).collect()),
            PropTerm::Implies(a, b) => PropTerm::implies(a.rename(map), b.rename(map)),
            PropTerm::Iff(a, b) => PropTerm::iff(a.rename(map), b.rename(map)),
        }
    }

    /// Replaces every occurrence of `v` with `repl` (no simplification).
    pub fn subst(&self, v: &Var, repl: &PropTerm) -> PropTerm {
        match self {
            PropTerm::Const(_) => self.clone(),
            PropTerm::Var(name) => {
                if name == v {
                    repl.clone()
                } else {
                    self.clone()
                }
            }
            PropTerm::Not(t) => PropTerm::negated(t.subst(v, repl)),
            PropTerm::And(ts) => PropTerm::and(ts.iter().map(|t| t.subst(v, repl)).collect()),
            PropTerm::Or(ts) => PropTerm::or(ts.iter().map(|t| t.subst(v, repl)).collect()),
            PropTerm::Implies(a, b) => PropTerm::implies(a.subst(v, repl), b.subst(v, repl)),
            PropTerm::Iff(a, b) => PropTerm::iff(a.subst(v, repl), b.subst(v, repl)),
        }
    }

    /// Light normalization: constant folding, duplicate removal, absorption.
    /// Children of `&`/`|` end up sorted, so structural equality catches
    /// commuted copies. Deliberately not a full minimizer.
    pub fn simplify(&self) -> PropTerm {
        match self {
            PropTerm::Const(_) | PropTerm::Var(_) => self.clone(),
            PropTerm::Not(t) => match t.simplify() {
                PropTerm::Const(b) => PropTerm::Const(!b),
                s => PropTerm::negated(s),
            },
            PropTerm::And(ts) => {
                let mut children = Vec::new();
                for t in ts {
                    match t.simplify() {
                        PropTerm::Const(true) => {}
                        PropTerm::Const(false) => return PropTerm::Const(false),
                        PropTerm::And(inner) => children.extend(inner),
                        s => children.push(s),
                    }
                }
                children.sort();
                children.dedup();
                // Complementation: x & !x = false.
                if children
                    .iter()
                    .any(|c| children.contains(&PropTerm::negated(c.clone())))
                {
                    return PropTerm::Const(false);
                }
                // Absorption: x & (x | y) = x.
                let atoms: Vec<PropTerm> = children
                    .iter()
                    .filter(|c| !matches!(c, PropTerm::Or(_)))
                    .cloned()
                    .collect();
                children.retain(|c| match c {
                    PropTerm::Or(alts) => !alts.iter().any(|alt| atoms.contains(alt)),
                    _ => true,
                });
                PropTerm::and(children)
            }
            PropTerm::Or(ts) => {
                let mut children = Vec::new();
                for t in ts {
                    match t.simplify() {
                        PropTerm::Const(false) => {}
                        PropTerm::Const(true) => return PropTerm::Const(true),
                        PropTerm::Or(inner) => children.extend(inner),
                        s => children.push(s),
                    }
                }
                children.sort();
                children.dedup();
                // Complementation: x | !x = true.
                if children
                    .iter()
                    .any(|c| children.contains(&PropTerm::negated(c.clone())))
                {
                    return PropTerm::Const(true);
                }
                // Absorption: x | (x & y) = x.
                let atoms: Vec<PropTerm> = children
                    .iter()
                    .filter(|c| !matches!(c, PropTerm::And(_)))
                    .cloned()
                    .collect();
                children.retain(|c| match c {
                    PropTerm::And(parts) => !parts.iter().any(|p| atoms.contains(p)),
                    _ => true,
                });
                PropTerm::or(children)
            }
            PropTerm::Implies(a, b) => {
                let a = a.simplify();
                let b = b.simplify();
                match (&a, &b) {
                    (PropTerm::Const(false), _) => PropTerm::Const(true),
                    (PropTerm::Const(true), _) => b,
                    (_, PropTerm::Const(true)) => PropTerm::Const(true),
                    (_, PropTerm::Const(false)) => PropTerm::negated(a),
                    _ if a == b => PropTerm::Const(true),
                    _ => PropTerm::implies(a, b),
                }
            }
            PropTerm::Iff(a, b) => {
                let a = a.simplify();
                let b = b.simplify();
                match (&a, &b) {
                    (PropTerm::Const(true), _) => b,
                    (PropTerm::Const(false), _) => PropTerm::negated(b),
                    (_, PropTerm::Const(true)) => a,
                    (_, PropTerm::Const(false)) => PropTerm::negated(a),
                    _ if a == b => PropTerm::Const(true),
                    // Commutative: order the sides so that structurally
                    // swapped copies compare equal.
                    _ if a > b => PropTerm::iff(b, a),
                    _ => PropTerm::iff(a, b),
                }
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.render_prec(0, &mut out);
        out
    }

    fn prec(&self) -> u8 {
        match self {
            PropTerm::Iff(..) => 1,
            PropTerm::Implies(..) => 2,
            PropTerm::Or(_) => 3,
            PropTerm::And(_) => 4,
            PropTerm::Not(_) => 5,
            PropTerm::Const(_) | PropTerm::Var(_) => 6,
        }
    }

    fn render_prec(&self, min: u8, out: &mut String) {
        let prec = self.prec();
        if prec < min {
            out.push('(');
            self.render_prec(0, out);
            out.push(')');
            return;
        }
        match self {
            PropTerm::Const(b) => out.push_str(if *b { "true" } else { "false" }),
            PropTerm::Var(v) => out.push_str(v.as_str()),
            PropTerm::Not(t) => {
                out.push('!');
                t.render_prec(prec, out);
            }
            PropTerm::And(ts) | PropTerm::Or(ts) => {
                let sep = if matches!(self, PropTerm::And(_)) {
                    " & "
                } else {
                    " | "
                };
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        out.push_str(sep);
                    }
                    t.render_prec(prec + 1, out);
                }
            }
            PropTerm::Implies(a, b) => {
                a.render_prec(prec + 1, out);
                out.push_str(" => ");
                b.render_prec(prec, out); // right associative
            }
            PropTerm::Iff(a, b) => {
                a.render_prec(prec + 1, out);
                out.push_str(" <=> ");
                b.render_prec(prec, out);
            }
        }
    }
}

pub fn parse_prop(text: &str) -> Result<PropTerm> {
    let mut p = PropParser {
        src: text,
        pos: 0,
    };
    let t = p.iff()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(Error::Parse {
            pos: p.pos,
            msg: "trailing input after formula".into(),
        });
    }
    Ok(t)
}

struct PropParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> PropParser<'a> {
    fn skip_ws(&mut self) {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<PropTerm> {
        let lhs = self.implication()?;
        if self.eat("<=>") {
            let rhs = self.iff()?;
            Ok(PropTerm::iff(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn implication(&mut self) -> Result<PropTerm> {
        let lhs = self.disjunction()?;
        if self.eat("=>") {
            let rhs = self.implication()?;
            Ok(PropTerm::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<PropTerm> {
        let mut children = vec![self.conjunction()?];
        while self.eat("|") {
            children.push(self.conjunction()?);
        }
        Ok(PropTerm::or(children))
    }

    fn conjunction(&mut self) -> Result<PropTerm> {
        let mut children = vec![self.unary()?];
        while self.eat("&") {
            children.push(self.unary()?);
        }
        Ok(PropTerm::and(children))
    }

    fn unary(&mut self) -> Result<PropTerm> {
        if self.eat("!") {
            return Ok(PropTerm::negated(self.unary()?));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<PropTerm> {
        self.skip_ws();
        if self.eat("(") {
            let t = self.iff()?;
            self.skip_ws();
            if !self.eat(")") {
                return Err(Error::Parse {
                    pos: self.pos,
                    msg: "expected `)`".into(),
                });
            }
            return Ok(t);
        }
        let bytes = self.src.as_bytes();
        let start = self.pos;
        if start >= bytes.len() {
            return Err(Error::Parse {
                pos: start,
                msg: "unexpected end of formula".into(),
            });
        }
        let c = bytes[start] as char;
        if !(c.is_ascii_alphabetic() || c == '_') {
            return Err(Error::Parse {
                pos: start,
                msg: format!("unexpected character `{c}`"),
            });
        }
        let mut end = start;
        while end < bytes.len() {
            let ch = bytes[end] as char;
            if ch.is_ascii_alphanumeric() || ch == '_' || ch == '\'' || ch == '@' {
                end += 1;
            } else {
                break;
            }
        }
        self.pos = end;
        match &self.src[start..end] {
            "true" => Ok(PropTerm::Const(true)),
            "false" => Ok(PropTerm::Const(false)),
            name => Ok(PropTerm::Var(Var::new(name))),
        }
    }
}

fn eval_bits(t: &PropTerm, index: &BTreeMap<&Var, usize>, bits: u32) -> bool {
    match t {
        PropTerm::Const(b) => *b,
        PropTerm::Var(v) => bits & (1 << index[v]) != 0,
        PropTerm::Not(t) => !eval_bits(t, index, bits),
        PropTerm::And(ts) => ts.iter().all(|t| eval_bits(t, index, bits)),
        PropTerm::Or(ts) => ts.iter().any(|t| eval_bits(t, index, bits)),
        PropTerm::Implies(a, b) => !eval_bits(a, index, bits) || eval_bits(b, index, bits),
        PropTerm::Iff(a, b) => eval_bits(a, index, bits) == eval_bits(b, index, bits),
    }
}

/// Exact decision of `⋀ context ⟹ t` by truth-table enumeration. Errors with
/// [`Error::Capacity`] above [`MAX_QUERY_VARS`] variables.
pub fn implies_prop(context: &[&PropTerm], t: &PropTerm) -> Result<bool> {
    let mut vars: BTreeSet<Var> = t.vars();
    for c in context {
        vars.extend(c.vars());
    }
    let n = vars.len();
    if n > MAX_QUERY_VARS {
        return Err(Error::Capacity {
            nvars: n,
            max: MAX_QUERY_VARS,
        });
    }
    let index: BTreeMap<&Var, usize> = vars.iter().zip(0..).collect();
    for bits in 0u32..(1u32 << n) {
        if context.iter().all(|c| eval_bits(c, &index, bits)) && !eval_bits(t, &index, bits) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn quantify(v: &Var, t: &PropTerm, direction: Direction) -> PropTerm {
    let hi = t.subst(v, &PropTerm::Const(true));
    let lo = t.subst(v, &PropTerm::Const(false));
    let combined = match direction {
        Direction::Refinement => PropTerm::and(vec![hi, lo]),
        Direction::Relaxation => PropTerm::or(vec![hi, lo]),
    };
    combined.simplify()
}

/// True when `t` is a tautology. Errs on the side of `false` above the
/// enumeration capacity.
pub fn is_tautology_prop(t: &PropTerm) -> bool {
    matches!(implies_prop(&[], t), Ok(true))
}

/// A residual is informative when it still constrains something: relaxation
/// must not weaken to `true`, refinement must not strengthen to `false`.
/// Checked semantically — the light simplifier misses tautologies that don't
/// fold structurally, e.g. `a | (a => b)`.
fn informative(t: &PropTerm, direction: Direction) -> bool {
    match direction {
        Direction::Refinement => !matches!(implies_prop(&[t], &PropTerm::Const(false)), Ok(true)),
        Direction::Relaxation => !is_tautology_prop(t),
    }
}

/// True when `s` is `v <=> expr` (either side) with `v` not in `expr`.
fn definitional<'t>(s: &'t PropTerm, v: &Var) -> Option<&'t PropTerm> {
    let PropTerm::Iff(a, b) = s else { return None };
    match (a.as_ref(), b.as_ref()) {
        (PropTerm::Var(name), expr) if name == v && !expr.vars().contains(v) => Some(expr),
        (expr, PropTerm::Var(name)) if name == v && !expr.vars().contains(v) => Some(expr),
        _ => None,
    }
}

/// Variable elimination for propositional terms. Strategy per variable:
/// definitional substitution, then plain quantification, then quantification
/// combined with a single context term. Refinement additionally discharges
/// the whole term early when a single context term implies it.
pub fn eliminate_prop(
    t: &PropTerm,
    elim: &BTreeSet<Var>,
    context: &[(TermId, &PropTerm)],
    direction: Direction,
) -> Result<(PropTerm, Vec<TermId>)> {
    let mut cur = t.clone();
    let base = cur.size();
    let mut used: Vec<TermId> = Vec::new();
    // Combining re-conjoins a context term with the residual; doing that twice
    // with the same term adds nothing semantically but can reintroduce
    // already-eliminated variables and double the residual every round, so
    // each context term gets one combination.
    let mut spent: BTreeSet<TermId> = BTreeSet::new();
    let cap = (elim.len() + 1) * (context.len() + 2);
    let mut steps = 0;
    'outer: loop {
        let evars: Vec<Var> = cur.vars().intersection(elim).cloned().collect();
        let Some(v) = evars.first().cloned() else {
            break;
        };
        steps += 1;
        if steps > cap {
            return Err(Error::EliminationFailure {
                term: t.render(),
                reason: "substitution chain does not converge".into(),
            });
        }
        if cur.size() > MAX_TERM_NODES {
            match direction {
                Direction::Relaxation => {
                    cur = PropTerm::Const(true);
                    break;
                }
                Direction::Refinement => {
                    return Err(Error::EliminationFailure {
                        term: t.render(),
                        reason: format!("residual exceeds {MAX_TERM_NODES} nodes"),
                    });
                }
            }
        }
        if direction == Direction::Refinement {
            // Whole-term discharge: a single context term that implies the
            // residual refines it to `true`.
            for (id, s) in context {
                if s.vars().is_disjoint(&cur.vars()) {
                    continue;
                }
                if matches!(implies_prop(&[s], &cur), Ok(true)) {
                    if !used.contains(id) {
                        used.push(id.clone());
                    }
                    cur = PropTerm::Const(true);
                    break 'outer;
                }
            }
        }
        // Definitional substitution. A context step may reintroduce a
        // variable that was substituted before; substituting again is fine
        // (the step cap above catches circular <=> chains).
        let found = context
            .iter()
            .find_map(|(id, s)| definitional(s, &v).map(|expr| (id.clone(), expr.clone())));
        if let Some((id, expr)) = found {
            cur = cur.subst(&v, &expr).simplify();
            if !used.contains(&id) {
                used.push(id);
            }
            continue;
        }
        // Plain quantification, accepted while it keeps information.
        let plain = quantify(&v, &cur, direction);
        if informative(&plain, direction) {
            cur = plain;
            continue;
        }
        // Combine with one context term mentioning `v`, then quantify.
        for (id, s) in context {
            if spent.contains(id) || !s.vars().contains(&v) {
                continue;
            }
            let combined = match direction {
                Direction::Refinement => PropTerm::implies((*s).clone(), cur.clone()),
                Direction::Relaxation => PropTerm::and(vec![cur.clone(), (*s).clone()]),
            };
            let candidate = quantify(&v, &combined, direction);
            // A useful resolution step stays around the size of its operands;
            // a ballooning candidate only restates the pair as a case split,
            // which no longer reads as a contract term. The budget is anchored
            // to the size at entry, not the residual, so accepted steps don't
            // compound into an ever-growing allowance.
            if candidate.size() > 2 * (base + s.size()) {
                continue;
            }
            if informative(&candidate, direction) {
                cur = candidate;
                spent.insert(id.clone());
                if !used.contains(id) {
                    used.push(id.clone());
                }
                continue 'outer;
            }
        }
        match direction {
            Direction::Refinement => {
                return Err(Error::EliminationFailure {
                    term: t.render(),
                    reason: format!("universal elimination of `{v}` leaves no informative residual"),
                });
            }
            Direction::Relaxation => {
                cur = PropTerm::Const(true);
                break;
            }
        }
    }
    let used = minimize_used(t, &cur, used, context, direction);
    Ok((cur, used))
}

fn minimize_used(
    original: &PropTerm,
    residual: &PropTerm,
    used: Vec<TermId>,
    context: &[(TermId, &PropTerm)],
    direction: Direction,
) -> Vec<TermId> {
    if used.is_empty() {
        return used;
    }
    let term_of = |id: &TermId| context.iter().find(|(cid, _)| cid == id).map(|(_, t)| *t);
    let mut kept = used;
    let mut i = 0;
    while i < kept.len() {
        let mut ctx: Vec<&PropTerm> = kept
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .filter_map(|(_, id)| term_of(id))
            .collect();
        let holds = match direction {
            Direction::Refinement => {
                ctx.push(residual);
                implies_prop(&ctx, original)
            }
            Direction::Relaxation => {
                ctx.push(original);
                implies_prop(&ctx, residual)
            }
        };
        // A capacity overflow means we cannot prove the id redundant: keep it.
        if matches!(holds, Ok(true)) {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    kept
}
