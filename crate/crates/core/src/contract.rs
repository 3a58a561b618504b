//! IO contracts: validation, status evaluation, refinement, and composition.
//!
//! Composition starts from the stems (union of operand assumptions, union of
//! operand guarantees) and transforms any stem term that mentions a variable
//! outside the composed interface: assumptions are refined (strengthened)
//! against the other operand's terms, guarantees are relaxed (weakened)
//! against the full term pool. Every transformation records which context
//! terms it consumed; the resulting [`CompositionGraph`] is what later makes
//! fault diagnosis cheap.

use crate::error::{Error, Result};
use crate::term::{eliminate, implies, parse_terms, Direction, Section, Term, TermId, Theory, Valuation, Var};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Assume-guarantee contract with declared input/output alphabets.
/// Assumptions range over inputs only; guarantees over inputs and outputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IOContract {
    name: String,
    theory: Theory,
    inputs: BTreeSet<Var>,
    outputs: BTreeSet<Var>,
    assumptions: Vec<Term>,
    guarantees: Vec<Term>,
}

/// Verdict of a contract against one valuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    /// Some assumption is false: the contract places no obligation.
    Idle,
    /// Assumptions and guarantees all hold.
    Active,
    /// Assumptions hold but some guarantee is false: the component is faulty.
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Idle => "IDLE",
            Status::Active => "ACTIVE",
            Status::Fail => "FAIL",
        })
    }
}

impl IOContract {
    pub fn new(
        name: impl Into<String>,
        theory: Theory,
        inputs: BTreeSet<Var>,
        outputs: BTreeSet<Var>,
        assumptions: Vec<Term>,
        guarantees: Vec<Term>,
    ) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(Error::Spec("contract name must be non-empty".into()));
        }
        let overlap: Vec<Var> = inputs.intersection(&outputs).cloned().collect();
        if !overlap.is_empty() {
            return Err(Error::AlphabetOverlap {
                name,
                vars: overlap,
            });
        }
        let alphabet: BTreeSet<Var> = inputs.union(&outputs).cloned().collect();
        for (section, terms, allowed) in [
            (Section::Assumption, &assumptions, &inputs),
            (Section::Guarantee, &guarantees, &alphabet),
        ] {
            for t in terms {
                if t.theory() != theory {
                    return Err(Error::MixedTheories { name: name.clone() });
                }
                let stray: Vec<Var> = t.vars().difference(allowed).cloned().collect();
                if !stray.is_empty() {
                    return Err(Error::ScopeViolation {
                        name: name.clone(),
                        section: section.word(),
                        term: t.render(),
                        vars: stray,
                    });
                }
            }
        }
        Ok(IOContract {
            name,
            theory,
            inputs,
            outputs,
            assumptions,
            guarantees,
        })
    }

    /// Builds a contract from term source strings. In the linear theory an
    /// `=` term expands to its two inequality directions.
    pub fn from_texts(
        name: impl Into<String>,
        theory: Theory,
        inputs: impl IntoIterator<Item = impl Into<String>>,
        outputs: impl IntoIterator<Item = impl Into<String>>,
        assumptions: &[impl AsRef<str>],
        guarantees: &[impl AsRef<str>],
    ) -> Result<Self> {
        let parse_all = |texts: &[&str]| -> Result<Vec<Term>> {
            let mut out = Vec::new();
            for text in texts {
                out.extend(parse_terms(theory, text)?);
            }
            Ok(out)
        };
        let a_texts: Vec<&str> = assumptions.iter().map(|s| s.as_ref()).collect();
        let g_texts: Vec<&str> = guarantees.iter().map(|s| s.as_ref()).collect();
        IOContract::new(
            name,
            theory,
            inputs.into_iter().map(|v| Var::new(v)).collect(),
            outputs.into_iter().map(|v| Var::new(v)).collect(),
            parse_all(&a_texts)?,
            parse_all(&g_texts)?,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn theory(&self) -> Theory {
        self.theory
    }

    pub fn inputs(&self) -> &BTreeSet<Var> {
        &self.inputs
    }

    pub fn outputs(&self) -> &BTreeSet<Var> {
        &self.outputs
    }

    pub fn alphabet(&self) -> BTreeSet<Var> {
        self.inputs.union(&self.outputs).cloned().collect()
    }

    pub fn assumptions(&self) -> &[Term] {
        &self.assumptions
    }

    pub fn guarantees(&self) -> &[Term] {
        &self.guarantees
    }

    pub fn assumption_ids(&self) -> impl Iterator<Item = (TermId, &Term)> {
        self.assumptions
            .iter()
            .enumerate()
            .map(|(k, t)| (TermId::new(&self.name, Section::Assumption, k), t))
    }

    pub fn guarantee_ids(&self) -> impl Iterator<Item = (TermId, &Term)> {
        self.guarantees
            .iter()
            .enumerate()
            .map(|(k, t)| (TermId::new(&self.name, Section::Guarantee, k), t))
    }

    pub fn term_ids(&self) -> impl Iterator<Item = (TermId, &Term)> {
        self.assumption_ids().chain(self.guarantee_ids())
    }

    /// Looks up a term of this contract by id (owner must match).
    pub fn term(&self, id: &TermId) -> Option<&Term> {
        if id.owner != self.name {
            return None;
        }
        match id.section {
            Section::Assumption => self.assumptions.get(id.index),
            Section::Guarantee => self.guarantees.get(id.index),
        }
    }

    /// FAIL / ACTIVE / IDLE under one valuation, with the ids of the terms
    /// that decided a non-ACTIVE verdict. Guarantees are only consulted when
    /// all assumptions hold, matching the obligation semantics.
    pub fn evaluate_status(&self, valuation: &Valuation) -> Result<(Status, Vec<TermId>)> {
        let mut failing = Vec::new();
        for (id, t) in self.assumption_ids() {
            if !t.evaluate(valuation)? {
                failing.push(id);
            }
        }
        if !failing.is_empty() {
            return Ok((Status::Idle, failing));
        }
        for (id, t) in self.guarantee_ids() {
            if !t.evaluate(valuation)? {
                failing.push(id);
            }
        }
        if failing.is_empty() {
            Ok((Status::Active, Vec::new()))
        } else {
            Ok((Status::Fail, failing))
        }
    }
}

/// `c1` refines `c2` when it accepts every environment `c2` accepts and, in
/// those environments, promises at least as much: ⋀𝔞₂ ⟹ ⋀𝔞₁ and
/// ⋀𝔞₂ ∧ ⋀𝔤₁ ⟹ ⋀𝔤₂.
pub fn refines(c1: &IOContract, c2: &IOContract) -> Result<bool> {
    if c1.inputs != c2.inputs || c1.outputs != c2.outputs {
        return Err(Error::AlphabetMismatch {
            left: c1.name.clone(),
            right: c2.name.clone(),
        });
    }
    if c1.theory != c2.theory {
        return Err(Error::MixedTheories {
            name: format!("{} vs {}", c1.name, c2.name),
        });
    }
    for a1 in &c1.assumptions {
        if !implies(&c2.assumptions, a1)? {
            return Ok(false);
        }
    }
    let mut premise = c2.assumptions.clone();
    premise.extend(c1.guarantees.iter().cloned());
    for g2 in &c2.guarantees {
        if !implies(&premise, g2)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Provenance DAG of one composition (or the union over several stages):
/// vertices are terms, an edge `u → w` says `u` was consumed to produce `w`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CompositionGraph {
    vertices: BTreeMap<TermId, String>,
    edges: BTreeSet<(TermId, TermId)>,
}

impl CompositionGraph {
    pub fn vertices(&self) -> impl Iterator<Item = (&TermId, &str)> {
        self.vertices.iter().map(|(id, label)| (id, label.as_str()))
    }

    pub fn edges(&self) -> impl Iterator<Item = &(TermId, TermId)> {
        self.edges.iter()
    }

    pub fn contains(&self, id: &TermId) -> bool {
        self.vertices.contains_key(id)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, id: &TermId) -> Option<&str> {
        self.vertices.get(id).map(|s| s.as_str())
    }

    pub(crate) fn insert_vertex(&mut self, id: TermId, label: String) {
        self.vertices.insert(id, label);
    }

    fn insert_edge(&mut self, from: TermId, to: TermId) {
        self.edges.insert((from, to));
    }

    /// Merges another stage's graph into this one. Stage-to-stage sharing is
    /// by identical `TermId`s, so the union is well defined.
    pub fn absorb(&mut self, other: &CompositionGraph) {
        for (id, label) in &other.vertices {
            self.vertices.insert(id.clone(), label.clone());
        }
        self.edges.extend(other.edges.iter().cloned());
    }

    /// Direct predecessors of `id`.
    pub fn parents<'g>(&'g self, id: &'g TermId) -> impl Iterator<Item = &'g TermId> {
        self.edges
            .iter()
            .filter(move |(_, to)| to == id)
            .map(|(from, _)| from)
    }

    /// In-degree-zero ancestors of `s`, i.e. the component-level terms with a
    /// provenance path to `s` (including `s` itself when it is a leaf).
    pub fn leaf_ancestors(&self, s: &TermId) -> Result<BTreeSet<TermId>> {
        if !self.vertices.contains_key(s) {
            return Err(Error::UnknownVertex(s.clone()));
        }
        let mut leaves = BTreeSet::new();
        let mut stack = vec![s.clone()];
        let mut seen = BTreeSet::new();
        while let Some(id) = stack.pop() {
            if !seen.insert(id.clone()) {
                continue;
            }
            let parents: Vec<TermId> = self.parents(&id).cloned().collect();
            if parents.is_empty() {
                leaves.insert(id);
            } else {
                stack.extend(parents);
            }
        }
        Ok(leaves)
    }
}

/// One transformed stem term awaiting dedup/pruning: where it came from and
/// what context it consumed.
struct Pending {
    term: Term,
    origins: Vec<TermId>,
    used: Vec<TermId>,
}

fn merge_pending(acc: &mut Vec<Pending>, item: Pending) {
    if let Some(existing) = acc.iter_mut().find(|p| p.term == item.term) {
        for id in item.origins {
            if !existing.origins.contains(&id) {
                existing.origins.push(id);
            }
        }
        for id in item.used {
            if !existing.used.contains(&id) {
                existing.used.push(id);
            }
        }
    } else {
        acc.push(item);
    }
}

/// Drops linear terms implied by the remaining set. Propositional terms are
/// only deduplicated (done in `merge_pending`): implication pruning there
/// buys little and the conjunction quickly exceeds the enumeration capacity.
fn prune_implied(items: &mut Vec<Pending>, theory: Theory) {
    if theory != Theory::Linear {
        return;
    }
    let mut i = 0;
    while i < items.len() {
        let others: Vec<Term> = items
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, p)| p.term.clone())
            .collect();
        if implies(&others, &items[i].term).unwrap_or(false) {
            items.remove(i);
        } else {
            i += 1;
        }
    }
}

/// Composition of two IO contracts. `keep` lists connection variables to
/// leave exposed as outputs of the result (internal otherwise); `stage` names
/// the result contract and owns the fresh `TermId`s.
pub fn compose(
    c1: &IOContract,
    c2: &IOContract,
    keep: &BTreeSet<Var>,
    stage: &str,
) -> Result<(IOContract, CompositionGraph)> {
    let wrap = |source: Error| Error::Composition {
        stage: stage.to_string(),
        source: Box::new(source),
    };
    if c1.theory != c2.theory {
        return Err(wrap(Error::MixedTheories {
            name: format!("{} vs {}", c1.name, c2.name),
        }));
    }
    if c1.name == c2.name {
        return Err(wrap(Error::Spec(format!(
            "operands share the name `{}`",
            c1.name
        ))));
    }
    let out_overlap: Vec<Var> = c1.outputs.intersection(&c2.outputs).cloned().collect();
    if !out_overlap.is_empty() {
        return Err(wrap(Error::AlphabetOverlap {
            name: format!("{} || {}", c1.name, c2.name),
            vars: out_overlap,
        }));
    }

    let connection: BTreeSet<Var> = c1
        .outputs
        .intersection(&c2.inputs)
        .chain(c2.outputs.intersection(&c1.inputs))
        .cloned()
        .collect();
    let internal: BTreeSet<Var> = connection.difference(keep).cloned().collect();
    let all_outputs: BTreeSet<Var> = c1.outputs.union(&c2.outputs).cloned().collect();
    let inputs: BTreeSet<Var> = c1
        .inputs
        .union(&c2.inputs)
        .filter(|v| !all_outputs.contains(*v))
        .cloned()
        .collect();
    let outputs: BTreeSet<Var> = all_outputs.difference(&internal).cloned().collect();

    let mut graph = CompositionGraph::default();
    for operand in [c1, c2] {
        for (id, t) in operand.term_ids() {
            graph.insert_vertex(id, t.render());
        }
    }

    // Assumption stem: refine every term down to the composed inputs, with
    // the other operand's guarantees (then assumptions) as context. A term
    // discharged to `true` is dropped — the other operand already enforces it.
    let mut pending_a: Vec<Pending> = Vec::new();
    for (operand, other) in [(c1, c2), (c2, c1)] {
        let context: Vec<(TermId, Term)> = other
            .guarantee_ids()
            .chain(other.assumption_ids())
            .map(|(id, t)| (id, t.clone()))
            .collect();
        let ctx_vars: BTreeSet<Var> = context.iter().flat_map(|(_, t)| t.vars()).collect();
        for (id, t) in operand.assumption_ids() {
            let elim: BTreeSet<Var> = t
                .vars()
                .union(&ctx_vars)
                .filter(|v| !inputs.contains(*v))
                .cloned()
                .collect();
            let r = eliminate(t, &elim, &context, Direction::Refinement).map_err(&wrap)?;
            if r.term.is_vacuous() {
                continue;
            }
            merge_pending(
                &mut pending_a,
                Pending {
                    term: r.term,
                    origins: vec![id],
                    used: r.used,
                },
            );
        }
    }
    prune_implied(&mut pending_a, c1.theory);

    // Guarantee stem: relax terms mentioning internal variables. Context is
    // the full pool — other operand's guarantees and assumptions first, then
    // the term's own siblings and assumptions.
    let mut pending_g: Vec<Pending> = Vec::new();
    for (operand, other) in [(c1, c2), (c2, c1)] {
        for (id, t) in operand.guarantee_ids() {
            let context: Vec<(TermId, Term)> = other
                .guarantee_ids()
                .chain(other.assumption_ids())
                .chain(operand.guarantee_ids().filter(|(gid, _)| *gid != id))
                .chain(operand.assumption_ids())
                .map(|(cid, ct)| (cid, ct.clone()))
                .collect();
            let r = eliminate(t, &internal, &context, Direction::Relaxation).map_err(&wrap)?;
            if r.term.is_vacuous() {
                continue;
            }
            merge_pending(
                &mut pending_g,
                Pending {
                    term: r.term,
                    origins: vec![id],
                    used: r.used,
                },
            );
        }
    }
    prune_implied(&mut pending_g, c1.theory);

    let mut finalize = |pending: Vec<Pending>, section: Section| -> Vec<Term> {
        let mut terms = Vec::with_capacity(pending.len());
        for (k, p) in pending.into_iter().enumerate() {
            let result_id = TermId::new(stage, section, k);
            graph.insert_vertex(result_id.clone(), p.term.render());
            for src in p.origins.into_iter().chain(p.used) {
                graph.insert_edge(src, result_id.clone());
            }
            terms.push(p.term);
        }
        terms
    };
    let assumptions = finalize(pending_a, Section::Assumption);
    let guarantees = finalize(pending_g, Section::Guarantee);

    let composed = IOContract::new(stage, c1.theory, inputs, outputs, assumptions, guarantees)
        .map_err(wrap)?;
    Ok((composed, graph))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lin(name: &str, inputs: &[&str], outputs: &[&str], a: &[&str], g: &[&str]) -> IOContract {
        IOContract::from_texts(name, Theory::Linear, inputs.iter().copied(), outputs.iter().copied(), a, g)
            .unwrap()
    }

    fn rat(n: i64) -> crate::term::Value {
        crate::term::Value::Rational(num_rational::BigRational::from_integer(n.into()))
    }

    fn val(pairs: &[(&str, i64)]) -> Valuation {
        pairs.iter().map(|(k, v)| (Var::from(*k), rat(*v))).collect()
    }

    fn example1() -> (IOContract, IOContract) {
        (
            lin("C1", &["i"], &["o"], &["i >= 0", "i <= 2"], &["o + i <= 3"]),
            lin("C2", &["o"], &["o'"], &["o <= 5"], &["o + 2*o' >= 6"]),
        )
    }

    fn example3() -> (IOContract, IOContract, IOContract) {
        (
            lin("M1", &["i"], &["a"], &["i >= 0", "i <= 2"], &["a <= 2"]),
            lin("M2", &["j"], &["b"], &["j >= 0", "j <= 2"], &["b <= 3"]),
            lin(
                "M3",
                &["a", "b"],
                &["o"],
                &["a <= 5", "b <= 5"],
                &["o <= a", "o <= b"],
            ),
        )
    }

    /// Set-level semantic equality: each side's conjunction implies every
    /// term of the other.
    fn equivalent(left: &[Term], right: &[Term]) -> bool {
        right.iter().all(|t| implies(left, t).unwrap())
            && left.iter().all(|t| implies(right, t).unwrap())
    }

    fn parse_set(texts: &[&str]) -> Vec<Term> {
        texts
            .iter()
            .flat_map(|t| parse_terms(Theory::Linear, t).unwrap())
            .collect()
    }

    #[test]
    fn make_contract_enforces_scope_and_alphabets() {
        let (c1, _) = example1();
        assert_eq!(c1.assumptions().len(), 2);
        assert_eq!(c1.guarantees().len(), 1);

        let overlap = IOContract::from_texts(
            "bad",
            Theory::Linear,
            ["x"],
            ["x"],
            &["x <= 1"],
            &[] as &[&str],
        );
        assert!(matches!(overlap, Err(Error::AlphabetOverlap { .. })));

        let scope = IOContract::from_texts(
            "bad",
            Theory::Linear,
            ["i"],
            ["o"],
            &["o <= 1"],
            &[] as &[&str],
        );
        assert!(matches!(scope, Err(Error::ScopeViolation { .. })));

        let unknown = IOContract::from_texts(
            "bad",
            Theory::Linear,
            ["i"],
            ["o"],
            &[] as &[&str],
            &["o + w <= 1"],
        );
        assert!(matches!(unknown, Err(Error::ScopeViolation { .. })));

        let mixed = IOContract::new(
            "bad",
            Theory::Linear,
            [Var::from("i")].into(),
            BTreeSet::new(),
            parse_terms(Theory::Prop, "i").unwrap(),
            vec![],
        );
        assert!(matches!(mixed, Err(Error::MixedTheories { .. })));
    }

    #[test]
    fn status_matches_worked_examples() {
        let (_, m2, m3) = example3();
        let (status, failing) = m2.evaluate_status(&val(&[("j", 1), ("b", 7)])).unwrap();
        assert_eq!(status, Status::Fail);
        assert_eq!(failing, vec![TermId::new("M2", Section::Guarantee, 0)]);

        let (status, failing) = m3
            .evaluate_status(&val(&[("a", 2), ("b", 7), ("o", 3)]))
            .unwrap();
        assert_eq!(status, Status::Idle);
        assert_eq!(failing, vec![TermId::new("M3", Section::Assumption, 1)]);

        let (status, failing) = m2.evaluate_status(&val(&[("j", 1), ("b", 2)])).unwrap();
        assert_eq!(status, Status::Active);
        assert!(failing.is_empty());

        assert!(matches!(
            m2.evaluate_status(&val(&[("j", 1)])),
            Err(Error::MissingVariable(_))
        ));
    }

    #[test]
    fn refines_checks_both_directions() {
        let strong = lin("S", &["i"], &["o"], &["i <= 2"], &["o <= 1"]);
        let weak = lin("W", &["i"], &["o"], &["i <= 1"], &["o <= 2"]);
        assert!(refines(&strong, &strong).unwrap());
        assert!(refines(&strong, &weak).unwrap());
        assert!(!refines(&weak, &strong).unwrap());

        let other_alpha = lin("A", &["j"], &["o"], &["j <= 1"], &["o <= 2"]);
        assert!(matches!(
            refines(&strong, &other_alpha),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn compose_matches_first_worked_example() {
        let (c1, c2) = example1();
        let (sys, graph) = compose(&c1, &c2, &BTreeSet::new(), "comp_2").unwrap();

        assert_eq!(sys.inputs(), &BTreeSet::from([Var::from("i")]));
        assert_eq!(sys.outputs(), &BTreeSet::from([Var::from("o'")]));
        assert!(equivalent(sys.assumptions(), &parse_set(&["i >= 0", "i <= 2"])));
        assert!(equivalent(sys.guarantees(), &parse_set(&["i - 2*o' <= -3"])));

        // Operand terms (5) plus surviving composed terms (3); the refined
        // copy of `o <= 5` is pruned and gets no vertex.
        assert_eq!(graph.vertex_count(), 8);
        let a = |owner: &str, k| TermId::new(owner, Section::Assumption, k);
        let g = |owner: &str, k| TermId::new(owner, Section::Guarantee, k);
        let expected: BTreeSet<(TermId, TermId)> = [
            (a("C1", 0), a("comp_2", 0)),
            (a("C1", 1), a("comp_2", 1)),
            (g("C1", 0), g("comp_2", 0)),
            (g("C2", 0), g("comp_2", 0)),
        ]
        .into();
        let actual: BTreeSet<(TermId, TermId)> = graph.edges().cloned().collect();
        assert_eq!(actual, expected);
    }

    #[test]
    fn compose_is_identity_on_trivial_contract() {
        let (c1, _) = example1();
        let unit = IOContract::new(
            "unit",
            Theory::Linear,
            BTreeSet::new(),
            BTreeSet::new(),
            vec![],
            vec![],
        )
        .unwrap();
        let (sys, _) = compose(&c1, &unit, &BTreeSet::new(), "comp_2").unwrap();
        assert_eq!(sys.inputs(), c1.inputs());
        assert_eq!(sys.outputs(), c1.outputs());
        assert_eq!(sys.assumptions(), c1.assumptions());
        assert_eq!(sys.guarantees(), c1.guarantees());
    }

    #[test]
    fn compose_unions_disjoint_contracts() {
        let (m1, m2, _) = example3();
        let (sys, graph) = compose(&m1, &m2, &BTreeSet::new(), "comp_2").unwrap();
        assert_eq!(sys.inputs().len(), 2);
        assert_eq!(sys.outputs().len(), 2);
        assert_eq!(sys.assumptions(), &parse_set(&["i >= 0", "i <= 2", "j >= 0", "j <= 2"])[..]);
        assert_eq!(sys.guarantees(), &parse_set(&["a <= 2", "b <= 3"])[..]);
        // Every composed term is a stem copy with exactly one parent.
        assert_eq!(graph.edge_count(), 6);
    }

    #[test]
    fn compose_chain_matches_second_worked_example() {
        let (m1, m2, m3) = example3();
        let keep: BTreeSet<Var> = [Var::from("a"), Var::from("b")].into();
        let (prefix, _) = compose(&m1, &m2, &keep, "comp_2").unwrap();
        assert_eq!(prefix.outputs(), &keep);

        let (sys, graph) = compose(&prefix, &m3, &BTreeSet::new(), "comp_3").unwrap();
        assert_eq!(sys.inputs(), &BTreeSet::from([Var::from("i"), Var::from("j")]));
        assert_eq!(sys.outputs(), &BTreeSet::from([Var::from("o")]));
        assert!(equivalent(
            sys.assumptions(),
            &parse_set(&["i >= 0", "i <= 2", "j >= 0", "j <= 2"])
        ));
        assert!(equivalent(sys.guarantees(), &parse_set(&["o <= 2"])));

        // The system guarantee merges the relaxations of `a <= 2` (via
        // `o <= a`) and `o <= a` (via `a <= 2`): both parents present.
        let gv = TermId::new("comp_3", Section::Guarantee, 0);
        let parents: BTreeSet<TermId> = graph.parents(&gv).cloned().collect();
        assert_eq!(
            parents,
            BTreeSet::from([
                TermId::new("comp_2", Section::Guarantee, 0),
                TermId::new("M3", Section::Guarantee, 0),
            ])
        );
        // M3's discharged assumptions leave no composed assumption vertices
        // beyond the four input bounds.
        assert_eq!(sys.assumptions().len(), 4);
    }

    #[test]
    fn keep_set_exposes_connection_variable() {
        let (c1, c2) = example1();
        let keep: BTreeSet<Var> = [Var::from("o")].into();
        let (sys, _) = compose(&c1, &c2, &keep, "comp_2").unwrap();
        assert_eq!(
            sys.outputs(),
            &BTreeSet::from([Var::from("o"), Var::from("o'")])
        );
        // No internal variables, so the guarantee stems survive unchanged.
        assert_eq!(
            sys.guarantees(),
            &parse_set(&["o + i <= 3", "o + 2*o' >= 6"])[..]
        );
        // The assumption on `o` is still refined away: assumptions may only
        // mention inputs.
        assert!(equivalent(sys.assumptions(), &parse_set(&["i >= 0", "i <= 2"])));
    }

    #[test]
    fn compose_rejects_conflicting_operands() {
        let (c1, _) = example1();
        let clash = lin("C3", &["z"], &["o"], &[] as &[&str], &["o <= 1"]);
        assert!(matches!(
            compose(&c1, &clash, &BTreeSet::new(), "comp_2"),
            Err(Error::Composition { .. })
        ));
    }
}
