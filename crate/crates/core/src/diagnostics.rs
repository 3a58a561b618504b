//! System assembly and log-driven fault diagnosis.
//!
//! A system is a list of component contracts folded left-to-right into prefix
//! compositions `comp_2 … comp_n`; the per-stage provenance graphs are
//! unioned into one diagnostics graph. Diagnosing a violated system
//! guarantee walks that graph: the in-degree-zero ancestors of the guarantee
//! are the only component-level terms that can possibly explain it, so the
//! search evaluates those instead of the whole term population. Violated
//! component assumptions are traced further by re-running the elimination
//! that discharged them, which names the upstream terms to blame next.

use crate::contract::{compose, CompositionGraph, IOContract, Status};
use crate::error::{Error, Result};
use crate::term::{eliminate, Direction, Section, Term, TermId, Valuation, Var};
use std::collections::{BTreeMap, BTreeSet};

/// Components in composition order plus optional overrides of the connection
/// variables kept visible after each stage (keyed by stage number, so `3`
/// affects the fold producing `comp_3`). Without an override a stage keeps
/// exactly the connection variables that later components still consume.
#[derive(Debug, Clone)]
pub struct CompositionOrder {
    components: Vec<IOContract>,
    keep: BTreeMap<usize, BTreeSet<Var>>,
}

impl CompositionOrder {
    pub fn new(components: Vec<IOContract>) -> Self {
        CompositionOrder {
            components,
            keep: BTreeMap::new(),
        }
    }

    pub fn with_keep(mut self, stage: usize, vars: BTreeSet<Var>) -> Self {
        self.keep.insert(stage, vars);
        self
    }
}

fn stage_label(prefix: &str, k: usize) -> String {
    format!("{prefix}_{k}")
}

fn connection_vars(left: &IOContract, right: &IOContract) -> BTreeSet<Var> {
    left.outputs()
        .intersection(right.inputs())
        .chain(right.outputs().intersection(left.inputs()))
        .cloned()
        .collect()
}

/// Folds `components` with per-stage keep sets; returns every prefix contract
/// (`prefixes[0]` is the first component itself) and the unioned graph.
fn fold(
    components: &[IOContract],
    keep: &BTreeMap<usize, BTreeSet<Var>>,
    label: &str,
) -> Result<(Vec<IOContract>, CompositionGraph)> {
    let mut prefixes = vec![components[0].clone()];
    let mut graph = CompositionGraph::default();
    if components.len() == 1 {
        // No stage graph will register the lone component's terms.
        for (id, t) in components[0].term_ids() {
            graph.insert_vertex(id, t.render());
        }
    }
    for (i, component) in components.iter().enumerate().skip(1) {
        let stage = i + 1;
        let prev = prefixes.last().expect("non-empty prefixes");
        let keep_vars = keep.get(&stage).cloned().unwrap_or_else(|| {
            let connection = connection_vars(prev, component);
            let later: BTreeSet<&Var> = components[i + 1..]
                .iter()
                .flat_map(|c| c.inputs().iter())
                .collect();
            connection
                .into_iter()
                .filter(|v| later.contains(v))
                .collect()
        });
        let (next, stage_graph) = compose(prev, component, &keep_vars, &stage_label(label, stage))?;
        graph.absorb(&stage_graph);
        prefixes.push(next);
    }
    Ok((prefixes, graph))
}

/// A composed system: the ordered components, every prefix contract, and the
/// union of all stage provenance graphs.
#[derive(Debug, Clone)]
pub struct SystemModel {
    components: Vec<IOContract>,
    prefixes: Vec<IOContract>,
    graph: CompositionGraph,
}

pub fn build_system(order: CompositionOrder) -> Result<SystemModel> {
    let CompositionOrder { components, keep } = order;
    if components.is_empty() {
        return Err(Error::Spec("system needs at least one component".into()));
    }
    let mut names = BTreeSet::new();
    for c in &components {
        if !names.insert(c.name().to_string()) {
            return Err(Error::Spec(format!("duplicate component name `{}`", c.name())));
        }
        if c.name().starts_with("comp_") || c.name().starts_with("rem_") {
            return Err(Error::Spec(format!(
                "component name `{}` collides with composition stage labels",
                c.name()
            )));
        }
    }
    let (prefixes, graph) = fold(&components, &keep, "comp")?;
    Ok(SystemModel {
        components,
        prefixes,
        graph,
    })
}

impl SystemModel {
    /// The fully composed system contract.
    pub fn system(&self) -> &IOContract {
        self.prefixes.last().expect("non-empty prefixes")
    }

    pub fn components(&self) -> &[IOContract] {
        &self.components
    }

    pub fn theory(&self) -> crate::term::Theory {
        self.components[0].theory()
    }

    /// Prefix compositions, `prefixes()[0]` being the first component and the
    /// last entry the full system.
    pub fn prefixes(&self) -> &[IOContract] {
        &self.prefixes
    }

    pub fn component(&self, name: &str) -> Option<&IOContract> {
        self.components.iter().find(|c| c.name() == name)
    }

    pub fn graph(&self) -> &CompositionGraph {
        &self.graph
    }

    /// Total number of component-level terms; the denominator of the
    /// "fraction of terms checked" diagnosis metric.
    pub fn terms_total(&self) -> usize {
        self.components
            .iter()
            .map(|c| c.assumptions().len() + c.guarantees().len())
            .sum()
    }

    /// Component-level terms with a provenance path to `s` (the diagnostics
    /// map): exactly the in-degree-zero ancestors of `s` in the graph.
    pub fn diagnostics_map(&self, s: &TermId) -> Result<BTreeSet<TermId>> {
        self.graph.leaf_ancestors(s)
    }

    /// FAIL/ACTIVE/IDLE verdict of every component under one log.
    pub fn component_statuses(
        &self,
        log: &Valuation,
    ) -> Result<Vec<(String, Status, Vec<TermId>)>> {
        self.components
            .iter()
            .map(|c| {
                c.evaluate_status(log)
                    .map(|(status, failing)| (c.name().to_string(), status, failing))
            })
            .collect()
    }

    fn component_index(&self, name: &str) -> Option<usize> {
        self.components.iter().position(|c| c.name() == name)
    }

    fn lookup_term(&self, id: &TermId) -> Option<&Term> {
        self.components
            .iter()
            .chain(self.prefixes.iter())
            .find(|c| c.name() == id.owner)
            .and_then(|c| c.term(id))
    }
}

/// How a trace node was resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceVerdict {
    /// Composed term expanded into its diagnostics-map leaves.
    Expanded,
    /// Guarantee leaf holds under the log; branch closed.
    Satisfied,
    /// Guarantee leaf violated with all owner assumptions intact: the owner
    /// is at fault.
    Faulty,
    /// Guarantee leaf violated but an assumption of the owner is violated
    /// too; children follow the assumptions' causes.
    Violated,
    /// Violated assumption; children are the upstream terms that discharged
    /// it during composition.
    AssumptionViolated,
    /// Assumption leaf over system inputs only; already covered by the
    /// system-level precondition check.
    SkippedInput,
    /// No cause could be derived (see the report warnings).
    Unresolved,
    /// Term already handled elsewhere in the trace; not expanded again.
    Revisited,
}

impl TraceVerdict {
    pub fn tag(self) -> &'static str {
        match self {
            TraceVerdict::Expanded => "expanded",
            TraceVerdict::Satisfied => "satisfied",
            TraceVerdict::Faulty => "faulty",
            TraceVerdict::Violated => "violated",
            TraceVerdict::AssumptionViolated => "assumption-violated",
            TraceVerdict::SkippedInput => "skipped-input",
            TraceVerdict::Unresolved => "unresolved",
            TraceVerdict::Revisited => "revisited",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceNode {
    pub id: TermId,
    pub verdict: TraceVerdict,
    pub children: Vec<TraceNode>,
}

impl TraceNode {
    fn new(id: TermId, verdict: TraceVerdict) -> Self {
        TraceNode {
            id,
            verdict,
            children: Vec::new(),
        }
    }
}

/// One entry of the evaluation ledger. A sweep of a component's assumptions
/// that finds no violation is recorded as a single batch entry; everything
/// else is one term per entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub ids: Vec<TermId>,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagnosisReport {
    pub violated_guarantee: TermId,
    pub faulty_components: BTreeSet<String>,
    pub evaluations: Vec<Evaluation>,
    pub trace: TraceNode,
    pub terms_checked: usize,
    pub terms_total: usize,
    pub low_confidence: bool,
    pub warnings: Vec<String>,
    /// Rendered term text for every id mentioned by the trace or ledger.
    pub labels: BTreeMap<TermId, String>,
}

impl DiagnosisReport {
    pub fn label(&self, id: &TermId) -> &str {
        self.labels.get(id).map(|s| s.as_str()).unwrap_or("?")
    }
}

fn collect_labels(
    trace: &TraceNode,
    evaluations: &[Evaluation],
    g_v: &TermId,
    graph: &CompositionGraph,
) -> BTreeMap<TermId, String> {
    let mut ids: BTreeSet<TermId> = BTreeSet::from([g_v.clone()]);
    let mut stack = vec![trace];
    while let Some(node) = stack.pop() {
        ids.insert(node.id.clone());
        stack.extend(node.children.iter());
    }
    ids.extend(evaluations.iter().flat_map(|e| e.ids.iter().cloned()));
    ids.into_iter()
        .filter_map(|id| graph.label(&id).map(|l| (id.clone(), l.to_string())))
        .collect()
}

struct Diagnoser<'a> {
    model: &'a SystemModel,
    log: &'a Valuation,
    graph: CompositionGraph,
    memo: BTreeMap<TermId, bool>,
    evaluations: Vec<Evaluation>,
    faulty: BTreeSet<String>,
    warnings: Vec<String>,
    low_confidence: bool,
    visited: BTreeSet<TermId>,
    /// Prefix contracts of the remainder composition `(C2 ∥ … ∥ Cn)`, built
    /// on demand when a violated assumption of the first component needs a
    /// cause.
    remainder: Option<Vec<IOContract>>,
}

/// Explains one violated system guarantee from a complete log.
///
/// Preconditions: every system assumption must hold under the log (otherwise
/// the environment is outside the contracted envelope and components cannot
/// be blamed) and `g_v` must actually be violated. Neither precondition
/// check appears in the evaluation ledger.
pub fn diagnose(model: &SystemModel, log: &Valuation, g_v: &TermId) -> Result<DiagnosisReport> {
    let system = model.system();
    for (_, t) in system.assumption_ids() {
        if !t.evaluate(log)? {
            return Err(Error::AssumptionViolated { term: t.render() });
        }
    }
    let target = system
        .term(g_v)
        .or_else(|| model.lookup_term(g_v))
        .ok_or_else(|| Error::UnknownVertex(g_v.clone()))?;
    if g_v.section != Section::Guarantee {
        return Err(Error::Spec(format!("`{g_v}` is not a guarantee")));
    }
    if target.evaluate(log)? {
        return Err(Error::NoViolation {
            term: target.render(),
        });
    }

    let mut d = Diagnoser {
        model,
        log,
        graph: model.graph.clone(),
        memo: BTreeMap::new(),
        evaluations: Vec::new(),
        faulty: BTreeSet::new(),
        warnings: Vec::new(),
        low_confidence: false,
        visited: BTreeSet::new(),
        remainder: None,
    };
    let trace = d.trace(g_v)?;
    let labels = collect_labels(&trace, &d.evaluations, g_v, &d.graph);
    Ok(DiagnosisReport {
        violated_guarantee: g_v.clone(),
        faulty_components: d.faulty,
        terms_checked: d.evaluations.len(),
        terms_total: model.terms_total(),
        evaluations: d.evaluations,
        trace,
        low_confidence: d.low_confidence,
        warnings: d.warnings,
        labels,
    })
}

impl<'a> Diagnoser<'a> {
    fn is_component(&self, owner: &str) -> bool {
        self.model.component_index(owner).is_some()
    }

    /// Expands a term id: composed terms open into their diagnostics-map
    /// leaves, component terms are checked directly.
    fn trace(&mut self, id: &TermId) -> Result<TraceNode> {
        if self.is_component(&id.owner) {
            return self.process_leaf(id);
        }
        if !self.visited.insert(id.clone()) {
            return Ok(TraceNode::new(id.clone(), TraceVerdict::Revisited));
        }
        let leaves = self.graph.leaf_ancestors(id)?;
        let mut node = TraceNode::new(id.clone(), TraceVerdict::Expanded);
        for leaf in &leaves {
            node.children.push(self.process_leaf(leaf)?);
        }
        Ok(node)
    }

    fn process_leaf(&mut self, id: &TermId) -> Result<TraceNode> {
        let component = self
            .model
            .component(&id.owner)
            .ok_or_else(|| Error::UnknownVertex(id.clone()))?;
        let term = component
            .term(id)
            .ok_or_else(|| Error::UnknownVertex(id.clone()))?
            .clone();
        match id.section {
            Section::Assumption => {
                // Assumptions over system inputs were already checked as part
                // of the system-level precondition; anything else cannot be
                // pinned on the environment.
                if term.vars().is_subset(self.model.system().inputs()) {
                    Ok(TraceNode::new(id.clone(), TraceVerdict::SkippedInput))
                } else {
                    self.warnings.push(format!(
                        "assumption leaf {id} ranges over non-input variables; not traced"
                    ));
                    Ok(TraceNode::new(id.clone(), TraceVerdict::Unresolved))
                }
            }
            Section::Guarantee => {
                if !self.visited.insert(id.clone()) {
                    return Ok(TraceNode::new(id.clone(), TraceVerdict::Revisited));
                }
                let satisfied = self.eval_term(id, &term)?;
                if satisfied {
                    return Ok(TraceNode::new(id.clone(), TraceVerdict::Satisfied));
                }
                let violated = self.sweep_assumptions(component)?;
                if violated.is_empty() {
                    self.faulty.insert(component.name().to_string());
                    return Ok(TraceNode::new(id.clone(), TraceVerdict::Faulty));
                }
                let mut node = TraceNode::new(id.clone(), TraceVerdict::Violated);
                for a_id in violated {
                    node.children.push(self.trace_assumption(&a_id)?);
                }
                Ok(node)
            }
        }
    }

    /// Memo-aware single-term evaluation; fresh evaluations are ledgered.
    fn eval_term(&mut self, id: &TermId, term: &Term) -> Result<bool> {
        if let Some(&v) = self.memo.get(id) {
            return Ok(v);
        }
        let v = term.evaluate(self.log)?;
        self.memo.insert(id.clone(), v);
        self.evaluations.push(Evaluation {
            ids: vec![id.clone()],
            satisfied: v,
        });
        Ok(v)
    }

    /// Evaluates every assumption of `component` (skipping memoized ones) and
    /// returns all violated assumption ids. A fully satisfied sweep costs a
    /// single ledger entry.
    fn sweep_assumptions(&mut self, component: &IOContract) -> Result<Vec<TermId>> {
        let mut fresh: Vec<(TermId, bool)> = Vec::new();
        let mut violated = Vec::new();
        for (id, t) in component.assumption_ids() {
            let v = match self.memo.get(&id) {
                Some(&v) => v,
                None => {
                    let v = t.evaluate(self.log)?;
                    self.memo.insert(id.clone(), v);
                    fresh.push((id.clone(), v));
                    v
                }
            };
            if !v {
                violated.push(id);
            }
        }
        if !fresh.is_empty() {
            if fresh.iter().all(|(_, v)| *v) {
                self.evaluations.push(Evaluation {
                    ids: fresh.into_iter().map(|(id, _)| id).collect(),
                    satisfied: true,
                });
            } else {
                for (id, v) in fresh {
                    self.evaluations.push(Evaluation {
                        ids: vec![id],
                        satisfied: v,
                    });
                }
            }
        }
        Ok(violated)
    }

    fn trace_assumption(&mut self, a_id: &TermId) -> Result<TraceNode> {
        if !self.visited.insert(a_id.clone()) {
            return Ok(TraceNode::new(a_id.clone(), TraceVerdict::Revisited));
        }
        let causes = self.find_cause(a_id)?;
        let mut node = TraceNode::new(a_id.clone(), TraceVerdict::AssumptionViolated);
        if causes.is_empty() {
            node.verdict = TraceVerdict::Unresolved;
            return Ok(node);
        }
        for cause in causes {
            node.children.push(self.trace(&cause)?);
        }
        Ok(node)
    }

    /// Re-derives why `a_id` was expected to hold: refines it against the
    /// terms it was composed with and blames the context terms consumed.
    fn find_cause(&mut self, a_id: &TermId) -> Result<Vec<TermId>> {
        let i = self
            .model
            .component_index(&a_id.owner)
            .ok_or_else(|| Error::UnknownVertex(a_id.clone()))?;
        let component = &self.model.components[i];
        let term = component
            .term(a_id)
            .ok_or_else(|| Error::UnknownVertex(a_id.clone()))?
            .clone();

        let other: IOContract = if i > 0 {
            self.model.prefixes[i - 1].clone()
        } else if let Some(rest) = self.remainder_contract()? {
            rest
        } else {
            self.warnings.push(format!(
                "violated assumption {a_id} has no peer components to trace into"
            ));
            return Ok(Vec::new());
        };

        let context: Vec<(TermId, Term)> = other
            .guarantee_ids()
            .chain(other.assumption_ids())
            .map(|(id, t)| (id, t.clone()))
            .collect();
        let system = self.model.system();
        let observable: BTreeSet<Var> = system.inputs().union(system.outputs()).cloned().collect();
        let ctx_vars: BTreeSet<Var> = context.iter().flat_map(|(_, t)| t.vars()).collect();
        let elim: BTreeSet<Var> = term
            .vars()
            .union(&ctx_vars)
            .filter(|v| !observable.contains(*v))
            .cloned()
            .collect();

        match eliminate(&term, &elim, &context, Direction::Refinement) {
            Ok(r) => {
                if r.used.is_empty() {
                    self.warnings.push(format!(
                        "assumption {a_id} was not discharged by any peer term; no cause found"
                    ));
                }
                Ok(r.used)
            }
            Err(e) => {
                // Fall back to every context term sharing a variable with the
                // assumption; coarser than a real cause, hence low confidence.
                self.low_confidence = true;
                self.warnings.push(format!(
                    "cause analysis for {a_id} failed ({e}); falling back to all related context terms"
                ));
                let tvars = term.vars();
                let mut related: Vec<TermId> = context
                    .iter()
                    .filter(|(_, t)| !t.vars().is_disjoint(&tvars))
                    .map(|(id, _)| id.clone())
                    .collect();
                if related.is_empty() {
                    related = context.into_iter().map(|(id, _)| id).collect();
                }
                Ok(related)
            }
        }
    }

    /// Composition of everything after the first component, with its stage
    /// graphs merged into the working graph so causes can be traced through.
    fn remainder_contract(&mut self) -> Result<Option<IOContract>> {
        if self.model.components.len() < 2 {
            return Ok(None);
        }
        if self.remainder.is_none() {
            let rest = &self.model.components[1..];
            let (prefixes, graph) = fold(rest, &BTreeMap::new(), "rem")?;
            self.graph.absorb(&graph);
            self.warnings.push(
                "first component in the order: causes computed against the composition of the remaining components"
                    .to_string(),
            );
            self.remainder = Some(prefixes);
        }
        Ok(self
            .remainder
            .as_ref()
            .and_then(|p| p.last())
            .cloned())
    }
}
