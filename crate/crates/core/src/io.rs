//! File formats: system specs (JSON), observation logs (CSV or flat JSON),
//! DOT export of the diagnostics graph, and report rendering.
//!
//! Spec files declare components with term source strings. A `replicate`
//! block stamps out time-indexed instances of template components: instance
//! `k` of template `T` is named `T@k`, every template variable `v` becomes
//! `v@k`, and wired variables become `base@(k+offset)` instead, which is how
//! step `k` reads step `k-1` outputs. Logs address those variables either
//! verbatim (flat JSON) or by CSV row: row `r` of column `c` is `c@r`, with
//! `--` marking values that were never produced.

use crate::contract::{CompositionGraph, IOContract, Status};
use crate::diagnostics::{
    build_system, CompositionOrder, DiagnosisReport, SystemModel, TraceNode,
};
use crate::error::{Error, Result};
use crate::term::{Section, Term, TermId, Theory, Valuation, Value, Var};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Deserialize;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecFile {
    theory: String,
    components: Vec<SpecComponent>,
    #[serde(default)]
    composition_order: Option<Vec<String>>,
    /// Stage number (as a JSON key, e.g. `"3"`) to connection variables kept
    /// visible after that stage.
    #[serde(default)]
    keep: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    replicate: Option<SpecReplicate>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecComponent {
    name: String,
    #[serde(default)]
    inputs: Vec<String>,
    #[serde(default)]
    outputs: Vec<String>,
    #[serde(default)]
    assumptions: Vec<String>,
    #[serde(default)]
    guarantees: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecReplicate {
    count: usize,
    #[serde(default = "default_start")]
    start: i64,
    components: Vec<String>,
    #[serde(default)]
    wiring: BTreeMap<String, BTreeMap<String, SpecWire>>,
}

fn default_start() -> i64 {
    1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecWire {
    base: String,
    offset: i64,
}

fn parse_theory(s: &str) -> Result<Theory> {
    match s {
        "linear" => Ok(Theory::Linear),
        "prop" | "propositional" => Ok(Theory::Prop),
        other => Err(Error::Spec(format!(
            "unknown theory `{other}` (expected `linear` or `prop`)"
        ))),
    }
}

fn make_component(c: &SpecComponent, theory: Theory) -> Result<IOContract> {
    IOContract::from_texts(
        c.name.clone(),
        theory,
        c.inputs.iter().cloned(),
        c.outputs.iter().cloned(),
        &c.assumptions,
        &c.guarantees,
    )
}

/// Stamps out one instance of a template at timestep `k`.
fn instantiate(template: &IOContract, k: i64, wiring: Option<&BTreeMap<String, SpecWire>>) -> Result<IOContract> {
    let renamed = |v: &Var| -> Result<Var> {
        if let Some(w) = wiring.and_then(|m| m.get(v.as_str())) {
            let step = k + w.offset;
            if step < 0 {
                return Err(Error::Spec(format!(
                    "wiring `{v}` -> `{}@{step}` leaves the timeline",
                    w.base
                )));
            }
            Ok(Var::new(format!("{}@{step}", w.base)))
        } else {
            Ok(Var::new(format!("{v}@{k}")))
        }
    };
    let map: BTreeMap<Var, Var> = template
        .alphabet()
        .iter()
        .map(|v| Ok((v.clone(), renamed(v)?)))
        .collect::<Result<_>>()?;
    let rename_all = |terms: &[Term]| -> Result<Vec<Term>> {
        terms.iter().map(|t| t.rename(&map)).collect()
    };
    IOContract::new(
        format!("{}@{k}", template.name()),
        template.theory(),
        template.inputs().iter().map(|v| map[v].clone()).collect(),
        template.outputs().iter().map(|v| map[v].clone()).collect(),
        rename_all(template.assumptions())?,
        rename_all(template.guarantees())?,
    )
}

fn expand(spec: SpecFile) -> Result<CompositionOrder> {
    let theory = parse_theory(&spec.theory)?;
    if spec.components.is_empty() {
        return Err(Error::Spec("spec declares no components".into()));
    }
    let declared: BTreeMap<&str, &SpecComponent> = spec
        .components
        .iter()
        .map(|c| (c.name.as_str(), c))
        .collect();
    if declared.len() != spec.components.len() {
        return Err(Error::Spec("duplicate component names in spec".into()));
    }

    let ordered: Vec<IOContract> = if let Some(rep) = &spec.replicate {
        if spec.composition_order.is_some() {
            return Err(Error::Spec(
                "`replicate` and `composition_order` are mutually exclusive".into(),
            ));
        }
        if rep.count == 0 {
            return Err(Error::Spec("`replicate.count` must be positive".into()));
        }
        for (tname, wires) in &rep.wiring {
            let template = declared
                .get(tname.as_str())
                .ok_or_else(|| Error::UnknownComponent(tname.clone()))?;
            for var in wires.keys() {
                if !template.inputs.contains(var) && !template.outputs.contains(var) {
                    return Err(Error::Spec(format!(
                        "wiring of `{tname}` names unknown variable `{var}`"
                    )));
                }
            }
        }
        let templates: Vec<IOContract> = rep
            .components
            .iter()
            .map(|tname| {
                declared
                    .get(tname.as_str())
                    .ok_or_else(|| Error::UnknownComponent(tname.clone()))
                    .and_then(|c| make_component(c, theory))
            })
            .collect::<Result<_>>()?;
        let mut ordered = Vec::with_capacity(rep.count * templates.len());
        for k in rep.start..rep.start + rep.count as i64 {
            for template in &templates {
                ordered.push(instantiate(template, k, rep.wiring.get(template.name()))?);
            }
        }
        ordered
    } else {
        let names: Vec<&str> = match &spec.composition_order {
            Some(order) => order.iter().map(|s| s.as_str()).collect(),
            None => spec.components.iter().map(|c| c.name.as_str()).collect(),
        };
        if names.len() != spec.components.len()
            || names.iter().collect::<BTreeSet<_>>().len() != names.len()
        {
            return Err(Error::Spec(
                "composition_order must mention every component exactly once".into(),
            ));
        }
        names
            .iter()
            .map(|name| {
                declared
                    .get(name)
                    .ok_or_else(|| Error::UnknownComponent((*name).to_string()))
                    .and_then(|c| make_component(c, theory))
            })
            .collect::<Result<_>>()?
    };

    let n = ordered.len();
    let mut order = CompositionOrder::new(ordered);
    for (key, vars) in &spec.keep {
        let stage: usize = key
            .parse()
            .map_err(|_| Error::Spec(format!("keep key `{key}` is not a stage number")))?;
        if stage < 2 || stage > n {
            return Err(Error::Spec(format!(
                "keep stage {stage} out of range (2..={n})"
            )));
        }
        order = order.with_keep(stage, vars.iter().map(Var::new).collect());
    }
    Ok(order)
}

/// Parses a system spec from JSON text and composes it.
pub fn parse_spec(text: &str) -> Result<SystemModel> {
    let spec: SpecFile = serde_json::from_str(text)?;
    build_system(expand(spec)?)
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<SystemModel> {
    parse_spec(&std::fs::read_to_string(path)?)
}

/// `p/q`, decimal, or integer text to an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Log(format!("cannot parse `{s}` as a rational"));
    if let Some((p, q)) = s.split_once('/') {
        let numer = BigInt::from_str(p.trim()).map_err(|_| bad())?;
        let denom = BigInt::from_str(q.trim()).map_err(|_| bad())?;
        if denom.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(numer, denom));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let (sign, int) = match int.strip_prefix('-') {
            Some(rest) => (-BigInt::one(), rest),
            None => (BigInt::one(), int.strip_prefix('+').unwrap_or(int)),
        };
        let int = if int.is_empty() { "0" } else { int };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let whole = BigInt::from_str(int).map_err(|_| bad())?;
        let frac_num = BigInt::from_str(frac).map_err(|_| bad())?;
        let scale = BigInt::from(10u8).pow(frac.len() as u32);
        return Ok(BigRational::new(sign * (whole * &scale + frac_num), scale));
    }
    BigInt::from_str(s)
        .map(BigRational::from_integer)
        .map_err(|_| bad())
}

fn parse_bool_text(s: &str) -> Option<bool> {
    match s.trim() {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

fn value_from_text(s: &str, theory: Theory, var: &Var) -> Result<Value> {
    match theory {
        Theory::Linear => parse_rational(s).map(Value::Rational).map_err(|_| {
            Error::TypeMismatch {
                var: var.clone(),
                expected: "rational",
                theory: "linear",
            }
        }),
        Theory::Prop => parse_bool_text(s)
            .map(Value::Bool)
            .ok_or_else(|| Error::TypeMismatch {
                var: var.clone(),
                expected: "boolean",
                theory: "propositional",
            }),
    }
}

fn value_from_json(v: &serde_json::Value, theory: Theory, var: &Var) -> Result<Value> {
    let mismatch = || Error::TypeMismatch {
        var: var.clone(),
        expected: match theory {
            Theory::Linear => "rational",
            Theory::Prop => "boolean",
        },
        theory: match theory {
            Theory::Linear => "linear",
            Theory::Prop => "propositional",
        },
    };
    match (theory, v) {
        (Theory::Linear, serde_json::Value::Number(n)) => parse_rational(&n.to_string())
            .map(Value::Rational)
            .map_err(|_| mismatch()),
        (Theory::Linear, serde_json::Value::String(s)) => {
            parse_rational(s).map(Value::Rational).map_err(|_| mismatch())
        }
        (Theory::Prop, serde_json::Value::Bool(b)) => Ok(Value::Bool(*b)),
        (Theory::Prop, serde_json::Value::Number(n)) => match n.as_i64() {
            Some(0) => Ok(Value::Bool(false)),
            Some(1) => Ok(Value::Bool(true)),
            _ => Err(mismatch()),
        },
        (Theory::Prop, serde_json::Value::String(s)) => {
            parse_bool_text(s).map(Value::Bool).ok_or_else(mismatch)
        }
        _ => Err(mismatch()),
    }
}

fn known_vars(model: &SystemModel) -> BTreeSet<Var> {
    model
        .components()
        .iter()
        .flat_map(|c| c.alphabet())
        .collect()
}

fn check_known(var: &Var, known: &BTreeSet<Var>) -> Result<()> {
    if known.contains(var) {
        Ok(())
    } else {
        Err(Error::Log(format!(
            "variable `{var}` does not appear in any component alphabet"
        )))
    }
}

fn check_nonempty(log: Valuation) -> Result<Valuation> {
    if log.is_empty() {
        Err(Error::Log("log contains no values".into()))
    } else {
        Ok(log)
    }
}

/// Flat JSON object `{"var": value, …}`; names are used verbatim.
pub fn parse_log_json(text: &str, model: &SystemModel) -> Result<Valuation> {
    let raw: BTreeMap<String, serde_json::Value> = serde_json::from_str(text)?;
    let known = known_vars(model);
    let theory = model.theory();
    let mut log = Valuation::new();
    for (name, value) in &raw {
        let var = Var::new(name.clone());
        check_known(&var, &known)?;
        let value = value_from_json(value, theory, &var)?;
        log.insert(var, value);
    }
    check_nonempty(log)
}

/// CSV where row `r` of column `c` carries the value of `c@r`. Cells holding
/// `--` are absent (the variable does not exist at that step or was not
/// observed) and are skipped before any validation.
pub fn parse_log_csv(text: &str, model: &SystemModel) -> Result<Valuation> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.to_string())
        .collect();
    if headers.is_empty() {
        return Err(Error::Log("csv log has no header".into()));
    }
    let known = known_vars(model);
    let theory = model.theory();
    let mut log = Valuation::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        for (c, cell) in record.iter().enumerate() {
            if cell == "--" {
                continue;
            }
            let base = headers.get(c).ok_or_else(|| {
                Error::Log(format!("row {r} has more cells than the header"))
            })?;
            let var = Var::new(format!("{base}@{r}"));
            check_known(&var, &known)?;
            let value = value_from_text(cell, theory, &var)?;
            log.insert(var, value);
        }
    }
    check_nonempty(log)
}

/// Loads a log, dispatching on the file extension (`.csv`, otherwise JSON).
pub fn load_log(path: impl AsRef<Path>, model: &SystemModel) -> Result<Valuation> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let is_csv = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if is_csv {
        parse_log_csv(&text, model)
    } else {
        parse_log_json(&text, model)
    }
}

/// `owner.a3` / `owner.g0` to a [`TermId`]. The owner may itself contain
/// dots; the split happens at the last one.
pub fn parse_term_id(s: &str) -> Result<TermId> {
    let bad = || Error::Spec(format!("`{s}` is not a term id (expected `owner.a<k>` or `owner.g<k>`)"));
    let (owner, tail) = s.rsplit_once('.').ok_or_else(bad)?;
    if owner.is_empty() {
        return Err(bad());
    }
    let section = match tail.as_bytes().first() {
        Some(b'a') => Section::Assumption,
        Some(b'g') => Section::Guarantee,
        _ => return Err(bad()),
    };
    let index: usize = tail[1..].parse().map_err(|_| bad())?;
    Ok(TermId::new(owner, section, index))
}

/// Resolves a guarantee selector to the system guarantees to explain.
/// `all` means every violated one; `g<k>` abbreviates the system's k-th
/// guarantee. Explicit ids are validated but yield an empty set when the
/// log satisfies them, so callers report "no violation" uniformly.
pub fn requested_guarantees(
    model: &SystemModel,
    log: &Valuation,
    arg: &str,
) -> Result<Vec<TermId>> {
    let system = model.system();
    if arg == "all" {
        let mut violated = Vec::new();
        for (id, t) in system.guarantee_ids() {
            if !t.evaluate(log)? {
                violated.push(id);
            }
        }
        return Ok(violated);
    }
    let id = if let Some(k) = arg.strip_prefix('g').and_then(|s| s.parse::<usize>().ok()) {
        TermId::new(system.name(), Section::Guarantee, k)
    } else {
        parse_term_id(arg)?
    };
    let known = id.owner == system.name()
        && id.section == Section::Guarantee
        && id.index < system.guarantees().len();
    if !known {
        return Err(Error::Spec(format!("`{arg}` does not name a system guarantee")));
    }
    if system.guarantees()[id.index].evaluate(log)? {
        return Ok(Vec::new());
    }
    Ok(vec![id])
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders the provenance graph in DOT. Output is fully sorted, so equal
/// graphs always print identically.
pub fn export_dot(graph: &CompositionGraph) -> String {
    let mut out = String::from("digraph diagnostics {\n  rankdir=LR;\n  node [fontname=\"monospace\"];\n");
    for (id, label) in graph.vertices() {
        let shape = match id.section {
            Section::Assumption => "box",
            Section::Guarantee => "ellipse",
        };
        let _ = writeln!(
            out,
            "  \"{id}\" [label=\"{}\", shape={shape}];",
            dot_escape(&format!("{id}: {label}"))
        );
    }
    for (from, to) in graph.edges() {
        let _ = writeln!(out, "  \"{from}\" -> \"{to}\";");
    }
    out.push_str("}\n");
    out
}

/// ANSI styling used by the textual renderers; all codes vanish when
/// `color` is off.
struct Paint {
    color: bool,
}

impl Paint {
    fn wrap(&self, code: &str, s: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    fn red(&self, s: &str) -> String {
        self.wrap("31", s)
    }

    fn green(&self, s: &str) -> String {
        self.wrap("32", s)
    }

    fn yellow(&self, s: &str) -> String {
        self.wrap("33", s)
    }

    fn bold(&self, s: &str) -> String {
        self.wrap("1", s)
    }
}

pub fn render_contract(c: &IOContract) -> String {
    let vars = |set: &BTreeSet<Var>| -> String {
        let names: Vec<&str> = set.iter().map(|v| v.as_str()).collect();
        if names.is_empty() {
            "(none)".to_string()
        } else {
            names.join(", ")
        }
    };
    let mut out = String::new();
    let _ = writeln!(out, "contract {}", c.name());
    let _ = writeln!(out, "  inputs:  {}", vars(c.inputs()));
    let _ = writeln!(out, "  outputs: {}", vars(c.outputs()));
    out.push_str("  assumptions:\n");
    for (id, t) in c.assumption_ids() {
        let _ = writeln!(out, "    {id}: {}", t.render());
    }
    if c.assumptions().is_empty() {
        out.push_str("    (none)\n");
    }
    out.push_str("  guarantees:\n");
    for (id, t) in c.guarantee_ids() {
        let _ = writeln!(out, "    {id}: {}", t.render());
    }
    if c.guarantees().is_empty() {
        out.push_str("    (none)\n");
    }
    out
}

pub fn render_statuses(
    model: &SystemModel,
    statuses: &[(String, Status, Vec<TermId>)],
    color: bool,
) -> String {
    let paint = Paint { color };
    let mut out = String::new();
    for (name, status, failing) in statuses {
        let word = match status {
            Status::Active => paint.green("ACTIVE"),
            Status::Idle => paint.yellow("IDLE"),
            Status::Fail => paint.red("FAIL"),
        };
        let _ = write!(out, "{name}: {word}");
        if !failing.is_empty() {
            let details: Vec<String> = failing
                .iter()
                .map(|id| {
                    let text = model
                        .component(&id.owner)
                        .and_then(|c| c.term(id))
                        .map(|t| t.render())
                        .unwrap_or_else(|| "?".into());
                    format!("{id}: {text}")
                })
                .collect();
            let _ = write!(out, "  [{}]", details.join("; "));
        }
        out.push('\n');
    }
    out
}

fn render_trace(node: &TraceNode, report: &DiagnosisReport, paint: &Paint, depth: usize, out: &mut String) {
    let verdict = node.verdict.tag();
    let styled = match node.verdict {
        crate::diagnostics::TraceVerdict::Faulty => paint.red(verdict),
        crate::diagnostics::TraceVerdict::Satisfied => paint.green(verdict),
        crate::diagnostics::TraceVerdict::Violated
        | crate::diagnostics::TraceVerdict::AssumptionViolated => paint.yellow(verdict),
        _ => verdict.to_string(),
    };
    let _ = writeln!(
        out,
        "{}{} [{styled}] {}",
        "  ".repeat(depth + 1),
        node.id,
        report.label(&node.id)
    );
    for child in &node.children {
        render_trace(child, report, paint, depth + 1, out);
    }
}

pub fn render_report(report: &DiagnosisReport, color: bool) -> String {
    let paint = Paint { color };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "violated guarantee: {} [{}]",
        paint.bold(&report.violated_guarantee.to_string()),
        report.label(&report.violated_guarantee)
    );
    let faulty = if report.faulty_components.is_empty() {
        "(none)".to_string()
    } else {
        report
            .faulty_components
            .iter()
            .map(|name| paint.red(name))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let _ = writeln!(out, "faulty components: {faulty}");
    let _ = writeln!(
        out,
        "terms checked: {} of {}",
        report.terms_checked, report.terms_total
    );
    if report.low_confidence {
        let _ = writeln!(
            out,
            "confidence: {} (cause analysis fell back to coarse candidates)",
            paint.yellow("low")
        );
    }
    for w in &report.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out.push_str("trace:\n");
    render_trace(&report.trace, report, &paint, 0, &mut out);
    out.push_str("evaluations:\n");
    for (k, e) in report.evaluations.iter().enumerate() {
        let verdict = if e.satisfied {
            paint.green("satisfied")
        } else {
            paint.red("violated")
        };
        let what = if e.ids.len() == 1 {
            format!("{} [{}]", e.ids[0], report.label(&e.ids[0]))
        } else {
            let names: Vec<String> = e.ids.iter().map(|id| id.to_string()).collect();
            format!("assumption sweep {{{}}}", names.join(", "))
        };
        let _ = writeln!(out, "  {:>3}. {what} -> {verdict}", k + 1);
    }
    out
}

fn trace_json(node: &TraceNode, report: &DiagnosisReport) -> serde_json::Value {
    serde_json::json!({
        "id": node.id.to_string(),
        "term": report.label(&node.id),
        "verdict": node.verdict.tag(),
        "children": node.children.iter().map(|c| trace_json(c, report)).collect::<Vec<_>>(),
    })
}

/// Stable JSON form of a report (keys and array orders are deterministic).
pub fn report_json(report: &DiagnosisReport) -> serde_json::Value {
    serde_json::json!({
        "violated_guarantee": report.violated_guarantee.to_string(),
        "violated_guarantee_term": report.label(&report.violated_guarantee),
        "faulty_components": report.faulty_components.iter().collect::<Vec<_>>(),
        "terms_checked": report.terms_checked,
        "terms_total": report.terms_total,
        "low_confidence": report.low_confidence,
        "warnings": report.warnings,
        "evaluations": report.evaluations.iter().map(|e| serde_json::json!({
            "ids": e.ids.iter().map(|id| id.to_string()).collect::<Vec<_>>(),
            "terms": e.ids.iter().map(|id| report.label(id)).collect::<Vec<_>>(),
            "satisfied": e.satisfied,
        })).collect::<Vec<_>>(),
        "trace": trace_json(&report.trace, report),
    })
}
