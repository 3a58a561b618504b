//! Browser bindings; see `www/index.html` for the demo page.
//!
//! Every function takes spec/log text and returns a JSON string, so the
//! page needs no typed glue beyond `JSON.parse`. Errors come back as
//! `{"error": "..."}` instead of an exception. The functions are ordinary
//! Rust on non-wasm targets, which is how `tests/bindings.rs` drives them.

use agdiag::io::{
    parse_log_csv, parse_log_json, parse_spec, render_contract, render_report, render_statuses,
    report_json, requested_guarantees,
};
use agdiag::term::{Section, TermId, Valuation, Var};
use agdiag::{diagnose, Error, IOContract, SystemModel};
use std::collections::BTreeSet;
use wasm_bindgen::prelude::*;

/// Compose the spec and describe the system contract, the per-component
/// contracts, and the term provenance graph.
#[wasm_bindgen]
pub fn compose_json(spec: &str) -> String {
    finish(compose_impl(spec))
}

/// Evaluate each component's IDLE/ACTIVE/FAIL status under a log.
#[wasm_bindgen]
pub fn status_json(spec: &str, log: &str) -> String {
    finish(status_impl(spec, log))
}

/// Explain violated system guarantees. `guarantee` follows the CLI:
/// `all`, `g<k>`, or a full id such as `comp_3.g0`.
#[wasm_bindgen]
pub fn diagnose_json(spec: &str, log: &str, guarantee: &str) -> String {
    finish(diagnose_impl(spec, log, guarantee))
}

fn finish(r: Result<serde_json::Value, Error>) -> String {
    let value = r.unwrap_or_else(|e| serde_json::json!({ "error": e.to_string() }));
    serde_json::to_string_pretty(&value).expect("serializable value")
}

/// Logs on disk are dispatched by extension; pasted text is sniffed instead.
fn parse_log_any(text: &str, model: &SystemModel) -> Result<Valuation, Error> {
    if text.trim_start().starts_with('{') {
        parse_log_json(text, model)
    } else {
        parse_log_csv(text, model)
    }
}

fn var_names(vars: &BTreeSet<Var>) -> Vec<String> {
    vars.iter().map(|v| v.as_str().to_owned()).collect()
}

fn terms_value<'a>(it: impl Iterator<Item = (TermId, &'a agdiag::term::Term)>) -> serde_json::Value {
    let entries: Vec<serde_json::Value> = it
        .map(|(id, t)| serde_json::json!({ "id": id.to_string(), "term": t.render() }))
        .collect();
    serde_json::Value::Array(entries)
}

fn contract_value(c: &IOContract) -> serde_json::Value {
    serde_json::json!({
        "name": c.name(),
        "inputs": var_names(c.inputs()),
        "outputs": var_names(c.outputs()),
        "assumptions": terms_value(c.assumption_ids()),
        "guarantees": terms_value(c.guarantee_ids()),
    })
}

fn compose_impl(spec: &str) -> Result<serde_json::Value, Error> {
    let model = parse_spec(spec)?;
    let graph = model.graph();
    let vertices: Vec<serde_json::Value> = graph
        .vertices()
        .map(|(id, label)| {
            serde_json::json!({
                "id": id.to_string(),
                "owner": id.owner,
                "kind": match id.section {
                    Section::Assumption => "assumption",
                    Section::Guarantee => "guarantee",
                },
                "label": label,
            })
        })
        .collect();
    let edges: Vec<serde_json::Value> = graph
        .edges()
        .map(|(from, to)| serde_json::json!([from.to_string(), to.to_string()]))
        .collect();
    Ok(serde_json::json!({
        "system": contract_value(model.system()),
        "components": model.components().iter().map(contract_value).collect::<Vec<_>>(),
        "stages": model.prefixes().iter().map(|c| c.name()).collect::<Vec<_>>(),
        "terms_total": model.terms_total(),
        "graph": { "vertices": vertices, "edges": edges },
        "rendered": render_contract(model.system()),
    }))
}

fn status_impl(spec: &str, log: &str) -> Result<serde_json::Value, Error> {
    let model = parse_spec(spec)?;
    let log = parse_log_any(log, &model)?;
    let statuses = model.component_statuses(&log)?;
    let entries: Vec<serde_json::Value> = statuses
        .iter()
        .map(|(name, status, witness)| {
            serde_json::json!({
                "component": name,
                "status": status.to_string(),
                "witness": witness.iter().map(ToString::to_string).collect::<Vec<_>>(),
            })
        })
        .collect();
    Ok(serde_json::json!({
        "statuses": entries,
        "rendered": render_statuses(&model, &statuses, false),
    }))
}

fn diagnose_impl(spec: &str, log: &str, guarantee: &str) -> Result<serde_json::Value, Error> {
    let model = parse_spec(spec)?;
    let log = parse_log_any(log, &model)?;
    let targets = requested_guarantees(&model, &log, guarantee)?;
    let mut reports = Vec::new();
    let mut faulty = BTreeSet::new();
    // Union of probes, not of term ids, matching each report's own count.
    let mut checked: BTreeSet<Vec<TermId>> = BTreeSet::new();
    let mut rendered = String::new();
    for id in &targets {
        let report = diagnose(&model, &log, id)?;
        faulty.extend(report.faulty_components.iter().cloned());
        checked.extend(report.evaluations.iter().map(|e| e.ids.clone()));
        rendered.push_str(&render_report(&report, false));
        reports.push(report);
    }
    if targets.is_empty() {
        rendered.push_str("no violated system guarantee\n");
    }
    Ok(serde_json::json!({
        "faulty_components": faulty.iter().collect::<Vec<_>>(),
        "terms_checked": checked.len(),
        "terms_total": model.terms_total(),
        "reports": reports.iter().map(report_json).collect::<Vec<_>>(),
        "rendered": rendered,
    }))
}
