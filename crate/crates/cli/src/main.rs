//! Command-line front end: compose a spec, check statuses, diagnose a log,
//! or generate harness systems. Exit codes: 0 success, 1 when a diagnosis
//! finds faults (or `gen --inject` finds no witness), 2 on input errors.

use agdiag::harness::{gen_system, inject_fault};
use agdiag::io::{
    export_dot, load_log, load_spec, render_contract, render_report, render_statuses,
    report_json, requested_guarantees,
};
use agdiag::term::{TermId, Theory, Value};
use agdiag::{diagnose, Error, SystemModel};
use clap::{Parser, Subcommand, ValueEnum};
use std::collections::BTreeSet;
use std::io::IsTerminal;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "agdiag", version, about = "Assume-guarantee contract composition and compositional fault diagnosis")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compose a system spec and print the resulting system contract.
    Compose {
        /// System spec (JSON).
        spec: PathBuf,
        /// Write the rendered contract to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the term provenance graph as DOT to a file.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Explain violated system guarantees from an observation log.
    Diagnose {
        /// System spec (JSON).
        spec: PathBuf,
        /// Observation log (JSON object or timestep CSV).
        log: PathBuf,
        /// Which system guarantee to diagnose: `g<k>`, a full id such as
        /// `comp_3.g0`, or `all` for every violated one.
        #[arg(long, default_value = "all")]
        guarantee: String,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Print each component's FAIL/ACTIVE/IDLE status under a log.
    Status {
        /// System spec (JSON).
        spec: PathBuf,
        /// Observation log (JSON object or timestep CSV).
        log: PathBuf,
        /// Restrict the report to one component.
        #[arg(long)]
        component: Option<String>,
    },
    /// Generate a random composable chain, optionally with injected faults.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Component count (3..=8).
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, value_enum, default_value_t = TheoryArg::Linear)]
        theory: TheoryArg,
        /// Components whose guarantees the emitted log must violate.
        #[arg(long, value_delimiter = ',')]
        inject: Vec<String>,
        /// Write the generated spec to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the injected log to a file instead of stdout.
        #[arg(long)]
        log_out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoryArg {
    Linear,
    Prop,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut stdout = String::new();
    let code = match run(args.command, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    };
    // One buffered write; a downstream pipe closing early (`... | head`)
    // must not turn into a panic.
    use std::io::Write;
    if let Err(e) = std::io::stdout().write_all(stdout.as_bytes()) {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    code
}

fn color_enabled() -> bool {
    std::env::var("CONTRACT_DIAG_COLOR").map_or(true, |v| v != "0")
        && std::io::stdout().is_terminal()
}

fn emit(path: Option<&PathBuf>, text: &str, stdout: &mut String) -> Result<(), Error> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.push_str(text),
    }
    Ok(())
}

/// Missing-file errors should name the file; parse errors already describe
/// the content, and the command line makes the file obvious.
fn named(path: &std::path::Path, e: Error) -> Error {
    match e {
        Error::Io(io) => {
            Error::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display())))
        }
        other => other,
    }
}

fn run(command: Command, stdout: &mut String) -> Result<ExitCode, Error> {
    match command {
        Command::Compose { spec, out, dot } => {
            let model = load_spec(&spec).map_err(|e| named(&spec, e))?;
            let mut text = render_contract(model.system());
            text.push_str(&format!("component terms: {}\n", model.terms_total()));
            emit(out.as_ref(), &text, stdout)?;
            if let Some(path) = dot {
                std::fs::write(path, export_dot(model.graph()))?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagnose { spec, log, guarantee, format } => {
            let model = load_spec(&spec).map_err(|e| named(&spec, e))?;
            let log = load_log(&log, &model).map_err(|e| named(&log, e))?;
            cmd_diagnose(&model, &log, &guarantee, format, stdout)
        }
        Command::Status { spec, log, component } => {
            let model = load_spec(&spec).map_err(|e| named(&spec, e))?;
            let log = load_log(&log, &model).map_err(|e| named(&log, e))?;
            let mut statuses = model.component_statuses(&log)?;
            if let Some(name) = component {
                if model.component(&name).is_none() {
                    return Err(Error::UnknownComponent(name));
                }
                statuses.retain(|(n, _, _)| n == &name);
            }
            stdout.push_str(&render_statuses(&model, &statuses, color_enabled()));
            Ok(ExitCode::SUCCESS)
        }
        Command::Gen { seed, n, theory, inject, out, log_out } => {
            let theory = match theory {
                TheoryArg::Linear => Theory::Linear,
                TheoryArg::Prop => Theory::Prop,
            };
            cmd_gen(seed, n, theory, &inject, out, log_out, stdout)
        }
    }
}

fn cmd_diagnose(
    model: &SystemModel,
    log: &agdiag::term::Valuation,
    guarantee: &str,
    format: Format,
    stdout: &mut String,
) -> Result<ExitCode, Error> {
    let targets = requested_guarantees(model, log, guarantee)?;
    if targets.is_empty() {
        stdout.push_str("no violated system guarantee\n");
        return Ok(ExitCode::SUCCESS);
    }
    let mut reports = Vec::new();
    let mut faulty = BTreeSet::new();
    // Union of probes, not of term ids: an assumption sweep is one check,
    // matching each report's own terms_checked count.
    let mut checked: BTreeSet<Vec<TermId>> = BTreeSet::new();
    for id in &targets {
        let report = diagnose(model, log, id)?;
        faulty.extend(report.faulty_components.iter().cloned());
        checked.extend(report.evaluations.iter().map(|e| e.ids.clone()));
        reports.push(report);
    }
    match format {
        Format::Json => {
            let value = serde_json::json!({
                "faulty_components": faulty.iter().collect::<Vec<_>>(),
                "terms_checked": checked.len(),
                "terms_total": model.terms_total(),
                "reports": reports.iter().map(report_json).collect::<Vec<_>>(),
            });
            stdout.push_str(&serde_json::to_string_pretty(&value)?);
            stdout.push('\n');
        }
        Format::Text => {
            let color = color_enabled();
            for report in &reports {
                stdout.push_str(&render_report(report, color));
            }
            if reports.len() > 1 {
                let names: Vec<&str> = faulty.iter().map(String::as_str).collect();
                stdout.push_str(&format!(
                    "== union over {} violated guarantees ==\nfaulty components: {}\ndistinct terms checked: {} of {}\n",
                    reports.len(),
                    names.join(", "),
                    checked.len(),
                    model.terms_total()
                ));
            }
        }
    }
    Ok(if faulty.is_empty() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_gen(
    seed: u64,
    n: usize,
    theory: Theory,
    inject: &[String],
    out: Option<PathBuf>,
    log_out: Option<PathBuf>,
    stdout: &mut String,
) -> Result<ExitCode, Error> {
    let model = gen_system(theory, n, seed)?;
    let components: Vec<serde_json::Value> = model
        .components()
        .iter()
        .map(|c| {
            serde_json::json!({
                "name": c.name(),
                "inputs": c.inputs().iter().map(|v| v.as_str()).collect::<Vec<_>>(),
                "outputs": c.outputs().iter().map(|v| v.as_str()).collect::<Vec<_>>(),
                "assumptions": c.assumptions().iter().map(|t| t.render()).collect::<Vec<_>>(),
                "guarantees": c.guarantees().iter().map(|t| t.render()).collect::<Vec<_>>(),
            })
        })
        .collect();
    let spec = serde_json::json!({ "theory": theory.to_string(), "components": components });
    emit(out.as_ref(), &format!("{}\n", serde_json::to_string_pretty(&spec)?), stdout)?;

    if inject.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    let targets: BTreeSet<String> = inject.iter().cloned().collect();
    let injection = match inject_fault(&model, &targets, seed) {
        Ok(injection) => injection,
        Err(Error::NoWitness { tries }) => {
            eprintln!("no witness for {targets:?} after {tries} attempts; try another seed");
            return Ok(ExitCode::from(1));
        }
        Err(e) => return Err(e),
    };
    let entries: serde_json::Map<String, serde_json::Value> = injection
        .log
        .iter()
        .map(|(var, value)| {
            let v = match value {
                Value::Bool(b) => serde_json::json!(b),
                Value::Rational(r) => serde_json::json!(r.to_string()),
            };
            (var.as_str().to_string(), v)
        })
        .collect();
    emit(
        log_out.as_ref(),
        &format!("{}\n", serde_json::to_string_pretty(&serde_json::Value::Object(entries))?),
        stdout,
    )?;
    Ok(ExitCode::SUCCESS)
}
