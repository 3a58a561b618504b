//! Randomized system generation and fault injection.
//!
//! Generated systems are processing chains `M1 → … → Mn`: every component
//! reads one fresh system input and (after the first) the previous
//! component's output, and pins its own output with a single guarantee. The
//! sign discipline — output with coefficient `+1`, consumed variables with
//! `-1`, assumption bounds with `+1` — keeps every elimination well defined,
//! so composition never fails and every component guarantee stays reachable
//! from the system guarantees.
//!
//! Injection derives the log from the contracts themselves: honest
//! components satisfy their guarantee exactly, faulty ones step just outside
//! it (one unit over the bound, or the negated biconditional). A candidate
//! log is accepted only if the faults stay independent and detectable; the
//! sampler retries otherwise and reports `NoWitness` when the budget runs
//! out.

use crate::contract::{IOContract, Status};
use crate::diagnostics::{build_system, CompositionOrder, SystemModel};
use crate::error::{Error, Result};
use crate::term::{LinearTerm, PropTerm, Term, TermId, Theory, Valuation, Value, Var};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

const MIN_COMPONENTS: usize = 3;
const MAX_COMPONENTS: usize = 8;
const MAX_TRIES: usize = 64;

/// Generates a composable `n`-component chain over the given theory.
pub fn gen_system(theory: Theory, n: usize, seed: u64) -> Result<SystemModel> {
    if !(MIN_COMPONENTS..=MAX_COMPONENTS).contains(&n) {
        return Err(Error::Spec(format!(
            "component count must be in {MIN_COMPONENTS}..={MAX_COMPONENTS}, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let components = match theory {
        Theory::Linear => gen_linear_chain(n, &mut rng)?,
        Theory::Prop => gen_prop_chain(n, &mut rng)?,
    };
    build_system(CompositionOrder::new(components))
}

fn gen_linear_chain(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<IOContract>> {
    let mut components = Vec::with_capacity(n);
    // Running maximum of the previous output assuming every component may
    // overshoot by one; used to size generous connection bounds that can
    // never be the binding constraint.
    let mut reach: i64 = 0;
    for i in 1..=n {
        let u: i64 = rng.gen_range(2..=9);
        let c: i64 = rng.gen_range(0..=5);
        let mut assumptions = vec![format!("x{i} >= 0"), format!("x{i} <= {u}")];
        let mut inputs = vec![format!("x{i}")];
        let guarantee = if i == 1 {
            format!("y1 - x1 <= {c}")
        } else {
            inputs.push(format!("y{}", i - 1));
            if rng.gen_bool(0.5) {
                assumptions.push(format!("y{} <= {}", i - 1, reach + n as i64 + 1));
            }
            format!("y{i} - x{i} - y{} <= {c}", i - 1)
        };
        reach += u + c;
        components.push(IOContract::from_texts(
            format!("M{i}"),
            Theory::Linear,
            inputs,
            [format!("y{i}")],
            &assumptions,
            &[guarantee],
        )?);
    }
    Ok(components)
}

fn gen_prop_chain(n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<IOContract>> {
    let mut components = Vec::with_capacity(n);
    for i in 1..=n {
        let literal = if rng.gen_bool(0.5) {
            format!("p{i}")
        } else {
            format!("!p{i}")
        };
        let mut inputs = vec![format!("p{i}")];
        let rhs = if i == 1 {
            if rng.gen_bool(0.5) { "p1".to_string() } else { "!p1".to_string() }
        } else {
            inputs.push(format!("u{}", i - 1));
            let prev = format!("u{}", i - 1);
            match rng.gen_range(0..4) {
                0 => prev,
                1 => format!("!{prev}"),
                2 => format!("{prev} & p{i}"),
                _ => format!("{prev} | p{i}"),
            }
        };
        components.push(IOContract::from_texts(
            format!("M{i}"),
            Theory::Prop,
            inputs,
            [format!("u{i}")],
            &[literal],
            &[format!("u{i} <=> {rhs}")],
        )?);
    }
    Ok(components)
}

/// A fault-injected observation log.
#[derive(Debug, Clone)]
pub struct Injection {
    pub log: Valuation,
    pub targets: BTreeSet<String>,
    /// Sampling attempts consumed (1 when the first candidate was accepted).
    pub tries: usize,
}

/// The reference verdict diagnosis is measured against: exactly the
/// components whose own contract FAILs under the log.
pub fn oracle_diagnose(model: &SystemModel, log: &Valuation) -> Result<BTreeSet<String>> {
    Ok(model
        .component_statuses(log)?
        .into_iter()
        .filter(|(_, status, _)| *status == Status::Fail)
        .map(|(name, _, _)| name)
        .collect())
}

/// Integer sampling range for one system input, read off the component's
/// own single-variable assumption bounds.
fn linear_input_range(component: &IOContract, v: &Var) -> Result<(i64, i64)> {
    let mut lower: Option<BigRational> = None;
    let mut upper: Option<BigRational> = None;
    for t in component.assumptions() {
        let Term::Linear(lt) = t else { continue };
        if lt.vars() != BTreeSet::from([v.clone()]) {
            continue;
        }
        let c = lt.coeff(v);
        let bound = lt.bound() / &c;
        if c.is_positive() {
            upper = Some(upper.map_or(bound.clone(), |u: BigRational| u.min(bound)));
        } else {
            lower = Some(lower.map_or(bound.clone(), |l: BigRational| l.max(bound)));
        }
    }
    let floor = |r: &BigRational| r.floor().to_integer().to_i64();
    let ceil = |r: &BigRational| r.ceil().to_integer().to_i64();
    let lo = lower.as_ref().map_or(Some(0), ceil).ok_or_else(|| {
        Error::Spec(format!("assumption bound on `{v}` is out of sampling range"))
    })?;
    let hi = upper.as_ref().map_or(Some(lo + 5), floor).ok_or_else(|| {
        Error::Spec(format!("assumption bound on `{v}` is out of sampling range"))
    })?;
    if lo > hi {
        return Err(Error::Spec(format!(
            "assumptions on `{v}` are unsatisfiable"
        )));
    }
    Ok((lo, hi))
}

/// Forced polarity of a boolean input, if some assumption is a literal on it.
fn prop_input_literal(component: &IOContract, v: &Var) -> Option<bool> {
    for t in component.assumptions() {
        let Term::Prop(pt) = t else { continue };
        match pt {
            PropTerm::Var(name) if name == v => return Some(true),
            PropTerm::Not(inner) => {
                if let PropTerm::Var(name) = &**inner {
                    if name == v {
                        return Some(false);
                    }
                }
            }
            _ => {}
        }
    }
    None
}

/// Output value that satisfies `Σ coeffs ≤ bound` with equality, or
/// overshoots it by exactly one when `faulty`.
fn solve_linear_output(t: &LinearTerm, out: &Var, log: &Valuation, faulty: bool) -> Result<Value> {
    let c = t.coeff(out);
    if !c.is_positive() {
        return Err(Error::Spec(format!(
            "guarantee `{}` does not produce `{out}` with a positive coefficient",
            t.render()
        )));
    }
    let mut rest = BigRational::zero();
    for v in t.vars() {
        if &v == out {
            continue;
        }
        let value = log
            .get(&v)
            .ok_or_else(|| Error::MissingVariable(v.clone()))?;
        rest += t.coeff(&v) * value.as_rational(&v)?;
    }
    let mut val = (t.bound() - rest) / &c;
    if faulty {
        val += BigRational::one() / c;
    }
    Ok(Value::Rational(val))
}

/// Output value matching the defining side of `out <=> expr` (negated when
/// `faulty`).
fn solve_prop_output(t: &PropTerm, out: &Var, log: &Valuation, faulty: bool) -> Result<Value> {
    let PropTerm::Iff(a, b) = t else {
        return Err(Error::Spec(format!(
            "guarantee `{}` does not define `{out}` as a biconditional",
            t.render()
        )));
    };
    let expr = match (&**a, &**b) {
        (PropTerm::Var(v), e) if v == out => e,
        (e, PropTerm::Var(v)) if v == out => e,
        _ => {
            return Err(Error::Spec(format!(
                "guarantee `{}` does not define `{out}`",
                t.render()
            )))
        }
    };
    Ok(Value::Bool(expr.evaluate(log)? ^ faulty))
}

fn defining_guarantee<'c>(component: &'c IOContract, out: &Var) -> Result<&'c Term> {
    component
        .guarantees()
        .iter()
        .find(|t| t.vars().contains(out))
        .ok_or_else(|| {
            Error::Spec(format!(
                "component `{}` has no guarantee mentioning its output `{out}`",
                component.name()
            ))
        })
}

/// Builds a log in which exactly the `targets` violate their own guarantee.
///
/// Checks enforced on every candidate before acceptance: the system
/// assumptions and all target assumptions hold (a fault must not be excused
/// by its own environment), every non-target is ACTIVE or IDLE, and each
/// target violates at least one system guarantee it is reachable from.
pub fn inject_fault(
    model: &SystemModel,
    targets: &BTreeSet<String>,
    seed: u64,
) -> Result<Injection> {
    if targets.is_empty() {
        return Err(Error::Spec("fault injection needs at least one target".into()));
    }
    for t in targets {
        if model.component(t).is_none() {
            return Err(Error::UnknownComponent(t.clone()));
        }
    }
    let system = model.system();

    // Static reachability: some system guarantee must trace back to each
    // target, otherwise no log can ever expose it.
    let mut maps: Vec<(TermId, BTreeSet<TermId>)> = Vec::new();
    for (id, _) in system.guarantee_ids() {
        maps.push((id.clone(), model.diagnostics_map(&id)?));
    }
    for target in targets {
        let reachable = maps
            .iter()
            .any(|(_, cm)| cm.iter().any(|leaf| &leaf.owner == target));
        if !reachable {
            return Err(Error::Spec(format!(
                "target `{target}` cannot affect any system guarantee"
            )));
        }
    }

    let theory = model.theory();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Input sampling is driven by whichever component consumes the input and
    // constrains it.
    let owner_of_input = |v: &Var| -> Option<&IOContract> {
        model.components().iter().find(|c| c.inputs().contains(v))
    };

    for attempt in 1..=MAX_TRIES {
        let mut log = Valuation::new();
        for v in system.inputs() {
            let value = match theory {
                Theory::Linear => {
                    let (lo, hi) = match owner_of_input(v) {
                        Some(c) => linear_input_range(c, v)?,
                        None => (0, 5),
                    };
                    Value::Rational(BigRational::from_integer(rng.gen_range(lo..=hi).into()))
                }
                Theory::Prop => Value::Bool(
                    owner_of_input(v)
                        .and_then(|c| prop_input_literal(c, v))
                        .unwrap_or_else(|| rng.gen_bool(0.5)),
                ),
            };
            log.insert(v.clone(), value);
        }
        for component in model.components() {
            let faulty = targets.contains(component.name());
            for out in component.outputs() {
                let guarantee = defining_guarantee(component, out)?;
                let value = match guarantee {
                    Term::Linear(t) => solve_linear_output(t, out, &log, faulty)?,
                    Term::Prop(t) => solve_prop_output(t, out, &log, faulty)?,
                };
                log.insert(out.clone(), value);
            }
        }

        if !accept(model, targets, &maps, &log)? {
            continue;
        }
        return Ok(Injection {
            log,
            targets: targets.clone(),
            tries: attempt,
        });
    }
    Err(Error::NoWitness { tries: MAX_TRIES })
}

fn accept(
    model: &SystemModel,
    targets: &BTreeSet<String>,
    maps: &[(TermId, BTreeSet<TermId>)],
    log: &Valuation,
) -> Result<bool> {
    let system = model.system();
    for (_, t) in system.assumption_ids() {
        if !t.evaluate(log)? {
            return Ok(false);
        }
    }
    for (name, status, failing) in model.component_statuses(log)? {
        if targets.contains(&name) {
            // The fault must be the component's own: assumptions intact,
            // some guarantee broken.
            if status != Status::Fail {
                return Ok(false);
            }
            debug_assert!(!failing.is_empty());
        } else if status == Status::Fail {
            return Ok(false);
        }
    }
    // Dynamic detectability: each target must break a system guarantee it is
    // reachable from.
    for target in targets {
        let mut detected = false;
        for (gid, cm) in maps {
            if !cm.iter().any(|leaf| &leaf.owner == target) {
                continue;
            }
            let term = system
                .term(gid)
                .ok_or_else(|| Error::UnknownVertex(gid.clone()))?;
            if !term.evaluate(log)? {
                detected = true;
                break;
            }
        }
        if !detected {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::diagnose;

    /// Union of diagnoses over every violated system guarantee.
    fn full_diagnosis(model: &SystemModel, log: &Valuation) -> Result<BTreeSet<String>> {
        let system = model.system();
        let mut faulty = BTreeSet::new();
        for (id, t) in system.guarantee_ids() {
            if t.evaluate(log)? {
                continue;
            }
            faulty.extend(diagnose(model, log, &id)?.faulty_components);
        }
        Ok(faulty)
    }

    #[test]
    fn generated_systems_compose_for_all_sizes() {
        for theory in [Theory::Linear, Theory::Prop] {
            for n in MIN_COMPONENTS..=MAX_COMPONENTS {
                let model = gen_system(theory, n, 7 + n as u64).unwrap();
                assert_eq!(model.components().len(), n);
                assert!(!model.system().guarantees().is_empty());
                assert!(model.terms_total() >= 2 * n);
            }
        }
        assert!(gen_system(Theory::Linear, 2, 0).is_err());
        assert!(gen_system(Theory::Linear, 9, 0).is_err());
    }

    #[test]
    fn injection_matches_oracle_on_single_faults() {
        for theory in [Theory::Linear, Theory::Prop] {
            let mut produced = 0;
            for seed in 0..20u64 {
                let n = 3 + (seed as usize % 4);
                let model = gen_system(theory, n, seed).unwrap();
                let target = format!("M{}", 1 + seed as usize % n);
                let targets = BTreeSet::from([target.clone()]);
                let injection = match inject_fault(&model, &targets, seed ^ 0xa5) {
                    Ok(i) => i,
                    Err(Error::NoWitness { .. }) => continue,
                    Err(e) => panic!("{e}"),
                };
                assert_eq!(oracle_diagnose(&model, &injection.log).unwrap(), targets);
                produced += 1;
            }
            assert!(produced >= 15, "too many NoWitness outcomes: {produced}/20");
        }
    }

    #[test]
    fn diagnosis_agrees_with_oracle_on_injected_faults() {
        for theory in [Theory::Linear, Theory::Prop] {
            for seed in 0..25u64 {
                let n = 3 + (seed as usize % 5);
                let model = gen_system(theory, n, seed * 31).unwrap();
                let mut targets = BTreeSet::from([format!("M{}", 1 + seed as usize % n)]);
                if seed % 3 == 0 {
                    targets.insert(format!("M{}", 1 + (seed as usize + 2) % n));
                }
                let injection = match inject_fault(&model, &targets, seed) {
                    Ok(i) => i,
                    Err(Error::NoWitness { .. }) => continue,
                    Err(e) => panic!("{e}"),
                };
                let oracle = oracle_diagnose(&model, &injection.log).unwrap();
                assert_eq!(oracle, targets);
                assert_eq!(
                    full_diagnosis(&model, &injection.log).unwrap(),
                    oracle,
                    "theory {theory:?} seed {seed} targets {targets:?}"
                );
            }
        }
    }

    #[test]
    fn injection_validates_targets() {
        let model = gen_system(Theory::Linear, 3, 1).unwrap();
        assert!(matches!(
            inject_fault(&model, &BTreeSet::new(), 0),
            Err(Error::Spec(_))
        ));
        assert!(matches!(
            inject_fault(&model, &BTreeSet::from(["M9".to_string()]), 0),
            Err(Error::UnknownComponent(_))
        ));
    }
}
