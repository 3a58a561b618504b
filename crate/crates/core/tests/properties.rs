//! Randomized properties of the term layer and the contract trichotomy.

use agdiag::io::parse_rational;
use agdiag::term::{
    eliminate, implies, parse_terms, Direction, Section, Term, TermId, Theory, Valuation, Value,
    Var,
};
use agdiag::{IOContract, Status};
use proptest::prelude::*;
use std::collections::BTreeSet;

const PROP_VARS: [&str; 4] = ["a", "b", "c", "d"];

fn prop_text(vars: &'static [&'static str]) -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        proptest::sample::select(vars).prop_map(str::to_string),
        proptest::sample::select(vars).prop_map(|v| format!("!{v}")),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| format!("({l}) & ({r})")),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| format!("({l}) | ({r})")),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| format!("({l}) => ({r})")),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| format!("({l}) <=> ({r})")),
            inner.prop_map(|t| format!("!({t})")),
        ]
    })
}

fn linear_text() -> impl Strategy<Value = String> {
    (
        proptest::collection::vec(
            (1..=3i64, proptest::sample::select(&PROP_VARS[..]), proptest::bool::ANY),
            1..=3,
        ),
        proptest::sample::select(&["<=", ">=", "="][..]),
        -5..=5i64,
    )
        .prop_map(|(products, rel, rhs)| {
            let mut lhs = String::new();
            for (i, (coeff, var, minus)) in products.iter().enumerate() {
                if i > 0 {
                    lhs.push_str(if *minus { " - " } else { " + " });
                }
                lhs.push_str(&format!("{coeff}*{var}"));
            }
            format!("{lhs} {rel} {rhs}")
        })
}

fn parse_one(theory: Theory, text: &str) -> Term {
    parse_terms(theory, text).expect("generated term parses").swap_remove(0)
}

/// All Boolean valuations of `vars`, optionally with extra fixed entries.
fn bool_valuations(vars: &[Var]) -> Vec<Valuation> {
    (0..1u32 << vars.len())
        .map(|bits| {
            vars.iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), Value::Bool(bits & (1 << i) != 0)))
                .collect()
        })
        .collect()
}

fn ctx_id(i: usize) -> TermId {
    TermId::new("ctx", Section::Guarantee, i)
}

/// Shared elimination check: no eliminated variable survives, the result is
/// sound in its direction, and every provenance entry is necessary.
fn check_elimination(
    t: &Term,
    context: &[(TermId, Term)],
    elim: &BTreeSet<Var>,
    direction: Direction,
) -> Result<(), TestCaseError> {
    let Ok(res) = eliminate(t, elim, context, direction) else {
        // Refinement is allowed to give up; that path is exercised by the
        // quantification property below.
        return Ok(());
    };
    prop_assert!(
        res.term.vars().is_disjoint(elim),
        "residual `{}` mentions eliminated variables",
        res.term.render()
    );
    let holds = |skip: Option<&TermId>| -> Result<bool, TestCaseError> {
        let mut ctx: Vec<Term> = res
            .used
            .iter()
            .filter(|id| Some(*id) != skip)
            .map(|id| {
                context
                    .iter()
                    .find(|(cid, _)| cid == id)
                    .map(|(_, t)| t.clone())
                    .expect("used id comes from the context")
            })
            .collect();
        let goal = match direction {
            Direction::Refinement => {
                ctx.push(res.term.clone());
                t
            }
            Direction::Relaxation => {
                ctx.push(t.clone());
                &res.term
            }
        };
        Ok(implies(&ctx, goal).expect("implication within capacity"))
    };
    prop_assert!(
        holds(None)?,
        "`{}` -> `{}` is unsound under {:?}",
        t.render(),
        res.term.render(),
        direction
    );
    for id in &res.used {
        prop_assert!(!holds(Some(id))?, "provenance entry {id} is redundant");
    }
    Ok(())
}

proptest! {
    /// Rendering is a stable normal form: parse ∘ render is the identity on
    /// renders, and the reparsed term means the same thing.
    #[test]
    fn prop_render_round_trips(text in prop_text(&PROP_VARS)) {
        let t = parse_one(Theory::Prop, &text);
        let back = parse_one(Theory::Prop, &t.render());
        prop_assert_eq!(back.render(), t.render());
        prop_assert!(implies(&[t.clone()], &back).unwrap());
        prop_assert!(implies(&[back], &t).unwrap());
    }

    #[test]
    fn linear_render_round_trips(text in linear_text()) {
        let t = parse_one(Theory::Linear, &text);
        let back = parse_one(Theory::Linear, &t.render());
        prop_assert_eq!(back.render(), t.render());
        prop_assert!(implies(&[t.clone()], &back).unwrap());
        prop_assert!(implies(&[back], &t).unwrap());
    }

    #[test]
    fn prop_elimination_is_sound_with_minimal_provenance(
        text in prop_text(&PROP_VARS),
        ctx_texts in proptest::collection::vec(prop_text(&PROP_VARS), 0..3),
        pick in 0..4usize,
        refine in proptest::bool::ANY,
    ) {
        let t = parse_one(Theory::Prop, &text);
        let vars: Vec<Var> = t.vars().into_iter().collect();
        let elim = BTreeSet::from([vars[pick % vars.len()].clone()]);
        let context: Vec<(TermId, Term)> = ctx_texts
            .iter()
            .enumerate()
            .map(|(i, s)| (ctx_id(i), parse_one(Theory::Prop, s)))
            .collect();
        let direction = if refine { Direction::Refinement } else { Direction::Relaxation };
        check_elimination(&t, &context, &elim, direction)?;
    }

    #[test]
    fn linear_elimination_is_sound_with_minimal_provenance(
        text in linear_text(),
        ctx_texts in proptest::collection::vec(linear_text(), 0..3),
        pick in 0..4usize,
        refine in proptest::bool::ANY,
    ) {
        let t = parse_one(Theory::Linear, &text);
        let vars: Vec<Var> = t.vars().into_iter().collect();
        // Coefficients can cancel ("3*a - 3*a <= 0"), leaving nothing to pick.
        prop_assume!(!vars.is_empty());
        let elim = BTreeSet::from([vars[pick % vars.len()].clone()]);
        let context: Vec<(TermId, Term)> = ctx_texts
            .iter()
            .enumerate()
            .map(|(i, s)| (ctx_id(i), parse_one(Theory::Linear, s)))
            .collect();
        let direction = if refine { Direction::Refinement } else { Direction::Relaxation };
        check_elimination(&t, &context, &elim, direction)?;
    }

    /// With no context, elimination is exactly Boolean quantification:
    /// relaxation means ∃, refinement means ∀, and a refinement refusal can
    /// only happen when ∀ collapses to `false`.
    #[test]
    fn prop_plain_elimination_is_quantification(
        text in prop_text(&PROP_VARS),
        pick in 0..4usize,
        refine in proptest::bool::ANY,
    ) {
        let t = parse_one(Theory::Prop, &text);
        let vars: Vec<Var> = t.vars().into_iter().collect();
        let x = vars[pick % vars.len()].clone();
        let rest: Vec<Var> = vars.into_iter().filter(|v| v != &x).collect();
        let elim = BTreeSet::from([x.clone()]);
        let direction = if refine { Direction::Refinement } else { Direction::Relaxation };
        let result = eliminate(&t, &elim, &[], direction);
        for valuation in bool_valuations(&rest) {
            let branch = |b: bool| -> bool {
                let mut v = valuation.clone();
                v.insert(x.clone(), Value::Bool(b));
                t.evaluate(&v).unwrap()
            };
            let (on_true, on_false) = (branch(true), branch(false));
            let expected = if refine { on_true && on_false } else { on_true || on_false };
            match &result {
                Ok(res) => {
                    prop_assert_eq!(
                        res.term.evaluate(&valuation).unwrap(),
                        expected,
                        "quantifying `{}` over {} disagrees at {:?}",
                        t.render(),
                        &x,
                        valuation
                    );
                }
                Err(_) => {
                    prop_assert!(refine, "relaxation never fails");
                    prop_assert!(
                        !expected,
                        "refinement refused `{}` although ∀{} keeps a model",
                        t.render(),
                        &x
                    );
                }
            }
        }
    }

    /// `implies` never claims an implication a concrete valuation refutes.
    #[test]
    fn prop_implication_agrees_with_evaluation(
        goal_text in prop_text(&PROP_VARS),
        ctx_texts in proptest::collection::vec(prop_text(&PROP_VARS), 0..3),
        bits in 0..16u32,
    ) {
        let goal = parse_one(Theory::Prop, &goal_text);
        let ctx: Vec<Term> = ctx_texts.iter().map(|s| parse_one(Theory::Prop, s)).collect();
        let valuation: Valuation = PROP_VARS
            .iter()
            .enumerate()
            .map(|(i, v)| (Var::from(*v), Value::Bool(bits & (1 << i) != 0)))
            .collect();
        if implies(&ctx, &goal).unwrap()
            && ctx.iter().all(|t| t.evaluate(&valuation).unwrap())
        {
            prop_assert!(goal.evaluate(&valuation).unwrap());
        }
    }

    #[test]
    fn linear_implication_agrees_with_evaluation(
        goal_text in linear_text(),
        ctx_texts in proptest::collection::vec(linear_text(), 0..3),
        points in proptest::collection::vec(-6..=6i64, 4),
    ) {
        let goal = parse_one(Theory::Linear, &goal_text);
        let ctx: Vec<Term> = ctx_texts.iter().map(|s| parse_one(Theory::Linear, s)).collect();
        let valuation: Valuation = PROP_VARS
            .iter()
            .zip(&points)
            .map(|(v, n)| (Var::from(*v), Value::Rational(parse_rational(&n.to_string()).unwrap())))
            .collect();
        if implies(&ctx, &goal).unwrap()
            && ctx.iter().all(|t| t.evaluate(&valuation).unwrap())
        {
            prop_assert!(goal.evaluate(&valuation).unwrap());
        }
    }

    /// IDLE/ACTIVE/FAIL is exactly the trichotomy over the component's own
    /// terms, with lazy guarantees: assumptions decide first.
    #[test]
    fn status_matches_term_evaluation(
        a_text in prop_text(&["x"]),
        g_text in prop_text(&["x", "y"]),
        xv in proptest::bool::ANY,
        yv in proptest::bool::ANY,
    ) {
        let contract = IOContract::from_texts(
            "T",
            Theory::Prop,
            ["x"],
            ["y"],
            &[a_text.as_str()],
            &[g_text.as_str()],
        )
        .expect("scoped contract");
        let valuation: Valuation =
            [(Var::from("x"), Value::Bool(xv)), (Var::from("y"), Value::Bool(yv))].into();
        let a_holds = contract.assumptions()[0].evaluate(&valuation).unwrap();
        let g_holds = contract.guarantees()[0].evaluate(&valuation).unwrap();
        let expected = if !a_holds {
            Status::Idle
        } else if g_holds {
            Status::Active
        } else {
            Status::Fail
        };
        let (status, witness) = contract.evaluate_status(&valuation).unwrap();
        prop_assert_eq!(status, expected);
        match status {
            Status::Idle => prop_assert_eq!(witness, vec![TermId::new("T", Section::Assumption, 0)]),
            Status::Fail => prop_assert_eq!(witness, vec![TermId::new("T", Section::Guarantee, 0)]),
            Status::Active => prop_assert!(witness.is_empty()),
        }
    }
}
