//! Affine inequalities over exact rationals.
//!
//! A `LinearTerm` is `Σ cᵥ·v ≤ b`, kept canonical: the collection of
//! coefficients plus constant is scaled to integer entries with gcd 1. Only
//! positive scaling preserves `≤`, so signs are invariant and equality of
//! canonical forms captures equality up to scaling.
//!
//! `implies_linear` decides `⋀ context ⟹ t` by Fourier-Motzkin refutation of
//! `context ∧ ¬t` (the negation is strict, which FM handles exactly over the
//! rationals). Elimination combines the target with one context term per
//! eliminated variable: refinement subtracts a same-sign multiple so that
//! `(t' ∧ used) ⟹ t`, relaxation adds an opposite-sign multiple so that
//! `(t ∧ used) ⟹ t'`. Both keep the multiplier positive.

use super::{Direction, TermId, Valuation, Var};
use crate::error::{Error, Result};
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearTerm {
    coeffs: BTreeMap<Var, BigRational>,
    bound: BigRational,
}

impl LinearTerm {
    /// Builds `Σ coeffs·v ≤ bound` and canonicalizes.
    pub fn new(coeffs: BTreeMap<Var, BigRational>, bound: BigRational) -> Self {
        let mut t = LinearTerm { coeffs, bound };
        t.canonicalize();
        t
    }

    /// The constant term `true` (`0 ≤ 0`) or `false` (`0 ≤ -1`).
    pub fn constant(value: bool) -> Self {
        LinearTerm {
            coeffs: BTreeMap::new(),
            bound: if value {
                BigRational::zero()
            } else {
                -BigRational::one()
            },
        }
    }

    fn canonicalize(&mut self) {
        self.coeffs.retain(|_, c| !c.is_zero());
        if self.coeffs.is_empty() {
            if !self.bound.is_zero() {
                self.bound = if self.bound.is_positive() {
                    BigRational::one()
                } else {
                    -BigRational::one()
                };
            }
            return;
        }
        let mut lcm = BigInt::one();
        for c in self.coeffs.values().chain(std::iter::once(&self.bound)) {
            lcm = lcm.lcm(c.denom());
        }
        let mut gcd = BigInt::zero();
        for c in self.coeffs.values().chain(std::iter::once(&self.bound)) {
            gcd = gcd.gcd(&(c.numer() * &lcm / c.denom()));
        }
        // gcd is nonzero: at least one coefficient is nonzero.
        let scale = BigRational::new(lcm, gcd);
        for c in self.coeffs.values_mut() {
            *c *= &scale;
        }
        self.bound *= &scale;
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.coeffs.keys().cloned().collect()
    }

    pub fn coeff(&self, v: &Var) -> BigRational {
        self.coeffs.get(v).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn bound(&self) -> &BigRational {
        &self.bound
    }

    /// `Some(b)` iff the term has no variables and is constantly `b`.
    pub fn as_const(&self) -> Option<bool> {
        if self.coeffs.is_empty() {
            Some(!self.bound.is_negative())
        } else {
            None
        }
    }

    pub fn evaluate(&self, valuation: &Valuation) -> Result<bool> {
        let mut sum = BigRational::zero();
        for (v, c) in &self.coeffs {
            let value = valuation
                .get(v)
                .ok_or_else(|| Error::MissingVariable(v.clone()))?;
            sum += c * value.as_rational(v)?;
        }
        Ok(sum <= self.bound)
    }

    /// Applies a variable substitution; identity for unmapped variables.
    /// Errors if two distinct variables collapse onto one name.
    pub fn rename(&self, map: &BTreeMap<Var, Var>) -> Result<LinearTerm> {
        let mut coeffs = BTreeMap::new();
        for (v, c) in &self.coeffs {
            let nv = map.get(v).unwrap_or(v).clone();
            if coeffs.insert(nv.clone(), c.clone()).is_some() {
                return Err(Error::Spec(format!(
                    "renaming maps two variables of `{}` onto `{nv}`",
                    self.render()
                )));
            }
        }
        Ok(LinearTerm::new(coeffs, self.bound.clone()))
    }

    /// `self + lambda * other` (lambda may be negative for subtraction).
    fn combined(&self, other: &LinearTerm, lambda: &BigRational) -> LinearTerm {
        let mut coeffs = self.coeffs.clone();
        for (v, c) in &other.coeffs {
            let entry = coeffs.entry(v.clone()).or_insert_with(BigRational::zero);
            *entry += lambda * c;
        }
        LinearTerm::new(coeffs, &self.bound + lambda * &other.bound)
    }

    pub fn render(&self) -> String {
        match self.as_const() {
            Some(true) => return "true".into(),
            Some(false) => return "false".into(),
            None => {}
        }
        // Render `-i <= 2` as `i >= -2` when every coefficient is negative.
        let flip = self.coeffs.values().all(|c| c.is_negative());
        let (rel, sign) = if flip {
            (">=", -BigRational::one())
        } else {
            ("<=", BigRational::one())
        };
        let mut lhs = String::new();
        for (v, c) in &self.coeffs {
            let c = c * &sign;
            if lhs.is_empty() {
                if c.is_negative() {
                    lhs.push('-');
                }
            } else {
                lhs.push_str(if c.is_negative() { " - " } else { " + " });
            }
            let mag = c.abs();
            if !mag.is_one() {
                lhs.push_str(&rat_str(&mag));
                lhs.push('*');
            }
            lhs.push_str(v.as_str());
        }
        format!("{} {} {}", lhs, rel, rat_str(&(&self.bound * &sign)))
    }
}

pub fn rat_str(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses a single inequality. Equalities are rejected here; use
/// [`parse_linear_multi`] which desugars them into two terms.
pub fn parse_linear(text: &str) -> Result<LinearTerm> {
    let terms = parse_linear_multi(text)?;
    match terms.len() {
        1 => Ok(terms.into_iter().next().unwrap()),
        _ => Err(Error::Parse {
            pos: 0,
            msg: "equality desugars to two terms; use parse_linear_multi".into(),
        }),
    }
}

/// Parses `affine (<=|>=|=) affine`; `=` yields the `≤`/`≥` pair.
pub fn parse_linear_multi(text: &str) -> Result<Vec<LinearTerm>> {
    Parser::new(text)?.term_list()
}

pub fn parse_rational(text: &str) -> Option<BigRational> {
    let text = text.trim();
    let (sign, rest) = match text.strip_prefix('-') {
        Some(r) => (-BigRational::one(), r.trim()),
        None => (BigRational::one(), text),
    };
    let mut lex = Lexer::new(rest);
    match lex.next_token().ok()? {
        (Token::Num(r), _) => match lex.next_token().ok()? {
            (Token::End, _) => Some(sign * r),
            _ => None,
        },
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Num(BigRational),
    Plus,
    Minus,
    Star,
    Le,
    Ge,
    Eq,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src, pos: 0 }
    }

    fn next_token(&mut self) -> Result<(Token, usize)> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        if self.pos >= bytes.len() {
            return Ok((Token::End, start));
        }
        let c = bytes[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Token::Plus
            }
            b'-' => {
                self.pos += 1;
                Token::Minus
            }
            b'*' => {
                self.pos += 1;
                Token::Star
            }
            b'<' | b'>' => {
                if self.pos + 1 >= bytes.len() || bytes[self.pos + 1] != b'=' {
                    return Err(Error::Parse {
                        pos: start,
                        msg: format!("strict `{}` is not supported; use `{}=`", c as char, c as char),
                    });
                }
                self.pos += 2;
                if c == b'<' {
                    Token::Le
                } else {
                    Token::Ge
                }
            }
            b'=' => {
                self.pos += 1;
                if self.pos < bytes.len() && bytes[self.pos] == b'=' {
                    self.pos += 1;
                }
                Token::Eq
            }
            b'0'..=b'9' => {
                let mut end = self.pos;
                while end < bytes.len() && bytes[end].is_ascii_digit() {
                    end += 1;
                }
                let mut num = BigRational::new(
                    self.src[self.pos..end].parse::<BigInt>().unwrap(),
                    BigInt::one(),
                );
                if end < bytes.len() && bytes[end] == b'.' {
                    let frac_start = end + 1;
                    let mut frac_end = frac_start;
                    while frac_end < bytes.len() && bytes[frac_end].is_ascii_digit() {
                        frac_end += 1;
                    }
                    if frac_end == frac_start {
                        return Err(Error::Parse {
                            pos: end,
                            msg: "digits expected after decimal point".into(),
                        });
                    }
                    let digits = &self.src[frac_start..frac_end];
                    let denom = BigInt::from(10u32).pow(digits.len() as u32);
                    num += BigRational::new(digits.parse::<BigInt>().unwrap(), denom);
                    end = frac_end;
                } else if end < bytes.len() && bytes[end] == b'/' {
                    let den_start = end + 1;
                    let mut den_end = den_start;
                    while den_end < bytes.len() && bytes[den_end].is_ascii_digit() {
                        den_end += 1;
                    }
                    if den_end == den_start {
                        return Err(Error::Parse {
                            pos: end,
                            msg: "digits expected after `/`".into(),
                        });
                    }
                    let denom = self.src[den_start..den_end].parse::<BigInt>().unwrap();
                    if denom.is_zero() {
                        return Err(Error::Parse {
                            pos: den_start,
                            msg: "zero denominator".into(),
                        });
                    }
                    num /= BigRational::from_integer(denom);
                    end = den_end;
                }
                self.pos = end;
                Token::Num(num)
            }
            c if (c as char).is_ascii_alphabetic() || c == b'_' => {
                let mut end = self.pos;
                while end < bytes.len() {
                    let ch = bytes[end] as char;
                    if ch.is_ascii_alphanumeric() || ch == '_' || ch == '\'' || ch == '@' {
                        end += 1;
                    } else {
                        break;
                    }
                }
                let ident = self.src[self.pos..end].to_owned();
                self.pos = end;
                Token::Ident(ident)
            }
            other => {
                return Err(Error::Parse {
                    pos: start,
                    msg: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok((tok, start))
    }
}

/// Affine side of an inequality before rearrangement.
#[derive(Default)]
struct Affine {
    coeffs: BTreeMap<Var, BigRational>,
    constant: BigRational,
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    lookahead: (Token, usize),
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self> {
        let mut lexer = Lexer::new(src);
        let lookahead = lexer.next_token()?;
        Ok(Parser { lexer, lookahead })
    }

    fn bump(&mut self) -> Result<(Token, usize)> {
        let next = self.lexer.next_token()?;
        Ok(std::mem::replace(&mut self.lookahead, next))
    }

    fn term_list(mut self) -> Result<Vec<LinearTerm>> {
        if let (Token::Ident(word), pos) = &self.lookahead {
            let keyword = match word.as_str() {
                "true" => Some(true),
                "false" => Some(false),
                _ => None,
            };
            if let Some(value) = keyword {
                let pos = *pos;
                self.bump()?;
                return match self.lookahead.0 {
                    Token::End => Ok(vec![LinearTerm::constant(value)]),
                    _ => Err(Error::Parse {
                        pos,
                        msg: "constant term takes no operands".into(),
                    }),
                };
            }
        }
        let lhs = self.affine()?;
        let (rel, rel_pos) = self.bump()?;
        let rhs = self.affine()?;
        if self.lookahead.0 != Token::End {
            return Err(Error::Parse {
                pos: self.lookahead.1,
                msg: "trailing input after inequality".into(),
            });
        }
        // lhs rel rhs  ⇒  (lhs - rhs) rel 0, stored as Σc·v ≤ b.
        let mut coeffs = lhs.coeffs;
        for (v, c) in rhs.coeffs {
            let entry = coeffs.entry(v).or_insert_with(BigRational::zero);
            *entry -= c;
        }
        let bound = rhs.constant - lhs.constant;
        let le = |coeffs: &BTreeMap<Var, BigRational>, bound: &BigRational| {
            LinearTerm::new(coeffs.clone(), bound.clone())
        };
        let ge = |coeffs: &BTreeMap<Var, BigRational>, bound: &BigRational| {
            LinearTerm::new(
                coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
                -bound,
            )
        };
        match rel {
            Token::Le => Ok(vec![le(&coeffs, &bound)]),
            Token::Ge => Ok(vec![ge(&coeffs, &bound)]),
            Token::Eq => Ok(vec![le(&coeffs, &bound), ge(&coeffs, &bound)]),
            _ => Err(Error::Parse {
                pos: rel_pos,
                msg: "expected `<=`, `>=` or `=`".into(),
            }),
        }
    }

    fn affine(&mut self) -> Result<Affine> {
        let mut acc = Affine::default();
        let mut negate = false;
        match self.lookahead.0 {
            Token::Minus => {
                negate = true;
                self.bump()?;
            }
            Token::Plus => {
                self.bump()?;
            }
            _ => {}
        }
        loop {
            self.item(&mut acc, negate)?;
            match self.lookahead.0 {
                Token::Plus => {
                    negate = false;
                    self.bump()?;
                }
                Token::Minus => {
                    negate = true;
                    self.bump()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn item(&mut self, acc: &mut Affine, negate: bool) -> Result<()> {
        let (tok, pos) = self.bump()?;
        let sign = if negate {
            -BigRational::one()
        } else {
            BigRational::one()
        };
        match tok {
            Token::Num(n) => {
                // Optional `*`; `2*x`, `2 x` and bare `2` are all fine.
                let coeff = sign * n;
                if self.lookahead.0 == Token::Star {
                    self.bump()?;
                    match self.bump()? {
                        (Token::Ident(name), _) => self.push_var(acc, name, coeff),
                        (_, pos) => {
                            return Err(Error::Parse {
                                pos,
                                msg: "expected variable after `*`".into(),
                            })
                        }
                    }
                } else if let Token::Ident(name) = self.lookahead.0.clone() {
                    self.bump()?;
                    self.push_var(acc, name, coeff);
                } else {
                    acc.constant += coeff;
                }
                Ok(())
            }
            Token::Ident(name) => {
                if self.lookahead.0 == Token::Star {
                    return Err(Error::Parse {
                        pos: self.lookahead.1,
                        msg: "nonlinear term: variable multiplied by an expression".into(),
                    });
                }
                self.push_var(acc, name, sign);
                Ok(())
            }
            _ => Err(Error::Parse {
                pos,
                msg: "expected number or variable".into(),
            }),
        }
    }

    fn push_var(&self, acc: &mut Affine, name: String, coeff: BigRational) {
        let entry = acc
            .coeffs
            .entry(Var::new(name))
            .or_insert_with(BigRational::zero);
        *entry += coeff;
    }
}

/// One inequality of a Fourier-Motzkin system; `strict` marks `<`.
#[derive(Debug, Clone)]
struct Ineq {
    coeffs: BTreeMap<Var, BigRational>,
    bound: BigRational,
    strict: bool,
}

impl Ineq {
    fn of(t: &LinearTerm) -> Self {
        Ineq {
            coeffs: t.coeffs.clone(),
            bound: t.bound.clone(),
            strict: false,
        }
    }

    /// Strict negation of `t`: `Σc·v > b` rewritten as `-Σc·v < -b`.
    fn negation_of(t: &LinearTerm) -> Self {
        Ineq {
            coeffs: t.coeffs.iter().map(|(v, c)| (v.clone(), -c)).collect(),
            bound: -&t.bound,
            strict: true,
        }
    }

    fn violated(&self) -> bool {
        debug_assert!(self.coeffs.is_empty());
        if self.strict {
            !self.bound.is_positive()
        } else {
            self.bound.is_negative()
        }
    }
}

fn fm_infeasible(mut system: Vec<Ineq>) -> bool {
    let vars: BTreeSet<Var> = system
        .iter()
        .flat_map(|i| i.coeffs.keys().cloned())
        .collect();
    for v in vars {
        let mut uppers = Vec::new();
        let mut lowers = Vec::new();
        let mut rest = Vec::new();
        for ineq in system {
            match ineq.coeffs.get(&v).map(|c| c.is_positive()) {
                Some(true) => uppers.push(ineq),
                Some(false) => lowers.push(ineq),
                None => rest.push(ineq),
            }
        }
        for u in &uppers {
            for l in &lowers {
                // u: a·v + R ≤ b (a > 0), l: c·v + S ≤ d (c < 0);
                // (-c)·u + a·l eliminates v and keeps multipliers positive.
                let a = u.coeffs[&v].clone();
                let c = l.coeffs[&v].clone();
                let mut coeffs: BTreeMap<Var, BigRational> = BTreeMap::new();
                for (var, cf) in &u.coeffs {
                    coeffs.insert(var.clone(), -&c * cf);
                }
                for (var, cf) in &l.coeffs {
                    let entry = coeffs.entry(var.clone()).or_insert_with(BigRational::zero);
                    *entry += &a * cf;
                }
                coeffs.retain(|_, cf| !cf.is_zero());
                let combined = Ineq {
                    coeffs,
                    bound: -&c * &u.bound + &a * &l.bound,
                    strict: u.strict || l.strict,
                };
                if combined.coeffs.is_empty() && combined.violated() {
                    return true;
                }
                rest.push(combined);
            }
        }
        system = rest;
    }
    system
        .iter()
        .filter(|i| i.coeffs.is_empty())
        .any(Ineq::violated)
}

/// Exact decision of `⋀ context ⟹ t` over rational valuations.
pub fn implies_linear(context: &[&LinearTerm], t: &LinearTerm) -> bool {
    let mut system: Vec<Ineq> = context.iter().map(|c| Ineq::of(c)).collect();
    system.push(Ineq::negation_of(t));
    fm_infeasible(system)
}

/// Eliminates each variable of `elim` (lexicographic order) from `t` via a
/// positive combination with the first applicable context term. Returns the
/// residual and the context ids actually needed.
pub fn eliminate_linear(
    t: &LinearTerm,
    elim: &BTreeSet<Var>,
    context: &[(TermId, &LinearTerm)],
    direction: Direction,
) -> Result<(LinearTerm, Vec<TermId>)> {
    let mut cur = t.clone();
    let mut used: Vec<TermId> = Vec::new();
    let cap = (elim.len() + 1) * (context.len() + 2);
    let mut steps = 0;
    while let Some(v) = cur.coeffs.keys().find(|v| elim.contains(*v)).cloned() {
        steps += 1;
        if steps > cap {
            return Err(Error::EliminationFailure {
                term: t.render(),
                reason: "combination does not converge".into(),
            });
        }
        let cv = cur.coeff(&v);
        let want_same_sign = direction == Direction::Refinement;
        let candidate = context.iter().find(|(_, u)| {
            let du = u.coeff(&v);
            !du.is_zero() && ((du.is_positive() == cv.is_positive()) == want_same_sign)
        });
        let Some((id, u)) = candidate else {
            match direction {
                Direction::Refinement => {
                    return Err(Error::EliminationFailure {
                        term: t.render(),
                        reason: format!(
                            "no positive combination of context terms cancels `{v}` toward a refinement",
                        ),
                    });
                }
                Direction::Relaxation => {
                    // Existential projection: with no opposite-sign partner,
                    // a single inequality places no constraint on the other
                    // variables once `v` ranges freely.
                    cur = LinearTerm::constant(true);
                    used.clear();
                    break;
                }
            }
        };
        // Same lambda in both directions: refinement subtracts a same-sign
        // multiple (lambda < 0 here), relaxation adds an opposite-sign one.
        let lambda = -(&cv / u.coeff(&v));
        debug_assert!(match direction {
            Direction::Refinement => lambda.is_negative(),
            Direction::Relaxation => lambda.is_positive(),
        });
        cur = cur.combined(u, &lambda);
        if !used.contains(id) {
            used.push(id.clone());
        }
    }
    let used = minimize_used(t, &cur, used, context, direction);
    Ok((cur, used))
}

/// Drops context ids that the implication does not actually need, so `used`
/// stays a minimal provenance record.
fn minimize_used(
    original: &LinearTerm,
    residual: &LinearTerm,
    used: Vec<TermId>,
    context: &[(TermId, &LinearTerm)],
    direction: Direction,
) -> Vec<TermId> {
    if used.is_empty() {
        return used;
    }
    let term_of = |id: &TermId| context.iter().find(|(cid, _)| cid == id).map(|(_, t)| *t);
    let mut kept = used;
    let mut i = 0;
    while i < kept.len() {
        let mut ctx: Vec<&LinearTerm> = kept
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .filter_map(|(_, id)| term_of(id))
            .collect();
        let holds = match direction {
            Direction::Refinement => {
                ctx.push(residual);
                implies_linear(&ctx, original)
            }
            Direction::Relaxation => {
                ctx.push(original);
                implies_linear(&ctx, residual)
            }
        };
        if holds {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rat(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    fn val(pairs: &[(&str, i64)]) -> Valuation {
        pairs
            .iter()
            .map(|(v, n)| (Var::from(*v), crate::term::Value::Rational(rat(*n))))
            .collect()
    }

    fn id(owner: &str, idx: usize) -> TermId {
        TermId::new(owner, crate::term::Section::Guarantee, idx)
    }

    #[test]
    fn parse_rearranges_to_canonical_form() {
        // Oracle: the parsed term must agree with a direct reading of
        // `2*o' >= 6 - o` on random rational valuations.
        let t = parse_linear("2*o' >= 6 - o").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let o = BigRational::new(rng.gen_range(-40i64..40).into(), rng.gen_range(1i64..5).into());
            let op = BigRational::new(rng.gen_range(-40i64..40).into(), rng.gen_range(1i64..5).into());
            let direct = rat(2) * &op >= rat(6) - &o;
            let mut v = Valuation::new();
            v.insert(Var::from("o"), crate::term::Value::Rational(o));
            v.insert(Var::from("o'"), crate::term::Value::Rational(op));
            assert_eq!(t.evaluate(&v).unwrap(), direct);
        }
        assert_eq!(t.coeff(&Var::from("o")), rat(-1));
        assert_eq!(t.coeff(&Var::from("o'")), rat(-2));
        assert_eq!(*t.bound(), rat(-6));
    }

    #[test]
    fn canonical_form_identifies_scalings() {
        assert_eq!(
            parse_linear("0.5*x <= 1").unwrap(),
            parse_linear("x <= 2").unwrap()
        );
        assert_eq!(
            parse_linear("2*x + 4*y <= 6").unwrap(),
            parse_linear("x + 2*y <= 3").unwrap()
        );
        assert_ne!(
            parse_linear("x <= 2").unwrap(),
            parse_linear("x >= 2").unwrap()
        );
    }

    #[test]
    fn parse_rejects_nonlinear_and_bad_input() {
        assert!(parse_linear("x * y <= 1").is_err());
        assert!(parse_linear("x <= ").is_err());
        assert!(parse_linear("x < 1").is_err());
        assert!(parse_linear("x = 1").is_err());
        let both = parse_linear_multi("x = 1").unwrap();
        assert_eq!(both.len(), 2);
        assert_eq!(both[0], parse_linear("x <= 1").unwrap());
        assert_eq!(both[1], parse_linear("x >= 1").unwrap());
    }

    #[test]
    fn evaluate_is_exact() {
        let t = parse_linear("o + i <= 3").unwrap();
        assert!(t.evaluate(&val(&[("o", 1), ("i", 1)])).unwrap());
        assert!(!t.evaluate(&val(&[("o", 3), ("i", 1)])).unwrap());
        assert!(matches!(
            t.evaluate(&val(&[("o", 1)])),
            Err(Error::MissingVariable(_))
        ));
        let mut v = val(&[("o", 1)]);
        v.insert(Var::from("i"), crate::term::Value::Bool(true));
        assert!(matches!(t.evaluate(&v), Err(Error::TypeMismatch { .. })));
    }

    #[test]
    fn implies_decides_entailment() {
        let g = parse_linear("o + i <= 3").unwrap();
        let a = parse_linear("i >= 0").unwrap();
        let goal = parse_linear("o <= 3").unwrap();
        assert!(implies_linear(&[&g, &a], &goal));

        let weak = parse_linear("o <= 5").unwrap();
        let strong = parse_linear("o <= 4").unwrap();
        assert!(!implies_linear(&[&weak], &strong));
        assert!(implies_linear(&[&strong], &weak));
        // Boundary: a term implies itself (negation is strict).
        assert!(implies_linear(&[&weak], &weak));
        // Constants.
        assert!(implies_linear(&[], &LinearTerm::constant(true)));
        assert!(!implies_linear(&[], &LinearTerm::constant(false)));
        assert!(implies_linear(&[&LinearTerm::constant(false)], &strong));
    }

    /// Sampling oracle: hunt for a countermodel on a small grid. One-sided
    /// check against the Fourier-Motzkin decision.
    #[test]
    fn implies_agrees_with_sampling_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vars = [Var::from("a"), Var::from("b"), Var::from("c")];
        for _ in 0..60 {
            let gen_term = |rng: &mut ChaCha8Rng| {
                let mut coeffs = BTreeMap::new();
                for v in &vars {
                    let c = rng.gen_range(-3i64..=3);
                    if c != 0 && rng.gen_bool(0.7) {
                        coeffs.insert(v.clone(), rat(c));
                    }
                }
                LinearTerm::new(coeffs, rat(rng.gen_range(-5i64..=5)))
            };
            let ctx = [gen_term(&mut rng), gen_term(&mut rng)];
            let goal = gen_term(&mut rng);
            let decided = implies_linear(&[&ctx[0], &ctx[1]], &goal);
            let mut found_counter = false;
            'search: for a in -6i64..=6 {
                for b in -6i64..=6 {
                    for c in -6i64..=6 {
                        let v = val(&[("a", a), ("b", b), ("c", c)]);
                        let ctx_ok = ctx.iter().all(|t| t.evaluate(&v).unwrap());
                        if ctx_ok && !goal.evaluate(&v).unwrap() {
                            found_counter = true;
                            break 'search;
                        }
                    }
                }
            }
            if found_counter {
                assert!(!decided, "sampler found a countermodel but FM said implies");
            }
        }
    }

    #[test]
    fn refinement_elimination_matches_worked_example() {
        // t = o <= 5 refined against context o + i <= 3: residual i >= -2.
        let t = parse_linear("o <= 5").unwrap();
        let g1 = parse_linear("o + i <= 3").unwrap();
        let ctx = [(id("C1", 0), &g1)];
        let elim = BTreeSet::from([Var::from("o")]);
        let (res, used) = eliminate_linear(&t, &elim, &ctx, Direction::Refinement).unwrap();
        assert_eq!(res, parse_linear("i >= -2").unwrap());
        assert_eq!(used, vec![id("C1", 0)]);
        // Soundness: (residual ∧ used) ⟹ t.
        assert!(implies_linear(&[&res, &g1], &t));
    }

    #[test]
    fn refinement_elimination_discharges_to_true() {
        let t = parse_linear("b <= 5").unwrap();
        let g2 = parse_linear("b <= 3").unwrap();
        let ctx = [(id("C2", 0), &g2)];
        let elim = BTreeSet::from([Var::from("b")]);
        let (res, used) = eliminate_linear(&t, &elim, &ctx, Direction::Refinement).unwrap();
        assert_eq!(res.as_const(), Some(true));
        assert_eq!(used, vec![id("C2", 0)]);
    }

    #[test]
    fn relaxation_elimination_matches_worked_example() {
        let t = parse_linear("o + 2*o' >= 6").unwrap();
        let g1 = parse_linear("o + i <= 3").unwrap();
        let ctx = [(id("C1", 0), &g1)];
        let elim = BTreeSet::from([Var::from("o")]);
        let (res, used) = eliminate_linear(&t, &elim, &ctx, Direction::Relaxation).unwrap();
        assert_eq!(res, parse_linear("i - 2*o' <= -3").unwrap());
        assert_eq!(used, vec![id("C1", 0)]);
        // Soundness: (t ∧ used) ⟹ residual.
        assert!(implies_linear(&[&t, &g1], &res));
    }

    #[test]
    fn relaxation_of_lower_bounded_variable_uses_upper_bound() {
        // Single-multiplier oracle: t = o - b <= 0 has b with coefficient -1,
        // context b <= 3 carries +1, so λ = 1 cancels b and yields o <= 3.
        let t = parse_linear("o <= b").unwrap();
        let g2 = parse_linear("b <= 3").unwrap();
        let ctx = [(id("C2", 0), &g2)];
        let elim = BTreeSet::from([Var::from("b")]);
        let (res, used) = eliminate_linear(&t, &elim, &ctx, Direction::Relaxation).unwrap();
        assert_eq!(res, parse_linear("o <= 3").unwrap());
        assert_eq!(used, vec![id("C2", 0)]);
        assert!(implies_linear(&[&t, &g2], &res));
    }

    #[test]
    fn elimination_fails_without_usable_context() {
        let t = parse_linear("o <= 5").unwrap();
        let lower = parse_linear("o >= 0").unwrap();
        let ctx = [(id("C1", 0), &lower)];
        let elim = BTreeSet::from([Var::from("o")]);
        let err = eliminate_linear(&t, &elim, &ctx, Direction::Refinement);
        assert!(matches!(err, Err(Error::EliminationFailure { .. })));
    }

    #[test]
    fn relaxation_without_partner_projects_to_true() {
        // ∃b. b ≤ 3 holds for any values of the remaining variables, so the
        // term relaxes away entirely instead of failing.
        let t = parse_linear("b <= 3").unwrap();
        let elim = BTreeSet::from([Var::from("b")]);
        let (res, used) = eliminate_linear(&t, &elim, &[], Direction::Relaxation).unwrap();
        assert_eq!(res.as_const(), Some(true));
        assert!(used.is_empty());

        let t = parse_linear("i + b <= 3").unwrap();
        let unrelated = parse_linear("i <= 1").unwrap();
        let ctx = [(id("C", 0), &unrelated)];
        let (res, used) = eliminate_linear(&t, &elim, &ctx, Direction::Relaxation).unwrap();
        assert_eq!(res.as_const(), Some(true));
        assert!(used.is_empty());
    }

    #[test]
    fn elimination_chains_through_context_and_stays_minimal() {
        let t = parse_linear("x + y <= 0").unwrap();
        let u1 = parse_linear("x - z <= 0").unwrap();
        let u2 = parse_linear("y + z <= 0").unwrap();
        let ctx = [(id("C", 0), &u1), (id("C", 1), &u2)];
        let elim = BTreeSet::from([Var::from("x"), Var::from("y")]);
        let (res, used) = eliminate_linear(&t, &elim, &ctx, Direction::Refinement).unwrap();
        assert_eq!(res.as_const(), Some(true));
        assert_eq!(used, vec![id("C", 0), id("C", 1)]);
        for skip in 0..used.len() {
            let ctx_minus: Vec<&LinearTerm> = ctx
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != skip)
                .map(|(_, (_, t))| *t)
                .collect();
            let mut with_res = ctx_minus.clone();
            with_res.push(&res);
            assert!(
                !implies_linear(&with_res, &t),
                "dropping used[{skip}] should break the implication"
            );
        }
    }

    #[test]
    fn render_round_trips() {
        for src in [
            "o + i <= 3",
            "i >= -2",
            "i - 2*o' <= -3",
            "3/2*x - y <= 7/3",
            "true",
            "false",
        ] {
            let t = parse_linear(src).unwrap();
            let back = parse_linear(&t.render()).unwrap();
            assert_eq!(t, back, "render `{}` -> `{}`", src, t.render());
        }
    }
}
