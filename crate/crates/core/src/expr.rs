//! Expression AST for nonlinear program bodies, with evaluation (exact,
//! interval, native float), symbolic differentiation, polynomial
//! conversion and pretty printing.
//!
//! Variable indices form one global space: program inputs first, then
//! let-bound locals, then (after rounding) error variables.

use crate::interval::{apply_unary, Interval, IntervalError, UnaryOp};
use crate::polynomial::Poly;
use crate::rational::Rat;
use num::traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TranscKind {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
}

impl TranscKind {
    pub fn name(self) -> &'static str {
        match self {
            TranscKind::Exp => "exp",
            TranscKind::Log => "log",
            TranscKind::Sin => "sin",
            TranscKind::Cos => "cos",
            TranscKind::Tan => "tan",
            TranscKind::Asin => "asin",
            TranscKind::Acos => "acos",
            TranscKind::Atan => "atan",
        }
    }

    pub fn unary_op(self) -> UnaryOp {
        match self {
            TranscKind::Exp => UnaryOp::Exp,
            TranscKind::Log => UnaryOp::Log,
            TranscKind::Sin => UnaryOp::Sin,
            TranscKind::Cos => UnaryOp::Cos,
            TranscKind::Tan => UnaryOp::Tan,
            TranscKind::Asin => UnaryOp::Asin,
            TranscKind::Acos => UnaryOp::Acos,
            TranscKind::Atan => UnaryOp::Atan,
        }
    }

    pub fn apply_f64(self, x: f64) -> f64 {
        match self {
            TranscKind::Exp => x.exp(),
            TranscKind::Log => x.ln(),
            TranscKind::Sin => x.sin(),
            TranscKind::Cos => x.cos(),
            TranscKind::Tan => x.tan(),
            TranscKind::Asin => x.asin(),
            TranscKind::Acos => x.acos(),
            TranscKind::Atan => x.atan(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(Rat),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
    Transc(TranscKind, Box<Expr>),
    /// `if cond >= 0 then .0 else .1`; cond must be polynomial.
    IfThenElse(Box<Expr>, Box<Expr>, Box<Expr>),
    Let(usize, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("expression is not a polynomial at a {0} node")]
    NotPolynomial(&'static str),
    #[error("symbolic differentiation hit a conditional")]
    NonDifferentiableAtSymbolLevel,
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error("unbound variable x{0}")]
    UnboundVariable(usize),
}

impl Expr {
    pub fn constant(c: Rat) -> Expr {
        Expr::Const(c)
    }

    pub fn var(i: usize) -> Expr {
        Expr::Var(i)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    pub fn is_zero_const(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_one_const(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    /// Free variables (let-bound indices do not escape).
    pub fn free_vars(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut out, &mut Vec::new());
        out
    }

    fn collect_free(&self, out: &mut BTreeSet<usize>, bound: &mut Vec<usize>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(i) => {
                if !bound.contains(i) {
                    out.insert(*i);
                }
            }
            Expr::Neg(a) | Expr::Sqrt(a) | Expr::Transc(_, a) => a.collect_free(out, bound),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_free(out, bound);
                b.collect_free(out, bound);
            }
            Expr::IfThenElse(c, t, e) => {
                c.collect_free(out, bound);
                t.collect_free(out, bound);
                e.collect_free(out, bound);
            }
            Expr::Let(v, binding, body) => {
                binding.collect_free(out, bound);
                bound.push(*v);
                body.collect_free(out, bound);
                bound.pop();
            }
        }
    }

    pub fn contains_conditional(&self) -> bool {
        match self {
            Expr::IfThenElse(..) => true,
            Expr::Const(_) | Expr::Var(_) => false,
            Expr::Neg(a) | Expr::Sqrt(a) | Expr::Transc(_, a) => a.contains_conditional(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.contains_conditional() || b.contains_conditional()
            }
            Expr::Let(_, b, c) => b.contains_conditional() || c.contains_conditional(),
        }
    }

    pub fn conditional_depth(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Neg(a) | Expr::Sqrt(a) | Expr::Transc(_, a) => a.conditional_depth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.conditional_depth().max(b.conditional_depth())
            }
            Expr::IfThenElse(c, t, e) => {
                1 + c
                    .conditional_depth()
                    .max(t.conditional_depth())
                    .max(e.conditional_depth())
            }
            Expr::Let(_, b, c) => b.conditional_depth().max(c.conditional_depth()),
        }
    }

    /// Replace every let-bound variable by its binding.
    pub fn inline_lets(&self) -> Expr {
        fn go(e: &Expr, env: &mut Vec<(usize, Expr)>) -> Expr {
            match e {
                Expr::Const(c) => Expr::Const(c.clone()),
                Expr::Var(i) => env
                    .iter()
                    .rev()
                    .find(|(v, _)| v == i)
                    .map(|(_, b)| b.clone())
                    .unwrap_or(Expr::Var(*i)),
                Expr::Neg(a) => Expr::neg(go(a, env)),
                Expr::Sqrt(a) => Expr::Sqrt(Box::new(go(a, env))),
                Expr::Transc(k, a) => Expr::Transc(*k, Box::new(go(a, env))),
                Expr::Add(a, b) => Expr::add(go(a, env), go(b, env)),
                Expr::Sub(a, b) => Expr::sub(go(a, env), go(b, env)),
                Expr::Mul(a, b) => Expr::mul(go(a, env), go(b, env)),
                Expr::Div(a, b) => Expr::div(go(a, env), go(b, env)),
                Expr::IfThenElse(c, t, el) => Expr::IfThenElse(
                    Box::new(go(c, env)),
                    Box::new(go(t, env)),
                    Box::new(go(el, env)),
                ),
                Expr::Let(v, b, body) => {
                    let inlined = go(b, env);
                    env.push((*v, inlined));
                    let out = go(body, env);
                    env.pop();
                    out
                }
            }
        }
        go(self, &mut Vec::new())
    }

    /// Exact evaluation; `env` must cover every free variable index.
    /// Division by zero or a domain violation returns an error.
    pub fn eval(&self, env: &[Rat]) -> Result<Rat, ExprError> {
        fn go(e: &Expr, env: &[Rat], lets: &mut Vec<(usize, Rat)>) -> Result<Rat, ExprError> {
            Ok(match e {
                Expr::Const(c) => c.clone(),
                Expr::Var(i) => {
                    if let Some((_, v)) = lets.iter().rev().find(|(v, _)| v == i) {
                        v.clone()
                    } else if *i < env.len() {
                        env[*i].clone()
                    } else {
                        return Err(ExprError::UnboundVariable(*i));
                    }
                }
                Expr::Neg(a) => -go(a, env, lets)?,
                Expr::Add(a, b) => go(a, env, lets)? + go(b, env, lets)?,
                Expr::Sub(a, b) => go(a, env, lets)? - go(b, env, lets)?,
                Expr::Mul(a, b) => go(a, env, lets)? * go(b, env, lets)?,
                Expr::Div(a, b) => {
                    let d = go(b, env, lets)?;
                    if d.is_zero() {
                        return Err(ExprError::Interval(IntervalError::DivisionByZeroInterval));
                    }
                    go(a, env, lets)? / d
                }
                Expr::Sqrt(_) | Expr::Transc(..) => {
                    // exact rational evaluation is only defined for
                    // semialgebraic-free expressions; use eval_enclosure
                    return Err(ExprError::NotPolynomial("transcendental"));
                }
                Expr::IfThenElse(c, t, el) => {
                    let cv = go(c, env, lets)?;
                    if !cv.is_negative() {
                        go(t, env, lets)?
                    } else {
                        go(el, env, lets)?
                    }
                }
                Expr::Let(v, b, body) => {
                    let bv = go(b, env, lets)?;
                    lets.push((*v, bv));
                    let out = go(body, env, lets)?;
                    lets.pop();
                    out
                }
            })
        }
        go(self, env, &mut Vec::new())
    }

    /// Tight enclosure of the value at an exact rational point; handles
    /// sqrt and transcendental nodes through certified enclosures.
    pub fn eval_enclosure(&self, env: &[Rat]) -> Result<Interval, ExprError> {
        let domain: Vec<Interval> = env.iter().map(|r| Interval::point(r.clone())).collect();
        ia_bound(self, &domain)
    }

    /// Native float evaluation (the "machine execution" semantics used by
    /// the sampling oracle). Conditionals branch on the *float* value.
    pub fn eval_f64(&self, env: &[f64]) -> f64 {
        fn go(e: &Expr, env: &[f64], lets: &mut Vec<(usize, f64)>) -> f64 {
            match e {
                Expr::Const(c) => c.to_f64().unwrap_or(f64::NAN),
                Expr::Var(i) => lets
                    .iter()
                    .rev()
                    .find(|(v, _)| v == i)
                    .map(|(_, x)| *x)
                    .unwrap_or_else(|| env[*i]),
                Expr::Neg(a) => -go(a, env, lets),
                Expr::Add(a, b) => go(a, env, lets) + go(b, env, lets),
                Expr::Sub(a, b) => go(a, env, lets) - go(b, env, lets),
                Expr::Mul(a, b) => go(a, env, lets) * go(b, env, lets),
                Expr::Div(a, b) => go(a, env, lets) / go(b, env, lets),
                Expr::Sqrt(a) => go(a, env, lets).sqrt(),
                Expr::Transc(k, a) => k.apply_f64(go(a, env, lets)),
                Expr::IfThenElse(c, t, el) => {
                    if go(c, env, lets) >= 0.0 {
                        go(t, env, lets)
                    } else {
                        go(el, env, lets)
                    }
                }
                Expr::Let(v, b, body) => {
                    let bv = go(b, env, lets);
                    lets.push((*v, bv));
                    let out = go(body, env, lets);
                    lets.pop();
                    out
                }
            }
        }
        go(self, env, &mut Vec::new())
    }

    /// f32 evaluation for single-precision sampling.
    pub fn eval_f32(&self, env: &[f32]) -> f32 {
        fn go(e: &Expr, env: &[f32], lets: &mut Vec<(usize, f32)>) -> f32 {
            match e {
                Expr::Const(c) => c.to_f64().unwrap_or(f64::NAN) as f32,
                Expr::Var(i) => lets
                    .iter()
                    .rev()
                    .find(|(v, _)| v == i)
                    .map(|(_, x)| *x)
                    .unwrap_or_else(|| env[*i]),
                Expr::Neg(a) => -go(a, env, lets),
                Expr::Add(a, b) => go(a, env, lets) + go(b, env, lets),
                Expr::Sub(a, b) => go(a, env, lets) - go(b, env, lets),
                Expr::Mul(a, b) => go(a, env, lets) * go(b, env, lets),
                Expr::Div(a, b) => go(a, env, lets) / go(b, env, lets),
                Expr::Sqrt(a) => go(a, env, lets).sqrt(),
                Expr::Transc(k, a) => k.apply_f64(go(a, env, lets) as f64) as f32,
                Expr::IfThenElse(c, t, el) => {
                    if go(c, env, lets) >= 0.0 {
                        go(t, env, lets)
                    } else {
                        go(el, env, lets)
                    }
                }
                Expr::Let(v, b, body) => {
                    let bv = go(b, env, lets);
                    lets.push((*v, bv));
                    let out = go(body, env, lets);
                    lets.pop();
                    out
                }
            }
        }
        go(self, env, &mut Vec::new())
    }

    /// Convert to an exact polynomial. Division is accepted only by nonzero
    /// constants; sqrt/transcendental/conditional nodes fail.
    pub fn to_poly(&self, nvars: usize) -> Result<Poly, ExprError> {
        fn go(e: &Expr, nvars: usize, lets: &mut Vec<(usize, Poly)>) -> Result<Poly, ExprError> {
            Ok(match e {
                Expr::Const(c) => Poly::constant(nvars, c.clone()),
                Expr::Var(i) => {
                    if let Some((_, p)) = lets.iter().rev().find(|(v, _)| v == i) {
                        p.clone()
                    } else {
                        Poly::var(nvars, *i)
                    }
                }
                Expr::Neg(a) => go(a, nvars, lets)?.neg(),
                Expr::Add(a, b) => go(a, nvars, lets)?.add(&go(b, nvars, lets)?),
                Expr::Sub(a, b) => go(a, nvars, lets)?.sub(&go(b, nvars, lets)?),
                Expr::Mul(a, b) => go(a, nvars, lets)?.mul(&go(b, nvars, lets)?),
                Expr::Div(a, b) => {
                    let d = go(b, nvars, lets)?;
                    if d.total_degree() == 0 && !d.is_zero() {
                        let c = d.constant_term();
                        go(a, nvars, lets)?.scale(&(Rat::one() / c))
                    } else {
                        return Err(ExprError::NotPolynomial("division"));
                    }
                }
                Expr::Sqrt(_) => return Err(ExprError::NotPolynomial("sqrt")),
                Expr::Transc(..) => return Err(ExprError::NotPolynomial("transcendental")),
                Expr::IfThenElse(..) => return Err(ExprError::NotPolynomial("conditional")),
                Expr::Let(v, b, body) => {
                    let bp = go(b, nvars, lets)?;
                    lets.push((*v, bp));
                    let out = go(body, nvars, lets)?;
                    lets.pop();
                    out
                }
            })
        }
        go(self, nvars, &mut Vec::new())
    }

    /// Exact symbolic partial derivative. Lets are inlined first; the
    /// result is simplified. Conditionals are rejected.
    pub fn symbolic_diff(&self, var: usize) -> Result<Expr, ExprError> {
        let inlined = self.inline_lets();
        let d = inlined.diff_inner(var)?;
        Ok(d.simplify())
    }

    fn diff_inner(&self, var: usize) -> Result<Expr, ExprError> {
        Ok(match self {
            Expr::Const(_) => Expr::Const(Rat::zero()),
            Expr::Var(i) => Expr::Const(if *i == var { Rat::one() } else { Rat::zero() }),
            Expr::Neg(a) => Expr::neg(a.diff_inner(var)?),
            Expr::Add(a, b) => Expr::add(a.diff_inner(var)?, b.diff_inner(var)?),
            Expr::Sub(a, b) => Expr::sub(a.diff_inner(var)?, b.diff_inner(var)?),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.diff_inner(var)?, (**b).clone()),
                Expr::mul((**a).clone(), b.diff_inner(var)?),
            ),
            Expr::Div(a, b) => {
                // (a'b - ab') / b²
                let num = Expr::sub(
                    Expr::mul(a.diff_inner(var)?, (**b).clone()),
                    Expr::mul((**a).clone(), b.diff_inner(var)?),
                );
                Expr::div(num, Expr::mul((**b).clone(), (**b).clone()))
            }
            Expr::Sqrt(a) => {
                // a' / (2 sqrt(a))
                Expr::div(
                    a.diff_inner(var)?,
                    Expr::mul(Expr::Const(Rat::from_integer(2.into())), Expr::Sqrt(a.clone())),
                )
            }
            Expr::Transc(k, a) => {
                let da = a.diff_inner(var)?;
                let outer = match k {
                    TranscKind::Exp => Expr::Transc(TranscKind::Exp, a.clone()),
                    TranscKind::Log => Expr::div(Expr::Const(Rat::one()), (**a).clone()),
                    TranscKind::Sin => Expr::Transc(TranscKind::Cos, a.clone()),
                    TranscKind::Cos => Expr::neg(Expr::Transc(TranscKind::Sin, a.clone())),
                    TranscKind::Tan => {
                        // 1 / cos²
                        let c = Expr::Transc(TranscKind::Cos, a.clone());
                        Expr::div(Expr::Const(Rat::one()), Expr::mul(c.clone(), c))
                    }
                    TranscKind::Asin => {
                        // 1 / sqrt(1 - a²)
                        let a2 = Expr::mul((**a).clone(), (**a).clone());
                        Expr::div(
                            Expr::Const(Rat::one()),
                            Expr::Sqrt(Box::new(Expr::sub(Expr::Const(Rat::one()), a2))),
                        )
                    }
                    TranscKind::Acos => {
                        let a2 = Expr::mul((**a).clone(), (**a).clone());
                        Expr::neg(Expr::div(
                            Expr::Const(Rat::one()),
                            Expr::Sqrt(Box::new(Expr::sub(Expr::Const(Rat::one()), a2))),
                        ))
                    }
                    TranscKind::Atan => {
                        let a2 = Expr::mul((**a).clone(), (**a).clone());
                        Expr::div(
                            Expr::Const(Rat::one()),
                            Expr::add(Expr::Const(Rat::one()), a2),
                        )
                    }
                };
                Expr::mul(outer, da)
            }
            Expr::IfThenElse(..) => return Err(ExprError::NonDifferentiableAtSymbolLevel),
            Expr::Let(..) => unreachable!("lets were inlined before differentiation"),
        })
    }

    /// Constant folding and algebraic identity cleanup. Keeps the tree
    /// small after symbolic differentiation.
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => {
                let a = a.simplify();
                match a {
                    Expr::Const(c) => Expr::Const(-c),
                    Expr::Neg(inner) => *inner,
                    other => Expr::neg(other),
                }
            }
            Expr::Add(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
                    _ if a.is_zero_const() => b,
                    _ if b.is_zero_const() => a,
                    _ => Expr::add(a, b),
                }
            }
            Expr::Sub(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Expr::Const(x), Expr::Const(y)) => Expr::Const(x - y),
                    _ if b.is_zero_const() => a,
                    _ if a.is_zero_const() => Expr::neg(b).simplify(),
                    _ => Expr::sub(a, b),
                }
            }
            Expr::Mul(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
                    _ if a.is_zero_const() || b.is_zero_const() => Expr::Const(Rat::zero()),
                    _ if a.is_one_const() => b,
                    _ if b.is_one_const() => a,
                    _ => Expr::mul(a, b),
                }
            }
            Expr::Div(a, b) => {
                let (a, b) = (a.simplify(), b.simplify());
                match (&a, &b) {
                    (Expr::Const(x), Expr::Const(y)) if !y.is_zero() => Expr::Const(x / y),
                    _ if a.is_zero_const() => Expr::Const(Rat::zero()),
                    _ if b.is_one_const() => a,
                    _ => Expr::div(a, b),
                }
            }
            Expr::Sqrt(a) => Expr::Sqrt(Box::new(a.simplify())),
            Expr::Transc(k, a) => Expr::Transc(*k, Box::new(a.simplify())),
            Expr::IfThenElse(c, t, e) => Expr::IfThenElse(
                Box::new(c.simplify()),
                Box::new(t.simplify()),
                Box::new(e.simplify()),
            ),
            Expr::Let(v, b, body) => {
                Expr::Let(*v, Box::new(b.simplify()), Box::new(body.simplify()))
            }
        }
    }

    pub fn pretty(&self, names: &dyn Fn(usize) -> String) -> String {
        fn prec(e: &Expr) -> u8 {
            match e {
                Expr::Add(..) | Expr::Sub(..) => 1,
                Expr::Mul(..) | Expr::Div(..) => 2,
                Expr::Neg(..) => 3,
                _ => 4,
            }
        }
        fn go(e: &Expr, names: &dyn Fn(usize) -> String, parent: u8) -> String {
            let p = prec(e);
            let s = match e {
                Expr::Const(c) => {
                    if c.is_negative() {
                        format!("({})", fmt_rat(c))
                    } else {
                        fmt_rat(c)
                    }
                }
                Expr::Var(i) => names(*i),
                Expr::Neg(a) => format!("-{}", go(a, names, 3)),
                Expr::Add(a, b) => format!("{} + {}", go(a, names, 1), go(b, names, 1)),
                Expr::Sub(a, b) => format!("{} - {}", go(a, names, 1), go(b, names, 2)),
                Expr::Mul(a, b) => format!("{} * {}", go(a, names, 2), go(b, names, 2)),
                Expr::Div(a, b) => format!("{} / {}", go(a, names, 2), go(b, names, 3)),
                Expr::Sqrt(a) => format!("sqrt({})", go(a, names, 0)),
                Expr::Transc(k, a) => format!("{}({})", k.name(), go(a, names, 0)),
                Expr::IfThenElse(c, t, el) => format!(
                    "if ({} >= 0) then {} else {}",
                    go(c, names, 0),
                    go(t, names, 4),
                    go(el, names, 4)
                ),
                Expr::Let(v, b, body) => format!(
                    "let {} = {} in {}",
                    names(*v),
                    go(b, names, 0),
                    go(body, names, 0)
                ),
            };
            if p < parent {
                format!("({s})")
            } else {
                s
            }
        }
        go(self, names, 0)
    }
}

/// Exact decimal rendering when the denominator is 2^a·5^b, `p/q` otherwise.
pub fn fmt_rat(c: &Rat) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        // print exact decimals when the denominator is 2^a 5^b
        let mut d = c.denom().clone();
        let mut twos = 0u32;
        let mut fives = 0u32;
        let two = num::BigInt::from(2);
        let five = num::BigInt::from(5);
        while (&d % &two).is_zero() {
            d /= &two;
            twos += 1;
        }
        while (&d % &five).is_zero() {
            d /= &five;
            fives += 1;
        }
        if d.is_one() {
            let shift = twos.max(fives);
            let scale = num::pow(num::BigInt::from(10), shift as usize);
            let scaled = (c * Rat::from_integer(scale)).to_integer();
            let neg = scaled.is_negative();
            let digits = scaled.magnitude().to_string();
            let digits = format!("{:0>width$}", digits, width = shift as usize + 1);
            let (int_part, frac) = digits.split_at(digits.len() - shift as usize);
            let sign = if neg { "-" } else { "" };
            if frac.is_empty() {
                format!("{sign}{int_part}")
            } else {
                format!("{sign}{int_part}.{frac}")
            }
        } else {
            format!("{}/{}", c.numer(), c.denom())
        }
    }
}

/// Naive recursive interval enclosure of an expression over a box
/// (dependency-unaware); conditionals return the hull of both branches.
pub fn ia_bound(expr: &Expr, domain: &[Interval]) -> Result<Interval, ExprError> {
    fn go(
        e: &Expr,
        domain: &[Interval],
        lets: &mut Vec<(usize, Interval)>,
    ) -> Result<Interval, ExprError> {
        Ok(match e {
            Expr::Const(c) => Interval::point(c.clone()),
            Expr::Var(i) => {
                if let Some((_, v)) = lets.iter().rev().find(|(v, _)| v == i) {
                    v.clone()
                } else if *i < domain.len() {
                    domain[*i].clone()
                } else {
                    return Err(ExprError::UnboundVariable(*i));
                }
            }
            Expr::Neg(a) => go(a, domain, lets)?.neg(),
            Expr::Add(a, b) => go(a, domain, lets)?.add(&go(b, domain, lets)?),
            Expr::Sub(a, b) => go(a, domain, lets)?.sub(&go(b, domain, lets)?),
            Expr::Mul(a, b) => go(a, domain, lets)?.mul(&go(b, domain, lets)?),
            Expr::Div(a, b) => go(a, domain, lets)?.div(&go(b, domain, lets)?)?,
            Expr::Sqrt(a) => go(a, domain, lets)?.sqrt()?,
            Expr::Transc(k, a) => apply_unary(k.unary_op(), &go(a, domain, lets)?)?,
            Expr::IfThenElse(_, t, el) => {
                let tv = go(t, domain, lets)?;
                let ev = go(el, domain, lets)?;
                tv.hull(&ev)
            }
            Expr::Let(v, b, body) => {
                let bv = go(b, domain, lets)?;
                lets.push((*v, bv));
                let out = go(body, domain, lets)?;
                lets.pop();
                out
            }
        })
    }
    go(expr, domain, &mut Vec::new())
}

/// ia_bound sharpened by recursive bisection of the widest relevant
/// dimension. `depth` levels give up to 2^depth cells.
pub fn ia_bound_subdiv(
    expr: &Expr,
    domain: &[Interval],
    depth: u32,
) -> Result<Interval, ExprError> {
    let vars: Vec<usize> = expr.free_vars().into_iter().filter(|&v| v < domain.len()).collect();
    fn go(
        expr: &Expr,
        domain: &mut Vec<Interval>,
        vars: &[usize],
        depth: u32,
    ) -> Result<Interval, ExprError> {
        if depth == 0 {
            return ia_bound(expr, domain);
        }
        // widest relevant dimension
        let mut widest: Option<(usize, Rat)> = None;
        for &v in vars {
            let w = domain[v].width();
            if widest.as_ref().map(|(_, bw)| &w > bw).unwrap_or(true) {
                widest = Some((v, w));
            }
        }
        let Some((v, w)) = widest else {
            return ia_bound(expr, domain);
        };
        if w.is_zero() {
            return ia_bound(expr, domain);
        }
        let mid = domain[v].midpoint();
        let orig = domain[v].clone();
        domain[v] = Interval::new(orig.lo.clone(), mid.clone());
        let left = go(expr, domain, vars, depth - 1)?;
        domain[v] = Interval::new(mid, orig.hi.clone());
        let right = go(expr, domain, vars, depth - 1)?;
        domain[v] = orig;
        Ok(left.hull(&right))
    }
    let mut dom = domain.to_vec();
    go(expr, &mut dom, &vars, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn v(i: usize) -> Expr {
        Expr::var(i)
    }

    #[test]
    fn power_rule() {
        // d/dx0 (x0² · x1) = 2 x0 x1
        let e = Expr::mul(Expr::mul(v(0), v(0)), v(1));
        let d = e.symbolic_diff(0).unwrap();
        let p = d.to_poly(2).unwrap();
        let expect = Poly::var(2, 0).mul(&Poly::var(2, 1)).scale(&rat_int(2));
        assert_eq!(p, expect);
    }

    #[test]
    fn quotient_rule_against_finite_differences() {
        // d/dx (x / (1+x)) = 1/(1+x)² checked at x in {0, 1/2, 1}
        let e = Expr::div(v(0), Expr::add(Expr::Const(Rat::one()), v(0)));
        let d = e.symbolic_diff(0).unwrap();
        let h = rat(1, 1_000_000);
        for x0 in [rat_int(0), rat(1, 2), rat_int(1)] {
            let sym = d.eval(&[x0.clone()]).unwrap();
            let fp = e.eval(&[&x0 + &h]).unwrap();
            let fm = e.eval(&[&x0 - &h]).unwrap();
            let fd = (fp - fm) / (&h * rat_int(2));
            let rel = ((&sym - &fd) / &sym).abs();
            assert!(rel < rat(1, 1_000_000), "rel err {rel} at {x0}");
        }
    }

    #[test]
    fn chain_rule_exp() {
        // d/dx exp(x²) = 2x·exp(x²)
        let e = Expr::Transc(TranscKind::Exp, Box::new(Expr::mul(v(0), v(0))));
        let d = e.symbolic_diff(0).unwrap();
        // evaluate enclosure at x=1: expect 2e
        let enc = d.eval_enclosure(&[rat_int(1)]).unwrap();
        let truth = 2.0 * std::f64::consts::E;
        let (lo, hi) = enc.to_f64_pair();
        assert!(lo <= truth && truth <= hi);
    }

    #[test]
    fn conditional_rejected_by_diff() {
        let e = Expr::IfThenElse(Box::new(v(0)), Box::new(v(0)), Box::new(v(0)));
        assert_eq!(
            e.symbolic_diff(0),
            Err(ExprError::NonDifferentiableAtSymbolLevel)
        );
    }

    #[test]
    fn ia_bound_basics() {
        let unit = Interval::new(rat_int(0), rat_int(1));
        let xy = Expr::mul(v(0), v(1));
        assert_eq!(
            ia_bound(&xy, &[unit.clone(), unit.clone()]).unwrap(),
            Interval::new(rat_int(0), rat_int(1))
        );
        let xx = Expr::sub(v(0), v(0));
        assert_eq!(
            ia_bound(&xx, &[unit]).unwrap(),
            Interval::new(rat_int(-1), rat_int(1))
        );
    }

    #[test]
    fn subdivision_tightens_division() {
        // x/(1+x) over [0,1]: naive IA gives [0,1]; true range is [0, 1/2]
        let e = Expr::div(v(0), Expr::add(Expr::Const(Rat::one()), v(0)));
        let dom = vec![Interval::new(rat_int(0), rat_int(1))];
        let naive = ia_bound(&e, &dom).unwrap();
        assert!(naive.hi >= rat_int(1));
        let sharp = ia_bound_subdiv(&e, &dom, 8).unwrap();
        assert!(sharp.lo <= rat_int(0) && sharp.hi >= rat(1, 2));
        assert!(sharp.hi <= rat(52, 100), "got {}", sharp.hi);
    }

    #[test]
    fn lets_inline_and_eval() {
        // let t = 1 + x in t*t at x=2 → 9
        let t = 5usize;
        let e = Expr::Let(
            t,
            Box::new(Expr::add(Expr::Const(Rat::one()), v(0))),
            Box::new(Expr::mul(v(t), v(t))),
        );
        assert_eq!(e.eval(&[rat_int(2)]).unwrap(), rat_int(9));
        let inl = e.inline_lets();
        assert_eq!(inl.eval(&[rat_int(2)]).unwrap(), rat_int(9));
        assert_eq!(e.free_vars().into_iter().collect::<Vec<_>>(), vec![0]);
    }
}
