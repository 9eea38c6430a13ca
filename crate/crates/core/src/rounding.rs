//! The (1+e) rounding model: transform an expression into one over input
//! variables plus fresh bounded error variables, one per floating-point
//! operation, with structural sharing of identical subexpressions.

use crate::expr::{Expr, TranscKind};
use crate::interval::Interval;
use crate::program::ProgramSpec;
use crate::rational::{pow2, rat, representable_in, Rat};
use num::traits::{One, Signed, Zero};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpFormat {
    /// significand bits
    pub precision: u32,
    /// 2^-precision, exactly
    pub eps: Rat,
    /// relative error multiplier for transcendental operations
    pub transc_factor: Rat,
}

impl FpFormat {
    pub fn with_bits(precision: u32) -> Self {
        FpFormat {
            precision,
            eps: pow2(-(precision as i64)),
            transc_factor: rat(3, 2),
        }
    }

    pub fn single() -> Self {
        Self::with_bits(24)
    }

    pub fn double() -> Self {
        Self::with_bits(53)
    }

    pub fn quad() -> Self {
        Self::with_bits(113)
    }

    pub fn transc_eps(&self, _kind: TranscKind) -> Rat {
        &self.eps * &self.transc_factor
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    Op(&'static str),
    Input(usize),
    Uncertainty(usize),
    Constant,
    Transc(TranscKind),
    Merge(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ErrorVar {
    pub id: usize,
    pub magnitude: Rat,
    pub provenance: Provenance,
}

/// Expression over the extended index space `0..base` (inputs and locals)
/// followed by `base..base+errors.len()` (error variables).
#[derive(Debug, Clone)]
pub struct RoundedExpr {
    pub body: Expr,
    pub base: usize,
    pub errors: Vec<ErrorVar>,
}

impl RoundedExpr {
    pub fn error_box(&self) -> Vec<Interval> {
        self.errors
            .iter()
            .map(|e| Interval::symmetric(e.magnitude.clone()))
            .collect()
    }

    pub fn error_index(&self, j: usize) -> usize {
        self.base + j
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundingOptions {
    pub input_rounding: bool,
    pub constant_rounding: bool,
    pub neg_error: bool,
    pub merge_products: bool,
}

impl Default for RoundingOptions {
    fn default() -> Self {
        RoundingOptions {
            input_rounding: true,
            constant_rounding: true,
            neg_error: false,
            merge_products: false,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RoundingError {
    #[error("machine epsilon too large for a product chain of length {0}")]
    EpsTooLargeForChain(usize),
}

struct Rounder<'a> {
    format: &'a FpFormat,
    opts: RoundingOptions,
    n_inputs: usize,
    base: usize,
    errors: Vec<ErrorVar>,
    memo: HashMap<Expr, Expr>,
    input_err: HashMap<usize, usize>,
    const_err: HashMap<Rat, usize>,
}

impl<'a> Rounder<'a> {
    fn fresh(&mut self, magnitude: Rat, provenance: Provenance) -> usize {
        let id = self.errors.len();
        self.errors.push(ErrorVar { id, magnitude, provenance });
        id
    }

    /// (1 + e_id)
    fn factor(&self, id: usize) -> Expr {
        Expr::add(Expr::Const(Rat::one()), Expr::Var(self.base + id))
    }

    fn wrap(&mut self, inner: Expr, magnitude: Rat, provenance: Provenance) -> Expr {
        let id = self.fresh(magnitude, provenance);
        Expr::mul(inner, self.factor(id))
    }

    fn round(&mut self, e: &Expr) -> Expr {
        if let Some(hit) = self.memo.get(e) {
            return hit.clone();
        }
        let eps = self.format.eps.clone();
        let out = match e {
            Expr::Const(c) => {
                if self.opts.constant_rounding
                    && !c.is_zero()
                    && !representable_in(c, self.format.precision)
                {
                    let id = *self.const_err.entry(c.clone()).or_insert_with(|| {
                        let id = self.errors.len();
                        self.errors.push(ErrorVar {
                            id,
                            magnitude: eps.clone(),
                            provenance: Provenance::Constant,
                        });
                        id
                    });
                    Expr::mul(Expr::Const(c.clone()), self.factor(id))
                } else {
                    Expr::Const(c.clone())
                }
            }
            Expr::Var(i) => {
                if *i < self.n_inputs && self.opts.input_rounding {
                    let id = *self.input_err.entry(*i).or_insert_with(|| {
                        let id = self.errors.len();
                        self.errors.push(ErrorVar {
                            id,
                            magnitude: eps.clone(),
                            provenance: Provenance::Input(*i),
                        });
                        id
                    });
                    Expr::mul(Expr::Var(*i), self.factor(id))
                } else {
                    Expr::Var(*i)
                }
            }
            Expr::Neg(a) => {
                let inner = Expr::neg(self.round(a));
                if self.opts.neg_error {
                    self.wrap(inner, eps, Provenance::Op("neg"))
                } else {
                    inner
                }
            }
            Expr::Add(a, b) => {
                let inner = Expr::add(self.round(a), self.round(b));
                self.wrap(inner, eps, Provenance::Op("add"))
            }
            Expr::Sub(a, b) => {
                let inner = Expr::sub(self.round(a), self.round(b));
                self.wrap(inner, eps, Provenance::Op("sub"))
            }
            Expr::Mul(a, b) => {
                let inner = Expr::mul(self.round(a), self.round(b));
                self.wrap(inner, eps, Provenance::Op("mul"))
            }
            Expr::Div(a, b) => {
                let inner = Expr::div(self.round(a), self.round(b));
                self.wrap(inner, eps, Provenance::Op("div"))
            }
            Expr::Sqrt(a) => {
                let inner = Expr::Sqrt(Box::new(self.round(a)));
                self.wrap(inner, eps, Provenance::Op("sqrt"))
            }
            Expr::Transc(k, a) => {
                let inner = Expr::Transc(*k, Box::new(self.round(a)));
                let mag = self.format.transc_eps(*k);
                self.wrap(inner, mag, Provenance::Transc(*k))
            }
            Expr::IfThenElse(c, t, el) => Expr::IfThenElse(
                Box::new(self.round(c)),
                Box::new(self.round(t)),
                Box::new(self.round(el)),
            ),
            Expr::Let(v, b, body) => {
                let rb = self.round(b);
                let rbody = self.round(body);
                Expr::Let(*v, Box::new(rb), Box::new(rbody))
            }
        };
        self.memo.insert(e.clone(), out.clone());
        out
    }
}

/// Apply the rounding model to an expression whose variables live in
/// `0..base` (program inputs first). Fresh error variables are indexed
/// from `base`.
pub fn round_expr(
    expr: &Expr,
    n_inputs: usize,
    base: usize,
    format: &FpFormat,
    opts: RoundingOptions,
) -> RoundedExpr {
    let mut r = Rounder {
        format,
        opts,
        n_inputs,
        base,
        errors: Vec::new(),
        memo: HashMap::new(),
        input_err: HashMap::new(),
        const_err: HashMap::new(),
    };
    let body = r.round(expr);
    RoundedExpr { body, base, errors: r.errors }
}

/// Attach a relative uncertainty factor x_i(1+e) to every occurrence of
/// each input with u_i > 0. The error variable is shared across all
/// occurrences of the same input.
pub fn apply_uncertainties(rexpr: &RoundedExpr, u: &[Rat]) -> RoundedExpr {
    let mut errors = rexpr.errors.clone();
    let mut ids: HashMap<usize, usize> = HashMap::new();
    for (i, ui) in u.iter().enumerate() {
        if ui.is_positive() {
            let id = errors.len();
            errors.push(ErrorVar {
                id,
                magnitude: ui.clone(),
                provenance: Provenance::Uncertainty(i),
            });
            ids.insert(i, id);
        }
    }
    if ids.is_empty() {
        return rexpr.clone();
    }
    fn walk(e: &Expr, base: usize, ids: &HashMap<usize, usize>) -> Expr {
        match e {
            Expr::Var(i) => {
                if let Some(&id) = ids.get(i) {
                    Expr::mul(
                        Expr::Var(*i),
                        Expr::add(Expr::Const(Rat::one()), Expr::Var(base + id)),
                    )
                } else {
                    Expr::Var(*i)
                }
            }
            Expr::Const(c) => Expr::Const(c.clone()),
            Expr::Neg(a) => Expr::neg(walk(a, base, ids)),
            Expr::Sqrt(a) => Expr::Sqrt(Box::new(walk(a, base, ids))),
            Expr::Transc(k, a) => Expr::Transc(*k, Box::new(walk(a, base, ids))),
            Expr::Add(a, b) => Expr::add(walk(a, base, ids), walk(b, base, ids)),
            Expr::Sub(a, b) => Expr::sub(walk(a, base, ids), walk(b, base, ids)),
            Expr::Mul(a, b) => Expr::mul(walk(a, base, ids), walk(b, base, ids)),
            Expr::Div(a, b) => Expr::div(walk(a, base, ids), walk(b, base, ids)),
            Expr::IfThenElse(c, t, el) => Expr::IfThenElse(
                Box::new(walk(c, base, ids)),
                Box::new(walk(t, base, ids)),
                Box::new(walk(el, base, ids)),
            ),
            Expr::Let(v, b, body) => Expr::Let(
                *v,
                Box::new(walk(b, base, ids)),
                Box::new(walk(body, base, ids)),
            ),
        }
    }
    RoundedExpr {
        body: walk(&rexpr.body, rexpr.base, &ids),
        base: rexpr.base,
        errors,
    }
}

/// γ_k = kε/(1−kε), the exact Higham bound for ∏(1+e_i) − 1.
pub fn gamma_k(k: usize, eps: &Rat) -> Option<Rat> {
    let ke = Rat::from_integer((k as i64).into()) * eps;
    if ke >= Rat::one() {
        return None;
    }
    Some(&ke / (Rat::one() - &ke))
}

/// Replace products of k ≥ 2 distinct fresh machine-eps error factors by a
/// single factor (1+θ) with |θ| ≤ (k+1)ε. Factors whose error variable is
/// shared elsewhere, or whose magnitude differs from ε, are left alone.
pub fn merge_error_products(
    rexpr: &RoundedExpr,
    eps: &Rat,
) -> Result<RoundedExpr, RoundingError> {
    let m = rexpr.errors.len();
    let mut usage = vec![0usize; m];
    count_usage(&rexpr.body, rexpr.base, &mut usage);

    let mut errors = rexpr.errors.clone();
    let body = merge_walk(&rexpr.body, rexpr.base, eps, &usage, &mut errors)?;

    // compact: drop error variables that no longer occur
    let mut used = vec![false; errors.len()];
    let mut usage2 = vec![0usize; errors.len()];
    count_usage(&body, rexpr.base, &mut usage2);
    for (j, &n) in usage2.iter().enumerate() {
        used[j] = n > 0;
    }
    let mut remap = vec![usize::MAX; errors.len()];
    let mut kept = Vec::new();
    for (j, e) in errors.into_iter().enumerate() {
        if used[j] {
            remap[j] = kept.len();
            kept.push(ErrorVar { id: kept.len(), ..e });
        }
    }
    let body = remap_errors(&body, rexpr.base, &remap);
    Ok(RoundedExpr { body, base: rexpr.base, errors: kept })
}

fn count_usage(e: &Expr, base: usize, usage: &mut [usize]) {
    match e {
        Expr::Var(i) => {
            if *i >= base && *i - base < usage.len() {
                usage[*i - base] += 1;
            }
        }
        Expr::Const(_) => {}
        Expr::Neg(a) | Expr::Sqrt(a) | Expr::Transc(_, a) => count_usage(a, base, usage),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            count_usage(a, base, usage);
            count_usage(b, base, usage);
        }
        Expr::IfThenElse(c, t, el) => {
            count_usage(c, base, usage);
            count_usage(t, base, usage);
            count_usage(el, base, usage);
        }
        Expr::Let(_, b, body) => {
            count_usage(b, base, usage);
            count_usage(body, base, usage);
        }
    }
}

/// If `e` is `1 + e_j`, return j.
fn as_error_factor(e: &Expr, base: usize) -> Option<usize> {
    match e {
        Expr::Add(a, b) => match (&**a, &**b) {
            (Expr::Const(c), Expr::Var(i)) if c.is_one() && *i >= base => Some(*i - base),
            (Expr::Var(i), Expr::Const(c)) if c.is_one() && *i >= base => Some(*i - base),
            _ => None,
        },
        _ => None,
    }
}

fn flatten_mul(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Mul(a, b) => {
            flatten_mul(a, out);
            flatten_mul(b, out);
        }
        other => out.push(other.clone()),
    }
}

fn merge_walk(
    e: &Expr,
    base: usize,
    eps: &Rat,
    usage: &[usize],
    errors: &mut Vec<ErrorVar>,
) -> Result<Expr, RoundingError> {
    match e {
        Expr::Mul(..) => {
            let mut factors = Vec::new();
            flatten_mul(e, &mut factors);
            let mut mergeable = Vec::new();
            let mut rest = Vec::new();
            for f in factors {
                match as_error_factor(&f, base) {
                    Some(j)
                        if j < usage.len()
                            && usage[j] == 1
                            && errors[j].magnitude == *eps =>
                    {
                        mergeable.push(j)
                    }
                    _ => rest.push(f),
                }
            }
            if mergeable.len() >= 2 {
                let k = mergeable.len();
                if gamma_k(k, eps).is_none() {
                    return Err(RoundingError::EpsTooLargeForChain(k));
                }
                let theta_mag = Rat::from_integer(((k + 1) as i64).into()) * eps;
                let id = errors.len();
                errors.push(ErrorVar {
                    id,
                    magnitude: theta_mag,
                    provenance: Provenance::Merge(k),
                });
                rest.push(Expr::add(Expr::Const(Rat::one()), Expr::Var(base + id)));
            } else {
                for j in mergeable {
                    rest.push(Expr::add(Expr::Const(Rat::one()), Expr::Var(base + j)));
                }
            }
            let mut processed: Vec<Expr> = Vec::with_capacity(rest.len());
            for f in rest {
                processed.push(match as_error_factor(&f, base) {
                    Some(_) => f,
                    None => merge_walk(&f, base, eps, usage, errors)?,
                });
            }
            let mut it = processed.into_iter();
            let first = it.next().expect("nonempty product");
            Ok(it.fold(first, Expr::mul))
        }
        Expr::Const(_) | Expr::Var(_) => Ok(e.clone()),
        Expr::Neg(a) => Ok(Expr::neg(merge_walk(a, base, eps, usage, errors)?)),
        Expr::Sqrt(a) => Ok(Expr::Sqrt(Box::new(merge_walk(a, base, eps, usage, errors)?))),
        Expr::Transc(k, a) => Ok(Expr::Transc(
            *k,
            Box::new(merge_walk(a, base, eps, usage, errors)?),
        )),
        Expr::Add(a, b) => Ok(Expr::add(
            merge_walk(a, base, eps, usage, errors)?,
            merge_walk(b, base, eps, usage, errors)?,
        )),
        Expr::Sub(a, b) => Ok(Expr::sub(
            merge_walk(a, base, eps, usage, errors)?,
            merge_walk(b, base, eps, usage, errors)?,
        )),
        Expr::Div(a, b) => Ok(Expr::div(
            merge_walk(a, base, eps, usage, errors)?,
            merge_walk(b, base, eps, usage, errors)?,
        )),
        Expr::IfThenElse(c, t, el) => Ok(Expr::IfThenElse(
            Box::new(merge_walk(c, base, eps, usage, errors)?),
            Box::new(merge_walk(t, base, eps, usage, errors)?),
            Box::new(merge_walk(el, base, eps, usage, errors)?),
        )),
        Expr::Let(v, b, body) => Ok(Expr::Let(
            *v,
            Box::new(merge_walk(b, base, eps, usage, errors)?),
            Box::new(merge_walk(body, base, eps, usage, errors)?),
        )),
    }
}

fn remap_errors(e: &Expr, base: usize, remap: &[usize]) -> Expr {
    match e {
        Expr::Var(i) => {
            if *i >= base && *i - base < remap.len() {
                Expr::Var(base + remap[*i - base])
            } else {
                Expr::Var(*i)
            }
        }
        Expr::Const(c) => Expr::Const(c.clone()),
        Expr::Neg(a) => Expr::neg(remap_errors(a, base, remap)),
        Expr::Sqrt(a) => Expr::Sqrt(Box::new(remap_errors(a, base, remap))),
        Expr::Transc(k, a) => Expr::Transc(*k, Box::new(remap_errors(a, base, remap))),
        Expr::Add(a, b) => Expr::add(remap_errors(a, base, remap), remap_errors(b, base, remap)),
        Expr::Sub(a, b) => Expr::sub(remap_errors(a, base, remap), remap_errors(b, base, remap)),
        Expr::Mul(a, b) => Expr::mul(remap_errors(a, base, remap), remap_errors(b, base, remap)),
        Expr::Div(a, b) => Expr::div(remap_errors(a, base, remap), remap_errors(b, base, remap)),
        Expr::IfThenElse(c, t, el) => Expr::IfThenElse(
            Box::new(remap_errors(c, base, remap)),
            Box::new(remap_errors(t, base, remap)),
            Box::new(remap_errors(el, base, remap)),
        ),
        Expr::Let(v, b, body) => Expr::Let(
            *v,
            Box::new(remap_errors(b, base, remap)),
            Box::new(remap_errors(body, base, remap)),
        ),
    }
}

/// Round a whole program: objective rounding followed by uncertainty
/// factors, with optional Higham merging.
pub fn round_program(
    spec: &ProgramSpec,
    format: &FpFormat,
    opts: RoundingOptions,
) -> Result<RoundedExpr, RoundingError> {
    let rexpr = round_expr(&spec.objective, spec.nvars, spec.total_indices, format, opts);
    let rexpr = apply_uncertainties(&rexpr, &spec.uncertainties);
    if opts.merge_products {
        merge_error_products(&rexpr, &format.eps)
    } else {
        Ok(rexpr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::rational::rat_int;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn v(i: usize) -> Expr {
        Expr::var(i)
    }

    #[test]
    fn one_multiplication_with_input_rounding() {
        let f = FpFormat::double();
        let r = round_expr(
            &Expr::mul(v(0), v(1)),
            2,
            2,
            &f,
            RoundingOptions { input_rounding: true, ..Default::default() },
        );
        assert_eq!(r.errors.len(), 3);
        for e in &r.errors {
            assert_eq!(e.magnitude, f.eps);
        }
    }

    #[test]
    fn kepler0_error_count_matches_op_census() {
        let src = "\
let box_kepler0 x1 x2 x3 x4 x5 x6 = [(4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36)];;
let obj_kepler0 x1 x2 x3 x4 x5 x6 = [(x2 * x5 + x3 * x6 - x2 * x3 - x5 * x6 + x1 * ( - x1 + x2 + x3 - x4 + x5 + x6), 0)];;";
        let spec = parse_program(src).unwrap();
        let f = FpFormat::single();
        let no_inputs = RoundingOptions {
            input_rounding: false,
            constant_rounding: true,
            neg_error: false,
            merge_products: false,
        };
        // 3 subtractions, 6 additions, 5 multiplications
        let r = round_expr(&spec.objective, 6, 6, &f, no_inputs);
        assert_eq!(r.errors.len(), 14);
        // counting the negation as a basic operation brings it to 15
        let with_neg = RoundingOptions { neg_error: true, ..no_inputs };
        let r15 = round_expr(&spec.objective, 6, 6, &f, with_neg);
        assert_eq!(r15.errors.len(), 15);
    }

    #[test]
    fn transcendental_error_magnitudes() {
        // log(1 + exp(x)): e_exp ≤ 1.5ε, e_add ≤ ε, e_log ≤ 1.5ε
        let f = FpFormat::double();
        let e = Expr::Transc(
            TranscKind::Log,
            Box::new(Expr::add(
                Expr::Const(Rat::one()),
                Expr::Transc(TranscKind::Exp, Box::new(v(0))),
            )),
        );
        let r = round_expr(
            &e,
            1,
            1,
            &f,
            RoundingOptions { input_rounding: false, ..Default::default() },
        );
        let mags: Vec<Rat> = r.errors.iter().map(|e| e.magnitude.clone()).collect();
        let t = f.transc_eps(TranscKind::Exp);
        assert_eq!(mags, vec![t.clone(), f.eps.clone(), t]);
    }

    #[test]
    fn zero_error_collapse_on_random_points() {
        let src = "\
let box_k x1 x2 x3 x4 x5 x6 = [(4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36)];;
let obj_k x1 x2 x3 x4 x5 x6 = [(x2 * x5 + x3 * x6 - x2 * x3 - x5 * x6 + x1 * ( - x1 + x2 + x3 - x4 + x5 + x6), 0)];;";
        let spec = parse_program(src).unwrap();
        let f = FpFormat::double();
        let r = round_program(&spec, &f, RoundingOptions::default()).unwrap();
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..100 {
            let mut env: Vec<Rat> = (0..6)
                .map(|_| rat_int(4) + Rat::new(rng.gen_range(0..236).into(), 100.into()))
                .collect();
            let fx = spec.objective.eval(&env).unwrap();
            env.resize(r.base + r.errors.len(), Rat::zero());
            let fhat = r.body.eval(&env).unwrap();
            assert_eq!(fx, fhat);
        }
    }

    #[test]
    fn model_soundness_on_sampled_points_via_corner_enumeration() {
        // f = (x*y) + x over [1,2]^2 in f64; the admissible error region of
        // the model must cover the actually observed machine error.
        let src = "\
let box_m x y = [(1, 2); (1, 2)];;
let obj_m x y = [((x*y) + x, 0)];;";
        let spec = parse_program(src).unwrap();
        let f = FpFormat::double();
        let r = round_program(&spec, &f, RoundingOptions::default()).unwrap();
        let m = r.errors.len();
        assert!(m <= 8);
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let xf = 1.0 + rng.gen::<f64>();
            let yf = 1.0 + rng.gen::<f64>();
            let x = crate::rational::f64_to_rat(xf).unwrap();
            let y = crate::rational::f64_to_rat(yf).unwrap();
            let exact = spec.objective.eval(&[x.clone(), y.clone()]).unwrap();
            let machine = crate::rational::f64_to_rat(xf * yf + xf).unwrap();
            let observed = (&machine - &exact).abs();
            // maximize |body - f| over corners of the error box
            let mut best = Rat::zero();
            for mask in 0..(1usize << m) {
                let mut env = vec![x.clone(), y.clone()];
                for j in 0..m {
                    let s = if mask >> j & 1 == 1 { 1 } else { -1 };
                    env.push(Rat::from_integer(s.into()) * &r.errors[j].magnitude);
                }
                let val = (r.body.eval(&env).unwrap() - &exact).abs();
                if val > best {
                    best = val;
                }
            }
            assert!(
                observed <= &best + pow2(-1000),
                "model does not cover machine error: {observed} > {best}"
            );
        }
    }

    #[test]
    fn higham_merging() {
        let f = FpFormat::double();
        // ((x*y)*z): product chain of three eps factors around x·y·z
        let e = Expr::mul(Expr::mul(v(0), v(1)), v(2));
        let r = round_expr(
            &e,
            3,
            3,
            &f,
            RoundingOptions { input_rounding: false, ..Default::default() },
        );
        assert_eq!(r.errors.len(), 2);
        let merged = merge_error_products(&r, &f.eps).unwrap();
        assert_eq!(merged.errors.len(), 1);
        assert_eq!(merged.errors[0].magnitude, &f.eps * rat_int(3));
        assert_eq!(merged.errors[0].provenance, Provenance::Merge(2));

        // single factor stays as-is
        let single = round_expr(
            &Expr::mul(v(0), v(1)),
            3,
            3,
            &f,
            RoundingOptions { input_rounding: false, ..Default::default() },
        );
        let kept = merge_error_products(&single, &f.eps).unwrap();
        assert_eq!(kept.errors.len(), 1);
        assert_eq!(kept.errors[0].magnitude, f.eps);
    }

    #[test]
    fn gamma_k_tight_bound_below_k_plus_one_eps() {
        let eps = pow2(-53);
        let g3 = gamma_k(3, &eps).unwrap();
        assert!(g3 < rat_int(4) * &eps);
        assert!(g3 > rat_int(3) * &eps);
        assert!(gamma_k(1 << 53, &eps).is_none());
    }

    #[test]
    fn merged_model_value_set_contains_unmerged() {
        // At sampled x, every value reachable with the unmerged errors must
        // be reachable within the merged model's box (corner enumeration).
        let f = FpFormat::with_bits(10); // coarse eps to make effects visible
        let e = Expr::mul(Expr::mul(v(0), v(1)), v(2));
        let r = round_expr(
            &e,
            3,
            3,
            &f,
            RoundingOptions { input_rounding: false, ..Default::default() },
        );
        let merged = merge_error_products(&r, &f.eps).unwrap();
        let x = [rat_int(2), rat_int(3), rat_int(5)];
        let m_un = r.errors.len();
        let mut lo = None::<Rat>;
        let mut hi = None::<Rat>;
        for mask in 0..(1usize << merged.errors.len()) {
            let mut env = x.to_vec();
            for j in 0..merged.errors.len() {
                let s = if mask >> j & 1 == 1 { 1 } else { -1 };
                env.push(Rat::from_integer(s.into()) * &merged.errors[j].magnitude);
            }
            let val = merged.body.eval(&env).unwrap();
            lo = Some(lo.map_or(val.clone(), |l: Rat| l.min(val.clone())));
            hi = Some(hi.map_or(val.clone(), |h: Rat| h.max(val)));
        }
        let (lo, hi) = (lo.unwrap(), hi.unwrap());
        for mask in 0..(1usize << m_un) {
            let mut env = x.to_vec();
            for j in 0..m_un {
                let s = if mask >> j & 1 == 1 { 1 } else { -1 };
                env.push(Rat::from_integer(s.into()) * &r.errors[j].magnitude);
            }
            let val = r.body.eval(&env).unwrap();
            assert!(lo <= val && val <= hi);
        }
    }

    #[test]
    fn uncertainty_application() {
        let f = FpFormat::double();
        // zero uncertainties leave the expression alone
        let r = round_expr(
            &v(0),
            1,
            1,
            &f,
            RoundingOptions { input_rounding: false, ..Default::default() },
        );
        let same = apply_uncertainties(&r, &[Rat::zero()]);
        assert_eq!(same.errors.len(), 0);

        // n=1, u=1e-4: x(1+e)
        let u = crate::rational::parse_decimal("1e-4").unwrap();
        let one = apply_uncertainties(&r, &[u.clone()]);
        assert_eq!(one.errors.len(), 1);
        assert_eq!(one.errors[0].magnitude, u);

        // n=2, u=(1e-4, 0), x1+x2 with one add
        let r2 = round_expr(
            &Expr::add(v(0), v(1)),
            2,
            2,
            &f,
            RoundingOptions { input_rounding: false, ..Default::default() },
        );
        let two = apply_uncertainties(&r2, &[u.clone(), Rat::zero()]);
        let mags: Vec<Rat> = two.errors.iter().map(|e| e.magnitude.clone()).collect();
        assert_eq!(mags, vec![f.eps.clone(), u]);
    }
}
