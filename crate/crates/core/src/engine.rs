//! Analysis engine: decomposition of the roundoff error into a part
//! linear in the error variables and a second-order remainder, lifting of
//! semialgebraic and transcendental subterms to polynomial systems,
//! relaxation solving for the linear part, interval bounding of the
//! remainder, conditional handling, and box subdivision.

use crate::expr::{ia_bound, ia_bound_subdiv, Expr, ExprError, TranscKind};
use crate::interval::{apply_unary, Interval, IntervalError};
use crate::polynomial::Poly;
use crate::program::{ProgramSpec, ValidationError};
use crate::rational::{rat, rat_int, rat_to_f64, Rat};
use crate::rounding::{round_expr, apply_uncertainties, merge_error_products, FpFormat, RoundedExpr, RoundingOptions};
use crate::sdp::{solve, SdpProblem, SdpStatus, SolveParams};
use crate::sos::{
    build_linear_part, default_order, ConstraintSet, DomainScaling, SosProgram,
};
use crate::certify::{extract_certificate, SosCertificate};
use num::traits::{One, Signed, Zero};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Sos(#[from] crate::sos::SosError),
    #[error(transparent)]
    Rounding(#[from] crate::rounding::RoundingError),
    #[error("division by an interval containing zero while lifting `{0}`")]
    DivisionByZeroInLift(String),
    #[error("nested conditionals are not supported")]
    NestedConditional,
    #[error("analysis failed: {0}")]
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverBackend {
    Embedded,
    /// write .dat-s problem files into a directory and read back
    /// `<name>.result` files produced by an external SDPA-compatible solver
    SdpaFiles,
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub format: FpFormat,
    pub rounding: RoundingOptions,
    /// relaxation order; None uses the minimal order d0
    pub order: Option<usize>,
    /// number of leaf analyses the subdivision may spend (1 = no split)
    pub subdivide_budget: usize,
    pub certify: bool,
    /// error-variable count above which the joint relaxation is replaced
    /// by per-term interval bounding (sound, coarser)
    pub max_joint_errors: usize,
    pub solve_params: SolveParams,
    /// maxplus sample point count per transcendental node (≥ 2)
    pub maxplus_points: usize,
    /// merit threshold for accepting a non-Optimal solver answer
    pub accept_merit: f64,
    /// use the reduced coupled-block bases in the linear-part relaxation
    pub reduced_basis: bool,
    /// bridge to an external SDPA-format solver through files in this
    /// directory instead of the embedded solver
    pub sdpa_dir: Option<std::path::PathBuf>,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            format: FpFormat::double(),
            rounding: RoundingOptions::default(),
            order: None,
            subdivide_budget: 1,
            certify: false,
            max_joint_errors: 64,
            // the engine's bounds go through residual correction or full
            // certification, so it trades the last digit of solver
            // precision for fewer iterations
            solve_params: SolveParams { gap_tol: 3e-5, feas_tol: 1e-7, max_iter: 120 },
            maxplus_points: 3,
            accept_merit: 1e-3,
            reduced_basis: true,
            sdpa_dir: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundResult {
    /// sound enclosure of f̂ − f over the domain
    pub interval: Interval,
    /// max(−lo, hi)
    pub bound: Rat,
    pub order: usize,
    pub error_vars: usize,
    pub fallbacks: Vec<String>,
    pub certificates: Vec<SosCertificate>,
    /// enclosure split for reporting: linear part and remainder
    pub linear_part: Interval,
    pub remainder: Interval,
}

impl BoundResult {
    fn from_parts(
        linear: Interval,
        remainder: Interval,
        order: usize,
        error_vars: usize,
        fallbacks: Vec<String>,
        certificates: Vec<SosCertificate>,
    ) -> Self {
        let interval = linear.add(&remainder);
        let bound = interval.mag();
        BoundResult {
            interval,
            bound,
            order,
            error_vars,
            fallbacks,
            certificates,
            linear_part: linear,
            remainder,
        }
    }
}

/// The error decomposition r = c(x) + Σ s_j(x)·e_j + h of one rounded
/// expression against exact semantics.
#[derive(Debug)]
pub struct ErrorDecomposition {
    /// constant part r(x,0); zero except across branch discontinuities
    pub constant_part: Expr,
    /// coefficient expressions s_j = ∂r/∂e_j at e = 0
    pub coefficients: Vec<Expr>,
    pub magnitudes: Vec<Rat>,
    /// enclosure of the second-order Taylor remainder
    pub remainder: Interval,
}

fn zero_errors(e: &Expr, from: usize) -> Expr {
    fn go(e: &Expr, from: usize) -> Expr {
        match e {
            Expr::Var(i) if *i >= from => Expr::Const(Rat::zero()),
            Expr::Const(_) | Expr::Var(_) => e.clone(),
            Expr::Neg(a) => Expr::neg(go(a, from)),
            Expr::Sqrt(a) => Expr::Sqrt(Box::new(go(a, from))),
            Expr::Transc(k, a) => Expr::Transc(*k, Box::new(go(a, from))),
            Expr::Add(a, b) => Expr::add(go(a, from), go(b, from)),
            Expr::Sub(a, b) => Expr::sub(go(a, from), go(b, from)),
            Expr::Mul(a, b) => Expr::mul(go(a, from), go(b, from)),
            Expr::Div(a, b) => Expr::div(go(a, from), go(b, from)),
            Expr::IfThenElse(c, t, el) => Expr::IfThenElse(
                Box::new(go(c, from)),
                Box::new(go(t, from)),
                Box::new(go(el, from)),
            ),
            Expr::Let(v, b, body) => {
                Expr::Let(*v, Box::new(go(b, from)), Box::new(go(body, from)))
            }
        }
    }
    go(e, from).simplify()
}

/// Build the decomposition of `rounded` against `exact`, including the
/// Taylor remainder bound ½ Σ_{i,j} sup|∂²r/∂e_i∂e_j|·b_i·b_j.
pub fn decompose_error(
    exact: &Expr,
    rounded: &RoundedExpr,
    domain: &[Interval],
) -> Result<ErrorDecomposition, EngineError> {
    let base = rounded.base;
    let m = rounded.errors.len();
    let constant_part = Expr::sub(zero_errors(&rounded.body, base), exact.clone()).simplify();
    let mut coefficients = Vec::with_capacity(m);
    for j in 0..m {
        let d = rounded.body.symbolic_diff(base + j)?;
        coefficients.push(zero_errors(&d, base));
    }
    let magnitudes: Vec<Rat> = rounded.errors.iter().map(|e| e.magnitude.clone()).collect();
    let remainder = taylor_remainder_bound(rounded, domain)?;
    Ok(ErrorDecomposition { constant_part, coefficients, magnitudes, remainder })
}

/// Interval enclosure of the second-order remainder h = r − l via the
/// Lagrange form: [−B, B] with B = ½ Σ_{i,j} sup_K |∂²r/∂e_i∂e_j|·b_i·b_j.
pub fn taylor_remainder_bound(
    rounded: &RoundedExpr,
    domain: &[Interval],
) -> Result<Interval, EngineError> {
    let base = rounded.base;
    let m = rounded.errors.len();
    // evaluation domain: x box padded to the let-index range, then the
    // error box (lets are inlined by differentiation, pads are inert)
    let mut full = domain.to_vec();
    full.resize(base, Interval::zero());
    for e in &rounded.errors {
        full.push(Interval::symmetric(e.magnitude.clone()));
    }
    let mut b_total = Rat::zero();
    for i in 0..m {
        let di = rounded.body.symbolic_diff(base + i)?;
        if di.is_zero_const() {
            continue;
        }
        let vars = di.free_vars();
        for j in i..m {
            if !vars.contains(&(base + j)) {
                continue;
            }
            let dij = di.symbolic_diff(base + j)?;
            if dij.is_zero_const() {
                continue;
            }
            let sup = ia_bound(&dij, &full)?.mag();
            let weight = if i == j { rat_int(1) } else { rat_int(2) };
            b_total += sup
                * weight
                * &rounded.errors[i].magnitude
                * &rounded.errors[j].magnitude;
        }
    }
    b_total /= rat_int(2);
    Ok(Interval::symmetric(b_total))
}

// --- maxplus approximation of transcendental nodes ----------------------

/// Quadratic sandwich of one univariate transcendental function on an
/// interval: each lower piece satisfies f(x) ≥ q(x) on the interval and
/// each upper piece f(x) ≤ q(x); pieces are tangent at the sample points
/// up to enclosure slack.
#[derive(Debug, Clone)]
pub struct MaxplusApprox {
    pub kind: TranscKind,
    pub interval: Interval,
    pub points: Vec<Rat>,
    pub gamma_lower: Rat,
    pub gamma_upper: Rat,
    /// univariate quadratics in variable 0
    pub lower: Vec<Poly>,
    pub upper: Vec<Poly>,
}

fn kind_expr(kind: TranscKind) -> Expr {
    Expr::Transc(kind, Box::new(Expr::Var(0)))
}

pub fn transc_approx(
    kind: TranscKind,
    iv: &Interval,
    points: &[Rat],
) -> Result<MaxplusApprox, EngineError> {
    assert!(!points.is_empty());
    let f = kind_expr(kind);
    let df = f.symbolic_diff(0)?;
    let ddf = df.symbolic_diff(0)?;
    let dom = vec![iv.clone()];
    let dd_range = ia_bound_subdiv(&ddf, &dom, 6)?;
    // γ₋ ≥ sup(−f″), γ₊ ≥ sup(f″); either may be negative
    let gamma_lower = dd_range.neg().hi;
    let gamma_upper = dd_range.hi;
    let radius = |a: &Rat| (&iv.lo - a).abs().max((&iv.hi - a).abs());
    let mut lower = Vec::with_capacity(points.len());
    let mut upper = Vec::with_capacity(points.len());
    for a in points {
        let fa = f.eval_enclosure(&[a.clone()])?;
        let da = df.eval_enclosure(&[a.clone()])?;
        let mid = da.midpoint();
        let slack = da.width() / rat_int(2) * radius(a);
        // q(x) = ∓γ/2·(x−a)² + f'(a)(x−a) + f(a) with outward endpoints
        let delta = Poly::var(1, 0).sub(&Poly::constant(1, a.clone()));
        let d2 = delta.mul(&delta);
        let lo_piece = d2
            .scale(&(-&gamma_lower / rat_int(2)))
            .add(&delta.scale(&mid))
            .add(&Poly::constant(1, &fa.lo - &slack));
        let up_piece = d2
            .scale(&(gamma_upper.clone() / rat_int(2)))
            .add(&delta.scale(&mid))
            .add(&Poly::constant(1, &fa.hi + &slack));
        lower.push(lo_piece);
        upper.push(up_piece);
    }
    Ok(MaxplusApprox {
        kind,
        interval: iv.clone(),
        points: points.to_vec(),
        gamma_lower,
        gamma_upper,
        lower,
        upper,
    })
}

/// Default sample points: endpoints plus evenly spaced interior points.
pub fn maxplus_points(iv: &Interval, count: usize) -> Vec<Rat> {
    let count = count.max(2);
    let w = iv.width();
    if w.is_zero() {
        return vec![iv.lo.clone()];
    }
    (0..count)
        .map(|k| &iv.lo + &w * rat(k as i64, (count - 1) as i64))
        .collect()
}

// --- lifting -------------------------------------------------------------

/// Reduction of semialgebraic/transcendental expressions to polynomials
/// over an extended variable space with range and defining constraints.
pub struct LiftContext<'a> {
    /// original input box (x variables only)
    pub domain: &'a [Interval],
    pub nvars: usize,
    /// bounds of all poly variables: inputs then lifting variables
    pub bounds: Vec<Interval>,
    /// defining/sandwich constraints, each g ≥ 0 over the lifted space
    pub constraints: Vec<Poly>,
    memo: HashMap<Expr, Poly>,
    maxplus_count: usize,
    pub approximations: Vec<MaxplusApprox>,
}

impl<'a> LiftContext<'a> {
    pub fn new(domain: &'a [Interval], maxplus_count: usize) -> Self {
        LiftContext {
            domain,
            nvars: domain.len(),
            bounds: domain.to_vec(),
            constraints: Vec::new(),
            memo: HashMap::new(),
            maxplus_count,
            approximations: Vec::new(),
        }
    }

    fn fresh_var(&mut self, bound: Interval) -> usize {
        let idx = self.bounds.len();
        self.bounds.push(bound);
        idx
    }

    fn range_of(&self, e: &Expr) -> Result<Interval, EngineError> {
        Ok(ia_bound_subdiv(e, self.domain, 7)?)
    }

    /// Lift `e` (over the original x variables, lets inlined) to a
    /// polynomial over the extended space.
    pub fn lift(&mut self, e: &Expr) -> Result<Poly, EngineError> {
        if let Some(hit) = self.memo.get(e) {
            return Ok(widen(hit, self.bounds.len()));
        }
        let out = match e {
            Expr::Const(c) => Poly::constant(self.bounds.len(), c.clone()),
            Expr::Var(i) => Poly::var(self.bounds.len().max(i + 1), *i),
            Expr::Neg(a) => self.lift(a)?.neg(),
            Expr::Add(a, b) => {
                let pa = self.lift(a)?;
                let pb = self.lift(b)?;
                widen(&pa, self.bounds.len()).add(&widen(&pb, self.bounds.len()))
            }
            Expr::Sub(a, b) => {
                let pa = self.lift(a)?;
                let pb = self.lift(b)?;
                widen(&pa, self.bounds.len()).sub(&widen(&pb, self.bounds.len()))
            }
            Expr::Mul(a, b) => {
                let pa = self.lift(a)?;
                let pb = self.lift(b)?;
                widen(&pa, self.bounds.len()).mul(&widen(&pb, self.bounds.len()))
            }
            Expr::Div(a, b) => {
                let pa = self.lift(a)?;
                let pb = self.lift(b)?;
                let pb = widen(&pb, self.bounds.len());
                if pb.total_degree() == 0 {
                    let c = pb.constant_term();
                    if c.is_zero() {
                        return Err(EngineError::DivisionByZeroInLift(format!("{e:?}")));
                    }
                    widen(&pa, self.bounds.len()).scale(&(Rat::one() / c))
                } else {
                    let denom_range = self.range_of(b)?;
                    if denom_range.contains_zero() {
                        return Err(EngineError::DivisionByZeroInLift(
                            b.pretty(&|i| format!("x{i}")),
                        ));
                    }
                    let range = self.range_of(e)?;
                    let t = self.fresh_var(range);
                    let nv = self.bounds.len();
                    let tvar = Poly::var(nv, t);
                    // t·denominator = numerator, as two inequalities
                    let eqn = tvar.mul(&widen(&pb, nv)).sub(&widen(&pa, nv));
                    self.constraints.push(eqn.clone());
                    self.constraints.push(eqn.neg());
                    tvar
                }
            }
            Expr::Sqrt(a) => {
                let pa = self.lift(a)?;
                let arg_range = self.range_of(a)?;
                if arg_range.lo.is_negative() {
                    return Err(EngineError::Interval(IntervalError::DomainViolation("sqrt")));
                }
                let mut range = self.range_of(e)?;
                if range.lo.is_negative() {
                    range.lo = Rat::zero();
                }
                let t = self.fresh_var(range);
                let nv = self.bounds.len();
                let tvar = Poly::var(nv, t);
                let eqn = tvar.mul(&tvar).sub(&widen(&pa, nv));
                self.constraints.push(eqn.clone());
                self.constraints.push(eqn.neg());
                tvar
            }
            Expr::Transc(kind, a) => {
                let pa = self.lift(a)?;
                let arg_range = ia_bound_subdiv(a, self.domain, 7)?;
                let points = maxplus_points(&arg_range, self.maxplus_count);
                let approx = transc_approx(*kind, &arg_range, &points)?;
                let range = apply_unary(kind.unary_op(), &arg_range)?;
                let t = self.fresh_var(range);
                let nv = self.bounds.len();
                let tvar = Poly::var(nv, t);
                let pa = widen(&pa, nv);
                for piece in &approx.lower {
                    // t ≥ q(arg): t − q∘arg ≥ 0
                    let composed = compose_univariate(piece, &pa, nv);
                    self.constraints.push(tvar.sub(&composed));
                }
                for piece in &approx.upper {
                    let composed = compose_univariate(piece, &pa, nv);
                    self.constraints.push(composed.sub(&tvar));
                }
                self.approximations.push(approx);
                tvar
            }
            Expr::Let(..) => {
                return Err(EngineError::Other(
                    "lets must be inlined before lifting".to_string(),
                ))
            }
            Expr::IfThenElse(..) => return Err(EngineError::NestedConditional),
        };
        self.memo.insert(e.clone(), out.clone());
        Ok(out)
    }
}

fn widen(p: &Poly, nvars: usize) -> Poly {
    if p.nvars >= nvars {
        p.clone()
    } else {
        p.with_nvars(nvars)
    }
}

/// q(y) with y := inner, for univariate q over variable 0.
fn compose_univariate(q: &Poly, inner: &Poly, nvars: usize) -> Poly {
    let mut acc = Poly::zero(nvars);
    for (m, c) in &q.terms {
        let k = m.exponent(0);
        let mut term = Poly::constant(nvars, c.clone());
        for _ in 0..k {
            term = term.mul(inner);
        }
        acc = acc.add(&term);
    }
    acc
}

// --- the sdp_poly procedure ---------------------------------------------

#[derive(Debug)]
pub struct LinearPartOutcome {
    pub interval: Interval,
    pub fallbacks: Vec<String>,
    pub certificates: Vec<SosCertificate>,
    pub order: usize,
}

/// Scaled (unit-box) form of the linear part: the folded objective over
/// nx+m variables, the scaled extra constraints, and the fold-back factor.
pub struct ScaledLinearPart {
    pub objective: Poly,
    pub extra_scaled: Vec<Poly>,
    pub scale_back: Rat,
    pub nx: usize,
    pub m: usize,
}

pub fn scale_linear_part(
    const_part: &Poly,
    s_polys: &[Poly],
    magnitudes: &[Rat],
    bounds: &[Interval],
    extra_constraints: &[Poly],
) -> ScaledLinearPart {
    let nx = bounds.len();
    let m = s_polys.len();
    debug_assert_eq!(m, magnitudes.len());
    // fold per-error magnitudes: l = b_max · (c/b_max + Σ (b_j/b_max) s_j e'_j)
    let b_max = magnitudes
        .iter()
        .cloned()
        .fold(Rat::zero(), |a, b| a.max(b));
    let scale_back = if b_max.is_zero() { Rat::one() } else { b_max.clone() };
    let scaling = DomainScaling::from_box(bounds);
    let nv = nx + m;
    let mut objective = scaling
        .to_unit(const_part)
        .scale(&(Rat::one() / &scale_back))
        .with_nvars(nv);
    for (j, s) in s_polys.iter().enumerate() {
        let w = &magnitudes[j] / &scale_back;
        if w.is_zero() {
            continue;
        }
        let su = scaling.to_unit(s).scale(&w).with_nvars(nv);
        let evar = Poly::var(nv, nx + j);
        objective = objective.add(&su.mul(&evar));
    }
    let extra_scaled: Vec<Poly> = extra_constraints
        .iter()
        .map(|g| scaling.to_unit(g))
        .collect();
    ScaledLinearPart { objective, extra_scaled, scale_back, nx, m }
}

/// Sound enclosure of l = c(x) + Σ s_j(x)·e_j over X × ∏[−b_j, b_j] by
/// two sparse relaxations (upper and lower), after scaling every variable
/// to [−1,1]. Falls back to interval evaluation per side on solver
/// trouble; the SDP result is always intersected with the interval bound.
#[allow(clippy::too_many_arguments)]
pub fn sdp_poly(
    const_part: &Poly,
    s_polys: &[Poly],
    magnitudes: &[Rat],
    bounds: &[Interval],
    extra_constraints: &[Poly],
    d: usize,
    opts: &AnalysisOptions,
    tag: &str,
) -> Result<LinearPartOutcome, EngineError> {
    let scaled = scale_linear_part(const_part, s_polys, magnitudes, bounds, extra_constraints);
    let ScaledLinearPart { objective, extra_scaled, scale_back, nx, m } = scaled;
    let scaling = DomainScaling::from_box(bounds);
    let unit = scaling.unit_domain();
    let nv = nx + m;

    // interval bound of the scaled objective over the unit box (sound
    // outer enclosure, also the fallback)
    let unit_full: Vec<Interval> = (0..nv)
        .map(|_| Interval::new(rat_int(-1), rat_int(1)))
        .collect();
    let ia_enclosure = objective.evaluate_interval(&unit_full);

    let mut fallbacks = Vec::new();
    let mut certificates = Vec::new();

    let joint_ok = m <= opts.max_joint_errors && !objective.is_zero();
    let mut lo = ia_enclosure.lo.clone();
    let mut hi = ia_enclosure.hi.clone();
    let mut order_used = d;
    if joint_ok {
        let mut ks = ConstraintSet::from_box_no_ball(&unit, &extra_scaled);
        ks.archimedean_m = rat_int(nx as i64);
        ks.var_bound = Rat::one();
        let max_deg = objective
            .total_degree()
            .max(ks.max_degree())
            .max(2) as usize;
        let d_eff = d.max(max_deg.div_ceil(2));
        order_used = d_eff;
        // lower side
        match solve_side(&objective, nx, m, &ks, d_eff, opts, &format!("{tag}-min")) {
            Ok((val, cert)) => {
                if val > lo {
                    lo = val;
                }
                if let Some(c) = cert {
                    certificates.push(c);
                }
            }
            Err(note) => fallbacks.push(format!("{tag}-min: {note}")),
        }
        // upper side via the negated objective
        match solve_side(&objective.neg(), nx, m, &ks, d_eff, opts, &format!("{tag}-max")) {
            Ok((val, cert)) => {
                let upper = -val;
                if upper < hi {
                    hi = upper;
                }
                if let Some(c) = cert {
                    certificates.push(c);
                }
            }
            Err(note) => fallbacks.push(format!("{tag}-max: {note}")),
        }
    } else if m > opts.max_joint_errors {
        fallbacks.push(format!(
            "{tag}: {m} error variables exceed joint limit, interval bound used"
        ));
    }
    if lo > hi {
        // numerically crossed bounds: retreat to the interval enclosure
        lo = ia_enclosure.lo.clone();
        hi = ia_enclosure.hi.clone();
        fallbacks.push(format!("{tag}: crossed bounds, interval enclosure used"));
    }
    Ok(LinearPartOutcome {
        interval: Interval::new(lo, hi).scale(&scale_back),
        fallbacks,
        certificates,
        order: order_used,
    })
}

/// Solve one lower-bound relaxation; returns a sound rational lower bound
/// (certified exactly under --certify, float-corrected otherwise).
fn solve_side(
    objective: &Poly,
    nx: usize,
    m: usize,
    ks: &ConstraintSet,
    d: usize,
    opts: &AnalysisOptions,
    name: &str,
) -> Result<(Rat, Option<SosCertificate>), String> {
    let t_build = std::time::Instant::now();
    let prog = build_linear_part(objective, nx, m, ks, d, opts.reduced_basis)
        .map_err(|e| e.to_string())?;
    let sdp = prog.to_sdp();
    let d_build = t_build.elapsed();
    let t_solve = std::time::Instant::now();
    let sol = match &opts.sdpa_dir {
        None => solve(&sdp, &opts.solve_params),
        Some(dir) => solve_via_sdpa_files(&sdp, dir, name)?,
    };
    if std::env::var("FPSOS_PROF").is_ok() {
        eprintln!("  build {:?} solve {:?} iters {}", d_build, t_solve.elapsed(), sol.iterations);
    }
    let usable = matches!(sol.status, SdpStatus::Optimal)
        || (matches!(sol.status, SdpStatus::IterationLimit | SdpStatus::NumericalTrouble)
            && sol.merit() <= opts.accept_merit);
    if !usable {
        return Err(format!("solver status {:?} merit {:.2e}", sol.status, sol.merit()));
    }
    if opts.certify {
        let unit: Vec<Interval> = (0..prog.nvars)
            .map(|_| Interval::new(rat_int(-1), rat_int(1)))
            .collect();
        let cert = extract_certificate(&sol, &prog, name, &unit).map_err(|e| e.to_string())?;
        let bound = cert.certified_bound();
        Ok((bound, Some(cert)))
    } else {
        Ok((float_corrected_bound(&prog, &sdp, &sol), None))
    }
}

/// File bridge to an external SDPA-compatible solver: writes
/// `<name>.dat-s` into `dir` and expects `<name>.result` alongside it.
fn solve_via_sdpa_files(
    sdp: &SdpProblem,
    dir: &std::path::Path,
    name: &str,
) -> Result<crate::sdp::SdpSolution, String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let problem_path = dir.join(format!("{name}.dat-s"));
    let text = crate::sdp::sdpa::export_sdpa_sparse(sdp, true);
    std::fs::write(&problem_path, text).map_err(|e| e.to_string())?;
    let result_path = dir.join(format!("{name}.result"));
    let result_text = std::fs::read_to_string(&result_path).map_err(|_| {
        format!(
            "wrote {}; run your SDPA solver and place its output at {}",
            problem_path.display(),
            result_path.display()
        )
    })?;
    let mut sol = crate::sdp::sdpa::parse_sdpa_solution(&result_text, &sdp.block_dims)
        .map_err(|e| e.to_string())?;
    // recompute ⟨C,X⟩ and the bound from the parsed blocks
    let mut cx = 0.0;
    for e in &sdp.cost {
        let mult = if e.i == e.j { 1.0 } else { 2.0 };
        cx += rat_to_f64(&e.value) * mult * sol.primal_blocks[e.block][(e.i, e.j)];
    }
    sol.primal_objective = cx;
    sol.bound = rat_to_f64(&sdp.obj_const) - cx;
    Ok(sol)
}

/// Sound-modulo-f64 lower bound: subtract the worst-case effect of the
/// residual of each coefficient equation (monomials over the unit box
/// have magnitude ≤ 1).
fn float_corrected_bound(prog: &SosProgram, sdp: &SdpProblem, sol: &crate::sdp::SdpSolution) -> Rat {
    let mut resid = 0.0f64;
    for (p, a) in sdp.cons.iter().enumerate() {
        let mut v = 0.0;
        for e in a {
            let q = sol.primal_blocks[e.block][(e.i, e.j)];
            let mult = if e.i == e.j { 1.0 } else { 2.0 };
            v += rat_to_f64(&e.value) * mult * q;
        }
        resid += (rat_to_f64(&sdp.rhs[p]) - v).abs();
    }
    let _ = prog;
    let corrected = sol.bound - resid * 1.05 - 1e-12 * (1.0 + sol.bound.abs());
    crate::rational::f64_to_rat(corrected).unwrap_or_else(Rat::zero)
}

// --- bound (conditional-free programs) -----------------------------------

/// Lifted polynomial system of one error decomposition.
pub struct LinearSystem {
    pub const_poly: Poly,
    pub s_polys: Vec<Poly>,
    /// constraints over the lifted space (lift equalities, sandwiches,
    /// and the program's own preconditions)
    pub extra: Vec<Poly>,
    /// bounds of inputs and lifting variables
    pub bounds: Vec<Interval>,
    pub d_eff: usize,
}

fn build_linear_system(
    decomp: &ErrorDecomposition,
    domain: &[Interval],
    constraints: &[Expr],
    d: Option<usize>,
    opts: &AnalysisOptions,
) -> Result<LinearSystem, EngineError> {
    let inline_const = decomp.constant_part.inline_lets();
    let mut ctx = LiftContext::new(domain, opts.maxplus_points);
    let const_poly = ctx.lift(&inline_const)?;
    let mut s_polys = Vec::with_capacity(decomp.coefficients.len());
    for s in &decomp.coefficients {
        let p = ctx.lift(&s.inline_lets())?;
        s_polys.push(p);
    }
    let nx = ctx.bounds.len();
    let const_poly = widen(&const_poly, nx);
    let s_polys: Vec<Poly> = s_polys.iter().map(|p| widen(p, nx)).collect();
    let mut extra: Vec<Poly> = ctx.constraints.iter().map(|p| widen(p, nx)).collect();
    for g in constraints {
        let gp = g
            .inline_lets()
            .to_poly(domain.len())
            .map_err(EngineError::Expr)?;
        extra.push(widen(&gp, nx));
    }
    let deg_l = s_polys
        .iter()
        .map(|p| p.total_degree() + 1)
        .chain([const_poly.total_degree()])
        .max()
        .unwrap_or(1);
    let cdegs: Vec<u32> = extra
        .iter()
        .map(|g| g.total_degree())
        .chain([2u32])
        .collect();
    let d0 = default_order(deg_l, &cdegs);
    let d_eff = d.unwrap_or(d0).max(1);
    Ok(LinearSystem { const_poly, s_polys, extra, bounds: ctx.bounds, d_eff })
}

/// What an independent certificate check needs: the exact relaxation
/// objective the certificate must match and the declared constraints its
/// multipliers may use. Only plain (conditional-free) program certificates
/// named `<name>-min` / `<name>-max` can be rebuilt.
pub struct CertificateContext {
    pub objective: Poly,
    pub declared: Vec<Poly>,
    pub domain: Vec<Interval>,
}

pub fn rebuild_certificate_context(
    spec: &ProgramSpec,
    opts: &AnalysisOptions,
    cert_name: &str,
) -> Result<CertificateContext, EngineError> {
    spec.validate()?;
    if spec.objective.contains_conditional() {
        return Err(EngineError::Other(
            "re-checking branch certificates is not supported; re-run with --certify".to_string(),
        ));
    }
    let sense_max = cert_name.ends_with("-max");
    if !sense_max && !cert_name.ends_with("-min") {
        return Err(EngineError::Other(format!(
            "certificate name `{cert_name}` carries no -min/-max suffix"
        )));
    }
    let rexpr = crate::rounding::round_program(spec, &opts.format, opts.rounding)?;
    let decomp = decompose_error(&spec.objective, &rexpr, &spec.domain)?;
    let sys = build_linear_system(&decomp, &spec.domain, &spec.constraints, opts.order, opts)?;
    let scaled = scale_linear_part(
        &sys.const_poly,
        &sys.s_polys,
        &decomp.magnitudes,
        &sys.bounds,
        &sys.extra,
    );
    let objective = if sense_max {
        scaled.objective.neg()
    } else {
        scaled.objective
    };
    let nv = scaled.nx + scaled.m;
    let declared = scaled
        .extra_scaled
        .iter()
        .map(|g| g.with_nvars(nv))
        .collect();
    let domain = (0..nv)
        .map(|_| Interval::new(rat_int(-1), rat_int(1)))
        .collect();
    Ok(CertificateContext { objective, declared, domain })
}

/// Compute a sound enclosure of (rounded − exact) over the domain with
/// the given constraints, per the linear-part + remainder decomposition.
pub fn bound_pair(
    exact: &Expr,
    rounded: &RoundedExpr,
    domain: &[Interval],
    constraints: &[Expr],
    d: Option<usize>,
    opts: &AnalysisOptions,
    tag: &str,
) -> Result<BoundResult, EngineError> {
    let m = rounded.errors.len();
    let t_dec = std::time::Instant::now();
    let decomp = decompose_error(exact, rounded, domain)?;
    if std::env::var("FPSOS_PROF").is_ok() {
        eprintln!("decompose {:?}", t_dec.elapsed());
    }

    // fast path: no error variables and no constant part
    if m == 0 && decomp.constant_part.is_zero_const() {
        return Ok(BoundResult::from_parts(
            Interval::zero(),
            decomp.remainder,
            d.unwrap_or(1),
            0,
            vec![],
            vec![],
        ));
    }

    let sys = build_linear_system(&decomp, domain, constraints, d, opts)?;
    let LinearSystem { const_poly, s_polys, extra, bounds, d_eff } = sys;

    let t_sdp = std::time::Instant::now();
    let lin = sdp_poly(
        &const_poly,
        &s_polys,
        &decomp.magnitudes,
        &bounds,
        &extra,
        d_eff,
        opts,
        tag,
    )?;
    if std::env::var("FPSOS_PROF").is_ok() {
        eprintln!("sdp_poly {:?}", t_sdp.elapsed());
    }
    Ok(BoundResult::from_parts(
        lin.interval,
        decomp.remainder,
        lin.order,
        m,
        lin.fallbacks,
        lin.certificates,
    ))
}

/// Fig.-3-style bound of a conditional-free program objective.
pub fn bound_program(
    spec: &ProgramSpec,
    opts: &AnalysisOptions,
) -> Result<BoundResult, EngineError> {
    spec.validate()?;
    if spec.objective.contains_conditional() {
        return bound_nlprog(spec, opts);
    }
    let rexpr = crate::rounding::round_program(spec, &opts.format, opts.rounding)?;
    subdivide_and_bound(
        &spec.objective,
        &rexpr,
        &spec.domain,
        &spec.constraints,
        opts,
        &spec.name,
        &spec.target_bound,
    )
}

/// Bisect the widest (relative width) dimension recursively; the result
/// is the hull of the leaf bounds and never worse than the unsplit bound
/// beyond solver tolerance.
#[allow(clippy::too_many_arguments)]
pub fn subdivide_and_bound(
    exact: &Expr,
    rexpr: &RoundedExpr,
    domain: &[Interval],
    constraints: &[Expr],
    opts: &AnalysisOptions,
    tag: &str,
    target: &Rat,
) -> Result<BoundResult, EngineError> {
    fn rec(
        exact: &Expr,
        rexpr: &RoundedExpr,
        domain: &[Interval],
        constraints: &[Expr],
        opts: &AnalysisOptions,
        tag: &str,
        target: &Rat,
        budget: usize,
    ) -> Result<BoundResult, EngineError> {
        let whole = bound_pair(exact, rexpr, domain, constraints, opts.order, opts, tag)?;
        if budget <= 1 {
            return Ok(whole);
        }
        if !target.is_zero() && &whole.bound <= target {
            return Ok(whole);
        }
        // widest relative width among variables the objective touches
        let vars = exact.free_vars();
        let mut widest: Option<(usize, Rat)> = None;
        for &v in vars.iter().filter(|&&v| v < domain.len()) {
            let w = domain[v].width();
            let denom = Rat::one() + domain[v].mag();
            let rel = w / denom;
            if widest.as_ref().map(|(_, bw)| &rel > bw).unwrap_or(true) {
                widest = Some((v, rel));
            }
        }
        let Some((v, rel)) = widest else { return Ok(whole) };
        if rel.is_zero() {
            return Ok(whole);
        }
        let mid = domain[v].midpoint();
        let mut left = domain.to_vec();
        left[v] = Interval::new(domain[v].lo.clone(), mid.clone());
        let mut right = domain.to_vec();
        right[v] = Interval::new(mid, domain[v].hi.clone());
        let half = budget / 2;
        let a = rec(exact, rexpr, &left, constraints, opts, tag, target, half)?;
        let b = rec(exact, rexpr, &right, constraints, opts, tag, target, budget - half)?;
        let hull = a.interval.hull(&b.interval);
        let merged = BoundResult {
            bound: hull.mag(),
            interval: hull,
            order: a.order.max(b.order),
            error_vars: a.error_vars,
            fallbacks: [a.fallbacks, b.fallbacks].concat(),
            certificates: [a.certificates, b.certificates].concat(),
            linear_part: a.linear_part.hull(&b.linear_part),
            remainder: a.remainder.hull(&b.remainder),
        };
        // splitting never hurts beyond tolerance: keep the tighter result
        if merged.bound <= whole.bound {
            Ok(merged)
        } else {
            Ok(whole)
        }
    }
    rec(
        exact,
        rexpr,
        domain,
        constraints,
        opts,
        tag,
        target,
        opts.subdivide_budget.max(1),
    )
}

// --- conditionals ---------------------------------------------------------

#[derive(Debug)]
pub struct BranchAnalysis {
    pub condition: Poly,
    pub condition_error: Interval,
    pub regions: Vec<String>,
    pub intervals: Vec<Option<Interval>>,
}

/// Provably empty region: some constraint is negative over the whole box.
fn region_empty(constraints: &[Expr], domain: &[Interval]) -> bool {
    constraints.iter().any(|g| {
        ia_bound_subdiv(g, domain, 6)
            .map(|iv| iv.hi.is_negative())
            .unwrap_or(false)
    })
}

/// Roundoff bound for a single top-level conditional: the hull of the two
/// branch errors and the two cross-branch discontinuity errors over the
/// ambiguity slivers around the test's roundoff enclosure.
pub fn bound_nlprog(
    spec: &ProgramSpec,
    opts: &AnalysisOptions,
) -> Result<BoundResult, EngineError> {
    let Expr::IfThenElse(cond, then_e, else_e) = &spec.objective else {
        return bound_program(spec, opts);
    };
    if then_e.contains_conditional() || else_e.contains_conditional() || cond.contains_conditional()
    {
        return Err(EngineError::NestedConditional);
    }
    let p_poly = cond
        .inline_lets()
        .to_poly(spec.nvars)
        .map_err(|_| EngineError::Other("conditional test is not polynomial".to_string()))?;

    let round_of = |e: &Expr| -> Result<RoundedExpr, EngineError> {
        let r = round_expr(e, spec.nvars, spec.total_indices, &opts.format, opts.rounding);
        let r = apply_uncertainties(&r, &spec.uncertainties);
        if opts.rounding.merge_products {
            Ok(merge_error_products(&r, &opts.format.eps)?)
        } else {
            Ok(r)
        }
    };

    // roundoff enclosure of the test itself
    let p_rounded = round_of(cond)?;
    let p_err = bound_pair(
        cond,
        &p_rounded,
        &spec.domain,
        &spec.constraints,
        opts.order,
        opts,
        &format!("{}-cond", spec.name),
    )?;
    let p_lo = p_err.interval.lo.clone();
    let p_hi = p_err.interval.hi.clone();

    let g_rounded = round_of(then_e)?;
    let h_rounded = round_of(else_e)?;

    let mut fallbacks = p_err.fallbacks.clone();
    let mut certificates = Vec::new();
    let mut intervals: Vec<Option<Interval>> = Vec::new();
    let mut regions = Vec::new();
    let mut hull: Option<Interval> = None;
    let mut order = p_err.order;
    let mut error_vars = p_err.error_vars;

    let p_expr_exact: Expr = (**cond).clone();
    let cases: [(&str, Vec<Expr>, &Expr, &RoundedExpr); 4] = [
        (
            // rounded execution took the else branch while the exact test
            // was (barely) nonnegative: X1 = {0 ≤ p ≤ −p_lo}
            "x1",
            vec![
                p_expr_exact.clone(),
                Expr::sub(Expr::Const(-p_lo.clone()), p_expr_exact.clone()).simplify(),
            ],
            then_e,
            &h_rounded,
        ),
        (
            // rounded execution took the then branch on −p_hi ≤ p ≤ 0
            "x2",
            vec![
                Expr::neg(p_expr_exact.clone()).simplify(),
                Expr::sub(p_expr_exact.clone(), Expr::Const(-p_hi.clone())).simplify(),
            ],
            else_e,
            &g_rounded,
        ),
        ("x3", vec![p_expr_exact.clone()], then_e, &g_rounded),
        ("x4", vec![Expr::neg(p_expr_exact.clone()).simplify()], else_e, &h_rounded),
    ];
    for (label, extra, exact_branch, rounded_branch) in cases {
        regions.push(label.to_string());
        let mut constraints = spec.constraints.clone();
        constraints.extend(extra);
        if region_empty(&constraints, &spec.domain) {
            intervals.push(None);
            continue;
        }
        let res = subdivide_and_bound(
            exact_branch,
            rounded_branch,
            &spec.domain,
            &constraints,
            opts,
            &format!("{}-{label}", spec.name),
            &spec.target_bound,
        )?;
        order = order.max(res.order);
        error_vars = error_vars.max(res.error_vars);
        fallbacks.extend(res.fallbacks);
        certificates.extend(res.certificates);
        hull = Some(match hull {
            None => res.interval.clone(),
            Some(h) => h.hull(&res.interval),
        });
        intervals.push(Some(res.interval));
    }
    let interval = hull.unwrap_or_else(Interval::zero);
    let _analysis = BranchAnalysis {
        condition: p_poly,
        condition_error: p_err.interval.clone(),
        regions,
        intervals,
    };
    Ok(BoundResult {
        bound: interval.mag(),
        interval: interval.clone(),
        order,
        error_vars,
        fallbacks,
        certificates,
        linear_part: interval,
        remainder: Interval::zero(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::rational::pow2;

    fn opts_double() -> AnalysisOptions {
        AnalysisOptions::default()
    }

    #[test]
    fn constant_program_has_zero_error() {
        let spec = parse_program("let box_c x = [(0, 1)];; let obj_c x = [(2, 0)];;").unwrap();
        let res = bound_program(&spec, &opts_double()).unwrap();
        assert!(res.bound.is_zero());
        assert_eq!(res.error_vars, 0);
    }

    #[test]
    fn single_multiplication_bound_near_three_eps() {
        // x*y over [0,1]^2 with input rounding: bound in [3ε, 3ε + 10ε²]
        let spec =
            parse_program("let box_m x y = [(0, 1); (0, 1)];; let obj_m x y = [(x*y, 0)];;")
                .unwrap();
        let res = bound_program(&spec, &opts_double()).unwrap();
        let eps = pow2(-53);
        assert!(res.bound >= &eps * rat_int(3), "bound {}", res.bound);
        assert!(
            res.bound <= &eps * rat_int(3) + &eps * &eps * rat_int(10),
            "bound {} too loose",
            res.bound
        );
        assert_eq!(res.error_vars, 3);
    }

    #[test]
    fn linear_part_of_x_times_e() {
        // l = x·e over x∈[0,1], |e| ≤ 2^-53: enclosure [−ε, ε]
        let eps = pow2(-53);
        let x01 = vec![Interval::new(rat_int(0), rat_int(1))];
        let s = vec![Poly::var(1, 0)];
        let out = sdp_poly(
            &Poly::zero(1),
            &s,
            &[eps.clone()],
            &x01,
            &[],
            1,
            &opts_double(),
            "t",
        )
        .unwrap();
        assert!(out.fallbacks.is_empty(), "{:?}", out.fallbacks);
        // exact value is [−ε, ε]
        assert!(out.interval.lo <= -&eps * rat(99, 100));
        assert!(out.interval.lo >= -&eps * rat(101, 100));
        assert!(out.interval.hi >= &eps * rat(99, 100));
        assert!(out.interval.hi <= &eps * rat(101, 100));
    }

    use crate::rational::{rat, rat_int};

    #[test]
    fn sum_of_three_errors() {
        // l = e1 + e2 + e3: enclosure ±3ε
        let eps = pow2(-53);
        let dom = vec![Interval::new(rat_int(0), rat_int(1))];
        let ones = vec![Poly::constant(1, rat_int(1)); 3];
        let out = sdp_poly(
            &Poly::zero(1),
            &ones,
            &vec![eps.clone(); 3],
            &dom,
            &[],
            1,
            &opts_double(),
            "t",
        )
        .unwrap();
        let three_eps = &eps * rat_int(3);
        assert!(out.interval.hi >= &three_eps * rat(999, 1000));
        assert!(out.interval.hi <= &three_eps * rat(1001, 1000));
    }

    #[test]
    fn taylor_remainder_of_bilinear_error_product() {
        // r = x·e1·e2 on x ∈ [0,1], |e_i| ≤ ε: B = ε²
        let eps = pow2(-10);
        let body = Expr::mul(
            Expr::mul(Expr::Var(0), Expr::Var(1)),
            Expr::Var(2),
        );
        let rexpr = RoundedExpr {
            body,
            base: 1,
            errors: vec![
                crate::rounding::ErrorVar {
                    id: 0,
                    magnitude: eps.clone(),
                    provenance: crate::rounding::Provenance::Op("mul"),
                },
                crate::rounding::ErrorVar {
                    id: 1,
                    magnitude: eps.clone(),
                    provenance: crate::rounding::Provenance::Op("mul"),
                },
            ],
        };
        let dom = vec![Interval::new(rat_int(0), rat_int(1))];
        let b = taylor_remainder_bound(&rexpr, &dom).unwrap();
        assert_eq!(b.hi, &eps * &eps);
        // affine-in-e expression has zero remainder
        let affine = RoundedExpr {
            body: Expr::add(Expr::Var(0), Expr::Var(1)),
            base: 1,
            errors: vec![crate::rounding::ErrorVar {
                id: 0,
                magnitude: eps,
                provenance: crate::rounding::Provenance::Op("add"),
            }],
        };
        let b2 = taylor_remainder_bound(&affine, &dom).unwrap();
        assert!(b2.lo.is_zero() && b2.hi.is_zero());
    }

    #[test]
    fn lift_division_example() {
        // x/(1+x) on [0,1]: one lifting variable in ≈[0, 1/2] with
        // x2·(1+x1) = x1 as two inequalities
        let dom = vec![Interval::new(rat_int(0), rat_int(1))];
        let e = Expr::div(
            Expr::Var(0),
            Expr::add(Expr::Const(Rat::one()), Expr::Var(0)),
        );
        let mut ctx = LiftContext::new(&dom, 3);
        let p = ctx.lift(&e).unwrap();
        assert_eq!(p, Poly::var(2, 1));
        assert_eq!(ctx.bounds.len(), 2);
        let lifted = &ctx.bounds[1];
        assert!(lifted.lo <= rat_int(0) && lifted.hi >= rat(1, 2));
        assert!(lifted.hi <= rat(52, 100), "range {}", lifted.hi);
        assert_eq!(ctx.constraints.len(), 2);
        // sampled equality: solving the constraint reproduces x/(1+x)
        for k in 0..10 {
            let x = rat(k, 10);
            let t = &x / (Rat::one() + &x);
            for g in &ctx.constraints {
                assert!(g.evaluate(&[x.clone(), t.clone()]).is_zero());
            }
        }
    }

    #[test]
    fn lift_sqrt_example() {
        // sqrt(x) on [1,4] → x2 ∈ [1,2], x2² = x
        let dom = vec![Interval::new(rat_int(1), rat_int(4))];
        let e = Expr::Sqrt(Box::new(Expr::Var(0)));
        let mut ctx = LiftContext::new(&dom, 3);
        let p = ctx.lift(&e).unwrap();
        assert_eq!(p, Poly::var(2, 1));
        let b = &ctx.bounds[1];
        assert!(b.lo <= rat_int(1) && b.hi >= rat_int(2));
        assert!(b.hi <= rat(201, 100));
    }

    #[test]
    fn lift_nested_division_chain() {
        // (x/(1+x))/(2−x) on [0,1]: two lifting variables, constraints
        // chain; sampled equality of the lifted system against direct
        // evaluation
        let dom = vec![Interval::new(rat_int(0), rat_int(1))];
        let inner = Expr::div(
            Expr::Var(0),
            Expr::add(Expr::Const(Rat::one()), Expr::Var(0)),
        );
        let e = Expr::div(inner, Expr::sub(Expr::Const(rat_int(2)), Expr::Var(0)));
        let mut ctx = LiftContext::new(&dom, 3);
        let p = ctx.lift(&e).unwrap();
        assert_eq!(ctx.bounds.len(), 3);
        assert_eq!(ctx.constraints.len(), 4);
        for k in 0..=10 {
            let x = rat(k, 10);
            let t1 = &x / (Rat::one() + &x);
            let t2 = &t1 / (rat_int(2) - &x);
            let pt = vec![x, t1, t2];
            for g in &ctx.constraints {
                assert!(g.evaluate(&pt).is_zero());
            }
            assert_eq!(p.evaluate(&pt), pt[2]);
        }
    }

    #[test]
    fn lift_shares_repeated_subexpressions() {
        let dom = vec![Interval::new(rat_int(1), rat_int(2))];
        let d = Expr::div(Expr::Const(Rat::one()), Expr::Var(0));
        let e = Expr::add(d.clone(), d);
        let mut ctx = LiftContext::new(&dom, 3);
        let _ = ctx.lift(&e).unwrap();
        // one lifting variable, not two
        assert_eq!(ctx.bounds.len(), 2);
    }

    #[test]
    fn division_by_zero_interval_reported() {
        let dom = vec![Interval::new(rat_int(-1), rat_int(1))];
        let e = Expr::div(Expr::Const(Rat::one()), Expr::Var(0));
        let mut ctx = LiftContext::new(&dom, 3);
        assert!(matches!(
            ctx.lift(&e),
            Err(EngineError::DivisionByZeroInLift(_))
        ));
    }

    #[test]
    fn maxplus_sandwich_on_samples() {
        // exp on [0,1]: convex, so lower pieces are tangent lines
        let iv = Interval::new(rat_int(0), rat_int(1));
        let pts = maxplus_points(&iv, 3);
        let ap = transc_approx(TranscKind::Exp, &iv, &pts).unwrap();
        assert!(ap.gamma_lower.is_negative()); // sup(−exp) < 0 on [0,1]
        for k in 0..=40 {
            let x = rat(k, 40);
            let fx = crate::transcendental::exp_point(&x);
            for piece in &ap.lower {
                assert!(piece.evaluate(&[x.clone()]) <= fx.hi);
            }
            for piece in &ap.upper {
                assert!(piece.evaluate(&[x.clone()]) >= fx.lo);
            }
        }
        // tangency at sample points up to enclosure slack
        for (a, piece) in ap.points.iter().zip(&ap.lower) {
            let fa = crate::transcendental::exp_point(a);
            let diff = &fa.lo - piece.evaluate(&[a.clone()]);
            assert!(diff.abs() < pow2(-70));
        }
    }

    #[test]
    fn maxplus_logexp_window() {
        // log(1+exp(x)) pieces on [−8,8] at the endpoints sandwich the
        // function (dense sampling)
        let iv = Interval::new(rat_int(-8), rat_int(8));
        let f = Expr::Transc(
            TranscKind::Log,
            Box::new(Expr::add(
                Expr::Const(Rat::one()),
                Expr::Transc(TranscKind::Exp, Box::new(Expr::Var(0))),
            )),
        );
        // sandwich the sigmoid-like inner derivative via the generic node
        // construction used by lifting: here we check exp and log pieces
        // compose soundly by sampling the lifted constraint system
        let dom = vec![iv.clone()];
        let mut ctx = LiftContext::new(&dom, 3);
        let p = ctx.lift(&f).unwrap();
        for k in 0..=32 {
            let x = &iv.lo + iv.width() * rat(k, 32);
            let ex = crate::transcendental::exp_point(&x);
            let lg = crate::transcendental::log_point(&(Rat::one() + ex.midpoint()));
            // the lifted point (x, t_exp, t_log) satisfies every
            // sandwich constraint up to enclosure noise
            let pt = vec![x.clone(), ex.midpoint(), lg.midpoint()];
            for g in &ctx.constraints {
                let v = g.evaluate(&pt);
                assert!(
                    v >= rat(-1, 1000),
                    "sandwich violated at {x}: {v}"
                );
            }
            assert_eq!(p.evaluate(&pt), pt[2]);
        }
    }

    #[test]
    fn dead_else_branch_collapses_to_then_bound() {
        // p = x + 1 ≥ 1 on [0,1]: the else branch and both slivers are
        // provably empty, so the conditional bound equals the then bound
        let src = "\
let box_c x = [(0, 1)];;
let obj_c x = [(if (x + 1 >= 0) then x*x else 5*x, 0)];;";
        let spec = parse_program(src).unwrap();
        let res = bound_nlprog(&spec, &opts_double()).unwrap();
        let plain = parse_program(
            "let box_c x = [(0, 1)];; let obj_c x = [(x*x, 0)];;",
        )
        .unwrap();
        let expect = bound_program(&plain, &opts_double()).unwrap();
        // same error bound up to solver wobble
        let diff = (&res.bound - &expect.bound).abs();
        assert!(diff <= expect.bound * rat(1, 100) + pow2(-80));
    }

    #[test]
    fn subdivision_never_worse() {
        let src = "let box_s x = [(0, 1)];; let obj_s x = [(x*x - x, 0)];;";
        let spec = parse_program(src).unwrap();
        let whole = bound_program(&spec, &opts_double()).unwrap();
        let mut opts = opts_double();
        opts.subdivide_budget = 4;
        let split = bound_program(&spec, &opts).unwrap();
        assert!(split.bound <= &whole.bound * rat(1001, 1000));
    }
}
