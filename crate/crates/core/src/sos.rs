//! Assembly of sums-of-squares relaxations: dense, correlatively sparse,
//! and the error-linear-part variant with one clique per error variable.
//!
//! A relaxation is the feasibility program
//!     obj(y) − μ = Σ_t  B_t(y)ᵀ Q_t B_t(y) · g_t(y),   Q_t ⪰ 0,
//! encoded as linear equality constraints on the Gram blocks, one per
//! monomial of the achievable support, with μ eliminated through the
//! constant-monomial equation.

use crate::interval::Interval;
use crate::polynomial::{Monomial, Poly};
use crate::rational::{binom, rat_int, Rat};
use crate::sdp::{SdpProblem, SparseSymEntry};
use crate::sparsity::CliqueSet;
use num::traits::{Signed, Zero};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SosError {
    #[error("relaxation order {d} too small: needs 2d ≥ {required}")]
    OrderTooSmall { d: usize, required: u32 },
    #[error("no clique covers the variables of {0}")]
    CliqueCoverageFailure(String),
}

/// Affine change of variables onto the unit box [-1,1]^n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainScaling {
    /// x_i = center_i + halfwidth_i · u_i
    pub maps: Vec<(Rat, Rat)>,
}

impl DomainScaling {
    pub fn from_box(domain: &[Interval]) -> Self {
        let maps = domain
            .iter()
            .map(|iv| (iv.midpoint(), iv.width() / rat_int(2)))
            .collect();
        DomainScaling { maps }
    }

    pub fn identity(n: usize) -> Self {
        DomainScaling {
            maps: vec![(Rat::zero(), rat_int(1)); n],
        }
    }

    pub fn to_unit(&self, p: &Poly) -> Poly {
        p.substitute_affine(&self.maps)
    }

    pub fn unit_domain(&self) -> Vec<Interval> {
        self.maps
            .iter()
            .map(|_| Interval::new(rat_int(-1), rat_int(1)))
            .collect()
    }

    /// Map a point from unit coordinates back to original coordinates.
    pub fn from_unit_point(&self, u: &[Rat]) -> Vec<Rat> {
        self.maps
            .iter()
            .zip(u)
            .map(|((c, w), ui)| c + w * ui)
            .collect()
    }
}

/// One inequality g ≥ 0 with the variable set its SOS multiplier may use.
#[derive(Debug, Clone)]
pub struct ConstraintPoly {
    pub poly: Poly,
    pub support: Vec<usize>,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct ConstraintSet {
    pub nvars: usize,
    pub entries: Vec<ConstraintPoly>,
    /// Remark-style bound: M ≥ Σ sup x_i²
    pub archimedean_m: Rat,
    /// per-variable magnitude bound: |x_i| ≤ var_bound for all i
    pub var_bound: Rat,
}

impl ConstraintSet {
    /// Box in original coordinates: g_i = (b_i − x_i)(x_i − a_i) plus the
    /// ball M − Σ x_i² with M = ⌈Σ max(a_i², b_i²)⌉.
    pub fn from_box(domain: &[Interval], extra: &[Poly]) -> ConstraintSet {
        let n = domain.len();
        let all: Vec<usize> = (0..n).collect();
        let mut entries = Vec::new();
        let mut msum = Rat::zero();
        for (i, iv) in domain.iter().enumerate() {
            let xi = Poly::var(n, i);
            let g = Poly::constant(n, iv.hi.clone())
                .sub(&xi)
                .mul(&xi.sub(&Poly::constant(n, iv.lo.clone())));
            entries.push(ConstraintPoly {
                poly: g,
                support: vec![i],
                label: format!("box{i}"),
            });
            let m2 = iv.lo.abs().max(iv.hi.abs());
            msum += &m2 * &m2;
        }
        let m = Rat::from_integer(msum.ceil().to_integer());
        let vb = domain
            .iter()
            .map(|iv| iv.lo.abs().max(iv.hi.abs()))
            .max()
            .unwrap_or_else(Rat::zero);
        let var_bound = Rat::from_integer(vb.ceil().to_integer());
        let mut ball = Poly::constant(n, m.clone());
        for i in 0..n {
            ball = ball.sub(&Poly::var(n, i).pow(2));
        }
        entries.push(ConstraintPoly {
            poly: ball,
            support: all,
            label: "ball".to_string(),
        });
        for (k, g) in extra.iter().enumerate() {
            let gn = g.with_nvars(n);
            let support: Vec<usize> = gn.var_occurrences().into_iter().collect();
            entries.push(ConstraintPoly {
                poly: gn,
                support,
                label: format!("g{k}"),
            });
        }
        ConstraintSet { nvars: n, entries, archimedean_m: m, var_bound }
    }

    /// Same, but without the redundant ball (the sparse builders append
    /// their own per-clique closures).
    pub fn from_box_no_ball(domain: &[Interval], extra: &[Poly]) -> ConstraintSet {
        let mut cs = Self::from_box(domain, extra);
        cs.entries.retain(|e| e.label != "ball");
        cs
    }

    pub fn max_degree(&self) -> u32 {
        self.entries
            .iter()
            .map(|e| e.poly.total_degree())
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone)]
pub struct SosBlock {
    pub label: String,
    pub basis: Vec<Monomial>,
    pub gpoly: Poly,
}

impl SosBlock {
    pub fn is_plain_sos(&self) -> bool {
        self.gpoly.total_degree() == 0
            && self.gpoly.constant_term() == Rat::from_integer(1.into())
    }
}

/// The symbolic relaxation: blocks, the equation monomials, and anchor
/// entries used by the exact certificate correction.
#[derive(Debug, Clone)]
pub struct SosProgram {
    pub nvars: usize,
    pub objective: Poly,
    pub order: usize,
    pub blocks: Vec<SosBlock>,
    /// equation monomials; index 0 is the constant monomial
    pub monomials: Vec<Monomial>,
    pub mono_index: BTreeMap<Monomial, usize>,
    /// for each equation, one (block, i, j) entry of a plain-SOS block
    pub anchors: Vec<Option<(usize, usize, usize)>>,
    /// border/group label per equation (linear-part structure), if any
    pub eq_groups: Option<Vec<usize>>,
}

/// All monomials over `vars` of total degree ≤ deg, graded-lex sorted.
pub fn monomials_upto(vars: &[usize], deg: usize) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(binom(vars.len() + deg, deg));
    let mut current: Vec<(usize, u32)> = Vec::new();
    fn rec(
        vars: &[usize],
        pos: usize,
        remaining: usize,
        current: &mut Vec<(usize, u32)>,
        out: &mut Vec<Monomial>,
    ) {
        if pos == vars.len() {
            let mut m = current.clone();
            m.sort_unstable_by_key(|&(v, _)| v);
            out.push(Monomial(m));
            return;
        }
        for e in 0..=remaining {
            if e > 0 {
                current.push((vars[pos], e as u32));
            }
            rec(vars, pos + 1, remaining - e, current, out);
            if e > 0 {
                current.pop();
            }
        }
    }
    rec(vars, 0, deg, &mut current, &mut out);
    out.sort();
    out
}

/// Minimal relaxation order d₀ = max{⌈deg f/2⌉, max_j ⌈deg g_j/2⌉}.
pub fn default_order(obj_degree: u32, constraint_degrees: &[u32]) -> usize {
    let mut d = obj_degree.div_ceil(2);
    for &g in constraint_degrees {
        d = d.max(g.div_ceil(2));
    }
    (d as usize).max(1)
}

/// Moment-side variable count of the dense relaxation.
pub fn dense_variable_count(n: usize, d: usize) -> usize {
    binom(n + 2 * d, 2 * d)
}

/// Moment-side variable count of the sparse relaxation for given cliques.
pub fn sparse_variable_count(clique_sizes: &[usize], d: usize) -> usize {
    clique_sizes.iter().map(|&nj| binom(nj + 2 * d, 2 * d)).sum()
}

struct Assembler {
    nvars: usize,
    blocks: Vec<SosBlock>,
}

impl Assembler {
    fn new(nvars: usize) -> Self {
        Assembler { nvars, blocks: Vec::new() }
    }

    fn push_sos(&mut self, label: String, vars: &[usize], basis_deg: usize) {
        self.blocks.push(SosBlock {
            label,
            basis: monomials_upto(vars, basis_deg),
            gpoly: Poly::constant(self.nvars, Rat::from_integer(1.into())),
        });
    }

    fn push_multiplier(&mut self, label: String, vars: &[usize], basis_deg: usize, g: Poly) {
        self.blocks.push(SosBlock {
            label,
            basis: monomials_upto(vars, basis_deg),
            gpoly: g,
        });
    }

    fn finish(
        self,
        objective: Poly,
        order: usize,
        group_of: Option<&dyn Fn(&Monomial) -> usize>,
    ) -> SosProgram {
        // collect every achievable monomial
        let mut monos: BTreeMap<Monomial, ()> = BTreeMap::new();
        monos.insert(Monomial::one(), ());
        for m in objective.terms.keys() {
            monos.insert(m.clone(), ());
        }
        for b in &self.blocks {
            for i in 0..b.basis.len() {
                for j in i..b.basis.len() {
                    let bb = b.basis[i].mul(&b.basis[j]);
                    for d in b.gpoly.terms.keys() {
                        monos.insert(bb.mul(d), ());
                    }
                }
            }
        }
        let mut monomials: Vec<Monomial> = monos.into_keys().collect();
        // constant monomial first, rest in graded-lex order
        monomials.sort();
        debug_assert!(monomials[0].is_one());
        let mono_index: BTreeMap<Monomial, usize> = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        // anchors: first plain-SOS entry per equation
        let mut anchors: Vec<Option<(usize, usize, usize)>> = vec![None; monomials.len()];
        for (t, b) in self.blocks.iter().enumerate() {
            if !b.is_plain_sos() {
                continue;
            }
            for i in 0..b.basis.len() {
                for j in i..b.basis.len() {
                    let alpha = b.basis[i].mul(&b.basis[j]);
                    let idx = mono_index[&alpha];
                    if anchors[idx].is_none() {
                        anchors[idx] = Some((t, i, j));
                    }
                }
            }
        }
        let eq_groups = group_of.map(|f| monomials.iter().map(f).collect());
        SosProgram {
            nvars: self.nvars,
            objective,
            order,
            blocks: self.blocks,
            monomials,
            mono_index,
            anchors,
            eq_groups,
        }
    }
}

impl SosProgram {
    /// Lower the symbolic program into block-diagonal SDP data:
    /// min ⟨C,X⟩ s.t. ⟨A_p,X⟩ = b_p, X ⪰ 0, with the relaxation value
    /// recovered as obj_const − ⟨C,X⟩.
    pub fn to_sdp(&self) -> SdpProblem {
        let m = self.monomials.len() - 1;
        let mut cost: Vec<SparseSymEntry> = Vec::new();
        let mut cons: Vec<Vec<SparseSymEntry>> = vec![Vec::new(); m];
        for (t, b) in self.blocks.iter().enumerate() {
            for i in 0..b.basis.len() {
                for j in i..b.basis.len() {
                    let bb = b.basis[i].mul(&b.basis[j]);
                    for (dm, gc) in &b.gpoly.terms {
                        let alpha = bb.mul(dm);
                        let p = self.mono_index[&alpha];
                        let e = SparseSymEntry {
                            block: t,
                            i,
                            j,
                            value: gc.clone(),
                        };
                        if p == 0 {
                            cost.push(e);
                        } else {
                            cons[p - 1].push(e);
                        }
                    }
                }
            }
        }
        let mut rhs = Vec::with_capacity(m);
        for mono in &self.monomials[1..] {
            rhs.push(
                self.objective
                    .terms
                    .get(mono)
                    .cloned()
                    .unwrap_or_else(Rat::zero),
            );
        }
        let eq_groups = self
            .eq_groups
            .as_ref()
            .map(|g| g[1..].to_vec());
        SdpProblem {
            block_dims: self.blocks.iter().map(|b| b.basis.len()).collect(),
            rhs,
            cost,
            cons,
            obj_const: self.objective.constant_term(),
            eq_groups,
        }
    }

    /// Total number of Gram entries across blocks (upper-triangle count).
    pub fn gram_entry_count(&self) -> usize {
        self.blocks
            .iter()
            .map(|b| b.basis.len() * (b.basis.len() + 1) / 2)
            .sum()
    }
}

/// Dense Lasserre relaxation at order d for `inf obj over K`.
pub fn build_dense(obj: &Poly, ks: &ConstraintSet, d: usize) -> Result<SosProgram, SosError> {
    let needed = obj.total_degree().max(ks.max_degree());
    if 2 * d < needed as usize {
        return Err(SosError::OrderTooSmall { d, required: needed });
    }
    let n = ks.nvars;
    let all: Vec<usize> = (0..n).collect();
    let mut asm = Assembler::new(n);
    asm.push_sos("sos0".to_string(), &all, d);
    for e in &ks.entries {
        let deg = e.poly.total_degree() as usize;
        let bdeg = d - deg.div_ceil(2).min(d);
        // dense multipliers live over the full variable space
        asm.push_multiplier(format!("mul_{}", e.label), &all, bdeg, e.poly.clone());
    }
    Ok(asm.finish(obj.clone(), d, None))
}

/// Correlatively sparse relaxation: σ₀ split across cliques, multipliers
/// restricted to their constraint's support, and per-clique redundant
/// closures n_j·M² − Σ_{i∈C_j} x_i².
pub fn build_sparse(
    obj: &Poly,
    ks: &ConstraintSet,
    cliques: &CliqueSet,
    d: usize,
) -> Result<SosProgram, SosError> {
    let needed = obj.total_degree().max(ks.max_degree());
    if 2 * d < needed as usize {
        return Err(SosError::OrderTooSmall { d, required: needed });
    }
    let n = ks.nvars;
    // coverage checks
    for m in obj.terms.keys() {
        let vars: std::collections::BTreeSet<usize> = m.vars().collect();
        if !cliques.cliques.iter().any(|c| vars.is_subset(c)) {
            return Err(SosError::CliqueCoverageFailure(format!("monomial {m:?}")));
        }
    }
    for e in &ks.entries {
        let vars: std::collections::BTreeSet<usize> = e.support.iter().copied().collect();
        if !cliques.cliques.iter().any(|c| vars.is_subset(c)) {
            return Err(SosError::CliqueCoverageFailure(e.label.clone()));
        }
    }
    let mut asm = Assembler::new(n);
    for (j, c) in cliques.cliques.iter().enumerate() {
        let vars: Vec<usize> = c.iter().copied().collect();
        asm.push_sos(format!("sos0_c{j}"), &vars, d);
    }
    for e in &ks.entries {
        let deg = e.poly.total_degree() as usize;
        let bdeg = d - deg.div_ceil(2).min(d);
        asm.push_multiplier(format!("mul_{}", e.label), &e.support, bdeg, e.poly.clone());
    }
    // redundant clique closures: n_j·M² − Σ_{i∈C_j} x_i² with M the
    // per-variable magnitude bound
    let m2 = &ks.var_bound * &ks.var_bound;
    for (j, c) in cliques.cliques.iter().enumerate() {
        let vars: Vec<usize> = c.iter().copied().collect();
        let mut g = Poly::constant(n, Rat::from_integer((vars.len() as i64).into()) * &m2);
        for &i in &vars {
            g = g.sub(&Poly::var(n, i).pow(2));
        }
        asm.push_multiplier(format!("closure_c{j}"), &vars, d - 1, g);
    }
    Ok(asm.finish(obj.clone(), d, None))
}

/// Relaxation for the error-linear part l(x,e) = c(x) + Σ_j s_j(x)·e_j over
/// X × [-1,1]^m, with prescribed cliques C_j = {x-vars} ∪ {e_j} and the
/// closures M+1 − Σ x_i² − e_j². The x constraints must already be scaled
/// into the same coordinates as the objective's x part.
///
/// With `reduced` set, each clique's SOS block is split into one shared
/// pure-x block of full degree plus a small coupled block whose basis is
/// {x-monomials of degree ≤ p1} ∪ e_j·{x-monomials of degree ≤ d−1}; this
/// restricts the certificate space (so bounds can only weaken, soundly)
/// while shrinking the relaxation dramatically.
///
/// The caller passes the full objective over nx+m variables (x first).
pub fn build_linear_part(
    objective: &Poly,
    nx: usize,
    m: usize,
    x_cstr: &ConstraintSet,
    d: usize,
    reduced: bool,
) -> Result<SosProgram, SosError> {
    assert_eq!(x_cstr.nvars, nx);
    assert_eq!(objective.nvars, nx + m);
    let needed = objective.total_degree().max(x_cstr.max_degree()).max(2);
    if 2 * d < needed as usize {
        return Err(SosError::OrderTooSmall { d, required: needed });
    }
    let nvars = nx + m;
    let xs: Vec<usize> = (0..nx).collect();
    let mut asm = Assembler::new(nvars);

    // x-degree of the error-linear monomials decides the coupled basis
    let s_xdeg = objective
        .terms
        .keys()
        .filter(|mo| mo.vars().any(|v| v >= nx))
        .map(|mo| mo.0.iter().filter(|&&(v, _)| v < nx).map(|&(_, e)| e).sum::<u32>())
        .max()
        .unwrap_or(0) as usize;
    let p2 = d.saturating_sub(1);
    let p1 = p2.max(s_xdeg.saturating_sub(p2)).min(d);
    let reduced_ok = reduced && d >= 2 && p1 + p2 >= s_xdeg && m > 0;

    if reduced_ok {
        asm.push_sos("sos0_x".to_string(), &xs, d);
        for j in 0..m {
            let mut basis = monomials_upto(&xs, p1);
            let evar = Monomial::var(nx + j);
            for xm in monomials_upto(&xs, p2) {
                basis.push(xm.mul(&evar));
            }
            basis.sort();
            asm.blocks.push(SosBlock {
                label: format!("sos0_e{j}"),
                basis,
                gpoly: Poly::constant(nvars, Rat::from_integer(1.into())),
            });
        }
    } else {
        // σ0 ∈ Σ_j Σ[(x, e_j)], full clique bases
        for j in 0..m {
            let mut vars = xs.clone();
            vars.push(nx + j);
            asm.push_sos(format!("sos0_e{j}"), &vars, d);
        }
        if m == 0 {
            asm.push_sos("sos0".to_string(), &xs, d);
        }
    }
    // x-only constraints; their multipliers range over all of x
    for e in &x_cstr.entries {
        let deg = e.poly.total_degree() as usize;
        let bdeg = d - deg.div_ceil(2).min(d);
        asm.push_multiplier(
            format!("mul_{}", e.label),
            &xs,
            bdeg,
            e.poly.with_nvars(nvars),
        );
    }
    // per-error closures and error boxes
    let mplus = &x_cstr.archimedean_m + rat_int(1);
    for j in 0..m {
        let mut vars = xs.clone();
        vars.push(nx + j);
        let mut ball = Poly::constant(nvars, mplus.clone());
        for &i in &xs {
            ball = ball.sub(&Poly::var(nvars, i).pow(2));
        }
        ball = ball.sub(&Poly::var(nvars, nx + j).pow(2));
        let ebox = Poly::constant(nvars, rat_int(1)).sub(&Poly::var(nvars, nx + j).pow(2));
        if reduced_ok {
            asm.push_multiplier(format!("ball_e{j}"), &xs, d - 1, ball);
            asm.push_multiplier(format!("box_e{j}"), &xs, d - 1, ebox);
        } else {
            asm.push_multiplier(format!("ball_e{j}"), &vars, d - 1, ball);
            asm.push_multiplier(format!("box_e{j}"), &vars, d - 1, ebox);
        }
    }
    let group = move |mono: &Monomial| -> usize {
        for v in mono.vars() {
            if v >= nx {
                return v - nx + 1;
            }
        }
        0
    };
    Ok(asm.finish(objective.clone(), d, Some(&group)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program;
    use crate::rational::rat;

    #[test]
    fn size_formulas_match_published_counts() {
        assert_eq!(dense_variable_count(6, 1), 28);
        assert_eq!(dense_variable_count(6, 2), 210);
        assert_eq!(dense_variable_count(6, 3), 924);
        // kepler0 csp cliques {1,4},{1,2,3},{1,2,5},{1,5,6},{1,3,6}
        let sizes = [2, 3, 3, 3, 3];
        assert_eq!(sparse_variable_count(&sizes, 2), 155);
        assert_eq!(sparse_variable_count(&sizes, 3), 364);
    }

    #[test]
    fn default_order_formula() {
        assert_eq!(default_order(3, &[2, 2]), 2);
        assert_eq!(default_order(1, &[1]), 1);
        assert_eq!(default_order(3, &[2, 4]), 2);
        assert_eq!(default_order(0, &[]), 1);
    }

    #[test]
    fn basis_enumeration_counts() {
        assert_eq!(monomials_upto(&[0, 1, 2], 2).len(), binom(5, 2));
        assert_eq!(monomials_upto(&[4], 3).len(), 4);
        assert_eq!(monomials_upto(&[], 2).len(), 1);
    }

    #[test]
    fn dense_kepler0_d1_shapes() {
        let src = "\
let box_k x1 x2 x3 x4 x5 x6 = [(4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36); (4, 6.36)];;
let obj_k x1 x2 x3 x4 x5 x6 = [(x2 * x5 + x3 * x6 - x2 * x3 - x5 * x6 + x1 * ( - x1 + x2 + x3 - x4 + x5 + x6), 0)];;";
        let spec = parse_program(src).unwrap();
        let obj = spec.objective.to_poly(6).unwrap();
        let ks = ConstraintSet::from_box(&spec.domain, &[]);
        assert_eq!(ks.archimedean_m, rat_int(243));
        assert_eq!(ks.entries.len(), 7);
        let prog = build_dense(&obj, &ks, 1).unwrap();
        // monomials of degree ≤ 2 in 6 vars
        assert_eq!(prog.monomials.len(), 28);
        assert_eq!(prog.blocks[0].basis.len(), 7);
        for b in &prog.blocks[1..] {
            assert_eq!(b.basis.len(), 1);
        }
        let sdp = prog.to_sdp();
        assert_eq!(sdp.rhs.len(), 27);
        // every equation has an anchor in the σ0 block
        assert!(prog.anchors.iter().all(|a| a.is_some()));
    }

    #[test]
    fn order_too_small_rejected() {
        let obj = Poly::var(2, 0).pow(4);
        let dom = vec![Interval::new(rat_int(0), rat_int(1)); 2];
        let ks = ConstraintSet::from_box(&dom, &[]);
        assert!(matches!(
            build_dense(&obj, &ks, 1),
            Err(SosError::OrderTooSmall { .. })
        ));
    }

    #[test]
    fn sparse_single_clique_matches_dense_shape() {
        let obj = Poly::var(2, 0).mul(&Poly::var(2, 1));
        let dom = vec![Interval::new(rat_int(-1), rat_int(1)); 2];
        let ks = ConstraintSet::from_box_no_ball(&dom, &[]);
        let ks_dense = ConstraintSet::from_box(&dom, &[]);
        let cliques = CliqueSet {
            cliques: vec![[0usize, 1].into_iter().collect()],
        };
        let sp = build_sparse(&obj, &ks, &cliques, 2).unwrap();
        let de = build_dense(&obj, &ks_dense, 2).unwrap();
        // same σ0 basis and same equation count; the sparse closure plays
        // the dense ball's role
        assert_eq!(sp.blocks[0].basis, de.blocks[0].basis);
        assert_eq!(sp.monomials.len(), de.monomials.len());
    }

    #[test]
    fn clique_coverage_failure_detected() {
        let obj = Poly::var(2, 0).mul(&Poly::var(2, 1));
        let dom = vec![Interval::new(rat_int(-1), rat_int(1)); 2];
        let ks = ConstraintSet::from_box_no_ball(&dom, &[]);
        let cliques = CliqueSet {
            cliques: vec![[0usize].into_iter().collect(), [1usize].into_iter().collect()],
        };
        assert!(matches!(
            build_sparse(&obj, &ks, &cliques, 2),
            Err(SosError::CliqueCoverageFailure(_))
        ));
    }

    #[test]
    fn linear_part_groups_separate_error_monomials() {
        // l = x·e1 + x·e2 over x ∈ [-1,1]
        let nx = 1;
        let m = 2;
        let mut obj = Poly::zero(3);
        obj.add_term(Monomial(vec![(0, 1), (1, 1)]), rat_int(1));
        obj.add_term(Monomial(vec![(0, 1), (2, 1)]), rat_int(1));
        let dom = vec![Interval::new(rat_int(-1), rat_int(1))];
        let ks = ConstraintSet::from_box(&dom, &[]);
        let prog = build_linear_part(&obj, nx, m, &ks, 1, false).unwrap();
        let groups = prog.eq_groups.as_ref().unwrap();
        for (mono, g) in prog.monomials.iter().zip(groups) {
            let has_e1 = mono.exponent(1) > 0;
            let has_e2 = mono.exponent(2) > 0;
            assert!(!(has_e1 && has_e2), "cliques never mix error variables");
            if has_e1 {
                assert_eq!(*g, 1);
            } else if has_e2 {
                assert_eq!(*g, 2);
            } else {
                assert_eq!(*g, 0);
            }
        }
        assert!(prog.anchors.iter().all(|a| a.is_some()));
    }

    use crate::rational::rat_int;

    #[test]
    fn scaling_roundtrip() {
        let dom = vec![
            Interval::new(rat_int(4), rat(636, 100)),
            Interval::new(rat_int(-2), rat_int(2)),
        ];
        let sc = DomainScaling::from_box(&dom);
        let p = Poly::var(2, 0).mul(&Poly::var(2, 1)).add(&Poly::var(2, 0));
        let q = sc.to_unit(&p);
        let u = vec![rat(1, 3), rat(-1, 2)];
        let x = sc.from_unit_point(&u);
        assert_eq!(q.evaluate(&u), p.evaluate(&x));
    }
}
