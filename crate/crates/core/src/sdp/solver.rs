//! Embedded primal-dual interior-point solver.
//!
//! Infeasible-start path following with Nesterov-Todd scaling and a
//! Mehrotra-style predictor-corrector (two solves per iteration sharing
//! one Schur factorization). Per-block linear algebra is dense; the Schur
//! complement is factored either densely or through the arrowhead
//! structure announced by `eq_groups` (one independent group per error
//! variable plus a coupled border), which is what makes the
//! one-clique-per-error-variable relaxations cheap.
//!
//! Determinism: no randomness; parallel partial results are collected in
//! a fixed order before being summed.

use super::{SdpProblem, SdpSolution, SdpStatus, SolveParams};
use crate::rational::rat_to_f64;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

#[derive(Debug, Clone)]
struct BlockData {
    dim: usize,
    /// full entries (eq+1 or 0 for cost, row, col, value); off-diagonal
    /// entries appear mirrored
    full: Vec<(usize, usize, usize, f64)>,
    /// upper-triangle entries with multiplicity for inner products
    half: Vec<(usize, usize, usize, f64, f64)>,
    /// nonzero group this block's equations may touch (0 = border only)
    group: usize,
    /// fast path for plain-SOS blocks: every upper-triangle pair carries
    /// coefficient 1 into exactly one equation
    simple_pairs: Option<Vec<(usize, usize, usize)>>,
    /// simple pairs split by destination: (i, j, position-in-group, value)
    pairs_border: Vec<(usize, usize, usize, f64)>,
    pairs_group: Vec<(usize, usize, usize, f64)>,
}

struct Workspace {
    m: usize,
    blocks: Vec<BlockData>,
    b: DVector<f64>,
    eq_scale: Vec<f64>,
    groups: Vec<usize>,
    group_eqs: Vec<Vec<usize>>,
    eq_pos: Vec<usize>,
    blocks_of_group: Vec<Vec<usize>>,
    c_norm: f64,
    b_norm: f64,
}

fn build_workspace(p: &SdpProblem) -> Workspace {
    let m = p.num_eqs();
    let mut eq_scale = vec![1.0f64; m];
    for (q, a) in p.cons.iter().enumerate() {
        let mut mx = 0.0f64;
        for e in a {
            mx = mx.max(rat_to_f64(&e.value).abs());
        }
        if mx > 1.0 {
            eq_scale[q] = mx;
        }
    }
    let mut groups = match &p.eq_groups {
        Some(g) => g.clone(),
        None => vec![0usize; m],
    };

    let mut blocks: Vec<BlockData> = p
        .block_dims
        .iter()
        .map(|&d| BlockData {
            dim: d,
            full: Vec::new(),
            half: Vec::new(),
            group: 0,
            simple_pairs: None,
            pairs_border: Vec::new(),
            pairs_group: Vec::new(),
        })
        .collect();
    let push = |blocks: &mut Vec<BlockData>, p_idx: usize, bl: usize, i: usize, j: usize, v: f64| {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        blocks[bl].half.push((p_idx, i, j, v, if i == j { 1.0 } else { 2.0 }));
        blocks[bl].full.push((p_idx, i, j, v));
        if i != j {
            blocks[bl].full.push((p_idx, j, i, v));
        }
    };
    for e in &p.cost {
        push(&mut blocks, 0, e.block, e.i, e.j, rat_to_f64(&e.value));
    }
    for (q, a) in p.cons.iter().enumerate() {
        for e in a {
            push(&mut blocks, q + 1, e.block, e.i, e.j, rat_to_f64(&e.value) / eq_scale[q]);
        }
    }
    // a block must not couple two distinct nonzero groups; otherwise fall
    // back to one dense border
    let mut valid = true;
    for bl in blocks.iter_mut() {
        let mut g = 0usize;
        for &(pp, ..) in &bl.half {
            if pp == 0 {
                continue;
            }
            let gg = groups[pp - 1];
            if gg != 0 {
                if g == 0 {
                    g = gg;
                } else if g != gg {
                    valid = false;
                }
            }
        }
        bl.group = g;
    }
    if !valid {
        groups = vec![0usize; m];
        for bl in &mut blocks {
            bl.group = 0;
        }
    }
    let ngroups = groups.iter().copied().max().unwrap_or(0) + 1;
    let mut group_eqs: Vec<Vec<usize>> = vec![Vec::new(); ngroups];
    let mut eq_pos = vec![0usize; m];
    for (q, &g) in groups.iter().enumerate() {
        eq_pos[q] = group_eqs[g].len();
        group_eqs[g].push(q);
    }
    // plain-SOS detection: each (i,j) pair maps to exactly one equation
    // (any value, to survive the per-equation rescaling)
    for bl in blocks.iter_mut() {
        let mut pairs = Vec::with_capacity(bl.half.len());
        let mut seen = std::collections::HashSet::new();
        let mut ok = true;
        for &(pp, i, j, v, _) in &bl.half {
            if !seen.insert((i, j)) {
                ok = false;
                break;
            }
            if pp > 0 {
                pairs.push((i, j, pp - 1, v));
            }
        }
        if ok {
            for &(i, j, q, v) in &pairs {
                if groups[q] == 0 {
                    bl.pairs_border.push((i, j, eq_pos[q], v));
                } else {
                    bl.pairs_group.push((i, j, eq_pos[q], v));
                }
            }
            bl.simple_pairs = Some(pairs.iter().map(|&(i, j, q, _)| (i, j, q)).collect());
        }
    }
    let mut blocks_of_group: Vec<Vec<usize>> = vec![Vec::new(); ngroups];
    for (t, bl) in blocks.iter().enumerate() {
        blocks_of_group[bl.group].push(t);
    }
    let b: DVector<f64> = DVector::from_iterator(
        m,
        p.rhs.iter().zip(&eq_scale).map(|(r, s)| rat_to_f64(r) / s),
    );
    let c_norm = blocks
        .iter()
        .flat_map(|bl| bl.half.iter())
        .filter(|(pp, ..)| *pp == 0)
        .map(|(_, _, _, v, mult)| v * v * mult)
        .sum::<f64>()
        .sqrt();
    let b_norm = b.norm();
    Workspace {
        m,
        blocks,
        b,
        eq_scale,
        groups,
        group_eqs,
        eq_pos,
        blocks_of_group,
        c_norm,
        b_norm,
    }
}

impl Workspace {
    fn cost_matrices(&self) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|bl| {
                let mut c = DMatrix::zeros(bl.dim, bl.dim);
                for &(p, i, j, v) in &bl.full {
                    if p == 0 {
                        c[(i, j)] += v;
                    }
                }
                c
            })
            .collect()
    }

    fn apply_a(&self, v: &[DMatrix<f64>]) -> DVector<f64> {
        let mut out = DVector::zeros(self.m);
        for (bl, vb) in self.blocks.iter().zip(v) {
            for &(p, i, j, val, mult) in &bl.half {
                if p > 0 {
                    out[p - 1] += val * mult * vb[(i, j)];
                }
            }
        }
        out
    }

    fn apply_at(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.blocks
            .iter()
            .map(|bl| {
                let mut out = DMatrix::zeros(bl.dim, bl.dim);
                for &(p, i, j, v) in &bl.full {
                    if p > 0 {
                        out[(i, j)] += y[p - 1] * v;
                    }
                }
                out
            })
            .collect()
    }
}

/// Fast accumulation for plain-SOS blocks: A_p are single symmetric
/// Gram-pair indicators, so tr(A_p W A_q W) reduces to products of two W
/// entries.
fn accumulate_simple(
    ws: &Workspace,
    t: usize,
    w: &DMatrix<f64>,
    m_gg: Option<&mut DMatrix<f64>>,
    m_gb: Option<&mut DMatrix<f64>>,
    m_bb: &mut DMatrix<f64>,
) {
    let bl = &ws.blocks[t];
    let n = w.nrows();
    let wf = w.as_slice();
    let pb = &bl.pairs_border;
    let pg = &bl.pairs_group;
    // value of tr(A_p W A_q W) for symmetric pair indicators
    #[inline(always)]
    fn pair_val(wi: &[f64], wj: &[f64], k: usize, l: usize, half_oa: f64, ob: f64) -> f64 {
        let base = wi[k] * wj[l] + wi[l] * wj[k];
        half_oa * ob * base
    }
    // border × border
    {
        let rows = m_bb.nrows();
        let mb = m_bb.as_mut_slice();
        for (a, &(i, j, pa, va)) in pb.iter().enumerate() {
            let wi = &wf[i * n..(i + 1) * n];
            let wj = &wf[j * n..(j + 1) * n];
            let half_oa = if i == j { 0.5 } else { 1.0 } * va;
            for (off, &(k, l, qb, vb)) in pb[a..].iter().enumerate() {
                let ob = if k == l { 1.0 } else { 2.0 } * vb;
                let v = pair_val(wi, wj, k, l, half_oa, ob);
                if off == 0 {
                    mb[qb * rows + pa] += v;
                } else {
                    mb[qb * rows + pa] += v;
                    mb[pa * rows + qb] += v;
                }
            }
        }
    }
    // group × group and group × border
    if let Some(gg) = m_gg {
        let rows = gg.nrows();
        let mg = gg.as_mut_slice();
        for (a, &(i, j, pa, va)) in pg.iter().enumerate() {
            let wi = &wf[i * n..(i + 1) * n];
            let wj = &wf[j * n..(j + 1) * n];
            let half_oa = if i == j { 0.5 } else { 1.0 } * va;
            for (off, &(k, l, qb, vb)) in pg[a..].iter().enumerate() {
                let ob = if k == l { 1.0 } else { 2.0 } * vb;
                let v = pair_val(wi, wj, k, l, half_oa, ob);
                if off == 0 {
                    mg[qb * rows + pa] += v;
                } else {
                    mg[qb * rows + pa] += v;
                    mg[pa * rows + qb] += v;
                }
            }
        }
    }
    if let Some(gb) = m_gb {
        let rows = gb.nrows();
        let mgb = gb.as_mut_slice();
        for &(i, j, pa, va) in pg {
            let wi = &wf[i * n..(i + 1) * n];
            let wj = &wf[j * n..(j + 1) * n];
            let half_oa = if i == j { 0.5 } else { 1.0 } * va;
            for &(k, l, qb, vb) in pb {
                let ob = if k == l { 1.0 } else { 2.0 } * vb;
                let v = pair_val(wi, wj, k, l, half_oa, ob);
                mgb[qb * rows + pa] += v;
            }
        }
    }
}

/// Accumulate one block's tr(A_p W A_q W) contributions. Ordered entry
/// pairs are enumerated in full; (border p, group q) orientations are
/// skipped since they mirror the stored group×border part.
fn accumulate_block(
    ws: &Workspace,
    t: usize,
    w: &DMatrix<f64>,
    m_gg: Option<&mut DMatrix<f64>>,
    m_gb: Option<&mut DMatrix<f64>>,
    m_bb: &mut DMatrix<f64>,
) {
    let bl = &ws.blocks[t];
    let es = &bl.full;
    let mut gg = m_gg;
    let mut gb = m_gb;
    for &(pa, i, j, va) in es {
        if pa == 0 {
            continue;
        }
        let ga = ws.groups[pa - 1];
        let ia = ws.eq_pos[pa - 1];
        for &(pb, k, l, vb) in es {
            if pb == 0 {
                continue;
            }
            let gb_grp = ws.groups[pb - 1];
            let ib = ws.eq_pos[pb - 1];
            let val = va * vb * w[(j, k)] * w[(l, i)];
            match (ga, gb_grp) {
                (0, 0) => m_bb[(ia, ib)] += val,
                (_, 0) => {
                    if let Some(gbm) = gb.as_deref_mut() {
                        gbm[(ia, ib)] += val;
                    }
                }
                (0, _) => { /* transpose of the stored group×border part */ }
                (_, _) => {
                    if let Some(ggm) = gg.as_deref_mut() {
                        ggm[(ia, ib)] += val;
                    }
                }
            }
        }
    }
}

struct SchurFactors {
    group_inv: Vec<DMatrix<f64>>,
    group_border: Vec<DMatrix<f64>>,
    border_chol: Cholesky<f64, nalgebra::Dyn>,
}

fn chol_with_ridge(mut mat: DMatrix<f64>) -> Option<Cholesky<f64, nalgebra::Dyn>> {
    let scale = mat.diagonal().amax().max(1e-300);
    for k in 0..mat.nrows() {
        mat[(k, k)] += 1e-13 * scale;
    }
    if let Some(ch) = Cholesky::new(mat.clone()) {
        return Some(ch);
    }
    for k in 0..mat.nrows() {
        mat[(k, k)] += 1e-8 * scale;
    }
    Cholesky::new(mat)
}

fn assemble_and_factor(ws: &Workspace, w: &[DMatrix<f64>]) -> Option<SchurFactors> {
    let ngroups = ws.group_eqs.len();
    let nb_border = ws.group_eqs[0].len();
    let t_asm = std::time::Instant::now();

    // groups in parallel; collect() keeps deterministic order
    let group_parts: Vec<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> = (1..ngroups)
        .into_par_iter()
        .map(|g| {
            let ng = ws.group_eqs[g].len();
            let mut gg = DMatrix::zeros(ng, ng);
            let mut gbm = DMatrix::zeros(ng, nb_border);
            let mut bb = DMatrix::zeros(nb_border, nb_border);
            for &t in &ws.blocks_of_group[g] {
                if ws.blocks[t].simple_pairs.is_some() {
                    accumulate_simple(ws, t, &w[t], Some(&mut gg), Some(&mut gbm), &mut bb);
                } else {
                    accumulate_block(ws, t, &w[t], Some(&mut gg), Some(&mut gbm), &mut bb);
                }
            }
            (gg, gbm, bb)
        })
        .collect();

    // border-only blocks, chunked deterministically
    let border_blocks = &ws.blocks_of_group[0];
    let nchunks = rayon::current_num_threads().max(1);
    let chunk_size = border_blocks.len().div_ceil(nchunks).max(1);
    let border_parts: Vec<DMatrix<f64>> = border_blocks
        .chunks(chunk_size)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|chunk| {
            let mut bb = DMatrix::zeros(nb_border, nb_border);
            for &t in chunk.iter() {
                if ws.blocks[t].simple_pairs.is_some() {
                    accumulate_simple(ws, t, &w[t], None, None, &mut bb);
                } else {
                    accumulate_block(ws, t, &w[t], None, None, &mut bb);
                }
            }
            bb
        })
        .collect();

    let mut m_bb = DMatrix::zeros(nb_border, nb_border);
    for part in border_parts {
        m_bb += part;
    }
    for (_, _, bb) in &group_parts {
        m_bb += bb;
    }

    if std::env::var("FPSOS_PROF").is_ok() {
        eprintln!("    asm {:?}", t_asm.elapsed());
    }
    let t_elim = std::time::Instant::now();
    // eliminate each group block into the border (parallel solves);
    // explicit inverses let the solve phase run on GEMM kernels
    let elim: Vec<Option<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)>> = group_parts
        .into_par_iter()
        .map(|(gg, gbm, _)| {
            let sym = (&gg + gg.transpose()) * 0.5;
            let ch = chol_with_ridge(sym)?;
            let inv = ch.inverse();
            let y = &inv * &gbm;
            let red = gbm.transpose() * y;
            Some((inv, gbm, red))
        })
        .collect();

    let mut group_inv = Vec::with_capacity(elim.len());
    let mut group_border = Vec::with_capacity(elim.len());
    for e in elim {
        let (inv, gbm, red) = e?;
        m_bb -= red;
        group_inv.push(inv);
        group_border.push(gbm);
    }
    if std::env::var("FPSOS_PROF").is_ok() {
        eprintln!("    elim {:?}", t_elim.elapsed());
    }
    let m_bb = (&m_bb + m_bb.transpose()) * 0.5;
    let border_chol = chol_with_ridge(m_bb)?;
    Some(SchurFactors { group_inv, group_border, border_chol })
}

impl SchurFactors {
    fn solve(&self, ws: &Workspace, rhs: &DVector<f64>) -> DVector<f64> {
        let ngroups = ws.group_eqs.len();
        let nb = ws.group_eqs[0].len();
        let mut v_b = DVector::zeros(nb);
        for (i, &q) in ws.group_eqs[0].iter().enumerate() {
            v_b[i] = rhs[q];
        }
        for g in 1..ngroups {
            let mut v = DVector::zeros(ws.group_eqs[g].len());
            for (i, &q) in ws.group_eqs[g].iter().enumerate() {
                v[i] = rhs[q];
            }
            let wv = &self.group_inv[g - 1] * &v;
            v_b -= self.group_border[g - 1].transpose() * &wv;
        }
        let u_b = self.border_chol.solve(&v_b);
        let mut out = DVector::zeros(ws.m);
        for (i, &q) in ws.group_eqs[0].iter().enumerate() {
            out[q] = u_b[i];
        }
        for g in 1..ngroups {
            let mut v = DVector::zeros(ws.group_eqs[g].len());
            for (i, &q) in ws.group_eqs[g].iter().enumerate() {
                v[i] = rhs[q];
            }
            let rhs_g = v - &self.group_border[g - 1] * &u_b;
            let u_g = &self.group_inv[g - 1] * &rhs_g;
            for (i, &q) in ws.group_eqs[g].iter().enumerate() {
                out[q] = u_g[i];
            }
        }
        out
    }
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    // W = Z^{-1/2} (Z^{1/2} X Z^{1/2})^{1/2} Z^{-1/2}, so W Z W = X
    let n = z.nrows();
    let ez = SymmetricEigen::new(z.clone());
    let mut sq = DMatrix::zeros(n, n);
    let mut isq = DMatrix::zeros(n, n);
    for k in 0..n {
        let lam = ez.eigenvalues[k].max(1e-300);
        let s = lam.sqrt();
        let col = ez.eigenvectors.column(k);
        let outer = &col * col.transpose();
        sq += &outer * s;
        isq += &outer * (1.0 / s);
    }
    let inner = &sq * x * &sq;
    let inner = (&inner + inner.transpose()) * 0.5;
    let ei = SymmetricEigen::new(inner);
    let mut half = DMatrix::zeros(n, n);
    for k in 0..n {
        let lam = ei.eigenvalues[k].max(1e-300);
        let col = ei.eigenvectors.column(k);
        half += &col * col.transpose() * lam.sqrt();
    }
    let w = &isq * half * &isq;
    (&w + w.transpose()) * 0.5
}

fn max_step(s: &DMatrix<f64>, d: &DMatrix<f64>, cap: f64) -> f64 {
    match Cholesky::new(s.clone()) {
        Some(ch) => {
            let l = ch.l();
            let li_d = l.solve_lower_triangular(d).unwrap_or_else(|| d.clone());
            let t = l
                .solve_lower_triangular(&li_d.transpose())
                .unwrap_or_else(|| li_d.transpose());
            let t = (&t + t.transpose()) * 0.5;
            let ev = t.symmetric_eigenvalues();
            let lam_min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
            if lam_min >= -1e-14 {
                cap
            } else {
                (-1.0 / lam_min).min(cap)
            }
        }
        None => 1e-8,
    }
}

pub fn solve(problem: &SdpProblem, params: &SolveParams) -> SdpSolution {
    let ws = build_workspace(problem);
    let nb = problem.block_dims.len();
    let obj_const = rat_to_f64(&problem.obj_const);
    let total_dim: usize = problem.block_dims.iter().sum();

    if ws.m == 0 || total_dim == 0 {
        return SdpSolution {
            status: SdpStatus::Optimal,
            primal_blocks: problem.block_dims.iter().map(|&d| DMatrix::zeros(d, d)).collect(),
            dual_y: vec![],
            dual_slacks: problem.block_dims.iter().map(|&d| DMatrix::identity(d, d)).collect(),
            primal_objective: 0.0,
            dual_objective: 0.0,
            gap: 0.0,
            pinfeas: 0.0,
            dinfeas: 0.0,
            iterations: 0,
            bound: obj_const,
        };
    }

    let c_mats = ws.cost_matrices();
    let xi = 10.0_f64.max(ws.b_norm / (1.0 + total_dim as f64).sqrt());
    let zeta = 10.0_f64.max(ws.c_norm);
    let mut x: Vec<DMatrix<f64>> = problem
        .block_dims
        .iter()
        .map(|&d| DMatrix::identity(d, d) * xi)
        .collect();
    let mut z: Vec<DMatrix<f64>> = problem
        .block_dims
        .iter()
        .map(|&d| DMatrix::identity(d, d) * zeta)
        .collect();
    let mut y = DVector::zeros(ws.m);

    let mut status = SdpStatus::IterationLimit;
    let mut iterations = 0usize;
    let mut stall = 0usize;
    // best iterate seen, by worst-of-three merit
    let mut best_merit = f64::INFINITY;
    let mut best: Option<(Vec<DMatrix<f64>>, DVector<f64>, Vec<DMatrix<f64>>)> = None;
    let mut stagnant = 0usize;

    for it in 0..params.max_iter {
        iterations = it + 1;
        let ax = ws.apply_a(&x);
        let rp = &ws.b - &ax;
        let aty = ws.apply_at(&y);
        let rd: Vec<DMatrix<f64>> = (0..nb).map(|t| &c_mats[t] - &z[t] - &aty[t]).collect();
        let gap_inner: f64 = (0..nb).map(|t| x[t].dot(&z[t])).sum();
        let mu = gap_inner / total_dim as f64;
        let cx: f64 = (0..nb).map(|t| c_mats[t].dot(&x[t])).sum();
        let by = ws.b.dot(&y);
        let rel_gap = gap_inner.abs() / (1.0 + cx.abs() + by.abs());
        let pinf = rp.norm() / (1.0 + ws.b_norm);
        let dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + ws.c_norm);

        if std::env::var("FPSOS_DEBUG").is_ok() {
            eprintln!("it {it} mu {mu:.3e} relgap {rel_gap:.3e} pinf {pinf:.3e} dinf {dinf:.3e} cx {cx:.6} by {by:.6}");
        }
        let merit = rel_gap.max(pinf).max(dinf);
        if merit < best_merit * 0.9 {
            stagnant = 0;
        } else {
            stagnant += 1;
        }
        if merit < best_merit {
            best_merit = merit;
            best = Some((x.clone(), y.clone(), z.clone()));
        }
        if stagnant >= 12 {
            break;
        }
        if rel_gap <= params.gap_tol && pinf <= params.feas_tol && dinf <= params.feas_tol {
            status = SdpStatus::Optimal;
            break;
        }
        if y.norm() > 1e13 * (1.0 + ws.b_norm) {
            status = SdpStatus::Infeasible;
            break;
        }

        let t_nt = std::time::Instant::now();
        let w: Vec<DMatrix<f64>> = x
            .par_iter()
            .zip(z.par_iter())
            .map(|(xb, zb)| nt_scaling(xb, zb))
            .collect();
        let d_nt = t_nt.elapsed();
        let t_fac = std::time::Instant::now();
        let Some(factors) = assemble_and_factor(&ws, &w) else {
            status = SdpStatus::NumericalTrouble;
            break;
        };
        let d_fac = t_fac.elapsed();

        let z_inv: Vec<DMatrix<f64>> = z
            .par_iter()
            .map(|zb| match Cholesky::new(zb.clone()) {
                Some(ch) => ch.inverse(),
                None => {
                    let e = SymmetricEigen::new(zb.clone());
                    let mut inv = DMatrix::zeros(zb.nrows(), zb.ncols());
                    for k in 0..zb.nrows() {
                        let lam = e.eigenvalues[k].max(1e-300);
                        let col = e.eigenvectors.column(k);
                        inv += &col * col.transpose() * (1.0 / lam);
                    }
                    inv
                }
            })
            .collect();

        // M·v without materializing M: A(W Aᵀ(v) W)
        let m_apply = |v: &DVector<f64>| -> DVector<f64> {
            let atv = ws.apply_at(v);
            let sandwiched: Vec<DMatrix<f64>> = (0..nb)
                .map(|t| {
                    let s = &w[t] * &atv[t] * &w[t];
                    (&s + s.transpose()) * 0.5
                })
                .collect();
            ws.apply_a(&sandwiched)
        };
        let solve_refined = |rhs: &DVector<f64>| -> DVector<f64> {
            let mut dy = factors.solve(&ws, rhs);
            let r = rhs - m_apply(&dy);
            if r.norm() > 1e-13 * (1.0 + rhs.norm()) {
                dy += factors.solve(&ws, &r);
            }
            dy
        };

        // search direction for centering target ν with an optional
        // second-order correction term per block
        let direction = |nu: f64, corr: Option<&Vec<DMatrix<f64>>>| {
            let mut rhs = ws.b.clone();
            for t in 0..nb {
                let mut contrib = &w[t] * &rd[t] * &w[t];
                if nu != 0.0 {
                    contrib -= &z_inv[t] * nu;
                }
                if let Some(c) = corr {
                    contrib += &c[t];
                }
                for &(p, i, j, v, mult) in &ws.blocks[t].half {
                    if p > 0 {
                        rhs[p - 1] += v * mult * contrib[(i, j)];
                    }
                }
            }
            let dy = solve_refined(&rhs);
            let aty_d = ws.apply_at(&dy);
            let dz: Vec<DMatrix<f64>> = (0..nb).map(|t| &rd[t] - &aty_d[t]).collect();
            let dx: Vec<DMatrix<f64>> = (0..nb)
                .map(|t| {
                    let mut dxt = -&x[t] - &w[t] * &dz[t] * &w[t];
                    if nu != 0.0 {
                        dxt += &z_inv[t] * nu;
                    }
                    if let Some(c) = corr {
                        dxt -= &c[t];
                    }
                    (&dxt + dxt.transpose()) * 0.5
                })
                .collect();
            (dx, dy, dz)
        };

        // predictor
        let (dx_aff, _, dz_aff) = direction(0.0, None);
        let alpha_p_aff: f64 = (0..nb)
            .map(|t| max_step(&x[t], &dx_aff[t], 1.0))
            .fold(1.0, f64::min);
        let alpha_d_aff: f64 = (0..nb)
            .map(|t| max_step(&z[t], &dz_aff[t], 1.0))
            .fold(1.0, f64::min);
        let mut gap_aff = 0.0;
        for t in 0..nb {
            let xa = &x[t] + &dx_aff[t] * alpha_p_aff;
            let za = &z[t] + &dz_aff[t] * alpha_d_aff;
            gap_aff += xa.dot(&za);
        }
        let mu_aff = gap_aff / total_dim as f64;
        let sigma = ((mu_aff / mu).powi(3)).clamp(1e-8, 1.0);

        // corrector, reusing the factorization
        let (dx, dy, dz) = direction(sigma * mu, None);
        let tau = if mu > 1e-4 { 0.97 } else { 0.99 };
        let alpha_p = ((0..nb)
            .map(|t| max_step(&x[t], &dx[t], 2.0))
            .fold(2.0, f64::min)
            * tau)
            .min(1.0);
        let alpha_d = ((0..nb)
            .map(|t| max_step(&z[t], &dz[t], 2.0))
            .fold(2.0, f64::min)
            * tau)
            .min(1.0);

        for t in 0..nb {
            x[t] += &dx[t] * alpha_p;
            z[t] += &dz[t] * alpha_d;
        }
        y += &dy * alpha_d;

        if std::env::var("FPSOS_PROF").is_ok() {
            eprintln!("  nt {d_nt:?} factor {d_fac:?}");
        }
        if alpha_p < 1e-5 && alpha_d < 1e-5 {
            stall += 1;
            if stall >= 3 {
                status = SdpStatus::NumericalTrouble;
                break;
            }
        } else {
            stall = 0;
        }
    }

    // fall back to the best iterate seen when the final one is worse
    if let Some((bx, by_vec, bz)) = best {
        let ax = ws.apply_a(&bx);
        let pinf = (&ws.b - &ax).norm() / (1.0 + ws.b_norm);
        let aty = ws.apply_at(&by_vec);
        let dinf = (0..nb)
            .map(|t| (&c_mats[t] - &bz[t] - &aty[t]).norm_squared())
            .sum::<f64>()
            .sqrt()
            / (1.0 + ws.c_norm);
        let gap_inner: f64 = (0..nb).map(|t| bx[t].dot(&bz[t])).sum();
        let cx: f64 = (0..nb).map(|t| c_mats[t].dot(&bx[t])).sum();
        let byv = ws.b.dot(&by_vec);
        let rel_gap = gap_inner.abs() / (1.0 + cx.abs() + byv.abs());
        if status != SdpStatus::Optimal
            && rel_gap <= params.gap_tol
            && pinf <= params.feas_tol
            && dinf <= params.feas_tol
        {
            status = SdpStatus::Optimal;
        }
        x = bx;
        y = by_vec;
        z = bz;
    }
    let cx: f64 = (0..nb).map(|t| c_mats[t].dot(&x[t])).sum();
    let by = ws.b.dot(&y);
    let gap_inner: f64 = (0..nb).map(|t| x[t].dot(&z[t])).sum();
    let ax = ws.apply_a(&x);
    let pinfeas = (&ws.b - &ax).norm() / (1.0 + ws.b_norm);
    let aty = ws.apply_at(&y);
    let dinfeas = (0..nb)
        .map(|t| (&c_mats[t] - &z[t] - &aty[t]).norm_squared())
        .sum::<f64>()
        .sqrt()
        / (1.0 + ws.c_norm);
    let dual_y: Vec<f64> = (0..ws.m).map(|q| y[q] / ws.eq_scale[q]).collect();
    SdpSolution {
        status,
        primal_blocks: x,
        dual_y,
        dual_slacks: z,
        primal_objective: cx,
        dual_objective: by,
        gap: gap_inner.abs() / (1.0 + cx.abs() + by.abs()),
        pinfeas,
        dinfeas,
        iterations,
        bound: obj_const - cx,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};
    use crate::sdp::SparseSymEntry;

    fn entry(block: usize, i: usize, j: usize, v: crate::rational::Rat) -> SparseSymEntry {
        SparseSymEntry { block, i, j, value: v }
    }

    /// max μ s.t. 5 − μ ⪰ 0 encoded as C = [5], A = [1], b = 1;
    /// dual optimum y = 5, primal ⟨C,X⟩ = 5 at X = 1.
    #[test]
    fn scalar_lp_as_sdp() {
        let p = SdpProblem {
            block_dims: vec![1],
            rhs: vec![rat_int(1)],
            cost: vec![entry(0, 0, 0, rat_int(5))],
            cons: vec![vec![entry(0, 0, 0, rat_int(1))]],
            obj_const: rat_int(0),
            eq_groups: None,
        };
        let sol = solve(&p, &SolveParams::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.dual_y[0] - 5.0).abs() < 1e-6, "y = {}", sol.dual_y[0]);
        assert!((sol.primal_objective - 5.0).abs() < 1e-6);
    }

    /// max y s.t. [[1,y],[y,1]] ⪰ 0 → y* = 1.
    #[test]
    fn psd_boundary_2x2() {
        let p = SdpProblem {
            block_dims: vec![2],
            rhs: vec![rat_int(1)],
            cost: vec![entry(0, 0, 0, rat_int(1)), entry(0, 1, 1, rat_int(1))],
            cons: vec![vec![entry(0, 0, 1, rat_int(-1))]],
            obj_const: rat_int(0),
            eq_groups: None,
        };
        let sol = solve(&p, &SolveParams::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!((sol.dual_objective - 1.0).abs() < 1e-6, "by = {}", sol.dual_objective);
        assert!((sol.primal_objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn weak_duality_and_psd_invariants() {
        let p = SdpProblem {
            block_dims: vec![2, 2],
            rhs: vec![rat_int(2), rat_int(1)],
            cost: vec![
                entry(0, 0, 0, rat_int(2)),
                entry(0, 1, 1, rat_int(1)),
                entry(1, 0, 0, rat_int(1)),
                entry(1, 0, 1, rat(1, 2)),
                entry(1, 1, 1, rat_int(3)),
            ],
            cons: vec![
                vec![entry(0, 0, 0, rat_int(1)), entry(1, 1, 1, rat_int(1))],
                vec![entry(0, 0, 1, rat_int(1)), entry(1, 0, 0, rat_int(1))],
            ],
            obj_const: rat_int(0),
            eq_groups: None,
        };
        let sol = solve(&p, &SolveParams::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert!(sol.dual_objective <= sol.primal_objective + 1e-7);
        for (t, xb) in sol.primal_blocks.iter().enumerate() {
            let e = SymmetricEigen::new(xb.clone());
            let min = e.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(min >= -1e-7 * xb.norm().max(1.0), "block {t} not PSD: {min}");
        }
    }

    #[test]
    fn determinism_across_runs() {
        let p = SdpProblem {
            block_dims: vec![2],
            rhs: vec![rat_int(1)],
            cost: vec![entry(0, 0, 0, rat_int(1)), entry(0, 1, 1, rat_int(1))],
            cons: vec![vec![entry(0, 0, 1, rat_int(-1))]],
            obj_const: rat_int(0),
            eq_groups: None,
        };
        let a = solve(&p, &SolveParams::default());
        let b = solve(&p, &SolveParams::default());
        assert_eq!(a.status, b.status);
        assert!((a.primal_objective - b.primal_objective).abs() < 1e-10);
        assert_eq!(a.iterations, b.iterations);
    }

    #[test]
    fn empty_problem_is_trivially_optimal() {
        let p = SdpProblem {
            block_dims: vec![],
            rhs: vec![],
            cost: vec![],
            cons: vec![],
            obj_const: rat_int(7),
            eq_groups: None,
        };
        let sol = solve(&p, &SolveParams::default());
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_eq!(sol.bound, 7.0);
    }
}
