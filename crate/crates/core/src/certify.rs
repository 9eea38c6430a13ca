//! Exact-rational SOS certificates: extraction from floating SDP
//! solutions and solver-independent verification.
//!
//! Extraction refines the Gram blocks in floating point (alternating
//! positive-semidefinite projection and coefficient-equation correction
//! through designated anchor entries), rationalizes them dyadically,
//! enforces every coefficient equation exactly over the rationals, and
//! converts each block to an explicit sum of squares. The gap between the
//! rationalized factor product and the exact Gram matrix lands in the
//! residual polynomial eps(x) = obj - mu - sum sigma_j g_j, which the
//! checker bounds with interval arithmetic; the certified bound is
//! mu + inf eps. Nothing about the solver is trusted.

use crate::interval::Interval;
use crate::polynomial::{Monomial, Poly};
use crate::rational::{parse_rat, Rat};
use crate::sdp::SdpSolution;
use crate::sos::SosProgram;
use nalgebra::DMatrix;
use num::traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("extraction degenerate: {0}")]
    ExtractionDegenerate(String),
    #[error("malformed certificate: {0}")]
    MalformedCertificate(String),
    #[error("certificate parse error at line {0}: {1}")]
    ParseError(usize, String),
}

/// One SOS multiplier: sigma = sum of weight_i * q_i^2.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaBlock {
    pub label: String,
    /// the constraint it multiplies (constant 1 for plain SOS blocks)
    pub gpoly: Poly,
    pub terms: Vec<(Rat, Poly)>,
}

impl SigmaBlock {
    pub fn sigma_poly(&self, nvars: usize) -> Poly {
        let mut acc = Poly::zero(nvars);
        for (w, q) in &self.terms {
            acc = acc.add(&q.mul(q).scale(w));
        }
        acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SosCertificate {
    pub name: String,
    pub nvars: usize,
    pub order: usize,
    pub mu: Rat,
    /// domain over which the residual is interval-bounded
    pub domain: Vec<Interval>,
    /// the exact objective polynomial this certifies (lower-bound form)
    pub objective: Poly,
    pub sigmas: Vec<SigmaBlock>,
    pub residual_bound: Interval,
}

impl SosCertificate {
    pub fn certified_bound(&self) -> Rat {
        &self.mu + &self.residual_bound.lo
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub certified_bound: Rat,
    pub residual: Interval,
    /// residual polynomial was identically zero
    pub exact: bool,
    /// every multiplied constraint was in the declared set (as opposed to
    /// merely interval-verified nonnegative on the domain)
    pub all_constraints_declared: bool,
}

/// Exact rational LDL^T with clipping: non-positive pivots get weight
/// zero and are skipped. Returns (weights, unit-lower-triangular
/// columns); when no pivot was clipped, sum d_i col_i col_i^T equals the
/// input matrix.
pub fn ldl_exact(q: &[Vec<Rat>]) -> (Vec<Rat>, Vec<Vec<Rat>>) {
    let n = q.len();
    let mut s: Vec<Vec<Rat>> = q.to_vec();
    let mut d = vec![Rat::zero(); n];
    let mut l: Vec<Vec<Rat>> = vec![vec![Rat::zero(); n]; n];
    for (i, li) in l.iter_mut().enumerate() {
        li[i] = Rat::one();
    }
    for i in 0..n {
        let pivot = s[i][i].clone();
        if !pivot.is_positive() {
            continue;
        }
        d[i] = pivot.clone();
        for j in (i + 1)..n {
            l[j][i] = &s[j][i] / &pivot;
        }
        for j in (i + 1)..n {
            for k in (i + 1)..=j {
                let upd = &l[j][i] * &s[i][k];
                s[j][k] = &s[j][k] - upd;
                if k != j {
                    s[k][j] = s[j][k].clone();
                }
            }
        }
    }
    let cols: Vec<Vec<Rat>> = (0..n)
        .map(|i| (0..n).map(|j| l[j][i].clone()).collect())
        .collect();
    (d, cols)
}

fn column_poly(basis: &[Monomial], col: &[Rat], nvars: usize) -> Poly {
    let mut p = Poly::zero(nvars);
    for (m, c) in basis.iter().zip(col) {
        if !c.is_zero() {
            p.add_term(m.clone(), c.clone());
        }
    }
    p
}

/// Exact per-monomial sums <E_{t,alpha}, Q_t> for all equations at once.
fn equation_values(prog: &SosProgram, grams: &[Vec<Vec<Rat>>]) -> Vec<Rat> {
    let mut vals = vec![Rat::zero(); prog.monomials.len()];
    for (t, b) in prog.blocks.iter().enumerate() {
        for i in 0..b.basis.len() {
            for j in i..b.basis.len() {
                let qij = &grams[t][i][j];
                if qij.is_zero() {
                    continue;
                }
                let factor = if i == j {
                    qij.clone()
                } else {
                    qij * Rat::from_integer(2.into())
                };
                let bb = b.basis[i].mul(&b.basis[j]);
                for (dm, gc) in &b.gpoly.terms {
                    let alpha = bb.mul(dm);
                    let idx = prog.mono_index[&alpha];
                    vals[idx] += gc * &factor;
                }
            }
        }
    }
    vals
}

fn dyadic_round(x: f64, bits: u32) -> Rat {
    let scale = (1u64 << bits.min(62)) as f64;
    let scaled = (x * scale).round();
    if !scaled.is_finite() {
        return Rat::zero();
    }
    Rat::new(
        num::BigInt::from(scaled as i128),
        num::BigInt::from(1i128 << bits.min(62)),
    )
}

/// Extract a rational certificate from a floating solution of `prog`.
pub fn extract_certificate(
    sol: &SdpSolution,
    prog: &SosProgram,
    name: &str,
    domain: &[Interval],
) -> Result<SosCertificate, CertifyError> {
    let nb = prog.blocks.len();
    let mut x: Vec<DMatrix<f64>> = sol
        .primal_blocks
        .iter()
        .map(|b| (b + b.transpose()) * 0.5)
        .collect();
    if x.len() != nb {
        return Err(CertifyError::MalformedCertificate(
            "solution block count differs from program".to_string(),
        ));
    }

    let targets: Vec<f64> = prog
        .monomials
        .iter()
        .map(|m| {
            prog.objective
                .terms
                .get(m)
                .map(crate::rational::rat_to_f64)
                .unwrap_or(0.0)
        })
        .collect();

    // float refinement: alternate PSD buffering with anchor corrections
    let scale = x.iter().map(|b| b.amax()).fold(1.0f64, f64::max);
    let buf = 1e-10 * scale.max(1.0);
    for _round in 0..40 {
        for xb in x.iter_mut() {
            let e = nalgebra::SymmetricEigen::new(xb.clone());
            let mut rebuilt = DMatrix::zeros(xb.nrows(), xb.ncols());
            for k in 0..xb.nrows() {
                let lam = e.eigenvalues[k].max(buf);
                let col = e.eigenvectors.column(k);
                rebuilt += &col * col.transpose() * lam;
            }
            *xb = rebuilt;
        }
        let mut worst: f64 = 0.0;
        let mut vals = vec![0.0f64; prog.monomials.len()];
        for (t, b) in prog.blocks.iter().enumerate() {
            for i in 0..b.basis.len() {
                for j in i..b.basis.len() {
                    let q = x[t][(i, j)];
                    let factor = if i == j { q } else { 2.0 * q };
                    let bb = b.basis[i].mul(&b.basis[j]);
                    for (dm, gc) in &b.gpoly.terms {
                        let idx = prog.mono_index[&bb.mul(dm)];
                        vals[idx] += crate::rational::rat_to_f64(gc) * factor;
                    }
                }
            }
        }
        for idx in 1..prog.monomials.len() {
            let delta = targets[idx] - vals[idx];
            worst = worst.max(delta.abs());
            if let Some((t, i, j)) = prog.anchors[idx] {
                if i == j {
                    x[t][(i, i)] += delta;
                } else {
                    x[t][(i, j)] += delta * 0.5;
                    x[t][(j, i)] += delta * 0.5;
                }
            }
        }
        if worst < 1e-14 * scale.max(1.0) {
            break;
        }
    }

    // rationalize dyadically, well under the 2^64 denominator cap
    let bits = 52u32;
    let mut grams: Vec<Vec<Vec<Rat>>> = Vec::with_capacity(nb);
    for (t, b) in prog.blocks.iter().enumerate() {
        let n = b.basis.len();
        let mut g = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let v = dyadic_round(0.5 * (x[t][(i, j)] + x[t][(j, i)]), bits);
                g[i][j] = v.clone();
                g[j][i] = v;
            }
        }
        grams.push(g);
    }

    // exact coefficient correction: after this the identity holds over Q
    let vals = equation_values(prog, &grams);
    for idx in 1..prog.monomials.len() {
        let target = prog
            .objective
            .terms
            .get(&prog.monomials[idx])
            .cloned()
            .unwrap_or_else(Rat::zero);
        let delta = &target - &vals[idx];
        if delta.is_zero() {
            continue;
        }
        let Some((t, i, j)) = prog.anchors[idx] else {
            return Err(CertifyError::ExtractionDegenerate(format!(
                "no anchor for monomial {idx}"
            )));
        };
        if i == j {
            grams[t][i][i] = &grams[t][i][i] + &delta;
        } else {
            let half = &delta / Rat::from_integer(2.into());
            grams[t][i][j] = &grams[t][i][j] + &half;
            grams[t][j][i] = &grams[t][j][i] + &half;
        }
    }

    // mu from the constant-monomial equation
    let vals = equation_values(prog, &grams);
    let mu = prog.objective.constant_term() - vals[0].clone();

    // factor each block: float Cholesky, rationalized; the exact
    // difference R = Q - L L^T feeds the residual
    let mut sigmas = Vec::with_capacity(nb);
    let mut residual = Poly::zero(prog.nvars);
    let mut any_terms = false;
    for (t, b) in prog.blocks.iter().enumerate() {
        let n = b.basis.len();
        let qf = DMatrix::from_fn(n, n, |i, j| crate::rational::rat_to_f64(&grams[t][i][j]));
        let lf = {
            let try_chol = nalgebra::Cholesky::new(qf.clone());
            match try_chol {
                Some(ch) => Some(ch.l().clone_owned()),
                None => {
                    let mut boosted = qf;
                    let s = boosted.diagonal().amax().max(1e-300);
                    for k in 0..n {
                        boosted[(k, k)] += 1e-9 * s;
                    }
                    nalgebra::Cholesky::new(boosted).map(|ch| ch.l().clone_owned())
                }
            }
        };
        let Some(lf) = lf else {
            // exact LDL with clipping as the fallback route
            let (d, cols) = ldl_exact(&grams[t]);
            let mut terms = Vec::new();
            let mut llt = vec![vec![Rat::zero(); n]; n];
            for (i, di) in d.iter().enumerate() {
                if di.is_zero() {
                    continue;
                }
                for a in 0..n {
                    for bcol in 0..n {
                        let upd = di * &cols[i][a] * &cols[i][bcol];
                        llt[a][bcol] = &llt[a][bcol] + upd;
                    }
                }
                terms.push((di.clone(), column_poly(&b.basis, &cols[i], prog.nvars)));
            }
            any_terms |= !terms.is_empty();
            accumulate_remainder(&mut residual, &grams[t], &llt, b, prog.nvars);
            sigmas.push(SigmaBlock {
                label: b.label.clone(),
                gpoly: b.gpoly.clone(),
                terms,
            });
            continue;
        };
        let mut lrat = vec![vec![Rat::zero(); n]; n];
        for i in 0..n {
            for j in 0..=i {
                lrat[i][j] = dyadic_round(lf[(i, j)], bits);
            }
        }
        let mut terms = Vec::new();
        for i in 0..n {
            let col: Vec<Rat> = (0..n).map(|j| lrat[j][i].clone()).collect();
            if col.iter().all(|c| c.is_zero()) {
                continue;
            }
            terms.push((Rat::one(), column_poly(&b.basis, &col, prog.nvars)));
        }
        any_terms |= !terms.is_empty();
        let mut llt = vec![vec![Rat::zero(); n]; n];
        for a in 0..n {
            for bcol in a..n {
                let mut acc = Rat::zero();
                for k in 0..n {
                    if !lrat[a][k].is_zero() && !lrat[bcol][k].is_zero() {
                        acc += &lrat[a][k] * &lrat[bcol][k];
                    }
                }
                llt[a][bcol] = acc.clone();
                llt[bcol][a] = acc;
            }
        }
        accumulate_remainder(&mut residual, &grams[t], &llt, b, prog.nvars);
        sigmas.push(SigmaBlock {
            label: b.label.clone(),
            gpoly: b.gpoly.clone(),
            terms,
        });
    }
    if !any_terms && !prog.blocks.is_empty() {
        return Err(CertifyError::ExtractionDegenerate(
            "all pivots clipped to zero".to_string(),
        ));
    }

    let residual_bound = if residual.is_zero() {
        Interval::zero()
    } else {
        residual.evaluate_interval(domain)
    };
    Ok(SosCertificate {
        name: name.to_string(),
        nvars: prog.nvars,
        order: prog.order,
        mu,
        domain: domain.to_vec(),
        objective: prog.objective.clone(),
        sigmas,
        residual_bound,
    })
}

/// residual += B (Q - LL^T) B * g
fn accumulate_remainder(
    residual: &mut Poly,
    q: &[Vec<Rat>],
    llt: &[Vec<Rat>],
    block: &crate::sos::SosBlock,
    nvars: usize,
) {
    let n = block.basis.len();
    let mut quad = Poly::zero(nvars);
    for i in 0..n {
        for j in i..n {
            let diff = &q[i][j] - &llt[i][j];
            if diff.is_zero() {
                continue;
            }
            let coeff = if i == j {
                diff
            } else {
                diff * Rat::from_integer(2.into())
            };
            quad.add_term(block.basis[i].mul(&block.basis[j]), coeff);
        }
    }
    if !quad.is_zero() {
        *residual = residual.add(&quad.mul(&block.gpoly));
    }
}

/// Re-verify a certificate from scratch: recompute the residual
/// eps = obj - mu - sum sigma_j g_j exactly, check multiplier
/// admissibility, and bound eps over the domain. The certified bound
/// mu + inf(eps) is valid with no trust in the solver.
pub fn check_certificate(
    obj: &Poly,
    declared_constraints: &[Poly],
    cert: &SosCertificate,
    domain: &[Interval],
) -> Result<CheckResult, CertifyError> {
    if obj != &cert.objective {
        return Err(CertifyError::MalformedCertificate(
            "objective differs from the certified one".to_string(),
        ));
    }
    let mut all_declared = true;
    let mut acc = Poly::constant(cert.nvars, cert.mu.clone());
    for s in &cert.sigmas {
        for (w, q) in &s.terms {
            if w.is_negative() {
                return Err(CertifyError::MalformedCertificate(format!(
                    "negative weight in block {}",
                    s.label
                )));
            }
            if q.var_occurrences().iter().any(|&v| v >= cert.nvars) {
                return Err(CertifyError::MalformedCertificate(
                    "basis variable out of range".to_string(),
                ));
            }
        }
        let is_one = s.gpoly.total_degree() == 0 && s.gpoly.constant_term() == Rat::one();
        if !is_one && !declared_constraints.contains(&s.gpoly) {
            // not a declared constraint: admissible only when provably
            // nonnegative over the whole domain
            let enc = s.gpoly.evaluate_interval(domain);
            if enc.lo.is_negative() {
                return Err(CertifyError::MalformedCertificate(format!(
                    "constraint of block {} is neither declared nor provably nonnegative",
                    s.label
                )));
            }
            all_declared = false;
        }
        acc = acc.add(&s.sigma_poly(cert.nvars).mul(&s.gpoly));
    }
    let residual = obj.sub(&acc);
    let exact = residual.is_zero();
    let bound = if exact {
        Interval::zero()
    } else {
        residual.evaluate_interval(domain)
    };
    Ok(CheckResult {
        certified_bound: &cert.mu + &bound.lo,
        residual: bound,
        exact,
        all_constraints_declared: all_declared,
    })
}

// --- textual serialization --------------------------------------------

fn write_poly(p: &Poly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut parts = Vec::with_capacity(p.terms.len());
    for (m, c) in &p.terms {
        let mono = if m.is_one() {
            "1".to_string()
        } else {
            m.0.iter()
                .map(|(v, e)| format!("{v}^{e}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        parts.push(format!("{}:{}", c, mono));
    }
    parts.join(" ")
}

fn read_poly(s: &str, nvars: usize, line: usize) -> Result<Poly, CertifyError> {
    let s = s.trim();
    let mut p = Poly::zero(nvars);
    if s == "0" {
        return Ok(p);
    }
    for part in s.split_whitespace() {
        let (coef, mono) = part
            .rsplit_once(':')
            .ok_or_else(|| CertifyError::ParseError(line, format!("bad term `{part}`")))?;
        let c = parse_rat(coef)
            .ok_or_else(|| CertifyError::ParseError(line, format!("bad coefficient `{coef}`")))?;
        let m = if mono == "1" {
            Monomial::one()
        } else {
            let mut pairs = Vec::new();
            for pe in mono.split(',') {
                let (v, e) = pe.split_once('^').ok_or_else(|| {
                    CertifyError::ParseError(line, format!("bad monomial `{pe}`"))
                })?;
                let v: usize = v
                    .parse()
                    .map_err(|_| CertifyError::ParseError(line, "bad variable".to_string()))?;
                let e: u32 = e
                    .parse()
                    .map_err(|_| CertifyError::ParseError(line, "bad exponent".to_string()))?;
                pairs.push((v, e));
            }
            pairs.sort_unstable_by_key(|&(v, _)| v);
            Monomial(pairs)
        };
        p.add_term(m, c);
    }
    Ok(p)
}

/// Lossless deterministic text form.
pub fn certificate_to_string(cert: &SosCertificate) -> String {
    let mut out = String::new();
    out.push_str("sos-certificate v1\n");
    out.push_str(&format!("name {}\n", cert.name));
    out.push_str(&format!("nvars {}\n", cert.nvars));
    out.push_str(&format!("order {}\n", cert.order));
    out.push_str(&format!("mu {}\n", cert.mu));
    out.push_str(&format!(
        "residual {} {}\n",
        cert.residual_bound.lo, cert.residual_bound.hi
    ));
    for iv in &cert.domain {
        out.push_str(&format!("dom {} {}\n", iv.lo, iv.hi));
    }
    out.push_str(&format!("objective {}\n", write_poly(&cert.objective)));
    for s in &cert.sigmas {
        out.push_str(&format!("block {}\n", s.label));
        out.push_str(&format!("g {}\n", write_poly(&s.gpoly)));
        for (w, q) in &s.terms {
            out.push_str(&format!("sq {} | {}\n", w, write_poly(q)));
        }
    }
    out
}

pub fn certificate_from_string(text: &str) -> Result<SosCertificate, CertifyError> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l.trim()));
    let (ln, header) = lines
        .next()
        .ok_or_else(|| CertifyError::ParseError(0, "empty file".to_string()))?;
    if header != "sos-certificate v1" {
        return Err(CertifyError::ParseError(ln, "bad header".to_string()));
    }
    let mut name = String::new();
    let mut nvars = 0usize;
    let mut order = 0usize;
    let mut mu = Rat::zero();
    let mut residual = Interval::zero();
    let mut domain = Vec::new();
    let mut objective: Option<Poly> = None;
    let mut sigmas: Vec<SigmaBlock> = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(' ').unwrap_or((line, ""));
        match key {
            "name" => name = rest.to_string(),
            "nvars" => {
                nvars = rest
                    .parse()
                    .map_err(|_| CertifyError::ParseError(ln, "bad nvars".to_string()))?
            }
            "order" => {
                order = rest
                    .parse()
                    .map_err(|_| CertifyError::ParseError(ln, "bad order".to_string()))?
            }
            "mu" => {
                mu = parse_rat(rest)
                    .ok_or_else(|| CertifyError::ParseError(ln, "bad mu".to_string()))?
            }
            "residual" => {
                let mut it = rest.split_whitespace();
                let lo = it
                    .next()
                    .and_then(parse_rat)
                    .ok_or_else(|| CertifyError::ParseError(ln, "bad residual".to_string()))?;
                let hi = it
                    .next()
                    .and_then(parse_rat)
                    .ok_or_else(|| CertifyError::ParseError(ln, "bad residual".to_string()))?;
                residual = Interval::new(lo, hi);
            }
            "dom" => {
                let mut it = rest.split_whitespace();
                let lo = it
                    .next()
                    .and_then(parse_rat)
                    .ok_or_else(|| CertifyError::ParseError(ln, "bad dom".to_string()))?;
                let hi = it
                    .next()
                    .and_then(parse_rat)
                    .ok_or_else(|| CertifyError::ParseError(ln, "bad dom".to_string()))?;
                domain.push(Interval::new(lo, hi));
            }
            "objective" => objective = Some(read_poly(rest, nvars, ln)?),
            "block" => sigmas.push(SigmaBlock {
                label: rest.to_string(),
                gpoly: Poly::zero(nvars),
                terms: Vec::new(),
            }),
            "g" => {
                let blk = sigmas
                    .last_mut()
                    .ok_or_else(|| CertifyError::ParseError(ln, "g before block".to_string()))?;
                blk.gpoly = read_poly(rest, nvars, ln)?;
            }
            "sq" => {
                let blk = sigmas
                    .last_mut()
                    .ok_or_else(|| CertifyError::ParseError(ln, "sq before block".to_string()))?;
                let (w, q) = rest
                    .split_once('|')
                    .ok_or_else(|| CertifyError::ParseError(ln, "bad sq line".to_string()))?;
                let weight = parse_rat(w.trim())
                    .ok_or_else(|| CertifyError::ParseError(ln, "bad weight".to_string()))?;
                blk.terms.push((weight, read_poly(q, nvars, ln)?));
            }
            other => {
                return Err(CertifyError::ParseError(ln, format!("unknown key `{other}`")));
            }
        }
    }
    Ok(SosCertificate {
        name,
        nvars,
        order,
        mu,
        domain,
        objective: objective
            .ok_or_else(|| CertifyError::ParseError(0, "missing objective".to_string()))?,
        sigmas,
        residual_bound: residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    /// Gram matrix of 1/4 + x0^4 - 2 x0^2 x1^2 + x1^4 over the basis
    /// (1, x0, x1, x0^2, x0 x1, x1^2): exact LDL reproduces the
    /// decomposition (1/2)^2 + (x0^2 - x1^2)^2.
    #[test]
    fn quartic_gram_ldl() {
        let n = 6;
        let mut q = vec![vec![Rat::zero(); n]; n];
        q[0][0] = rat(1, 4);
        q[3][3] = rat_int(1);
        q[5][5] = rat_int(1);
        q[3][5] = rat_int(-1);
        q[5][3] = rat_int(-1);
        let (d, cols) = ldl_exact(&q);
        let nonzero: Vec<(usize, &Rat)> =
            d.iter().enumerate().filter(|(_, w)| !w.is_zero()).collect();
        assert_eq!(nonzero.len(), 2);
        assert_eq!(*nonzero[0].1, rat(1, 4));
        assert_eq!(*nonzero[1].1, rat_int(1));
        let basis = crate::sos::monomials_upto(&[0, 1], 2);
        assert_eq!(basis.len(), 6);
        let q1 = column_poly(&basis, &cols[nonzero[0].0], 2);
        assert_eq!(q1, Poly::constant(2, rat_int(1)));
        let q2 = column_poly(&basis, &cols[nonzero[1].0], 2);
        let sigma = q1.mul(&q1).scale(nonzero[0].1).add(&q2.mul(&q2).scale(nonzero[1].1));
        let mut expect = Poly::constant(2, rat(1, 4));
        expect = expect.add(&Poly::var(2, 0).pow(4));
        expect = expect.add(&Poly::var(2, 1).pow(4));
        expect.add_term(Monomial(vec![(0, 2), (1, 2)]), rat_int(-2));
        assert_eq!(sigma, expect);
    }

    #[test]
    fn zero_gram_gives_empty_sos() {
        let q = vec![vec![Rat::zero(); 3]; 3];
        let (d, _) = ldl_exact(&q);
        assert!(d.iter().all(|w| w.is_zero()));
    }

    #[test]
    fn random_psd_ldl_reconstructs_exactly() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 3;
            let b: Vec<Vec<Rat>> = (0..n)
                .map(|_| {
                    (0..n)
                        .map(|_| rat(rng.gen_range(-4..=4), rng.gen_range(1..=3)))
                        .collect()
                })
                .collect();
            let mut a = vec![vec![Rat::zero(); n]; n];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let upd = &b[k][i] * &b[k][j];
                        a[i][j] = &a[i][j] + upd;
                    }
                }
            }
            let (d, cols) = ldl_exact(&a);
            let mut rebuilt = vec![vec![Rat::zero(); n]; n];
            for (i, di) in d.iter().enumerate() {
                for r in 0..n {
                    for c in 0..n {
                        let upd = di * &cols[i][r] * &cols[i][c];
                        rebuilt[r][c] = &rebuilt[r][c] + upd;
                    }
                }
            }
            assert_eq!(rebuilt, a);
        }
    }

    #[test]
    fn certificate_io_roundtrip() {
        let mut obj = Poly::zero(2);
        obj.add_term(Monomial(vec![(0, 2)]), rat_int(1));
        obj.add_term(Monomial::one(), rat(1, 3));
        let cert = SosCertificate {
            name: "toy".to_string(),
            nvars: 2,
            order: 1,
            mu: rat(-7, 3),
            domain: vec![
                Interval::new(rat_int(-1), rat_int(1)),
                Interval::new(rat_int(0), rat(1, 2)),
            ],
            objective: obj.clone(),
            sigmas: vec![SigmaBlock {
                label: "sos0".to_string(),
                gpoly: Poly::constant(2, rat_int(1)),
                terms: vec![(rat(1, 2), Poly::var(2, 0)), (rat_int(2), Poly::var(2, 1))],
            }],
            residual_bound: Interval::new(rat(-1, 100), rat(1, 100)),
        };
        let text = certificate_to_string(&cert);
        let back = certificate_from_string(&text).unwrap();
        assert_eq!(cert, back);
        assert_eq!(text, certificate_to_string(&back));

        let empty = SosCertificate {
            name: "empty".to_string(),
            nvars: 0,
            order: 1,
            mu: Rat::zero(),
            domain: vec![],
            objective: Poly::zero(0),
            sigmas: vec![],
            residual_bound: Interval::zero(),
        };
        let t = certificate_to_string(&empty);
        assert_eq!(certificate_from_string(&t).unwrap(), empty);
    }

    #[test]
    fn random_certificates_roundtrip() {
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..10 {
            let nv = rng.gen_range(1..4usize);
            let mut obj = Poly::zero(nv);
            for _ in 0..4 {
                let mut mono = Vec::new();
                for v in 0..nv {
                    let e = rng.gen_range(0..3u32);
                    if e > 0 {
                        mono.push((v, e));
                    }
                }
                obj.add_term(Monomial(mono), rat(rng.gen_range(-9..9), rng.gen_range(1..9)));
            }
            let cert = SosCertificate {
                name: format!("r{}", rng.gen_range(0..100)),
                nvars: nv,
                order: rng.gen_range(1..3),
                mu: rat(rng.gen_range(-99..99), rng.gen_range(1..99)),
                domain: (0..nv)
                    .map(|_| Interval::new(rat_int(-1), rat_int(1)))
                    .collect(),
                objective: obj,
                sigmas: vec![SigmaBlock {
                    label: "b".to_string(),
                    gpoly: Poly::constant(nv, rat_int(1)),
                    terms: vec![(rat(1, 7), Poly::var(nv, 0))],
                }],
                residual_bound: Interval::zero(),
            };
            let text = certificate_to_string(&cert);
            assert_eq!(certificate_from_string(&text).unwrap(), cert);
        }
    }

    #[test]
    fn checker_on_hand_built_certificates() {
        // obj = x^2 + 1e-9 on [0,1], sigma0 = x^2, mu = 0: residual 1e-9
        let x = Poly::var(1, 0);
        let obj = x.mul(&x).add(&Poly::constant(1, rat(1, 1_000_000_000)));
        let cert = SosCertificate {
            name: "c".to_string(),
            nvars: 1,
            order: 1,
            mu: Rat::zero(),
            domain: vec![Interval::new(rat_int(0), rat_int(1))],
            objective: obj.clone(),
            sigmas: vec![SigmaBlock {
                label: "sos0".to_string(),
                gpoly: Poly::constant(1, rat_int(1)),
                terms: vec![(rat_int(1), x.clone())],
            }],
            residual_bound: Interval::zero(),
        };
        let res = check_certificate(&obj, &[], &cert, &cert.domain.clone()).unwrap();
        assert!(!res.exact);
        assert_eq!(res.certified_bound, rat(1, 1_000_000_000));

        // corrupting one coefficient drops the certified bound
        let mut bad = cert.clone();
        bad.sigmas[0].terms[0].1 = x.scale(&rat(1001, 1000));
        let res_bad = check_certificate(&obj, &[], &bad, &bad.domain.clone()).unwrap();
        assert!(res_bad.certified_bound < res.certified_bound);

        // negative weight is malformed
        let mut neg = cert.clone();
        neg.sigmas[0].terms[0].0 = rat_int(-1);
        assert!(matches!(
            check_certificate(&obj, &[], &neg, &neg.domain.clone()),
            Err(CertifyError::MalformedCertificate(_))
        ));
    }

    #[test]
    fn end_to_end_extraction_on_a_small_relaxation() {
        // max of x*y over [-1,1]^2 at order 2: solve the lower-bound
        // relaxation of -x*y, extract, check; certified bound close to -1
        // and sound (<= -1 up to residual slack, which itself must be >= -1-1e-6).
        use crate::sos::{build_dense, ConstraintSet};
        let obj = Poly::var(2, 0).mul(&Poly::var(2, 1)).neg();
        let dom = vec![
            Interval::new(rat_int(-1), rat_int(1)),
            Interval::new(rat_int(-1), rat_int(1)),
        ];
        let ks = ConstraintSet::from_box(&dom, &[]);
        let prog = build_dense(&obj, &ks, 2).unwrap();
        let sdp = prog.to_sdp();
        let sol = crate::sdp::solve(&sdp, &crate::sdp::SolveParams::default());
        assert_eq!(sol.status, crate::sdp::SdpStatus::Optimal);
        assert!((sol.bound - (-1.0)).abs() < 1e-5, "bound {}", sol.bound);
        let cert = extract_certificate(&sol, &prog, "toy", &dom).unwrap();
        let declared: Vec<Poly> = ks.entries.iter().map(|e| e.poly.clone()).collect();
        let res = check_certificate(&obj, &declared, &cert, &dom).unwrap();
        // sound: certified lower bound of -xy over the square is <= -1
        assert!(res.certified_bound <= rat_int(-1));
        // and tight to ~1e-6
        assert!(res.certified_bound >= rat(-1_000_010, 1_000_000));
        // residual is tiny because the identity was corrected exactly
        assert!(res.residual.mag() < rat(1, 10_000_000));
    }
}
