//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Terms live in a BTreeMap keyed by graded-lexicographic monomial order,
//! so iteration order (and therefore printing, certificate files, golden
//! tests) is deterministic.

use crate::interval::Interval;
use crate::rational::{binom, Rat};
use num::traits::{One, Signed, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// Exponent map, sparse and sorted by variable index; zero exponents are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Monomial(pub Vec<(usize, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Monomial(vec![(i, 1)])
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, var: usize) -> u32 {
        self.0
            .iter()
            .find(|&&(v, _)| v == var)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            let (va, ea) = self.0[i];
            let (vb, eb) = other.0[j];
            match va.cmp(&vb) {
                std::cmp::Ordering::Less => {
                    out.push((va, ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((vb, eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((va, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    pub fn vars(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&(v, _)| v)
    }

    /// Dense exponent vector of length nvars.
    pub fn dense(&self, nvars: usize) -> Vec<u32> {
        let mut out = vec![0; nvars];
        for &(v, e) in &self.0 {
            if v < nvars {
                out[v] = e;
            }
        }
        out
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // graded lexicographic
        self.total_degree()
            .cmp(&other.total_degree())
            .then_with(|| {
                let (mut i, mut j) = (0, 0);
                loop {
                    match (self.0.get(i), other.0.get(j)) {
                        (None, None) => return std::cmp::Ordering::Equal,
                        // remaining exponents on the other side mean it has
                        // positive power on a later variable; fewer leading
                        // vars = larger power earlier is handled per-entry.
                        (None, Some(_)) => return std::cmp::Ordering::Less,
                        (Some(_), None) => return std::cmp::Ordering::Greater,
                        (Some(&(va, ea)), Some(&(vb, eb))) => {
                            if va != vb {
                                // smaller var index with positive exponent is
                                // lexicographically larger
                                return if va < vb {
                                    std::cmp::Ordering::Greater
                                } else {
                                    std::cmp::Ordering::Less
                                };
                            }
                            if ea != eb {
                                return ea.cmp(&eb);
                            }
                            i += 1;
                            j += 1;
                        }
                    }
                }
            })
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Poly {
    pub nvars: usize,
    pub terms: BTreeMap<Monomial, Rat>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rat) -> Self {
        let mut p = Poly::zero(nvars);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(), c);
        }
        p
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        assert!(i < nvars);
        let mut p = Poly::zero(nvars);
        p.terms.insert(Monomial::var(i), Rat::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_term(&self) -> Rat {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        out.nvars = self.nvars.max(o.nvars);
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        let mut out = self.clone();
        out.nvars = self.nvars.max(o.nvars);
        for (m, c) in &o.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Rat) -> Poly {
        if k.is_zero() {
            return Poly::zero(self.nvars);
        }
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            out.terms.insert(m.clone(), c * k);
        }
        out
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars.max(o.nvars));
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    pub fn mul_monomial(&self, m: &Monomial, c: &Rat) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ma, ca) in &self.terms {
            out.add_term(ma.mul(m), ca * c);
        }
        out
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::constant(self.nvars, Rat::one());
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn differentiate(&self, var: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.exponent(var);
            if e == 0 {
                continue;
            }
            let mut nm: Vec<(usize, u32)> = Vec::with_capacity(m.0.len());
            for &(v, ev) in &m.0 {
                if v == var {
                    if ev > 1 {
                        nm.push((v, ev - 1));
                    }
                } else {
                    nm.push((v, ev));
                }
            }
            out.add_term(Monomial(nm), c * Rat::from_integer(e.into()));
        }
        out
    }

    pub fn evaluate(&self, point: &[Rat]) -> Rat {
        debug_assert!(point.len() >= self.nvars);
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for &(v, e) in &m.0 {
                t *= num::pow(point[v].clone(), e as usize);
            }
            acc += t;
        }
        acc
    }

    pub fn evaluate_f64(&self, point: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            let mut t = crate::rational::rat_to_f64(c);
            for &(v, e) in &m.0 {
                t *= point[v].powi(e as i32);
            }
            acc += t;
        }
        acc
    }

    /// Naive monomial-wise interval enclosure (with even-power tightening).
    pub fn evaluate_interval(&self, point: &[Interval]) -> Interval {
        debug_assert!(point.len() >= self.nvars);
        let mut acc = Interval::zero();
        for (m, c) in &self.terms {
            let mut t = Interval::point(c.clone());
            for &(v, e) in &m.0 {
                t = t.mul(&point[v].pow(e));
            }
            acc = acc.add(&t);
        }
        acc
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.total_degree()).max().unwrap_or(0)
    }

    pub fn support(&self) -> BTreeSet<Vec<u32>> {
        self.terms.keys().map(|m| m.dense(self.nvars)).collect()
    }

    /// Set of variables appearing with positive exponent anywhere.
    pub fn var_occurrences(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for m in self.terms.keys() {
            out.extend(m.vars());
        }
        out
    }

    /// Substitute x_i := offset_i + width_i * x_i (exact affine change of
    /// variables) for every variable.
    pub fn substitute_affine(&self, maps: &[(Rat, Rat)]) -> Poly {
        assert!(maps.len() >= self.nvars);
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            let mut term = Poly::constant(self.nvars, c.clone());
            for &(v, e) in &m.0 {
                let (off, w) = &maps[v];
                // (off + w x_v)^e expanded by the binomial theorem
                let mut expansion = Poly::zero(self.nvars);
                for k in 0..=e {
                    let coef = Rat::from_integer(binom(e as usize, k as usize).into())
                        * num::pow(off.clone(), (e - k) as usize)
                        * num::pow(w.clone(), k as usize);
                    if coef.is_zero() {
                        continue;
                    }
                    let mono = if k == 0 {
                        Monomial::one()
                    } else {
                        Monomial(vec![(v, k)])
                    };
                    expansion.add_term(mono, coef);
                }
                term = term.mul(&expansion);
            }
            out = out.add(&term);
        }
        out
    }

    /// Drop all terms that involve any variable index ≥ `from`.
    pub fn substitute_zero_from(&self, from: usize) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (m, c) in &self.terms {
            if m.vars().all(|v| v < from) {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out
    }

    /// Reinterpret over a larger variable space.
    pub fn with_nvars(&self, nvars: usize) -> Poly {
        assert!(nvars >= self.nvars || self.var_occurrences().iter().all(|&v| v < nvars));
        let mut out = self.clone();
        out.nvars = nvars;
        out
    }

    /// Rename variables: var i becomes mapping[i].
    pub fn remap(&self, mapping: &[usize], nvars: usize) -> Poly {
        let mut out = Poly::zero(nvars);
        for (m, c) in &self.terms {
            let mut nm: Vec<(usize, u32)> = m.0.iter().map(|&(v, e)| (mapping[v], e)).collect();
            nm.sort_unstable_by_key(|&(v, _)| v);
            out.add_term(Monomial(nm), c.clone());
        }
        out
    }

    pub fn max_abs_coeff(&self) -> Rat {
        self.terms
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(Rat::zero)
    }
}

impl std::fmt::Display for Poly {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let mag = if idx == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                c.abs()
            } else {
                if c.is_negative() {
                    write!(f, " - ")?;
                } else {
                    write!(f, " + ")?;
                }
                c.abs()
            };
            if m.is_one() {
                write!(f, "{mag}")?;
            } else {
                if !mag.is_one() {
                    write!(f, "{mag}*")?;
                }
                let mut firstv = true;
                for &(v, e) in &m.0 {
                    if !firstv {
                        write!(f, "*")?;
                    }
                    firstv = false;
                    if e == 1 {
                        write!(f, "x{v}")?;
                    } else {
                        write!(f, "x{v}^{e}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn x(n: usize, i: usize) -> Poly {
        Poly::var(n, i)
    }

    #[test]
    fn binomial_square() {
        let p = x(2, 0).add(&x(2, 1));
        let sq = p.pow(2);
        let mut expect = Poly::zero(2);
        expect.add_term(Monomial(vec![(0, 2)]), rat_int(1));
        expect.add_term(Monomial(vec![(0, 1), (1, 1)]), rat_int(2));
        expect.add_term(Monomial(vec![(1, 2)]), rat_int(1));
        assert_eq!(sq, expect);
    }

    #[test]
    fn cancellation_gives_empty_map() {
        let p = x(3, 0).mul(&x(3, 1)).add(&Poly::constant(3, rat(1, 2)));
        assert!(p.sub(&p).is_zero());
    }

    #[test]
    fn motzkin_like_square_plus_const() {
        // (x0² - x1²)² + (1/2)²
        let d = x(2, 0).pow(2).sub(&x(2, 1).pow(2));
        let p = d.pow(2).add(&Poly::constant(2, rat(1, 4)));
        let supp = p.support();
        let expected: std::collections::BTreeSet<Vec<u32>> =
            [vec![0, 0], vec![4, 0], vec![2, 2], vec![0, 4]].into_iter().collect();
        assert_eq!(supp, expected);
        assert_eq!(p.total_degree(), 4);
        assert_eq!(p.terms[&Monomial(vec![(0, 2), (1, 2)])], rat_int(-2));
    }

    #[test]
    fn differentiate_power_rule() {
        // d/dx0 (x0² x1) = 2 x0 x1
        let p = x(2, 0).pow(2).mul(&x(2, 1));
        let d = p.differentiate(0);
        let mut expect = Poly::zero(2);
        expect.add_term(Monomial(vec![(0, 1), (1, 1)]), rat_int(2));
        assert_eq!(d, expect);
        assert!(Poly::constant(2, rat_int(7)).differentiate(0).is_zero());
    }

    fn random_poly(rng: &mut StdRng, nvars: usize, deg: u32, terms: usize) -> Poly {
        let mut p = Poly::zero(nvars);
        for _ in 0..terms {
            let mut m = Vec::new();
            let mut rem = deg;
            for v in 0..nvars {
                if rem == 0 {
                    break;
                }
                let e = rng.gen_range(0..=rem.min(3));
                if e > 0 {
                    m.push((v, e));
                    rem -= e;
                }
            }
            p.add_term(Monomial(m), rat(rng.gen_range(-20..=20), rng.gen_range(1..=7)));
        }
        p
    }

    #[test]
    fn ring_axioms_and_leibniz_on_random_polys() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..40 {
            let p = random_poly(&mut rng, 3, 4, 5);
            let q = random_poly(&mut rng, 3, 4, 5);
            let r = random_poly(&mut rng, 3, 4, 5);
            assert_eq!(p.add(&q).add(&r), p.add(&q.add(&r)));
            assert_eq!(p.mul(&q.add(&r)), p.mul(&q).add(&p.mul(&r)));
            assert_eq!(p.mul(&q), q.mul(&p));
            // Leibniz
            let lhs = p.mul(&q).differentiate(1);
            let rhs = p.differentiate(1).mul(&q).add(&p.mul(&q.differentiate(1)));
            assert_eq!(lhs, rhs);
            // evaluation homomorphism
            let pt: Vec<Rat> = (0..3).map(|_| rat(rng.gen_range(-9..=9), rng.gen_range(1..=5))).collect();
            assert_eq!(p.mul(&q).evaluate(&pt), p.evaluate(&pt) * q.evaluate(&pt));
        }
    }

    #[test]
    fn zero_polynomial_conventions() {
        let z = Poly::zero(4);
        assert!(z.support().is_empty());
        assert_eq!(z.total_degree(), 0);
        assert_eq!(z.evaluate(&vec![rat_int(1); 4]), rat_int(0));
    }

    #[test]
    fn interval_evaluation_contains_sampled_range() {
        let mut rng = StdRng::seed_from_u64(11);
        let p = x(1, 0).pow(2); // x² over [-1, 2]
        let dom = vec![Interval::new(rat_int(-1), rat_int(2))];
        let enc = p.evaluate_interval(&dom);
        assert!(enc.contains(&rat_int(0)) && enc.contains(&rat_int(4)));
        for _ in 0..200 {
            let t = rat(rng.gen_range(-100..=200), 100);
            assert!(enc.contains(&p.evaluate(&[t])));
        }
    }

    #[test]
    fn affine_substitution_matches_pointwise() {
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..20 {
            let p = random_poly(&mut rng, 2, 3, 4);
            let maps = vec![(rat_int(2), rat(1, 2)), (rat_int(-1), rat_int(3))];
            let q = p.substitute_affine(&maps);
            for _ in 0..10 {
                let u = vec![rat(rng.gen_range(-4..=4), 4), rat(rng.gen_range(-4..=4), 4)];
                let x = vec![
                    &maps[0].0 + &maps[0].1 * &u[0],
                    &maps[1].0 + &maps[1].1 * &u[1],
                ];
                assert_eq!(q.evaluate(&u), p.evaluate(&x));
            }
        }
    }
}
