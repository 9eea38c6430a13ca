//! Certified rational enclosures of transcendental function values.
//!
//! Endpoints are computed from argument-reduced series with explicit
//! truncation remainders, entirely in exact rational arithmetic with
//! periodic outward dyadic rounding. No hardware rounding mode is trusted.
//! Enclosure widths stay below 2^-80 for arguments in the ranges the
//! analyzer encounters.

use crate::interval::Interval;
use crate::rational::{dyadic_ceil, dyadic_floor, pow2, rat, rat_int, Rat};
use num::bigint::BigInt;
use num::traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

/// Working precision in bits; final enclosures are certified to 2^-80.
pub const WORK_BITS: u32 = 128;

fn two() -> Rat {
    rat_int(2)
}

/// Round to ~`bits` significant bits, from below / above.
fn sig_floor(x: &Rat, bits: u32) -> Rat {
    if x.is_zero() {
        return Rat::zero();
    }
    let e = x.numer().bits() as i64 - x.denom().bits() as i64;
    let shift = bits as i64 - e;
    if shift <= 0 {
        let s = pow2(-shift);
        Rat::from_integer((x / &s).floor().to_integer()) * s
    } else {
        dyadic_floor(x, shift as u32)
    }
}

fn sig_ceil(x: &Rat, bits: u32) -> Rat {
    if x.is_zero() {
        return Rat::zero();
    }
    let e = x.numer().bits() as i64 - x.denom().bits() as i64;
    let shift = bits as i64 - e;
    if shift <= 0 {
        let s = pow2(-shift);
        Rat::from_integer((x / &s).ceil().to_integer()) * s
    } else {
        dyadic_ceil(x, shift as u32)
    }
}

fn sig_outward(x: &Interval, bits: u32) -> Interval {
    Interval::new(sig_floor(&x.lo, bits), sig_ceil(&x.hi, bits))
}

/// Lower bound of sqrt(r) for r ≥ 0.
pub fn sqrt_lo(r: &Rat) -> Rat {
    debug_assert!(!r.is_negative());
    if r.is_zero() {
        return Rat::zero();
    }
    let rr = sig_floor(r, 2 * WORK_BITS);
    if rr.is_zero() || rr.is_negative() {
        return Rat::zero();
    }
    let b = WORK_BITS as usize;
    // sqrt(p/q) = sqrt(p*q)/q
    let n = (rr.numer() * rr.denom()).magnitude() << (2 * b);
    let s = n.sqrt();
    Rat::new(BigInt::from(s), rr.denom().clone() << b)
}

/// Upper bound of sqrt(r) for r ≥ 0.
pub fn sqrt_hi(r: &Rat) -> Rat {
    debug_assert!(!r.is_negative());
    if r.is_zero() {
        return Rat::zero();
    }
    let rr = sig_ceil(r, 2 * WORK_BITS);
    let b = WORK_BITS as usize;
    let n = (rr.numer() * rr.denom()).magnitude() << (2 * b);
    let s = n.sqrt() + 1u32;
    Rat::new(BigInt::from(s), rr.denom().clone() << b)
}

pub fn sqrt_interval(r: &Rat) -> Interval {
    Interval::new(sqrt_lo(r), sqrt_hi(r))
}

/// atan series at an exact rational with |r| ≤ 1/2; alternating series, so
/// the truncation error is bounded by the first dropped term.
fn atan_series(r: &Rat, terms: usize) -> Interval {
    debug_assert!(r.abs() <= rat(1, 2));
    let r2 = r * r;
    let mut sum = Rat::zero();
    let mut p = r.clone();
    for i in 0..terms {
        let t = &p / rat_int(2 * i as i64 + 1);
        if i % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
        p *= &r2;
    }
    let rem = (p / rat_int(2 * terms as i64 + 1)).abs();
    Interval::new(&sum - &rem, &sum + &rem).outward(WORK_BITS + 16)
}

pub static PI: Lazy<Interval> = Lazy::new(|| {
    // Machin: pi = 16 atan(1/5) - 4 atan(1/239)
    let a = atan_series(&rat(1, 5), 50);
    let b = atan_series(&rat(1, 239), 30);
    a.scale(&rat_int(16)).sub(&b.scale(&rat_int(4))).outward(WORK_BITS)
});

pub static LN2: Lazy<Interval> = Lazy::new(|| {
    // ln 2 = 2 atanh(1/3) = 2 sum (1/3)^(2i+1)/(2i+1)
    let x = rat(1, 3);
    let x2 = &x * &x;
    let mut sum = Rat::zero();
    let mut p = x.clone();
    let n = 50usize;
    for i in 0..n {
        sum += &p / rat_int(2 * i as i64 + 1);
        p *= &x2;
    }
    // remainder ≤ p/(2n+1) * 1/(1-x²) = p/(2n+1) * 9/8
    let rem = &p / rat_int(2 * n as i64 + 1) * rat(9, 8);
    Interval::new(&sum * two(), (&sum + rem) * two()).outward(WORK_BITS)
});

pub fn pi() -> Interval {
    PI.clone()
}

pub fn half_pi() -> Interval {
    PI.scale(&rat(1, 2))
}

/// exp at an exact rational point.
pub fn exp_point(r: &Rat) -> Interval {
    let r = Interval::new(sig_floor(r, WORK_BITS + 32), sig_ceil(r, WORK_BITS + 32));
    exp_small_hull(&r)
}

fn exp_small_hull(r: &Interval) -> Interval {
    Interval::new(exp_one(&r.lo).lo, exp_one(&r.hi).hi)
}

fn exp_one(r: &Rat) -> Interval {
    // halve until |y| ≤ 1/4, run the Taylor series, then square back up
    let mut s = 0u32;
    let quarter = rat(1, 4);
    let mut y = r.clone();
    while y.abs() > quarter {
        y /= two();
        s += 1;
        if s > 64 {
            break;
        }
    }
    let n = 30usize;
    let mut sum = Rat::one();
    let mut term = Rat::one();
    for i in 1..=n {
        term = term * &y / rat_int(i as i64);
        sum += &term;
    }
    // remainder ≤ |y|^(n+1)/(n+1)! * 1/(1-|y|) ≤ |term*y| * 4/3 / (n+1)
    let rem = (term * &y).abs() * rat(4, 3) / rat_int(n as i64 + 1);
    let mut e = Interval::new(&sum - &rem, &sum + &rem);
    for _ in 0..s {
        e = e.mul(&e);
        e = sig_outward(&e, WORK_BITS + 32);
    }
    if e.lo.is_negative() {
        e.lo = Rat::zero();
    }
    e
}

/// log at an exact rational point, r > 0.
pub fn log_point(r: &Rat) -> Interval {
    assert!(r.is_positive(), "log of non-positive rational");
    let lo = log_one(&sig_floor(r, WORK_BITS + 32));
    let hi = log_one(&sig_ceil(r, WORK_BITS + 32));
    Interval::new(lo.lo, hi.hi)
}

fn log_one(r: &Rat) -> Interval {
    // normalize r = m * 2^k with m in [2/3, 4/3]
    let mut k: i64 = r.numer().bits() as i64 - r.denom().bits() as i64;
    let mut m = r * pow2(-k);
    let hi_lim = rat(4, 3);
    let lo_lim = rat(2, 3);
    while m > hi_lim {
        m /= two();
        k += 1;
    }
    while m < lo_lim {
        m *= two();
        k -= 1;
    }
    // ln m = 2 atanh(t), t = (m-1)/(m+1), |t| ≤ 1/5
    let t = (&m - Rat::one()) / (&m + Rat::one());
    let t2 = &t * &t;
    let n = 35usize;
    let mut sum = Rat::zero();
    let mut p = t.clone();
    for i in 0..n {
        sum += &p / rat_int(2 * i as i64 + 1);
        p *= &t2;
    }
    let rem = (&p / rat_int(2 * n as i64 + 1)).abs() * rat(25, 24);
    let lnm = Interval::new((&sum - &rem) * two(), (&sum + &rem) * two());
    lnm.add(&LN2.scale(&rat_int(k))).outward(WORK_BITS)
}

/// sin at an exact rational; |r| may be large (series with guarded length).
pub fn sin_point(r: &Rat) -> Interval {
    let r = reduce_two_pi(r);
    sin_small_hull(&r)
}

pub fn cos_point(r: &Rat) -> Interval {
    let r = reduce_two_pi(r);
    cos_small_hull(&r)
}

/// Bring r into roughly [-pi, pi] by subtracting an integer multiple of 2π
/// (interval-safely). Result width stays tiny for desk-scale arguments.
fn reduce_two_pi(r: &Rat) -> Interval {
    let x = Interval::new(sig_floor(r, WORK_BITS + 32), sig_ceil(r, WORK_BITS + 32));
    let two_pi = PI.scale(&two());
    if x.mag() <= rat_int(4) {
        return x;
    }
    let q = (r / two_pi.midpoint()).round().to_integer();
    x.sub(&two_pi.scale(&Rat::from_integer(q)))
}

/// Taylor sin on a small interval (|arg| ≤ ~4.1): pointwise series at both
/// endpoints plus monotonicity is not valid here, so evaluate the series as
/// a function enclosure at each endpoint and handle interior extrema in
/// `sin_range`.
fn sin_series(r: &Rat) -> Interval {
    debug_assert!(r.abs() <= rat_int(5));
    let n_terms = 40usize; // |r|^(2n+1)/(2n+1)! with |r|≤5 is far below 2^-140
    let r2 = r * r;
    let mut sum = Rat::zero();
    let mut p = r.clone();
    for i in 0..n_terms {
        let t = &p / Rat::from_integer(factorial(2 * i as u64 + 1));
        if i % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
        p *= &r2;
    }
    let rem = (&p / Rat::from_integer(factorial(2 * n_terms as u64 + 1))).abs() * two();
    Interval::new(&sum - &rem, &sum + &rem).outward(WORK_BITS)
}

fn cos_series(r: &Rat) -> Interval {
    debug_assert!(r.abs() <= rat_int(5));
    let n_terms = 40usize;
    let r2 = r * r;
    let mut sum = Rat::zero();
    let mut p = Rat::one();
    for i in 0..n_terms {
        let t = &p / Rat::from_integer(factorial(2 * i as u64));
        if i % 2 == 0 {
            sum += t;
        } else {
            sum -= t;
        }
        p *= &r2;
    }
    let rem = (&p / Rat::from_integer(factorial(2 * n_terms as u64))).abs() * two();
    Interval::new(&sum - &rem, &sum + &rem).outward(WORK_BITS)
}

fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= BigInt::from(i);
    }
    acc
}

fn sin_small_hull(x: &Interval) -> Interval {
    // Lipschitz-1 envelope between endpoint enclosures
    let a = sin_series(&x.lo);
    let b = sin_series(&x.hi);
    let w = x.width();
    let mut out = a.hull(&b);
    // the interior can rise/fall at most by the width
    out.lo = (&out.lo - &w).max(rat_int(-1));
    out.hi = (&out.hi + &w).min(rat_int(1));
    out
}

fn cos_small_hull(x: &Interval) -> Interval {
    let a = cos_series(&x.lo);
    let b = cos_series(&x.hi);
    let w = x.width();
    let mut out = a.hull(&b);
    out.lo = (&out.lo - &w).max(rat_int(-1));
    out.hi = (&out.hi + &w).min(rat_int(1));
    out
}

/// Range of sin over an interval, detecting interior critical points.
pub fn sin_range(x: &Interval) -> Interval {
    let two_pi = PI.scale(&two());
    if x.width() >= two_pi.hi {
        return Interval::new(rat_int(-1), rat_int(1));
    }
    let af = x.lo.to_f64().unwrap_or(f64::NAN);
    let bf = x.hi.to_f64().unwrap_or(f64::NAN);
    if !af.is_finite() || !bf.is_finite() || af.abs() > 1e9 || bf.abs() > 1e9 {
        return Interval::new(rat_int(-1), rat_int(1));
    }
    let a = sin_point(&x.lo);
    let b = sin_point(&x.hi);
    let mut lo = a.lo.clone().min(b.lo.clone());
    let mut hi = a.hi.clone().max(b.hi.clone());
    if contains_critical(x, &half_pi()) {
        hi = rat_int(1);
    }
    if contains_critical(x, &half_pi().neg()) {
        lo = rat_int(-1);
    }
    Interval::new(lo.max(rat_int(-1)), hi.min(rat_int(1)))
}

pub fn cos_range(x: &Interval) -> Interval {
    sin_range(&x.add(&half_pi()))
}

/// Conservative: true if offset + 2πk possibly lies in x for some integer k.
fn contains_critical(x: &Interval, offset: &Interval) -> bool {
    let two_pi = PI.scale(&two());
    let tp = two_pi.midpoint().to_f64().unwrap_or(6.2832);
    let af = x.lo.to_f64().unwrap_or(0.0);
    let bf = x.hi.to_f64().unwrap_or(0.0);
    let of = offset.midpoint().to_f64().unwrap_or(0.0);
    let k_lo = ((af - of) / tp).floor() as i64 - 1;
    let k_hi = ((bf - of) / tp).ceil() as i64 + 1;
    for k in k_lo..=k_hi {
        let c = offset.add(&two_pi.scale(&rat_int(k)));
        if c.hi >= x.lo && c.lo <= x.hi {
            return true;
        }
    }
    false
}

/// atan at an exact rational point.
pub fn atan_point(r: &Rat) -> Interval {
    let rr = Interval::new(sig_floor(r, WORK_BITS + 32), sig_ceil(r, WORK_BITS + 32));
    atan_hull(&rr)
}

fn atan_hull(x: &Interval) -> Interval {
    Interval::new(atan_one(&x.lo).lo, atan_one(&x.hi).hi)
}

fn atan_one(r: &Rat) -> Interval {
    let one = Rat::one();
    if r.abs() > one {
        // atan(r) = sign(r)·π/2 − atan(1/r)
        let inner = atan_one(&(Rat::one() / r));
        let hp = half_pi();
        return if r.is_positive() {
            hp.sub(&inner)
        } else {
            hp.neg().sub(&inner)
        };
    }
    // two angle halvings: atan(r) = 2 atan(r / (1 + sqrt(1+r²)))
    let mut t = Interval::point(r.clone());
    for _ in 0..2 {
        let t2 = t.mul(&t);
        let s = Interval::new(sqrt_lo(&(Rat::one() + &t2.lo)), sqrt_hi(&(Rat::one() + &t2.hi)));
        t = t.div(&s.add_rat(&Rat::one())).expect("1+sqrt(1+t^2) > 0");
        t = sig_outward(&t, WORK_BITS + 32);
    }
    // now |t| ≤ tan(pi/16) < 0.199
    let lo = atan_series_any(&t.lo);
    let hi = atan_series_any(&t.hi);
    Interval::new(lo.lo, hi.hi).scale(&rat_int(4)).outward(WORK_BITS)
}

fn atan_series_any(r: &Rat) -> Interval {
    debug_assert!(r.abs() < rat(1, 2));
    atan_series(r, 35)
}

/// asin at an exact rational point, |r| ≤ 1.
pub fn asin_point(r: &Rat) -> Interval {
    let one = Rat::one();
    assert!(r.abs() <= one, "asin domain");
    if r.abs() == one {
        let hp = half_pi();
        return if r.is_positive() { hp } else { hp.neg() };
    }
    if r.abs() <= rat(3, 4) {
        // asin(r) = atan(r / sqrt(1-r²))
        let r2 = r * r;
        let s = Interval::new(sqrt_lo(&(Rat::one() - &r2)), sqrt_hi(&(Rat::one() - &r2)));
        let t = Interval::point(r.clone()).div(&s).expect("sqrt(1-r^2) > 0");
        Interval::new(atan_one(&t.lo).lo, atan_one(&t.hi).hi)
    } else {
        // asin(r) = sign(r)(π/2 − asin(sqrt(1-r²)))
        let r2 = r * r;
        let s = Interval::new(sqrt_lo(&(Rat::one() - &r2)), sqrt_hi(&(Rat::one() - &r2)));
        let inner_lo = asin_point(&s.lo);
        let inner_hi = asin_point(&s.hi);
        let inner = Interval::new(inner_lo.lo, inner_hi.hi);
        let out = half_pi().sub(&inner);
        if r.is_positive() {
            out
        } else {
            out.neg()
        }
    }
}

pub fn acos_point(r: &Rat) -> Interval {
    half_pi().sub(&asin_point(r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(enc: &Interval, truth: f64) {
        let (lo, hi) = enc.to_f64_pair();
        assert!(lo - 1e-13 <= truth && truth <= hi + 1e-13, "{truth} not in [{lo}, {hi}]");
        assert!(enc.width() <= pow2(-80), "width {} too wide", enc.width());
    }

    #[test]
    fn pi_and_ln2_digits() {
        check(&PI, std::f64::consts::PI);
        check(&LN2, std::f64::consts::LN_2);
    }

    #[test]
    fn exp_values() {
        check(&exp_point(&rat_int(1)), std::f64::consts::E);
        check(&exp_point(&rat_int(0)), 1.0);
        check(&exp_point(&rat_int(-8)), (-8.0f64).exp());
        check(&exp_point(&rat_int(8)), (8.0f64).exp());
        check(&exp_point(&rat(1, 2)), 0.5f64.exp());
    }

    #[test]
    fn log_values() {
        check(&log_point(&rat_int(2)), std::f64::consts::LN_2);
        check(&log_point(&rat_int(10)), 10.0f64.ln());
        check(&log_point(&rat(1, 3)), (1.0f64 / 3.0).ln());
        check(&log_point(&rat_int(2982)), 2982.0f64.ln());
    }

    #[test]
    fn trig_values() {
        check(&sin_point(&rat_int(1)), 1.0f64.sin());
        check(&cos_point(&rat_int(1)), 1.0f64.cos());
        check(&sin_point(&rat(-157, 100)), (-1.57f64).sin());
        check(&atan_point(&rat_int(1)), std::f64::consts::FRAC_PI_4);
        check(&atan_point(&rat_int(-30)), (-30.0f64).atan());
        check(&asin_point(&rat(1, 2)), std::f64::consts::FRAC_PI_6);
        check(&asin_point(&rat(99, 100)), 0.99f64.asin());
        check(&acos_point(&rat(-1, 2)), (-0.5f64).acos());
    }

    #[test]
    fn sqrt_bounds() {
        let lo = sqrt_lo(&rat_int(2));
        let hi = sqrt_hi(&rat_int(2));
        assert!(lo < hi);
        assert!(&lo * &lo <= rat_int(2));
        assert!(&hi * &hi >= rat_int(2));
        assert!(&hi - &lo <= pow2(-80));
    }

    #[test]
    fn sin_range_extrema() {
        let x = Interval::new(rat_int(0), rat(32, 10));
        let r = sin_range(&x);
        assert_eq!(r.hi, rat_int(1)); // contains pi/2
        assert!(r.lo <= rat(-58, 1000)); // sin(3.2) ≈ -0.0584 at the right end
        let y = Interval::new(rat(1, 10), rat(2, 10));
        let ry = sin_range(&y);
        assert!(ry.lo > Rat::zero() && ry.hi < rat(21, 100));
    }

    #[test]
    fn containment_sampled_against_f64() {
        for i in -40..=40 {
            let x = rat(i, 5);
            let xf = i as f64 / 5.0;
            let e = exp_point(&x);
            let (lo, hi) = e.to_f64_pair();
            assert!(lo <= xf.exp() * (1.0 + 1e-12) && xf.exp() * (1.0 - 1e-12) <= hi);
            let s = sin_point(&x);
            let (slo, shi) = s.to_f64_pair();
            assert!(slo - 1e-12 <= xf.sin() && xf.sin() <= shi + 1e-12);
        }
    }
}
