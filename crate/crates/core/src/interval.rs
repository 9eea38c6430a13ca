//! Outward-safe interval arithmetic with exact rational endpoints.
//!
//! Field operations are exact; transcendental endpoints come from the
//! series enclosures in [`crate::transcendental`], which carry certified
//! truncation error below 2^-80.

use crate::rational::{dyadic_ceil, dyadic_floor, Rat};
use crate::transcendental as tr;
use num::traits::{One, Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IntervalError {
    #[error("division by an interval containing zero")]
    DivisionByZeroInterval,
    #[error("domain violation for {0}")]
    DomainViolation(&'static str),
    #[error("empty interval (lo > hi)")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    pub lo: Rat,
    pub hi: Rat,
}

impl Interval {
    pub fn new(lo: Rat, hi: Rat) -> Self {
        debug_assert!(lo <= hi, "inverted interval");
        Interval { lo, hi }
    }

    pub fn point(x: Rat) -> Self {
        Interval { lo: x.clone(), hi: x }
    }

    pub fn zero() -> Self {
        Interval::point(Rat::zero())
    }

    pub fn symmetric(r: Rat) -> Self {
        debug_assert!(!r.is_negative());
        Interval { lo: -r.clone(), hi: r }
    }

    pub fn width(&self) -> Rat {
        &self.hi - &self.lo
    }

    pub fn midpoint(&self) -> Rat {
        (&self.lo + &self.hi) / Rat::from_integer(2.into())
    }

    pub fn contains(&self, x: &Rat) -> bool {
        &self.lo <= x && x <= &self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    /// max(|lo|, |hi|)
    pub fn mag(&self) -> Rat {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval::new(&self.lo + &o.lo, &self.hi + &o.hi)
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval::new(&self.lo - &o.hi, &self.hi - &o.lo)
    }

    pub fn neg(&self) -> Interval {
        Interval::new(-self.hi.clone(), -self.lo.clone())
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let mut lo = c[0].clone();
        let mut hi = c[0].clone();
        for v in &c[1..] {
            if v < &lo {
                lo = v.clone();
            }
            if v > &hi {
                hi = v.clone();
            }
        }
        Interval { lo, hi }
    }

    pub fn scale(&self, k: &Rat) -> Interval {
        if k.is_negative() {
            Interval::new(&self.hi * k, &self.lo * k)
        } else {
            Interval::new(&self.lo * k, &self.hi * k)
        }
    }

    pub fn add_rat(&self, k: &Rat) -> Interval {
        Interval::new(&self.lo + k, &self.hi + k)
    }

    pub fn recip(&self) -> Result<Interval, IntervalError> {
        if self.contains_zero() {
            return Err(IntervalError::DivisionByZeroInterval);
        }
        Ok(Interval::new(Rat::one() / &self.hi, Rat::one() / &self.lo))
    }

    pub fn div(&self, o: &Interval) -> Result<Interval, IntervalError> {
        Ok(self.mul(&o.recip()?))
    }

    /// Integer power with the even-power tightening at zero.
    pub fn pow(&self, k: u32) -> Interval {
        if k == 0 {
            return Interval::point(Rat::one());
        }
        if k == 1 {
            return self.clone();
        }
        let lp = num::pow(self.lo.clone(), k as usize);
        let hp = num::pow(self.hi.clone(), k as usize);
        if k % 2 == 1 {
            Interval::new(lp, hp)
        } else if !self.lo.is_negative() {
            Interval::new(lp, hp)
        } else if !self.hi.is_positive() {
            Interval::new(hp, lp)
        } else {
            Interval::new(Rat::zero(), lp.max(hp))
        }
    }

    pub fn sqrt(&self) -> Result<Interval, IntervalError> {
        if self.lo.is_negative() {
            return Err(IntervalError::DomainViolation("sqrt"));
        }
        let lo = tr::sqrt_lo(&self.lo);
        let hi = tr::sqrt_hi(&self.hi);
        Ok(Interval::new(lo, hi))
    }

    pub fn abs(&self) -> Interval {
        if !self.lo.is_negative() {
            self.clone()
        } else if !self.hi.is_positive() {
            self.neg()
        } else {
            Interval::new(Rat::zero(), self.mag())
        }
    }

    /// Round endpoints outward to denominator 2^bits. Keeps rationals small
    /// after long chains of transcendental enclosures.
    pub fn outward(&self, bits: u32) -> Interval {
        Interval::new(dyadic_floor(&self.lo, bits), dyadic_ceil(&self.hi, bits))
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        (crate::rational::rat_to_f64(&self.lo), crate::rational::rat_to_f64(&self.hi))
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}, {}]",
            crate::rational::to_decimal_string(&self.lo, 8),
            crate::rational::to_decimal_string(&self.hi, 8)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Asin,
    Acos,
    Atan,
}

/// Enclosure of a transcendental function over an interval, with range
/// analysis (monotone pieces, critical points) rather than plain endpoint
/// substitution where it matters.
pub fn apply_unary(op: UnaryOp, x: &Interval) -> Result<Interval, IntervalError> {
    match op {
        UnaryOp::Neg => Ok(x.neg()),
        UnaryOp::Sqrt => x.sqrt(),
        UnaryOp::Exp => Ok(Interval::new(tr::exp_point(&x.lo).lo, tr::exp_point(&x.hi).hi)),
        UnaryOp::Log => {
            if !x.lo.is_positive() {
                return Err(IntervalError::DomainViolation("log"));
            }
            Ok(Interval::new(tr::log_point(&x.lo).lo, tr::log_point(&x.hi).hi))
        }
        UnaryOp::Sin => Ok(tr::sin_range(x)),
        UnaryOp::Cos => Ok(tr::cos_range(x)),
        UnaryOp::Tan => {
            let s = tr::sin_range(x);
            let c = tr::cos_range(x);
            s.div(&c)
        }
        UnaryOp::Asin => {
            let one = Rat::one();
            if x.lo < -one.clone() || x.hi > one {
                return Err(IntervalError::DomainViolation("asin"));
            }
            Ok(Interval::new(tr::asin_point(&x.lo).lo, tr::asin_point(&x.hi).hi))
        }
        UnaryOp::Acos => {
            let one = Rat::one();
            if x.lo < -one.clone() || x.hi > one {
                return Err(IntervalError::DomainViolation("acos"));
            }
            Ok(Interval::new(tr::acos_point(&x.hi).lo, tr::acos_point(&x.lo).hi))
        }
        UnaryOp::Atan => Ok(Interval::new(tr::atan_point(&x.lo).lo, tr::atan_point(&x.hi).hi)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn iv(a: i64, b: i64) -> Interval {
        Interval::new(rat_int(a), rat_int(b))
    }

    #[test]
    fn addition() {
        assert_eq!(iv(1, 2).add(&iv(3, 4)), iv(4, 6));
    }

    #[test]
    fn sign_case_product() {
        assert_eq!(iv(-1, 2).mul(&iv(3, 4)), iv(-4, 8));
    }

    #[test]
    fn division_by_zero_interval() {
        assert_eq!(
            Interval::point(Rat::one()).div(&iv(-1, 1)),
            Err(IntervalError::DivisionByZeroInterval)
        );
    }

    #[test]
    fn even_power_tightening() {
        let x = Interval::new(rat_int(-1), rat_int(2));
        assert_eq!(x.pow(2), Interval::new(rat_int(0), rat_int(4)));
    }

    #[test]
    fn dependency_loss_is_expected() {
        let x = Interval::new(rat_int(0), rat_int(1));
        assert_eq!(x.sub(&x), iv(-1, 1));
    }

    #[test]
    fn sqrt_encloses() {
        let r = iv(1, 4).sqrt().unwrap();
        assert!(r.lo <= rat_int(1) && rat_int(2) <= r.hi);
        assert!(r.width() < rat_int(1) + rat(1, 1_000_000));
        assert!(iv(-1, 1).sqrt().is_err());
    }
}
