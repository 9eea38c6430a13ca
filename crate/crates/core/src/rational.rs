//! Exact rational scalar helpers used throughout the crate.
//!
//! Every quantity that participates in a soundness argument is a
//! `BigRational`; floating point only appears inside the SDP solver.

use num::bigint::{BigInt, Sign};
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

/// 2^k for any sign of k.
pub fn pow2(k: i64) -> Rat {
    if k >= 0 {
        Rat::from_integer(BigInt::one() << (k as usize))
    } else {
        Rat::new(BigInt::one(), BigInt::one() << ((-k) as usize))
    }
}

/// Parse a decimal or scientific literal ("6.36", "20e3", "42.7e-6") into an
/// exact rational. Returns None on malformed input.
pub fn parse_decimal(text: &str) -> Option<Rat> {
    let t = text.trim();
    if t.is_empty() {
        return None;
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = t[pos + 1..].parse().ok()?;
            (&t[..pos], e)
        }
        None => (t, 0i64),
    };
    let (mant, neg) = match mant.strip_prefix('-') {
        Some(m) => (m, true),
        None => (mant.strip_prefix('+').unwrap_or(mant), false),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(pos) => (&mant[..pos], &mant[pos + 1..]),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit()) || !frac_part.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut r = Rat::from_integer(num);
    if scale >= 0 {
        r *= Rat::from_integer(num::pow(ten, scale as usize));
    } else {
        r /= Rat::from_integer(num::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

/// Render a rational as a decimal string with `digits` significant decimals,
/// rounding toward zero. Exact for display purposes only.
pub fn to_decimal_string(x: &Rat, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    let neg = x.is_negative();
    let a = x.abs();
    // scale into [1, 10)
    let mut e: i64 = 0;
    let one = Rat::one();
    let ten = rat_int(10);
    let mut m = a.clone();
    while m >= ten {
        m /= ten.clone();
        e += 1;
    }
    while m < one {
        m *= ten.clone();
        e -= 1;
    }
    let scale = num::pow(BigInt::from(10), digits.saturating_sub(1));
    let scaled = (m * Rat::from_integer(scale)).to_integer();
    let s = scaled.to_string();
    let (first, rest) = s.split_at(1);
    let mantissa = if rest.is_empty() {
        first.to_string()
    } else {
        format!("{first}.{rest}")
    };
    let sign = if neg { "-" } else { "" };
    if e == 0 {
        format!("{sign}{mantissa}")
    } else {
        format!("{sign}{mantissa}e{e}")
    }
}

pub fn rat_to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub fn f64_to_rat(x: f64) -> Option<Rat> {
    Rat::from_float(x)
}

/// Largest rational ≤ x whose denominator is 2^bits.
pub fn dyadic_floor(x: &Rat, bits: u32) -> Rat {
    let s = pow2(bits as i64);
    Rat::from_integer((x * &s).floor().to_integer()) / s
}

/// Smallest rational ≥ x whose denominator is 2^bits.
pub fn dyadic_ceil(x: &Rat, bits: u32) -> Rat {
    let s = pow2(bits as i64);
    Rat::from_integer((x * &s).ceil().to_integer()) / s
}

/// Best continued-fraction approximation of `x` with denominator ≤ cap.
/// The result is exactly `x` whenever its denominator already fits.
pub fn rationalize(x: &Rat, den_cap: &BigInt) -> Rat {
    if x.denom() <= den_cap {
        return x.clone();
    }
    // Convergents p/q of the continued fraction of x; p1/q1 is the latest.
    let mut a = x.numer().clone();
    let mut b = x.denom().clone();
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    loop {
        if b.is_zero() {
            break;
        }
        let (quot, rem) = num::Integer::div_mod_floor(&a, &b);
        let p2 = &quot * &p1 + &p0;
        let q2 = &quot * &q1 + &q0;
        if q2.magnitude() > den_cap.magnitude() {
            break;
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        a = std::mem::replace(&mut b, rem);
    }
    if q1.is_zero() {
        return Rat::from_integer(x.floor().to_integer());
    }
    let sign_fix = if q1.sign() == Sign::Minus { -1 } else { 1 };
    Rat::new(p1 * sign_fix, q1 * sign_fix)
}

/// Binomial coefficient as usize (desk-scale sizes).
pub fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// True when `c` is exactly representable as a binary float with a
/// `precision`-bit significand (unbounded exponent).
pub fn representable_in(c: &Rat, precision: u32) -> bool {
    if c.is_zero() {
        return true;
    }
    let denom = c.denom().magnitude();
    // denominator must be a power of two
    if denom.count_ones() != 1 {
        return false;
    }
    let mut n = c.numer().magnitude().clone();
    // strip trailing zeros of the numerator
    let tz = n.trailing_zeros().unwrap_or(0);
    n >>= tz;
    n.bits() <= precision as u64
}

/// Parse "p/q" or a decimal/scientific literal.
pub fn parse_rat(text: &str) -> Option<Rat> {
    let t = text.trim();
    if let Some(pos) = t.find('/') {
        let n: BigInt = t[..pos].trim().parse().ok()?;
        let d: BigInt = t[pos + 1..].trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Rat::new(n, d))
    } else {
        parse_decimal(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_parsing_is_exact() {
        assert_eq!(parse_decimal("6.36").unwrap(), rat(636, 100));
        assert_eq!(parse_decimal("20e3").unwrap(), rat_int(20000));
        assert_eq!(parse_decimal("42.7e-6").unwrap(), rat(427, 10_000_000));
        assert_eq!(parse_decimal("-0.125").unwrap(), rat(-1, 8));
        assert_eq!(parse_decimal("1.3806503e-23").unwrap(), Rat::new(BigInt::from(13806503u64), num::pow(BigInt::from(10), 30)));
        assert!(parse_decimal("abc").is_none());
    }

    #[test]
    fn dyadic_rounding_brackets() {
        let x = rat(1, 3);
        let lo = dyadic_floor(&x, 20);
        let hi = dyadic_ceil(&x, 20);
        assert!(lo <= x && x <= hi);
        assert!(&hi - &lo <= pow2(-20));
    }

    #[test]
    fn rationalize_caps_denominator() {
        let x = Rat::new(BigInt::from(355_000_001i64), BigInt::from(113_000_000i64));
        let r = rationalize(&x, &BigInt::from(1000));
        assert!(r.denom() <= &BigInt::from(1000));
        assert!((&r - &x).abs() < rat(1, 100_000));
        // exact passthrough
        let y = rat(3, 7);
        assert_eq!(rationalize(&y, &BigInt::from(100)), y);
    }

    #[test]
    fn binom_values() {
        assert_eq!(binom(8, 2), 28);
        assert_eq!(binom(10, 4), 210);
        assert_eq!(binom(12, 6), 924);
    }

    #[test]
    fn representability() {
        assert!(representable_in(&rat(3, 4), 24));
        assert!(representable_in(&rat_int(243), 24));
        assert!(!representable_in(&rat(1, 10), 53));
        assert!(!representable_in(&parse_decimal("331.4").unwrap(), 53));
        assert!(representable_in(&parse_decimal("0.0625").unwrap(), 24));
    }
}
