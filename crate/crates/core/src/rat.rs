//! Exact arithmetic aliases and small helpers.
//!
//! Every quantity the library reports as "exact" is a `Rat`; floats appear
//! only in display strings and in the warped-length evaluator's convenience
//! field.

use num::bigint::Sign;
use num::{BigInt, BigRational, BigUint, One, Signed, Zero};

pub type Int = BigInt;
pub type Nat = BigUint;
pub type Rat = BigRational;

pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from(BigInt::from(n))
}

pub fn rat_zero() -> Rat {
    Rat::zero()
}

pub fn rat_one() -> Rat {
    Rat::one()
}

/// Canonical `num/den` rendering with reduced terms and the sign on the
/// numerator. Integers render without the denominator.
pub fn rat_display(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_parse(s: &str) -> Option<Rat> {
    let s = s.trim();
    match s.split_once('/') {
        None => s.parse::<BigInt>().ok().map(Rat::from),
        Some((n, d)) => {
            let n = n.trim().parse::<BigInt>().ok()?;
            let d = d.trim().parse::<BigInt>().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Rat::new(n, d))
            }
        }
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let num = r.numer();
    let den = r.denom();
    let (n, d) = (big_to_f64(num), big_to_f64(den));
    n / d
}

fn big_to_f64(x: &BigInt) -> f64 {
    let (sign, mag) = x.clone().into_parts();
    let mut acc = 0.0f64;
    for digit in mag.to_u64_digits().iter().rev() {
        acc = acc * 1.8446744073709552e19 + *digit as f64;
    }
    match sign {
        Sign::Minus => -acc,
        _ => acc,
    }
}

/// `max(|a|, |b|)` style helper used by measured-constant scans.
pub fn rat_max<'a>(a: &'a Rat, b: &'a Rat) -> &'a Rat {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn rat_abs(r: &Rat) -> Rat {
    r.abs()
}
