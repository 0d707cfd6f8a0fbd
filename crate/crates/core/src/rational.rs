//! Exact rational numbers.
//!
//! Everything in this crate is computed over arbitrary-precision rationals;
//! there is no floating-point path. `Display` on [`Rational`] prints `INT`
//! for integers and `INT/INT` otherwise, which is also the literal syntax
//! accepted by the parser.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rational = BigRational;

/// Builds `num/den` in canonical form. Panics on a zero denominator.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^exp` as a rational.
pub fn pow2(exp: u32) -> Rational {
    Rational::from_integer(BigInt::one() << exp)
}

/// `2^-exp` as a rational.
pub fn inv_pow2(exp: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << exp)
}

/// Parses a non-negative literal: `INT`, `INT/INT` or a decimal such as
/// `0.5`. Decimals are converted exactly. Returns `None` on malformed input
/// or a zero denominator.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num = parse_digits(num)?;
        let den = parse_digits(den)?;
        if den.is_zero() {
            return None;
        }
        return Some(Rational::new(num, den));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        let whole = parse_digits(whole)?;
        if frac.is_empty() {
            return None;
        }
        let frac_digits = parse_digits(frac)?;
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        return Some(Rational::new(whole * &scale + frac_digits, scale));
    }
    parse_digits(text).map(Rational::from_integer)
}

fn parse_digits(s: &str) -> Option<BigInt> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// True when `q` lies in the closed unit interval.
pub fn is_probability(q: &Rational) -> bool {
    !q.is_negative() && *q <= Rational::one()
}
