//! Exact rationals (`num_rational::BigRational`) and their text forms.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub use num_rational::BigRational as Rational;

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Rational {
    Rational::new(num.into(), den.into())
}

pub fn from_uints(num: &BigUint, den: &BigUint) -> Rational {
    Rational::new(BigInt::from(num.clone()), BigInt::from(den.clone()))
}

/// `num/den` in lowest terms (the denominator is always printed).
pub fn exact(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Decimal expansion rounded half away from zero to `places` digits.
pub fn decimal(r: &Rational, places: usize) -> String {
    let scale = BigInt::from(10u32).pow(places as u32);
    let scaled = r.abs() * Rational::from_integer(scale.clone());
    let (q, rem) = scaled.numer().div_rem(scaled.denom());
    let rounded = if rem * 2u32 >= *scaled.denom() {
        q + 1u32
    } else {
        q
    };
    let (int, frac) = rounded.div_rem(&scale);
    let sign = if r.is_negative() && !rounded_is_zero(&int, &frac) {
        "-"
    } else {
        ""
    };
    if places == 0 {
        format!("{sign}{int}")
    } else {
        format!("{sign}{int}.{:0>width$}", frac.to_string(), width = places)
    }
}

fn rounded_is_zero(int: &BigInt, frac: &BigInt) -> bool {
    int.is_zero() && frac.is_zero()
}

/// `"<num>/<den> (≈ d.dddddd, approximate)"`.
pub fn report(r: &Rational) -> String {
    format!("{} (≈ {}, approximate)", exact(r), decimal(r, 6))
}

/// Parses `a/b`, an integer, or a finite decimal such as `1.25`.
pub fn parse(s: &str) -> Result<Rational> {
    let bad = || Error::parse(0, format!("invalid rational {s:?}"));
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let frac: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = int.abs() * &den + frac;
        let num = if negative { -mag } else { mag };
        return Ok(Rational::new(num, den));
    }
    s.parse::<BigInt>()
        .map(|n| Rational::new(n, BigInt::one()))
        .map_err(|_| bad())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        let alpha = ratio(13948, 10721);
        assert_eq!(exact(&alpha), "13948/10721");
        assert_eq!(decimal(&alpha, 6), "1.300998");
        assert_eq!(decimal(&ratio(2, 3), 6), "0.666667");
        assert_eq!(decimal(&ratio(-1, 8), 2), "-0.13");
        assert_eq!(decimal(&ratio(5, 1), 0), "5");
        assert_eq!(exact(&ratio(10, 4)), "5/2");
        assert_eq!(report(&ratio(5, 4)), "5/4 (≈ 1.250000, approximate)");
    }

    #[test]
    fn parsing() {
        assert_eq!(parse("13948/10721").unwrap(), ratio(13948, 10721));
        assert_eq!(parse("1.295").unwrap(), ratio(1295, 1000));
        assert_eq!(parse("-0.5").unwrap(), ratio(-1, 2));
        assert_eq!(parse("3").unwrap(), ratio(3, 1));
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("1.").is_err());
    }
}
