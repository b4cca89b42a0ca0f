//! Exact rational scalars and their `p/q` text form.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `p/q` or a bare integer. Zero denominators are rejected.
pub fn parse(s: &str) -> Result<Rational> {
    let t = s.trim();
    let (p, q) = match t.split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (t, "1"),
    };
    let p: BigInt = p
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    let q: BigInt = q
        .parse()
        .map_err(|_| Error::Parse(format!("bad rational `{s}`")))?;
    if q.is_zero() {
        return Err(Error::Parse(format!("zero denominator in `{s}`")));
    }
    Ok(Rational::new(p, q))
}

/// Always renders `p/q`, including `n/1` for integers.
pub fn format(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Very large numerators and denominators overflow the direct path.
        let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
        let n = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let d = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn in_unit_interval(r: &Rational) -> bool {
    !r.is_negative() && *r <= Rational::one()
}

pub fn pow(base: &Rational, exp: i64) -> Rational {
    if exp >= 0 {
        num_traits::pow(base.clone(), exp as usize)
    } else {
        num_traits::pow(base.recip(), exp.unsigned_abs() as usize)
    }
}

/// Serde adapter storing rationals as `p/q` strings.
pub mod serde_pq {
    use super::Rational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse("3/6").unwrap(), ratio(1, 2));
        assert_eq!(parse(" 7 ").unwrap(), int(7));
        assert_eq!(parse("-1/4").unwrap(), ratio(-1, 4));
        assert!(matches!(parse("1/0"), Err(Error::Parse(_))));
        assert!(parse("x/2").is_err());
    }

    #[test]
    fn format_is_always_pq() {
        assert_eq!(format(&int(2)), "2/1");
        assert_eq!(format(&ratio(2, 4)), "1/2");
    }

    #[test]
    fn huge_to_f64() {
        let big = pow(&ratio(3, 8), 900);
        let v = to_f64(&(big.clone() / (big * int(4))));
        assert!((v - 0.25).abs() < 1e-12);
    }
}
