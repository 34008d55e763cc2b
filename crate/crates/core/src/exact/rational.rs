//! Arbitrary precision rationals and small vector helpers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::str::FromStr;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed rational {0:?}")]
pub struct ParseRationalError(pub String);

/// Parses `"p"` or `"p/q"`; a zero denominator is an error.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let t = s.trim();
    if t.is_empty() {
        return Err(ParseRationalError(s.to_string()));
    }
    match t.split_once('/') {
        None => BigInt::from_str(t).map(Rational::from_integer).map_err(|_| ParseRationalError(s.to_string())),
        Some((p, q)) => {
            let p = BigInt::from_str(p.trim()).map_err(|_| ParseRationalError(s.to_string()))?;
            let q = BigInt::from_str(q.trim()).map_err(|_| ParseRationalError(s.to_string()))?;
            if q.is_zero() {
                return Err(ParseRationalError(s.to_string()));
            }
            Ok(Rational::new(p, q))
        }
    }
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn fmt_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rvec(xs: &[i64]) -> Vec<Rational> {
    xs.iter().map(|&x| rat(x)).collect()
}

pub fn zeros(n: usize) -> Vec<Rational> {
    vec![Rational::zero(); n]
}

pub fn unit(n: usize, i: usize) -> Vec<Rational> {
    let mut v = zeros(n);
    v[i] = Rational::one();
    v
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| if r.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}

pub fn vec_to_f64(v: &[Rational]) -> Vec<f64> {
    v.iter().map(to_f64).collect()
}

/// Exact conversion of a finite double.
pub fn from_f64(x: f64) -> Rational {
    Rational::from_float(x).unwrap_or_else(Rational::zero)
}

pub fn dot(a: &[Rational], b: &[Rational]) -> Rational {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(Rational::zero(), |acc, (x, y)| acc + x * y)
}

pub fn add(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Rational], s: &Rational) -> Vec<Rational> {
    a.iter().map(|x| x * s).collect()
}

pub fn neg(a: &[Rational]) -> Vec<Rational> {
    a.iter().map(|x| -x).collect()
}

pub fn is_zero_vec(a: &[Rational]) -> bool {
    a.iter().all(|x| x.is_zero())
}

/// Smallest integer vector on the same ray (positive rescaling only).
pub fn primitive(v: &[Rational]) -> Vec<Rational> {
    if is_zero_vec(v) {
        return v.to_vec();
    }
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    ints.into_iter().map(|x| Rational::from_integer(x / &g)).collect()
}

/// Primitive form with the first nonzero entry made positive; identifies a line.
pub fn primitive_line(v: &[Rational]) -> Vec<Rational> {
    let p = primitive(v);
    match p.iter().find(|x| !x.is_zero()) {
        Some(x) if x.is_negative() => neg(&p),
        _ => p,
    }
}

pub fn norm2_f64(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_prints_canonically() {
        assert_eq!(parse_rational("6/4").unwrap(), ratio(3, 2));
        assert_eq!(fmt_rational(&parse_rational("6/4").unwrap()), "3/2");
        assert_eq!(fmt_rational(&parse_rational("-4/2").unwrap()), "-2");
        assert_eq!(parse_rational(" 7 ").unwrap(), rat(7));
        assert_eq!(parse_rational("3/-6").unwrap(), ratio(-1, 2));
    }

    #[test]
    fn rejects_zero_denominator_and_garbage() {
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1.5").is_err());
        assert!(parse_rational("a/2").is_err());
    }

    #[test]
    fn primitive_scaling() {
        let v = vec![ratio(1, 2), ratio(-3, 4), rat(0)];
        assert_eq!(primitive(&v), rvec(&[2, -3, 0]));
        assert_eq!(primitive_line(&rvec(&[0, -2, 4])), rvec(&[0, 1, -2]));
    }
}
