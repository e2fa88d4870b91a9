//! Exact rational scalars.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// The ground field: arbitrary-precision rationals, always reduced.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `p/q` or an integer.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                return None;
            }
            Some(Q::new(n, d))
        }
        None => s.parse::<BigInt>().ok().map(Q::from_integer),
    }
}

/// Renders as `p/q`, or `p` when the denominator is one.
pub fn format_q(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn q_to_f64(x: &Q) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or_else(|| {
        // Very large numerators or denominators: divide in floating point.
        let n = x.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = x.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

pub(crate) fn is_negative(x: &Q) -> bool {
    x.is_negative()
}

/// Product with shortcuts for units and integers, which skip the gcd normalization.
pub(crate) fn mul(a: &Q, b: &Q) -> Q {
    if a.is_one() {
        b.clone()
    } else if b.is_one() {
        a.clone()
    } else if a.is_integer() && b.is_integer() {
        Q::from_integer(a.numer() * b.numer())
    } else {
        a * b
    }
}

/// `*acc += x` with a shortcut for integers.
pub(crate) fn add_assign(acc: &mut Q, x: Q) {
    if acc.is_integer() && x.is_integer() {
        *acc = Q::from_integer(acc.numer() + x.numer());
    } else {
        *acc += x;
    }
}
