//! Exact rational scalars and the handful of integer combinatorics the
//! relation families need.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Element of the ground field: an arbitrary-precision rational kept in
/// lowest terms with a positive denominator.
pub type Scalar = BigRational;

pub fn int(n: i64) -> Scalar {
    Scalar::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Scalar {
    Scalar::new(BigInt::from(p), BigInt::from(q))
}

pub fn sign(exponent: i64) -> Scalar {
    if exponent.rem_euclid(2) == 0 {
        Scalar::one()
    } else {
        -Scalar::one()
    }
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Generalized binomial `top(top-1)...(top-k+1)/k!`; zero for `k < 0`.
///
/// For `0 <= top < k` the falling factorial vanishes, so this agrees with
/// the ordinary binomial on non-negative arguments.
pub fn binomial(top: i64, k: i64) -> Scalar {
    if k < 0 {
        return Scalar::zero();
    }
    let mut num = BigInt::one();
    for i in 0..k {
        num *= BigInt::from(top - i);
    }
    Scalar::new(num, factorial(k as u64))
}

pub fn falling(top: i64, k: u64) -> Scalar {
    let mut num = BigInt::one();
    for i in 0..k as i64 {
        num *= BigInt::from(top - i);
    }
    Scalar::from_integer(num)
}

/// Renders `p/q`, or `p` for integers. Never decimals.
pub fn format_scalar(c: &Scalar) -> String {
    if c.is_integer() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

pub fn parse_scalar(text: &str) -> Option<Scalar> {
    let text = text.trim();
    match text.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().ok()?;
            let q: BigInt = q.trim().parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Scalar::new(p, q))
        }
        None => Some(Scalar::from_integer(text.parse().ok()?)),
    }
}

pub fn is_negative(c: &Scalar) -> bool {
    c.is_negative()
}
