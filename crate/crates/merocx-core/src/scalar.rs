//! Exact rationals and small helpers shared by every module.

use alloc::string::String;
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn zero() -> Q {
    Q::zero()
}

pub fn one() -> Q {
    Q::one()
}

/// Parses `"a"`, `"-a/b"` or `"a/b"` with optional whitespace.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Q::new(n, d))
    } else {
        Some(Q::from_integer(s.parse().ok()?))
    }
}

pub fn fmt_q(x: &Q) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    if x.denom().is_one() {
        let _ = write!(s, "{}", x.numer());
    } else {
        let _ = write!(s, "{}/{}", x.numer(), x.denom());
    }
    s
}

/// Binomial coefficient C(n, k) for integer `n` (possibly negative) and `k >= 0`.
pub fn binom(n: i64, k: u32) -> Q {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k as i64 {
        num *= BigInt::from(n - i);
        den *= BigInt::from(i + 1);
    }
    Q::new(num, den)
}

pub fn pow_q(x: &Q, e: i64) -> Q {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

pub fn factorial(n: u32) -> BigInt {
    (1..=n as u64).fold(BigInt::one(), |a, b| a * BigInt::from(b))
}

/// Smallest positive integer multiple of a rational vector with coprime entries.
pub fn primitive(v: &[Q]) -> Vec<BigInt> {
    let mut l = BigInt::one();
    for x in v {
        l = l.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
    let mut g = BigInt::zero();
    for x in &ints {
        g = g.gcd(x);
    }
    if g.is_zero() {
        return ints;
    }
    let lead_neg = ints.iter().find(|x| !x.is_zero()).map(|x| x.is_negative()).unwrap_or(false);
    if lead_neg {
        g = -g;
    }
    ints.into_iter().map(|x| x / &g).collect()
}

pub fn abs_q(x: &Q) -> Q {
    x.abs()
}

/// Arithmetic modulo the Mersenne prime 2^61 - 1.
pub mod modp {
    pub const P: u64 = (1u64 << 61) - 1;

    pub fn add(a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= P { s - P } else { s }
    }
    pub fn sub(a: u64, b: u64) -> u64 {
        if a >= b { a - b } else { a + P - b }
    }
    pub fn mul(a: u64, b: u64) -> u64 {
        let r = (a as u128) * (b as u128);
        let lo = (r as u64) & P;
        let hi = (r >> 61) as u64;
        add(lo, hi)
    }
    pub fn pow(mut a: u64, mut e: u64) -> u64 {
        let mut r = 1;
        while e > 0 {
            if e & 1 == 1 {
                r = mul(r, a);
            }
            a = mul(a, a);
            e >>= 1;
        }
        r
    }
    pub fn inv(a: u64) -> u64 {
        pow(a, P - 2)
    }
    pub fn from_q(x: &super::Q) -> Option<u64> {
        let n = reduce(x.numer());
        let d = reduce(x.denom());
        if d == 0 {
            None
        } else {
            Some(mul(n, inv(d)))
        }
    }
    pub fn reduce(x: &num_bigint::BigInt) -> u64 {
        use num_traits::ToPrimitive;
        let p = num_bigint::BigInt::from(P);
        let mut r = x % &p;
        if r < num_bigint::BigInt::from(0) {
            r += &p;
        }
        r.to_u64().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format() {
        assert_eq!(parse_q("-3/6"), Some(qf(-1, 2)));
        assert_eq!(fmt_q(&qf(4, 2)), "2");
        assert_eq!(parse_q("1/0"), None);
    }

    #[test]
    fn binomials() {
        assert_eq!(binom(5, 2), q(10));
        assert_eq!(binom(-1, 3), q(-1));
        assert_eq!(binom(-2, 2), q(3));
        assert_eq!(binom(2, 3), q(0));
    }

    #[test]
    fn modular_inverse() {
        for a in [1u64, 2, 12345, modp::P - 1] {
            assert_eq!(modp::mul(a, modp::inv(a)), 1);
        }
        assert_eq!(modp::from_q(&qf(1, 2)).map(|h| modp::mul(h, 2)), Some(1));
    }

    #[test]
    fn primitive_vectors() {
        let v = [qf(-1, 2), qf(1, 3), q(0)];
        let p = primitive(&v);
        assert_eq!(p, [BigInt::from(3), BigInt::from(-2), BigInt::from(0)]);
    }
}
