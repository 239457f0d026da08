//! Ring laws, derivative rules and shift expansion on random small elements.
//! Oracle: evaluation at rational points, which is a ring homomorphism
//! independent of the canonical-form reduction.

use std::collections::BTreeMap;

use merocx_core::scalar::{abs_q, factorial, q, qf};
use merocx_core::{LaurentElem, Q};
use proptest::prelude::*;

/// Sum of up to three `c * z^e * (z_i - z_j)^-o` terms over variables 1..=3.
fn elem() -> impl Strategy<Value = LaurentElem> {
    let term = (-3i64..=3, prop::collection::vec(-2i32..=2, 3), 0usize..4, 0u32..=2);
    prop::collection::vec(term, 0..=3).prop_map(|ts| {
        let pairs = [(1, 2), (1, 3), (2, 3), (1, 2)];
        let mut acc = LaurentElem::zero();
        for (c, e, p, o) in ts {
            let powers: Vec<(u32, i32)> = e.iter().enumerate().map(|(i, x)| (i as u32 + 1, *x)).collect();
            let (i, j) = pairs[p];
            acc = acc.add(&LaurentElem::monomial(q(c), &powers).mul(&LaurentElem::pole(i, j, o)));
        }
        acc
    })
}

fn point() -> impl Strategy<Value = BTreeMap<u32, Q>> {
    // distinct nonzero values keep every pole finite
    (1i64..=9, 10i64..=19, 20i64..=29, 1i64..=5).prop_map(|(a, b, c, d)| {
        [(1u32, qf(a, d)), (2, qf(-b, d + 1)), (3, qf(c, 7))].into_iter().collect()
    })
}

fn ev(x: &LaurentElem, p: &BTreeMap<u32, Q>) -> Q {
    x.evaluate(p).expect("point avoids poles")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ring_laws(a in elem(), b in elem(), c in elem()) {
        prop_assert_eq!(a.mul(&b), b.mul(&a));
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.add(&b).mul(&c), a.mul(&c).add(&b.mul(&c)));
        prop_assert!(a.sub(&a).is_zero());
        prop_assert_eq!(a.mul(&LaurentElem::one()), a.clone());
    }

    #[test]
    fn evaluation_is_a_homomorphism(a in elem(), b in elem(), p in point()) {
        prop_assert_eq!(ev(&a.mul(&b), &p), ev(&a, &p) * ev(&b, &p));
        prop_assert_eq!(ev(&a.add(&b), &p), ev(&a, &p) + ev(&b, &p));
    }

    #[test]
    fn reduction_is_confluent(a in elem(), b in elem(), c in elem()) {
        // (a + b) c - b c built in two orders
        let x = a.add(&b).mul(&c).sub(&b.mul(&c));
        let y = c.mul(&a).add(&c.mul(&b)).sub(&c.mul(&b));
        prop_assert_eq!(&x, &y);
        prop_assert_eq!(x, a.mul(&c));
    }

    #[test]
    fn derivative_leibniz(a in elem(), b in elem(), v in 1u32..=3) {
        let (a, b) = (a.with_vars(&[1, 2, 3]), b.with_vars(&[1, 2, 3]));
        let lhs = a.mul(&b).differentiate(v).unwrap();
        let rhs = a.differentiate(v).unwrap().mul(&b).add(&a.mul(&b.differentiate(v).unwrap()));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn pole_order_after_cancellation(o in 0u32..=4, m in 0u32..=4) {
        let x = LaurentElem::var(1).sub(&LaurentElem::var(2)).pow(m).mul(&LaurentElem::pole(1, 2, o));
        prop_assert_eq!(x.pole_order(1, 2), o.saturating_sub(m));
    }

    /// Shift expansion equals the truncated Taylor sum built from repeated
    /// derivatives.
    #[test]
    fn shift_matches_taylor(a in elem(), n in 0u32..=3) {
        let w = 9;
        let s = match a.shift_expand(1, w, n) {
            Ok(s) => s,
            Err(_) => return Ok(()),
        };
        let mut taylor = LaurentElem::zero();
        let mut d = a.with_vars(&[1]);
        for j in 0..=n {
            let c = Q::from_integer(1.into()) / Q::from_integer(factorial(j));
            taylor = taylor.add(&d.mul(&LaurentElem::monomial(c, &[(w, j as i32)])));
            d = d.differentiate(1).unwrap();
        }
        prop_assert_eq!(s, taylor);
    }
}

/// A polynomial shifted to full order is exact at any rational point.
#[test]
fn polynomial_shift_is_exact_at_points() {
    let f = LaurentElem::monomial(q(2), &[(1, 3), (2, 1)]).add(&LaurentElem::monomial(qf(-1, 2), &[(1, 1)]));
    let s = f.shift_expand(1, 9, 3).unwrap();
    let p: BTreeMap<u32, Q> = [(1, qf(2, 3)), (2, q(5)), (9, qf(-7, 4))].into_iter().collect();
    let moved: BTreeMap<u32, Q> = [(1, qf(2, 3) + qf(-7, 4)), (2, q(5))].into_iter().collect();
    assert_eq!(ev(&s, &p), ev(&f, &moved));
}

/// Pole expansion in the region |w| < |z1 - z2|: the truncation error shrinks
/// like w^(n+1).
#[test]
fn pole_shift_error_is_of_next_order() {
    let f = LaurentElem::pole(1, 2, 1);
    for n in 0..=3u32 {
        let s = f.shift_expand(1, 9, n).unwrap();
        let mut errs = Vec::new();
        for h in [qf(1, 100), qf(1, 200)] {
            let p: BTreeMap<u32, Q> = [(1, q(1)), (2, q(0)), (9, h.clone())].into_iter().collect();
            let moved: BTreeMap<u32, Q> = [(1, q(1) + &h), (2, q(0))].into_iter().collect();
            errs.push(abs_q(&(ev(&s, &p) - ev(&f, &moved))));
        }
        // halving w divides the error by about 2^(n+1)
        let ratio = &errs[0] / &errs[1];
        let target = q(1i64 << (n + 1));
        assert!(abs_q(&(ratio - &target)) < qf(1, 10) * target, "order {n}");
    }
}
