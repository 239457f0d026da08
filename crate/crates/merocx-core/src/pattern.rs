//! Pure diagonal pole patterns `prod (z_i - z_j)^{-o_ij}` and their canonical
//! "tree" basis.
//!
//! A tree pattern gives every variable at most one later partner. Iterated
//! partial fractions express any pattern in tree patterns, and tree patterns are
//! linearly independent, so coefficients over them are canonical coordinates.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};

use crate::laurent::LaurentElem;
use crate::scalar::{binom, Q};

pub const MAX_SLOTS: usize = 8;

/// Tree pattern over variables `z_1..z_8`: `partner[a]` is the 1-based later
/// partner of `z_{a+1}` (0 = none) with pole order `order[a]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TreePat {
    partner: [u8; MAX_SLOTS],
    order: [u8; MAX_SLOTS],
}

/// General pattern: pair `(i, j)` with `i < j` (1-based) to order.
pub type Pattern = BTreeMap<(u8, u8), u8>;

impl TreePat {
    pub const EMPTY: TreePat = TreePat { partner: [0; MAX_SLOTS], order: [0; MAX_SLOTS] };

    pub fn pairs(&self) -> impl Iterator<Item = (u8, u8, u8)> + '_ {
        (0..MAX_SLOTS).filter(|a| self.partner[*a] != 0).map(|a| (a as u8 + 1, self.partner[a], self.order[a]))
    }

    pub fn to_pattern(&self) -> Pattern {
        self.pairs().map(|(i, j, o)| ((i, j), o)).collect()
    }

    /// Total pole degree `sum o_ij`.
    pub fn degree(&self) -> u32 {
        self.order.iter().map(|o| *o as u32).sum()
    }

    pub fn order_at(&self, i: u8, j: u8) -> u8 {
        if self.partner[i as usize - 1] == j {
            self.order[i as usize - 1]
        } else {
            0
        }
    }

    pub fn is_tree(p: &Pattern) -> bool {
        let mut seen = [false; MAX_SLOTS + 1];
        for &(i, _) in p.keys() {
            if seen[i as usize] {
                return false;
            }
            seen[i as usize] = true;
        }
        true
    }

    pub fn from_tree_pattern(p: &Pattern) -> Option<TreePat> {
        let mut t = TreePat::EMPTY;
        for (&(i, j), &o) in p {
            if o == 0 {
                continue;
            }
            if i == 0 || j as usize > MAX_SLOTS || i >= j || t.partner[i as usize - 1] != 0 {
                return None;
            }
            t.partner[i as usize - 1] = j;
            t.order[i as usize - 1] = o;
        }
        Some(t)
    }

    /// Relabels by an order-preserving map `f` on 1-based variables.
    pub fn shift_monotone(&self, f: impl Fn(u8) -> u8) -> TreePat {
        let mut t = TreePat::EMPTY;
        for (i, j, o) in self.pairs() {
            let (a, b) = (f(i), f(j));
            debug_assert!(a < b);
            t.partner[a as usize - 1] = b;
            t.order[a as usize - 1] = o;
        }
        t
    }

    /// Largest variable index used.
    pub fn max_var(&self) -> u8 {
        self.pairs().map(|p| p.1).max().unwrap_or(0)
    }

    pub fn to_laurent(&self) -> LaurentElem {
        let mut r = LaurentElem::one();
        for (i, j, o) in self.pairs() {
            r = r.mul(&LaurentElem::pole(i as u32, j as u32, o as u32));
        }
        r
    }
}

/// Linear combination of tree patterns.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PoleForm {
    pub terms: BTreeMap<TreePat, Q>,
}

impl PoleForm {
    pub fn zero() -> Self {
        Self::default()
    }
    pub fn constant(c: Q) -> Self {
        let mut f = Self::zero();
        f.add_term(TreePat::EMPTY, c);
        f
    }
    pub fn single(t: TreePat, c: Q) -> Self {
        let mut f = Self::zero();
        f.add_term(t, c);
        f
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn add_term(&mut self, t: TreePat, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(t).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&t);
        }
    }
    pub fn add_scaled(&mut self, o: &PoleForm, c: &Q) {
        for (t, x) in &o.terms {
            self.add_term(*t, x * c);
        }
    }
    pub fn scale(&self, c: &Q) -> Self {
        let mut r = Self::zero();
        r.add_scaled(self, c);
        r
    }
    pub fn max_abs_coeff(&self) -> Q {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(Q::zero)
    }

    /// Order-preserving variable relabeling (stays in tree form).
    pub fn shift_monotone(&self, f: impl Fn(u8) -> u8 + Copy) -> Self {
        PoleForm { terms: self.terms.iter().map(|(t, c)| (t.shift_monotone(f), c.clone())).collect() }
    }

    /// Arbitrary injective relabeling, re-reduced to tree form.
    pub fn relabel(&self, f: impl Fn(u8) -> u8) -> Self {
        let mut r = Self::zero();
        for (t, c) in &self.terms {
            let mut p = Pattern::new();
            let mut c = c.clone();
            for (i, j, o) in t.pairs() {
                let (a, b) = (f(i), f(j));
                if a < b {
                    *p.entry((a, b)).or_insert(0) += o;
                } else {
                    *p.entry((b, a)).or_insert(0) += o;
                    if o % 2 == 1 {
                        c = -c;
                    }
                }
            }
            reduce_into(&p, &c, &mut r);
        }
        r
    }

    /// Product with a form on disjoint variables (caller guarantees disjointness
    /// and that the combined pattern keeps one later partner per variable).
    pub fn tensor(&self, o: &PoleForm) -> Self {
        let mut r = Self::zero();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                let mut p = a.to_pattern();
                for (k, v) in b.to_pattern() {
                    *p.entry(k).or_insert(0) += v;
                }
                reduce_into(&p, &(x * y), &mut r);
            }
        }
        r
    }

    /// Partial derivative in the 1-based variable `v`.
    pub fn differentiate(&self, v: u8) -> Self {
        let mut r = Self::zero();
        for (t, c) in &self.terms {
            for (i, j, o) in t.pairs() {
                let s: i64 = if i == v {
                    1
                } else if j == v {
                    -1
                } else {
                    continue;
                };
                let mut t2 = *t;
                t2.order[i as usize - 1] += 1;
                r.add_term(t2, c * Q::from_integer((-(o as i64) * s).into()));
            }
        }
        r
    }

    /// Intrinsic pole order along `z_i = z_j` (tree orders are not intrinsic:
    /// Arnold relations can cancel poles). Computed from the Laurent expansion in
    /// `eps = z_j - z_i`.
    pub fn pole_order(&self, i: u8, j: u8) -> u32 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        let mut groups: BTreeMap<u8, PoleForm> = BTreeMap::new();
        for (t, c) in &self.terms {
            let o = t.order_at(i, j);
            let mut rest = *t;
            if o > 0 {
                rest.partner[i as usize - 1] = 0;
                rest.order[i as usize - 1] = 0;
            }
            groups.entry(o).or_default().add_term(rest, c.clone());
        }
        let nmax = groups.keys().next_back().copied().unwrap_or(0);
        for n in (1..=nmax).rev() {
            let mut acc = PoleForm::zero();
            for (&o, g) in groups.range(n..) {
                let m = o - n;
                let mut d = g.clone();
                for _ in 0..m {
                    d = d.differentiate(j);
                }
                let merged = d.relabel(|v| if v == j { i } else { v });
                let mut c = Q::one() / Q::from_integer(crate::scalar::factorial(m as u32));
                if o % 2 == 1 {
                    c = -c;
                }
                acc.add_scaled(&merged, &c);
            }
            if !acc.is_zero() {
                return n as u32;
            }
        }
        0
    }

    pub fn to_laurent(&self) -> LaurentElem {
        let mut r = LaurentElem::zero();
        for (t, c) in &self.terms {
            r = r.add(&t.to_laurent().scale(c));
        }
        r
    }

    /// Total pole degrees present.
    pub fn degrees(&self) -> alloc::collections::BTreeSet<u32> {
        self.terms.keys().map(|t| t.degree()).collect()
    }
}

/// Reduces `c * pattern` to tree form and accumulates into `out`.
pub fn reduce_into(p: &Pattern, c: &Q, out: &mut PoleForm) {
    if c.is_zero() {
        return;
    }
    let mut p = p.clone();
    p.retain(|_, o| *o > 0);
    // smallest variable with two or more later partners
    let mut first: Option<(u8, u8, u8)> = None;
    let mut last_i = 0u8;
    let mut last_j = 0u8;
    for &(i, j) in p.keys() {
        if i == last_i {
            first = Some((i, last_j, j));
            break;
        }
        last_i = i;
        last_j = j;
    }
    let Some((a, b, cc)) = first else {
        out.add_term(TreePat::from_tree_pattern(&p).expect("tree pattern"), c.clone());
        return;
    };
    let pa = p.remove(&(a, b)).unwrap() as i64;
    let qa = p.remove(&(a, cc)).unwrap() as i64;
    let base_bc = p.get(&(b, cc)).copied().unwrap_or(0) as i64;
    // D_ab^{-p} D_ac^{-q} = sum_n (-1)^n C(q+n-1,n) D_ab^{-(p-n)} D_bc^{-(q+n)}
    //                    + sum_n (-1)^p C(p+n-1,n) D_ac^{-(q-n)} D_bc^{-(p+n)}
    for n in 0..pa {
        let mut co = binom(qa + n - 1, n as u32);
        if n % 2 == 1 {
            co = -co;
        }
        let mut p2 = p.clone();
        p2.insert((a, b), (pa - n) as u8);
        p2.insert((b, cc), (base_bc + qa + n) as u8);
        reduce_into(&p2, &(c * co), out);
    }
    for n in 0..qa {
        let mut co = binom(pa + n - 1, n as u32);
        if pa % 2 == 1 {
            co = -co;
        }
        let mut p2 = p.clone();
        p2.insert((a, cc), (qa - n) as u8);
        p2.insert((b, cc), (base_bc + pa + n) as u8);
        reduce_into(&p2, &(c * co), out);
    }
}

pub fn reduce(p: &Pattern) -> PoleForm {
    let mut out = PoleForm::zero();
    reduce_into(p, &Q::one(), &mut out);
    out
}

/// All tree patterns on `l` variables with total degree `s`, each order capped
/// by `cap(i, j)`.
pub fn tree_patterns(l: usize, s: u32, cap: &dyn Fn(u8, u8) -> u8) -> Vec<TreePat> {
    let mut out = Vec::new();
    fn rec(a: usize, l: usize, left: u32, cur: &mut TreePat, cap: &dyn Fn(u8, u8) -> u8, out: &mut Vec<TreePat>) {
        if a + 1 >= l {
            if left == 0 {
                out.push(*cur);
            }
            return;
        }
        rec(a + 1, l, left, cur, cap, out);
        for b in a + 2..=l {
            let mx = (cap(a as u8 + 1, b as u8) as u32).min(left);
            for o in 1..=mx {
                cur.partner[a] = b as u8;
                cur.order[a] = o as u8;
                rec(a + 1, l, left - o, cur, cap, out);
            }
            cur.partner[a] = 0;
            cur.order[a] = 0;
        }
    }
    let mut cur = TreePat::EMPTY;
    rec(0, l, s, &mut cur, cap, &mut out);
    out
}

/// All general patterns on `l` variables with total degree `s` and capped orders.
pub fn all_patterns(l: usize, s: u32, cap: &dyn Fn(u8, u8) -> u8) -> Vec<Pattern> {
    let pairs: Vec<(u8, u8)> = (1..=l as u8).flat_map(|i| (i + 1..=l as u8).map(move |j| (i, j))).collect();
    let mut out = Vec::new();
    fn rec(k: usize, pairs: &[(u8, u8)], left: u32, cur: &mut Pattern, cap: &dyn Fn(u8, u8) -> u8, out: &mut Vec<Pattern>) {
        if k == pairs.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let (i, j) = pairs[k];
        let mx = (cap(i, j) as u32).min(left);
        for o in 0..=mx {
            if o > 0 {
                cur.insert((i, j), o as u8);
            }
            rec(k + 1, pairs, left - o, cur, cap, out);
        }
        cur.remove(&(i, j));
    }
    rec(0, &pairs, s, &mut Pattern::new(), cap, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(v: &[(u8, u8, u8)]) -> Pattern {
        v.iter().map(|&(i, j, o)| ((i, j), o)).collect()
    }

    fn laurent_of(p: &Pattern) -> LaurentElem {
        let mut r = LaurentElem::one();
        for (&(i, j), &o) in p {
            r = r.mul(&LaurentElem::pole(i as u32, j as u32, o as u32));
        }
        r
    }

    #[test]
    fn reduction_matches_laurent_arithmetic() {
        let cap = |_: u8, _: u8| 3u8;
        for l in 2..=4 {
            for s in 0..=4 {
                for p in all_patterns(l, s, &cap) {
                    let f = reduce(&p);
                    assert_eq!(f.to_laurent(), laurent_of(&p), "pattern {p:?}");
                    for t in f.terms.keys() {
                        assert_eq!(t.degree(), s);
                    }
                }
            }
        }
    }

    #[test]
    fn tree_patterns_are_independent() {
        // evaluation at many rational points gives full column rank
        use crate::scalar::qf;
        let l = 4;
        let s = 3;
        let trees = tree_patterns(l, s, &|_, _| 3);
        let mut rows = Vec::new();
        for k in 0..(trees.len() + 10) {
            let mut pt = BTreeMap::new();
            for v in 1..=l as u32 {
                let h = (k as u64 * 2654435761 + v as u64 * 40503 * (k as u64 + 1)) % 1_000_003;
                pt.insert(v, qf(h as i64 + v as i64, 1 + (h % 11) as i64));
            }
            rows.push(trees.iter().map(|t| t.to_laurent().evaluate(&pt).unwrap()).collect::<Vec<_>>());
        }
        // full rank modulo p already certifies full rank over Q
        let zrows: Vec<crate::linalg::SpRowZ> = rows
            .iter()
            .map(|r| crate::linalg::to_integer_row(&r.iter().enumerate().map(|(c, x)| (c as u32, x.clone())).collect()))
            .collect();
        assert_eq!(crate::linalg::modular_rank(&zrows), trees.len());
    }

    #[test]
    fn intrinsic_pole_order_matches_laurent() {
        // D12^-1 (D13^-1 - D23^-1) has no pole along z1 = z2 once combined
        let mut f = PoleForm::zero();
        let mut a = TreePat::EMPTY;
        a.partner[0] = 2;
        a.order[0] = 1;
        a.partner[1] = 3;
        a.order[1] = 1;
        f.add_term(a, Q::one());
        f.add_scaled(&reduce(&pat(&[(1, 2, 1), (1, 3, 1)])), &-Q::one());
        let lf = f.to_laurent();
        for (i, j) in [(1u8, 2u8), (1, 3), (2, 3)] {
            assert_eq!(f.pole_order(i, j), lf.pole_order(i as u32, j as u32), "pair {i},{j}");
        }
        for s in 1..=4 {
            for p in all_patterns(3, s, &|_, _| 3) {
                let f = reduce(&p);
                let lf = f.to_laurent();
                for (i, j) in [(1u8, 2u8), (1, 3), (2, 3)] {
                    assert_eq!(f.pole_order(i, j), lf.pole_order(i as u32, j as u32));
                }
            }
        }
    }

    #[test]
    fn relabel_and_derivative_agree_with_laurent() {
        let p = pat(&[(1, 2, 2), (1, 3, 1), (2, 3, 1)]);
        let f = reduce(&p);
        let g = f.relabel(|v| [0, 3, 1, 2][v as usize]);
        let lg = f.to_laurent().relabel(|v| [0, 3, 1, 2][v as usize]);
        assert_eq!(g.to_laurent(), lg);
        for v in 1..=3 {
            assert_eq!(f.differentiate(v).to_laurent(), f.to_laurent().differentiate(v as u32).unwrap());
        }
    }
}

/// Expresses a Laurent element in `z_1..z_l` in the tree-pattern frame.
/// Coefficients are fitted at sample points and the result is verified by
/// exact Laurent arithmetic; values outside the frame are rejected.
pub fn from_laurent(v: &LaurentElem, l: usize) -> crate::Result<PoleForm> {
    use rand_core::{RngCore, SeedableRng};
    if v.is_zero() {
        return Ok(PoleForm::zero());
    }
    if l > MAX_SLOTS || v.vars().iter().any(|&x| x == 0 || x as usize > l) {
        return crate::invalid("value uses variables outside z_1..z_l");
    }
    let outside = || crate::Error::InvalidArgument(alloc::format!("value is not in the pole-pattern frame"));
    let mut pats = Vec::new();
    for d in v.degrees() {
        if d > 0 {
            return Err(outside());
        }
        pats.extend(tree_patterns(l, (-d) as u32, &|_, _| u8::MAX));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    let mut cols: Vec<crate::linalg::SpRowQ> = alloc::vec![Vec::new(); pats.len()];
    let mut target = Vec::new();
    let mut row = 0u32;
    let mut tries = 0;
    while (row as usize) < pats.len() + 4 {
        tries += 1;
        if tries > 50 * (pats.len() + 4) {
            return Err(outside());
        }
        let point: BTreeMap<u32, Q> =
            (1..=l as u32).map(|j| (j, Q::from_integer(((rng.next_u32() % 20001) as i64 - 10000).into()))).collect();
        let Some(y) = v.evaluate(&point) else { continue };
        let Some(xs) = pats.iter().map(|p| p.to_laurent().evaluate(&point)).collect::<Option<Vec<Q>>>() else { continue };
        for (c, x) in cols.iter_mut().zip(xs) {
            if !x.is_zero() {
                c.push((row, x));
            }
        }
        if !y.is_zero() {
            target.push((row, y));
        }
        row += 1;
    }
    let coeffs = crate::linalg::solve(&cols, &target).ok_or_else(outside)?;
    let mut f = PoleForm::zero();
    for (p, c) in pats.iter().zip(coeffs) {
        f.add_term(*p, c);
    }
    if f.to_laurent() != *v {
        return Err(outside());
    }
    Ok(f)
}
