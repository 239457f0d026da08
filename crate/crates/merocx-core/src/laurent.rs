//! Multivariate Laurent expressions whose only non-monomial denominators are
//! powers of variable differences `z_i - z_j`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};

use crate::scalar::{binom, Q};
use crate::{Error, Result};

type Terms = BTreeMap<Vec<i32>, Q>;

/// Canonical form: numerator `terms` (aligned with `vars`) over
/// `prod (z_i - z_j)^{ord}` with every order minimal.
#[derive(Clone, Debug)]
pub struct LaurentElem {
    vars: Vec<u32>,
    terms: Terms,
    poles: BTreeMap<(u32, u32), u32>,
}

impl PartialEq for LaurentElem {
    fn eq(&self, other: &Self) -> bool {
        let a = self.pruned();
        let b = other.pruned();
        a.vars == b.vars && a.terms == b.terms && a.poles == b.poles
    }
}
impl Eq for LaurentElem {}

fn merge_vars(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut s: BTreeSet<u32> = a.iter().copied().collect();
    s.extend(b.iter().copied());
    s.into_iter().collect()
}

fn pos(vars: &[u32], v: u32) -> Option<usize> {
    vars.binary_search(&v).ok()
}

fn add_term(t: &mut Terms, e: Vec<i32>, c: Q) {
    if c.is_zero() {
        return;
    }
    match t.get_mut(&e) {
        Some(x) => {
            *x += c;
            if x.is_zero() {
                t.remove(&e);
            }
        }
        None => {
            t.insert(e, c);
        }
    }
}

/// Multiplies a numerator by `(z_pi - z_pj)^e`.
fn mul_diff_pow(t: &Terms, pi: usize, pj: usize, e: u32) -> Terms {
    if e == 0 {
        return t.clone();
    }
    let mut out = Terms::new();
    for s in 0..=e {
        let mut c = binom(e as i64, s);
        if s % 2 == 1 {
            c = -c;
        }
        for (ex, v) in t {
            let mut ex2 = ex.clone();
            ex2[pi] += (e - s) as i32;
            ex2[pj] += s as i32;
            add_term(&mut out, ex2, v * &c);
        }
    }
    out
}

impl LaurentElem {
    pub fn zero() -> Self {
        LaurentElem { vars: Vec::new(), terms: Terms::new(), poles: BTreeMap::new() }
    }

    pub fn constant(c: Q) -> Self {
        let mut terms = Terms::new();
        add_term(&mut terms, Vec::new(), c);
        LaurentElem { vars: Vec::new(), terms, poles: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    /// `c * prod z_v^{e_v}` over the given (variable, exponent) pairs.
    pub fn monomial(c: Q, powers: &[(u32, i32)]) -> Self {
        let vars = merge_vars(&powers.iter().map(|p| p.0).collect::<Vec<_>>(), &[]);
        let mut e = vec![0i32; vars.len()];
        for (v, k) in powers {
            e[pos(&vars, *v).unwrap()] += k;
        }
        let mut terms = Terms::new();
        add_term(&mut terms, e, c);
        LaurentElem { vars, terms, poles: BTreeMap::new() }
    }

    pub fn var(v: u32) -> Self {
        Self::monomial(Q::one(), &[(v, 1)])
    }

    /// `(z_i - z_j)^{-ord}`; `i > j` is allowed and normalised with a sign.
    pub fn pole(i: u32, j: u32, ord: u32) -> Self {
        Self::from_parts(&[i, j], vec![(vec![0, 0], Q::one())], &[(i, j, ord)]).unwrap()
    }

    /// Builds and canonicalises from raw parts. Exponent vectors follow `vars` order.
    pub fn from_parts(vars: &[u32], terms: Vec<(Vec<i32>, Q)>, poles: &[(u32, u32, u32)]) -> Result<Self> {
        let mut uni: Vec<u32> = vars.to_vec();
        for &(i, j, _) in poles {
            uni.push(i);
            uni.push(j);
        }
        let uni = merge_vars(&uni, &[]);
        let idx: Vec<usize> = vars.iter().map(|v| pos(&uni, *v).unwrap()).collect();
        let mut t = Terms::new();
        let mut sign_flip = false;
        for (e, c) in terms {
            if e.len() != vars.len() {
                return crate::invalid("exponent vector length differs from variable count");
            }
            let mut ex = vec![0i32; uni.len()];
            for (k, x) in e.iter().enumerate() {
                ex[idx[k]] += x;
            }
            add_term(&mut t, ex, c);
        }
        let mut pm = BTreeMap::new();
        for &(i, j, o) in poles {
            if i == j {
                return crate::invalid("pole on identical variables");
            }
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if i > j && o % 2 == 1 {
                sign_flip = !sign_flip;
            }
            *pm.entry((a, b)).or_insert(0) += o;
        }
        if sign_flip {
            for c in t.values_mut() {
                *c = -c.clone();
            }
        }
        let mut r = LaurentElem { vars: uni, terms: t, poles: pm };
        r.canonicalize();
        Ok(r)
    }

    pub fn vars(&self) -> &[u32] {
        &self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &Q)> {
        self.terms.iter()
    }

    pub fn poles(&self) -> impl Iterator<Item = (u32, u32, u32)> + '_ {
        self.poles.iter().map(|(&(i, j), &o)| (i, j, o))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Drops variables that occur nowhere.
    pub fn pruned(&self) -> Self {
        let used: Vec<bool> = (0..self.vars.len())
            .map(|k| {
                let v = self.vars[k];
                self.terms.keys().any(|e| e[k] != 0) || self.poles.keys().any(|&(i, j)| i == v || j == v)
            })
            .collect();
        let vars: Vec<u32> = self.vars.iter().zip(&used).filter(|p| *p.1).map(|p| *p.0).collect();
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.iter().zip(&used).filter(|p| *p.1).map(|p| *p.0).collect(), c.clone()))
            .collect();
        LaurentElem { vars, terms, poles: self.poles.clone() }
    }

    fn realign(&self, uni: &[u32]) -> Terms {
        if uni == self.vars.as_slice() {
            return self.terms.clone();
        }
        let idx: Vec<usize> = self.vars.iter().map(|v| pos(uni, *v).unwrap()).collect();
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut ex = vec![0i32; uni.len()];
                for (k, x) in e.iter().enumerate() {
                    ex[idx[k]] = *x;
                }
                (ex, c.clone())
            })
            .collect()
    }

    /// Extends the variable universe (no change of value).
    pub fn with_vars(&self, extra: &[u32]) -> Self {
        let uni = merge_vars(&self.vars, extra);
        LaurentElem { terms: self.realign(&uni), vars: uni, poles: self.poles.clone() }
    }

    fn canonicalize(&mut self) {
        self.terms.retain(|_, c| !c.is_zero());
        self.poles.retain(|_, o| *o > 0);
        if self.terms.is_empty() {
            self.poles.clear();
            return;
        }
        let keys: Vec<(u32, u32)> = self.poles.keys().copied().collect();
        for (i, j) in keys {
            while self.poles[&(i, j)] > 0 {
                match self.divide_diff(i, j) {
                    Some(t) => {
                        self.terms = t;
                        *self.poles.get_mut(&(i, j)).unwrap() -= 1;
                    }
                    None => break,
                }
            }
        }
        self.poles.retain(|_, o| *o > 0);
    }

    /// Exact quotient of the numerator by `z_i - z_j`, if it divides.
    fn divide_diff(&self, i: u32, j: u32) -> Option<Terms> {
        let pi = pos(&self.vars, i)?;
        let pj = pos(&self.vars, j)?;
        let mut at_diag = Terms::new();
        for (e, c) in &self.terms {
            let mut ex = e.clone();
            ex[pj] += ex[pi];
            ex[pi] = 0;
            add_term(&mut at_diag, ex, c.clone());
        }
        if !at_diag.is_empty() {
            return None;
        }
        let m = self.terms.keys().map(|e| e[pi]).min().unwrap();
        let top = self.terms.keys().map(|e| e[pi]).max().unwrap() - m;
        let mut by_deg: Vec<Terms> = vec![Terms::new(); (top + 1) as usize];
        for (e, c) in &self.terms {
            let k = (e[pi] - m) as usize;
            let mut rest = e.clone();
            rest[pi] = 0;
            add_term(&mut by_deg[k], rest, c.clone());
        }
        let mut out = Terms::new();
        let mut qk = Terms::new();
        for k in (1..=top as usize).rev() {
            let mut next = by_deg[k].clone();
            for (e, c) in &qk {
                let mut ex = e.clone();
                ex[pj] += 1;
                add_term(&mut next, ex, c.clone());
            }
            for (e, c) in &next {
                let mut ex = e.clone();
                ex[pi] = (k as i32 - 1) + m;
                add_term(&mut out, ex, c.clone());
            }
            qk = next;
        }
        Some(out)
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Self {
        if c.is_zero() {
            return Self::zero().with_vars(&self.vars);
        }
        let mut r = self.clone();
        for v in r.terms.values_mut() {
            *v *= c;
        }
        r
    }

    pub fn add(&self, o: &Self) -> Self {
        if o.is_zero() {
            return self.with_vars(&o.vars);
        }
        if self.is_zero() {
            return o.with_vars(&self.vars);
        }
        let uni = merge_vars(&self.vars, &o.vars);
        let mut poles = self.poles.clone();
        for (k, v) in &o.poles {
            let e = poles.entry(*k).or_insert(0);
            *e = (*e).max(*v);
        }
        let lift = |x: &Self| {
            let mut t = x.realign(&uni);
            for (&(i, j), &o) in &poles {
                let have = x.poles.get(&(i, j)).copied().unwrap_or(0);
                t = mul_diff_pow(&t, pos(&uni, i).unwrap(), pos(&uni, j).unwrap(), o - have);
            }
            t
        };
        let mut t = lift(self);
        for (e, c) in lift(o) {
            add_term(&mut t, e, c);
        }
        let mut r = LaurentElem { vars: uni, terms: t, poles };
        r.canonicalize();
        r
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let uni = merge_vars(&self.vars, &o.vars);
        if self.is_zero() || o.is_zero() {
            return Self::zero().with_vars(&uni);
        }
        let a = self.realign(&uni);
        let b = o.realign(&uni);
        let mut t = Terms::new();
        for (ea, ca) in &a {
            for (eb, cb) in &b {
                let e: Vec<i32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                add_term(&mut t, e, ca * cb);
            }
        }
        let mut poles = self.poles.clone();
        for (k, v) in &o.poles {
            *poles.entry(*k).or_insert(0) += v;
        }
        let mut r = LaurentElem { vars: uni, terms: t, poles };
        r.canonicalize();
        r
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut r = Self::one();
        for _ in 0..n {
            r = r.mul(self);
        }
        r
    }

    /// Renames variables by an injective map.
    pub fn relabel(&self, f: impl Fn(u32) -> u32) -> Self {
        let new_vars: Vec<u32> = self.vars.iter().map(|v| f(*v)).collect();
        let uni = merge_vars(&new_vars, &[]);
        let idx: Vec<usize> = new_vars.iter().map(|v| pos(&uni, *v).unwrap()).collect();
        let mut flip = false;
        let mut poles = BTreeMap::new();
        for (&(i, j), &o) in &self.poles {
            let (a, b) = (f(i), f(j));
            if a < b {
                poles.insert((a, b), o);
            } else {
                poles.insert((b, a), o);
                if o % 2 == 1 {
                    flip = !flip;
                }
            }
        }
        let mut terms = Terms::new();
        for (e, c) in &self.terms {
            let mut ex = vec![0i32; uni.len()];
            for (k, x) in e.iter().enumerate() {
                ex[idx[k]] += x;
            }
            add_term(&mut terms, ex, if flip { -c.clone() } else { c.clone() });
        }
        LaurentElem { vars: uni, terms, poles }
    }

    /// Reduced pole order at `z_i = z_j` (0 if regular).
    pub fn pole_order(&self, i: u32, j: u32) -> u32 {
        let k = if i < j { (i, j) } else { (j, i) };
        self.poles.get(&k).copied().unwrap_or(0)
    }

    /// Homogeneous degrees (numerator degree minus pole degree) present.
    pub fn degrees(&self) -> BTreeSet<i64> {
        let pd: i64 = self.poles.values().map(|o| *o as i64).sum();
        self.terms.keys().map(|e| e.iter().map(|x| *x as i64).sum::<i64>() - pd).collect()
    }

    pub fn max_abs_coeff(&self) -> Q {
        self.terms.values().map(|c| c.abs()).max().unwrap_or_else(Q::zero)
    }

    /// Exact value at a rational point; `None` on a pole.
    pub fn evaluate(&self, point: &BTreeMap<u32, Q>) -> Option<Q> {
        let val = |v: u32| point.get(&v).cloned();
        let mut num = Q::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (k, x) in e.iter().enumerate() {
                if *x != 0 {
                    let z = val(self.vars[k])?;
                    if z.is_zero() && *x < 0 {
                        return None;
                    }
                    t *= crate::scalar::pow_q(&z, *x as i64);
                }
            }
            num += t;
        }
        let mut den = Q::one();
        for (&(i, j), &o) in &self.poles {
            let d = val(i)? - val(j)?;
            if d.is_zero() {
                return None;
            }
            den *= crate::scalar::pow_q(&d, o as i64);
        }
        Some(num / den)
    }

    /// Formal partial derivative.
    pub fn differentiate(&self, v: u32) -> Result<Self> {
        let pv = pos(&self.vars, v).ok_or(Error::UnknownVariable(v))?;
        let mut dn = Terms::new();
        for (e, c) in &self.terms {
            if e[pv] != 0 {
                let mut ex = e.clone();
                ex[pv] -= 1;
                add_term(&mut dn, ex, c * Q::from_integer(e[pv].into()));
            }
        }
        let mut r = LaurentElem { vars: self.vars.clone(), terms: dn, poles: self.poles.clone() };
        r.canonicalize();
        let base = LaurentElem { vars: self.vars.clone(), terms: self.terms.clone(), poles: self.poles.clone() };
        for (&(i, j), &o) in &self.poles {
            let s: i64 = if i == v {
                1
            } else if j == v {
                -1
            } else {
                continue;
            };
            let extra = Self::pole(i, j, 1).scale(&Q::from_integer((-(o as i64) * s).into()));
            r = r.add(&base.mul(&extra));
        }
        Ok(r.with_vars(&self.vars))
    }

    /// Substitutes `var -> var + offset` and expands in powers of the fresh
    /// variable `offset`, keeping total offset-degree `<= order`.
    pub fn shift_expand(&self, var: u32, offset: u32, order: u32) -> Result<Self> {
        let pv = pos(&self.vars, var).ok_or(Error::UnknownVariable(var))?;
        if pos(&self.vars, offset).is_some() {
            return crate::invalid("offset variable is not fresh");
        }
        let n = order as usize + 1;
        let plain = LaurentElem { vars: self.vars.clone(), terms: Terms::new(), poles: BTreeMap::new() };
        let mut num: Vec<Terms> = vec![Terms::new(); n];
        for (e, c) in &self.terms {
            for (k, slot) in num.iter_mut().enumerate() {
                let b = binom(e[pv] as i64, k as u32);
                if b.is_zero() {
                    continue;
                }
                let mut ex = e.clone();
                ex[pv] -= k as i32;
                add_term(slot, ex, c * b);
            }
        }
        let mut series: Vec<LaurentElem> = num
            .into_iter()
            .map(|t| {
                let mut x = plain.clone();
                x.terms = t;
                x
            })
            .collect();
        for (&(i, j), &o) in &self.poles {
            let s: i64 = if i == var {
                1
            } else if j == var {
                -1
            } else {
                let p = Self::pole(i, j, o);
                series = series.iter().map(|x| x.mul(&p)).collect();
                continue;
            };
            let fac: Vec<LaurentElem> = (0..n)
                .map(|k| {
                    let mut c = binom(-(o as i64), k as u32);
                    if s < 0 && k % 2 == 1 {
                        c = -c;
                    }
                    Self::pole(i, j, o + k as u32).scale(&c)
                })
                .collect();
            let mut next = vec![Self::zero(); n];
            for a in 0..n {
                for b in 0..n - a {
                    next[a + b] = next[a + b].add(&series[a].mul(&fac[b]));
                }
            }
            series = next;
        }
        let mut r = Self::zero();
        for (k, x) in series.iter().enumerate() {
            r = r.add(&x.mul(&Self::monomial(Q::one(), &[(offset, k as i32)])));
        }
        Ok(r.with_vars(&self.vars).with_vars(&[offset]))
    }

    /// Keeps only terms whose total degree in `vs` is `<= d`.
    pub fn truncate_degree_in(&self, vs: &[u32], d: i32) -> Self {
        let ps: Vec<usize> = vs.iter().filter_map(|v| pos(&self.vars, *v)).collect();
        let mut r = self.clone();
        r.terms.retain(|e, _| ps.iter().map(|p| e[*p]).sum::<i32>() <= d);
        r.canonicalize();
        r
    }

    /// Coefficient of `prod_{v in vs} v^{e_v}` as an element in the other variables.
    pub fn coefficient_in(&self, vs: &[(u32, i32)]) -> Self {
        let ps: Vec<(usize, i32)> = vs.iter().filter_map(|(v, e)| pos(&self.vars, *v).map(|p| (p, *e))).collect();
        let mut r = self.clone();
        r.terms = self
            .terms
            .iter()
            .filter(|(e, _)| ps.iter().all(|(p, k)| e[*p] == *k))
            .map(|(e, c)| {
                let mut ex = e.clone();
                for (p, _) in &ps {
                    ex[*p] = 0;
                }
                (ex, c.clone())
            })
            .collect();
        r.canonicalize();
        r
    }

    /// Substitutes every variable by a Laurent expression (non-negative exponents only).
    pub fn substitute(&self, f: &dyn Fn(u32) -> LaurentElem) -> Result<Self> {
        let imgs: Vec<LaurentElem> = self.vars.iter().map(|v| f(*v)).collect();
        let mut r = Self::zero();
        for (e, c) in &self.terms {
            let mut t = Self::constant(c.clone());
            for (k, x) in e.iter().enumerate() {
                if *x > 0 {
                    t = t.mul(&imgs[k].pow(*x as u32));
                } else if *x < 0 {
                    return Err(Error::Unsupported("substitution into a negative power".into()));
                }
            }
            r = r.add(&t);
        }
        Ok(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qf};

    fn z(v: u32) -> LaurentElem {
        LaurentElem::var(v)
    }

    #[test]
    fn cancellation_to_unit() {
        let a = LaurentElem::pole(1, 2, 1);
        let b = z(1).sub(&z(2));
        assert_eq!(a.mul(&b), LaurentElem::one());
    }

    #[test]
    fn zero_absorbs() {
        let x = LaurentElem::pole(1, 3, 2).add(&z(2));
        assert!(LaurentElem::zero().mul(&x).is_zero());
    }

    #[test]
    fn product_by_convolution() {
        let a = LaurentElem::monomial(q(1), &[(1, -1)]).add(&z(2));
        let b = LaurentElem::monomial(q(1), &[(1, -1)]).sub(&z(2));
        let expect = LaurentElem::monomial(q(1), &[(1, -2)]).sub(&LaurentElem::monomial(q(1), &[(2, 2)]));
        assert_eq!(a.mul(&b), expect);
    }

    #[test]
    fn derivatives() {
        let d = LaurentElem::monomial(q(1), &[(1, 3)]).differentiate(1).unwrap();
        assert_eq!(d, LaurentElem::monomial(q(3), &[(1, 2)]));
        let d = LaurentElem::pole(1, 2, 1).differentiate(1).unwrap();
        assert_eq!(d, LaurentElem::pole(1, 2, 2).neg());
        let f = LaurentElem::monomial(q(1), &[(1, 2)]).mul(&LaurentElem::pole(1, 2, 1));
        let d = f.differentiate(2).unwrap();
        let expect = LaurentElem::monomial(q(1), &[(1, 2)]).mul(&LaurentElem::pole(1, 2, 2));
        assert_eq!(d, expect);
        // finite-difference cross-check at a rational point
        let h = qf(1, 1_000_000);
        let mut p = BTreeMap::new();
        p.insert(1u32, qf(3, 2));
        p.insert(2u32, qf(1, 3));
        let mut p2 = p.clone();
        *p2.get_mut(&2).unwrap() += &h;
        let fd = (f.evaluate(&p2).unwrap() - f.evaluate(&p).unwrap()) / &h;
        let exact = d.evaluate(&p).unwrap();
        assert!((fd - exact).abs() < qf(1, 1000));
        assert!(matches!(f.differentiate(7), Err(Error::UnknownVariable(7))));
    }

    #[test]
    fn shifts() {
        let w = 100;
        let s = LaurentElem::monomial(q(1), &[(1, 2)]).shift_expand(1, w, 2).unwrap();
        let expect = LaurentElem::monomial(q(1), &[(1, 2)])
            .add(&LaurentElem::monomial(q(2), &[(1, 1), (w, 1)]))
            .add(&LaurentElem::monomial(q(1), &[(w, 2)]));
        assert_eq!(s, expect);
        let p = LaurentElem::pole(1, 2, 1);
        assert_eq!(p.shift_expand(1, w, 0).unwrap(), p);
        let s = p.shift_expand(1, w, 1).unwrap();
        let expect = p.sub(&z(w).mul(&LaurentElem::pole(1, 2, 2)));
        assert_eq!(s, expect);
        assert!(p.shift_expand(1, 2, 1).is_err());
    }

    #[test]
    fn pole_orders() {
        assert_eq!(LaurentElem::pole(1, 2, 3).pole_order(1, 2), 3);
        assert_eq!(z(1).mul(&z(2)).pole_order(1, 2), 0);
        let sq = z(1).sub(&z(2)).pow(2);
        assert_eq!(sq.mul(&LaurentElem::pole(1, 2, 5)).pole_order(1, 2), 3);
    }

    #[test]
    fn arnold_relation_cancels() {
        let a = LaurentElem::pole(1, 2, 1).mul(&LaurentElem::pole(2, 3, 1));
        let b = LaurentElem::pole(2, 3, 1).mul(&LaurentElem::pole(3, 1, 1));
        let c = LaurentElem::pole(3, 1, 1).mul(&LaurentElem::pole(1, 2, 1));
        assert!(a.add(&b).add(&c).is_zero());
    }

    #[test]
    fn reversed_pair_sign() {
        assert_eq!(LaurentElem::pole(2, 1, 1), LaurentElem::pole(1, 2, 1).neg());
        assert_eq!(LaurentElem::pole(2, 1, 2), LaurentElem::pole(1, 2, 2));
    }
}
