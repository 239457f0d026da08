//! Formal coordinate changes `ρ(z) = a_1 z + a_2 z^2 + ...`, their exponential
//! presentation `exp(sum β_k z^{k+1} ∂_z)`, the induced operator on A, and the
//! transformation of cochains.
//!
//! A cochain is transformed as a family of densities: the dressed function
//! `F(b; z) = prod z_j^{-wt b_j} T(b; z)` of weight `wt b_j` in `z_j`. Its
//! pullback by ρ (computed by series substitution) is pushed back along the
//! unipotent part with `exp(-sum β_k Lie_{z^{k+1}∂})` (computed from the
//! recursively found β) and the scaling part is compensated by `c^{K_G}` on the
//! output and `c^{-K_G}` on the arguments. The result equals `F` through the
//! truncation order exactly when the two routes agree and `F` satisfies KG.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Zero};

use crate::algebra::{AlgebraElem, Model};
use crate::cochain::{Cochain, GCochain, PoleCochain, Tuple};
use crate::laurent::LaurentElem;
use crate::pattern::TreePat;
use crate::scalar::{pow_q, Q};
use crate::{Error, Result};

/// `ρ(z) = sum_{i>=1} coeffs[i-1] z^i`, truncated at `z^{coeffs.len()}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormalAuto {
    pub coeffs: Vec<Q>,
}

impl FormalAuto {
    pub fn new(coeffs: Vec<Q>) -> Result<Self> {
        if coeffs.first().is_none_or(|a| a.is_zero()) {
            return crate::invalid("a formal automorphism needs a_1 != 0");
        }
        Ok(FormalAuto { coeffs })
    }

    pub fn identity(order: usize) -> Self {
        let mut c = vec![Q::zero(); order.max(1)];
        c[0] = Q::one();
        FormalAuto { coeffs: c }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn a(&self, i: usize) -> Q {
        self.coeffs.get(i.wrapping_sub(1)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let mut c = self.coeffs.clone();
        c.resize(order.max(1), Q::zero());
        FormalAuto { coeffs: c }
    }

    /// Parses `"z + 1/2*z^2 - 3*z^3"`.
    pub fn parse(s: &str, order: usize) -> Result<Self> {
        let mut coeffs = vec![Q::zero(); order.max(1)];
        let cleaned: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut terms: Vec<String> = Vec::new();
        let mut cur = String::new();
        for (i, ch) in cleaned.chars().enumerate() {
            if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('^') {
                terms.push(core::mem::take(&mut cur));
            }
            cur.push(ch);
        }
        terms.push(cur);
        for t in terms.iter().filter(|t| !t.is_empty()) {
            let bad = || Error::InvalidArgument(format!("cannot parse term '{t}' of the automorphism"));
            let (sign, body) = match t.strip_prefix('-') {
                Some(b) => (-Q::one(), b),
                None => (Q::one(), t.strip_prefix('+').unwrap_or(t)),
            };
            let (coef, mono) = match body.find('z') {
                Some(p) => (body[..p].trim_end_matches('*'), &body[p..]),
                None => return Err(bad()),
            };
            let c = if coef.is_empty() { Q::one() } else { crate::scalar::parse_q(coef).ok_or_else(bad)? };
            let e: usize = match mono.strip_prefix('z').ok_or_else(bad)? {
                "" => 1,
                rest => rest.strip_prefix('^').and_then(|x| x.parse().ok()).ok_or_else(bad)?,
            };
            if e == 0 {
                return Err(bad());
            }
            if e <= coeffs.len() {
                coeffs[e - 1] += sign * c;
            }
        }
        FormalAuto::new(coeffs)
    }

    /// `(self ∘ other)(z) = self(other(z))`, truncated at the smaller order.
    pub fn compose(&self, other: &FormalAuto) -> FormalAuto {
        let n = self.order().min(other.order());
        let inner = series(&other.coeffs, n);
        let mut out = vec![Q::zero(); n + 1];
        let mut pw = vec![Q::zero(); n + 1];
        pw[0] = Q::one();
        for i in 1..=n {
            pw = mul1(&pw, &inner, n);
            let a = self.a(i);
            if !a.is_zero() {
                for (o, p) in out.iter_mut().zip(&pw) {
                    *o += &a * p;
                }
            }
        }
        FormalAuto { coeffs: out[1..].to_vec() }
    }

    /// Compositional inverse to the same order.
    pub fn inverse(&self) -> FormalAuto {
        let n = self.order();
        let mut g = FormalAuto { coeffs: vec![Q::zero(); n] };
        g.coeffs[0] = self.coeffs[0].recip();
        for k in 2..=n {
            // choose g_k so that self(g(z)) has zero z^k coefficient
            let c = self.compose(&g).a(k);
            g.coeffs[k - 1] = -c / &self.coeffs[0];
        }
        g
    }

    /// The unique `μ` with `self ∘ μ = target` (simply transitive right action).
    pub fn torsor(&self, target: &FormalAuto) -> FormalAuto {
        self.inverse().compose(target)
    }

    /// `ρ = s_c ∘ u` with `s_c(z) = c z` and `u` unipotent.
    pub fn split_scaling(&self) -> (Q, FormalAuto) {
        let c = self.coeffs[0].clone();
        let inv = c.recip();
        (c, FormalAuto { coeffs: self.coeffs.iter().map(|x| x * &inv).collect() })
    }

    pub fn is_unipotent(&self) -> bool {
        self.coeffs[0].is_one()
    }

    pub fn display(&self) -> String {
        let mut s = String::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let neg = c < &Q::zero();
            if !s.is_empty() {
                s.push_str(if neg { " - " } else { " + " });
            } else if neg {
                s.push('-');
            }
            s.push_str(&format!("{}*z^{}", crate::scalar::fmt_q(&crate::scalar::abs_q(c)), i + 1));
        }
        if s.is_empty() {
            s.push('0');
        }
        s
    }
}

/// `[0, a_1, a_2, ...]` padded to `n + 1` entries.
fn series(c: &[Q], n: usize) -> Vec<Q> {
    let mut s = vec![Q::zero(); n + 1];
    for (i, x) in c.iter().enumerate().take(n) {
        s[i + 1] = x.clone();
    }
    s
}

fn mul1(a: &[Q], b: &[Q], n: usize) -> Vec<Q> {
    let mut r = vec![Q::zero(); n + 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if i + j > n {
                break;
            }
            r[i + j] += x * y;
        }
    }
    r
}

/// Coefficients `β_1, β_2, ...` of `exp(sum_k β_k z^{k+1} ∂_z) z = ρ(z)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpCoeffs {
    /// `beta[k-1] = β_k`.
    pub beta: Vec<Q>,
    pub order: usize,
}

impl ExpCoeffs {
    pub fn b(&self, k: usize) -> Q {
        self.beta.get(k.wrapping_sub(1)).cloned().unwrap_or_else(Q::zero)
    }
    pub fn is_zero(&self) -> bool {
        self.beta.iter().all(|b| b.is_zero())
    }
}

/// `exp(V) z` through `z^order` for `V = sum β_k z^{k+1} ∂_z`.
pub fn exp_vector_field_on_z(beta: &ExpCoeffs, order: usize) -> FormalAuto {
    let n = order.max(1);
    let apply = |f: &[Q]| -> Vec<Q> {
        // V f = sum_k β_k z^{k+1} f'
        let mut r = vec![Q::zero(); n + 1];
        for (i, c) in f.iter().enumerate().skip(1) {
            if c.is_zero() {
                continue;
            }
            for k in 1..=n {
                let b = beta.b(k);
                if b.is_zero() || i + k > n {
                    continue;
                }
                r[i + k] += c * Q::from_integer((i as i64).into()) * b;
            }
        }
        r
    };
    let mut term = vec![Q::zero(); n + 1];
    term[1] = Q::one();
    let mut total = term.clone();
    let mut j = 1i64;
    loop {
        term = apply(&term).into_iter().map(|x| x / Q::from_integer(j.into())).collect();
        if term.iter().all(|x| x.is_zero()) {
            break;
        }
        for (t, x) in total.iter_mut().zip(&term) {
            *t += x;
        }
        j += 1;
    }
    FormalAuto { coeffs: total[1..].to_vec() }
}

/// Order-by-order solve for β. `ρ` must be unipotent (`a_1 = 1`); split the
/// scaling first with [`FormalAuto::split_scaling`].
pub fn rho_exp_coeffs(rho: &FormalAuto, order: usize) -> Result<ExpCoeffs> {
    if !rho.is_unipotent() {
        return crate::invalid("rho_exp_coeffs needs a_1 = 1; factor the scaling through K_G (split_scaling)");
    }
    if order > rho.order() {
        return crate::invalid(format!("order {order} exceeds the truncation order {} of ρ", rho.order()));
    }
    let mut ex = ExpCoeffs { beta: vec![Q::zero(); order.saturating_sub(1)], order };
    for k in 1..order {
        // β_k enters the z^{k+1} coefficient linearly with coefficient 1
        let cur = exp_vector_field_on_z(&ex, k + 1);
        ex.beta[k - 1] = rho.a(k + 1) - cur.a(k + 1);
    }
    Ok(ex)
}

/// `exp(sum_k β_k T^{(k)}) g` with `T^{(k)} = ad L_k`; finite because each
/// `T^{(k)}` raises weight and A is truncated at weight M.
pub fn r_action(model: &Model, beta: &ExpCoeffs, g: &AlgebraElem) -> AlgebraElem {
    let apply = |x: &AlgebraElem| -> AlgebraElem {
        let mut r = AlgebraElem::zero();
        for k in 1..=beta.beta.len() {
            let b = beta.b(k);
            if b.is_zero() || k > model.params.n as usize {
                continue;
            }
            r = r.add(&model.apply_tk(k as u8, x).scale(&b));
        }
        r
    };
    let mut term = g.clone();
    let mut total = g.clone();
    let mut j = 1i64;
    while !term.is_zero() {
        term = apply(&term).scale(&Q::new(1.into(), j.into()));
        total = total.add(&term);
        j += 1;
    }
    total
}

/// Truncated polynomial in `z_1..z_n` (exponent vectors indexed from 0).
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Vec<u16>, Q>,
}

impl Poly {
    fn constant(n: usize, c: Q) -> Self {
        let mut p = Poly::default();
        if !c.is_zero() {
            p.terms.insert(vec![0; n], c);
        }
        p
    }
    fn add_term(&mut self, e: Vec<u16>, c: Q) {
        if c.is_zero() {
            return;
        }
        let z = {
            let x = self.terms.entry(e.clone()).or_insert_with(Q::zero);
            *x += c;
            x.is_zero()
        };
        if z {
            self.terms.remove(&e);
        }
    }
    fn add(&mut self, o: &Poly, s: &Q) {
        for (e, c) in &o.terms {
            self.add_term(e.clone(), c * s);
        }
    }
    fn mul(&self, o: &Poly, order: usize) -> Poly {
        let mut r = Poly::default();
        for (e1, c1) in &self.terms {
            let d1: usize = e1.iter().map(|x| *x as usize).sum();
            for (e2, c2) in &o.terms {
                let d2: usize = e2.iter().map(|x| *x as usize).sum();
                if d1 + d2 > order {
                    continue;
                }
                r.add_term(e1.iter().zip(e2).map(|(a, b)| a + b).collect(), c1 * c2);
            }
        }
        r
    }
    fn pow(&self, n: usize, e: u32, order: usize) -> Poly {
        let mut r = Poly::constant(n, Q::one());
        for _ in 0..e {
            r = r.mul(self, order);
        }
        r
    }
    /// Inverse of a series with nonzero constant term.
    fn inv(&self, n: usize, order: usize) -> Result<Poly> {
        let c0 = self.terms.get(&vec![0; n]).cloned().ok_or_else(|| Error::InvalidArgument("series not invertible".into()))?;
        let ic = c0.recip();
        let mut x = self.clone();
        x.add_term(vec![0; n], -c0);
        let x = {
            let mut y = Poly::default();
            y.add(&x, &-ic.clone());
            y
        };
        // 1/c0 * sum_m x^m with x = -(f - c0)/c0
        let mut total = Poly::constant(n, Q::one());
        let mut pw = Poly::constant(n, Q::one());
        for _ in 0..order {
            pw = pw.mul(&x, order);
            if pw.terms.is_empty() {
                break;
            }
            total.add(&pw, &Q::one());
        }
        let mut r = Poly::default();
        r.add(&total, &ic);
        Ok(r)
    }
    fn univariate(n: usize, var: usize, coeffs: &[Q], order: usize) -> Poly {
        let mut p = Poly::default();
        for (i, c) in coeffs.iter().enumerate().take(order + 1) {
            let mut e = vec![0u16; n];
            e[var] = i as u16;
            p.add_term(e, c.clone());
        }
        p
    }
    /// `sum_k c_k h_k(z_i, z_j)` (complete homogeneous) for `coeffs[k] = c_k`.
    fn divided(n: usize, i: usize, j: usize, coeffs: &[Q], order: usize) -> Poly {
        let mut p = Poly::default();
        for (k, c) in coeffs.iter().enumerate().take(order + 1) {
            if c.is_zero() {
                continue;
            }
            for a in 0..=k {
                let mut e = vec![0u16; n];
                e[i] += a as u16;
                e[j] += (k - a) as u16;
                p.add_term(e, c.clone());
            }
        }
        p
    }
    fn derivative(&self, var: usize) -> Poly {
        let mut r = Poly::default();
        for (e, c) in &self.terms {
            if e[var] > 0 {
                let mut e2 = e.clone();
                e2[var] -= 1;
                r.add_term(e2, c * Q::from_integer((e[var] as i64).into()));
            }
        }
        r
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn max_abs(&self) -> Q {
        self.terms.values().map(crate::scalar::abs_q).max().unwrap_or_else(Q::zero)
    }
    fn to_laurent(&self, n: usize) -> LaurentElem {
        let mut r = LaurentElem::zero();
        for (e, c) in &self.terms {
            let pw: Vec<(u32, i32)> = (0..n).filter(|v| e[*v] > 0).map(|v| (v as u32 + 1, e[v] as i32)).collect();
            r = r.add(&LaurentElem::monomial(c.clone(), &pw));
        }
        r
    }
}

/// A transformed cochain: for each `(tuple, out, pole pattern)` the series that
/// multiplies the dressed pattern `prod (z_i-z_j)^{-o_ij} prod z_j^{-wt b_j}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DensityCochain {
    pub l: usize,
    pub k: u32,
    pub order: usize,
    pub entries: BTreeMap<(Tuple, u16, TreePat), Poly>,
}

impl DensityCochain {
    pub fn from_cochain(f: &PoleCochain, order: usize) -> Self {
        let mut entries = BTreeMap::new();
        for (t, o, v) in f.entries() {
            for (p, c) in &v.terms {
                entries.insert((t.clone(), o, *p), Poly::constant(f.l, c.clone()));
            }
        }
        DensityCochain { l: f.l, k: f.k, order, entries }
    }

    pub fn sub(&self, o: &DensityCochain) -> DensityCochain {
        let mut r = self.clone();
        for (key, p) in &o.entries {
            let e = r.entries.entry(key.clone()).or_default();
            e.add(p, &-Q::one());
        }
        r.entries.retain(|_, p| !p.is_zero());
        r
    }

    pub fn is_zero(&self) -> bool {
        self.entries.values().all(|p| p.is_zero())
    }

    /// The table-level cochain `T(b; z) = sum_pattern pattern * series`.
    pub fn to_cochain(&self, model: &Model) -> Cochain {
        let mut f: Cochain = GCochain::zero(model.params, self.l, self.k);
        for ((t, o, p), s) in &self.entries {
            let v = p.to_laurent().mul(&s.to_laurent(self.l));
            f.add_entry(t, *o, &v, &Q::one());
        }
        f
    }
}

fn check_order(model: &Model, order: usize) -> Result<()> {
    if order == 0 || order > model.params.m as usize {
        return crate::invalid(format!("order {order} outside the window 1..={}", model.params.m));
    }
    Ok(())
}

/// Pullback of the dressed densities by `ρ` in every variable, by direct series
/// substitution.
pub fn pullback(model: &Model, rho: &FormalAuto, f: &DensityCochain) -> Result<DensityCochain> {
    let n = f.l;
    let order = f.order;
    if rho.order() < order + 1 {
        return crate::invalid(format!("ρ is truncated at z^{} but order {order} needs z^{}", rho.order(), order + 1));
    }
    let a: Vec<Q> = (1..=order + 1).map(|i| rho.a(i)).collect();
    // Q_ij = (ρ(z_i) - ρ(z_j)) / (z_i - z_j) = sum_k a_{k+1} h_k(z_i, z_j)
    // dressing and density: (ρ'(z) z / ρ(z))^w
    let r_over_z: Vec<Q> = a.clone();
    let deriv: Vec<Q> = (0..=order).map(|i| Q::from_integer(((i + 1) as i64).into()) * &a[i]).collect();
    let mut out = DensityCochain { l: n, k: f.k, order, entries: BTreeMap::new() };
    // powers of ρ(z_v) for substituting the existing series
    let mut rho_pw: Vec<Vec<Poly>> = Vec::new();
    for v in 0..n {
        let rv = Poly::univariate(n, v, &series(&rho.coeffs, order), order);
        let mut pws = vec![Poly::constant(n, Q::one())];
        for e in 1..=order {
            let next = pws[e - 1].mul(&rv, order);
            pws.push(next);
        }
        rho_pw.push(pws);
    }
    let substitute = |s: &Poly| -> Poly {
        let mut r = Poly::default();
        for (e, c) in &s.terms {
            let mut t = Poly::constant(n, c.clone());
            for (v, k) in e.iter().enumerate() {
                if *k > 0 {
                    t = t.mul(&rho_pw[v][*k as usize], order);
                }
            }
            r.add(&t, &Q::one());
        }
        r
    };
    let mut qinv_cache: BTreeMap<(usize, usize), Poly> = BTreeMap::new();
    let mut dens_cache: BTreeMap<usize, Poly> = BTreeMap::new();
    for ((t, o, p), s) in &f.entries {
        let mut factor = Poly::constant(n, Q::one());
        for (i, j, ord) in p.pairs() {
            let key = (i as usize - 1, j as usize - 1);
            if !qinv_cache.contains_key(&key) {
                let qij = Poly::divided(n, key.0, key.1, &a, order);
                qinv_cache.insert(key, qij.inv(n, order)?);
            }
            factor = factor.mul(&qinv_cache[&key].pow(n, ord as u32, order), order);
        }
        for (v, b) in t.iter().enumerate() {
            let w = model.weight(*b);
            if w == 0 {
                continue;
            }
            if !dens_cache.contains_key(&v) {
                let num = Poly::univariate(n, v, &deriv, order);
                let den = Poly::univariate(n, v, &r_over_z, order);
                dens_cache.insert(v, num.mul(&den.inv(n, order)?, order));
            }
            factor = factor.mul(&dens_cache[&v].pow(n, w, order), order);
        }
        out.entries.insert((t.clone(), *o, *p), substitute(s).mul(&factor, order));
    }
    out.entries.retain(|_, p| !p.is_zero());
    Ok(out)
}

/// `Lie_V` of the dressed densities for `V = sum β_k z^{k+1} ∂_z` in every variable.
fn lie(model: &Model, beta: &ExpCoeffs, f: &DensityCochain) -> DensityCochain {
    let n = f.l;
    let order = f.order;
    // v(z)/z = sum β_k z^k ; divided difference of v is sum β_k h_k
    let vz: Vec<Q> = (0..=order).map(|k| if k == 0 { Q::zero() } else { beta.b(k) }).collect();
    let kv: Vec<Q> = (0..=order).map(|k| Q::from_integer((k as i64).into()) * &vz[k]).collect();
    let v_full: Vec<Q> = (0..=order + 1).map(|i| if i >= 2 { beta.b(i - 1) } else { Q::zero() }).collect();
    let mut out = DensityCochain { l: n, k: f.k, order, entries: BTreeMap::new() };
    for ((t, o, p), s) in &f.entries {
        let mut mult = Poly::default();
        for (i, j, ord) in p.pairs() {
            let d = Poly::divided(n, i as usize - 1, j as usize - 1, &vz, order);
            mult.add(&d, &-Q::from_integer((ord as i64).into()));
        }
        for (v, b) in t.iter().enumerate() {
            let w = model.weight(*b);
            if w > 0 {
                mult.add(&Poly::univariate(n, v, &kv, order), &Q::from_integer((w as i64).into()));
            }
        }
        let mut r = s.mul(&mult, order);
        for v in 0..n {
            let vv = Poly::univariate(n, v, &v_full, order + 1);
            r.add(&vv.mul(&s.derivative(v), order), &Q::one());
        }
        if !r.is_zero() {
            out.entries.insert((t.clone(), *o, *p), r);
        }
    }
    out
}

/// `exp(-Lie_V)`; terminates because `Lie_V` raises the series degree.
fn exp_minus_lie(model: &Model, beta: &ExpCoeffs, f: &DensityCochain) -> DensityCochain {
    let mut total = f.clone();
    let mut term = f.clone();
    let mut j = 1i64;
    loop {
        let mut next = lie(model, beta, &term);
        let s = Q::new((-1).into(), j.into());
        for p in next.entries.values_mut() {
            let mut q = Poly::default();
            q.add(p, &s);
            *p = q;
        }
        if next.is_zero() {
            break;
        }
        for (key, p) in &next.entries {
            total.entries.entry(key.clone()).or_default().add(p, &Q::one());
        }
        term = next;
        j += 1;
    }
    total.entries.retain(|_, p| !p.is_zero());
    total
}

/// The combined action of ρ on a cochain through `order` (see module docs).
pub fn transform_cochain(model: &Model, rho: &FormalAuto, f: &PoleCochain, order: usize) -> Result<DensityCochain> {
    check_order(model, order)?;
    let rho = if rho.order() < order + 1 { rho.truncate(order + 1) } else { rho.clone() };
    let (_, u) = rho.split_scaling();
    let beta = rho_exp_coeffs(&u, order + 1)?;
    transform_with(model, &rho, &beta, f, order)
}

/// Per-variable form of [`transform_cochain`]. Only a common ρ is supported:
/// distinct changes in different variables do not preserve the diagonal poles
/// `(z_i - z_j)^{-o}`, so the result would leave the frame.
pub fn transform_cochain_per_variable(model: &Model, rhos: &[FormalAuto], f: &PoleCochain, order: usize) -> Result<DensityCochain> {
    if rhos.len() != f.l {
        return crate::invalid(format!("{} automorphisms given for {} variables", rhos.len(), f.l));
    }
    match rhos.first() {
        None => Ok(DensityCochain::from_cochain(f, order)),
        Some(r) if rhos.iter().all(|x| x.truncate(order + 1) == r.truncate(order + 1)) => transform_cochain(model, r, f, order),
        Some(_) => Err(Error::Unsupported("different coordinate changes per variable do not preserve the diagonal pole frame".into())),
    }
}

/// [`transform_cochain`] with caller-supplied β for the unipotent part (used to
/// show that a wrong β is detected).
pub fn transform_with(model: &Model, rho: &FormalAuto, beta: &ExpCoeffs, f: &PoleCochain, order: usize) -> Result<DensityCochain> {
    check_order(model, order)?;
    let rho = if rho.order() < order + 1 { rho.truncate(order + 1) } else { rho.clone() };
    let c = rho.coeffs[0].clone();
    let pulled = pullback(model, &rho, &DensityCochain::from_cochain(f, order))?;
    let mut back = exp_minus_lie(model, beta, &pulled);
    for ((t, o, _), s) in back.entries.iter_mut() {
        let e = model.weight(*o) as i64 - t.iter().map(|b| model.weight(*b) as i64).sum::<i64>();
        let mut q = Poly::default();
        q.add(s, &pow_q(&c, e));
        *s = q;
    }
    back.entries.retain(|_, p| !p.is_zero());
    Ok(back)
}

/// Outcome of [`invariance_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvarianceReport {
    pub ok: bool,
    pub residual_entries: usize,
    /// First residual location `(tuple, out, pattern degree)`.
    pub first_residual: Option<(Tuple, u16, u32)>,
    pub residual_norm: Q,
}

pub fn invariance_check(model: &Model, f: &PoleCochain, rho: &FormalAuto, order: usize) -> Result<InvarianceReport> {
    let tr = transform_cochain(model, rho, f, order)?;
    let res = tr.sub(&DensityCochain::from_cochain(f, order));
    let first = res.entries.keys().next().map(|(t, o, p)| (t.clone(), *o, p.degree()));
    Ok(InvarianceReport {
        ok: res.is_zero(),
        residual_entries: res.entries.len(),
        first_residual: first,
        residual_norm: res.entries.values().map(|p| p.max_abs()).max().unwrap_or_else(Q::zero),
    })
}

/// Seeded random unipotent automorphism with small rational coefficients.
pub fn random_unipotent(seed: u64, order: usize) -> FormalAuto {
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = vec![Q::one()];
    for _ in 1..order.max(1) {
        let num = (rng.next_u32() % 9) as i64 - 4;
        let den = (rng.next_u32() % 3) as i64 + 1;
        c.push(Q::new(num.into(), den.into()));
    }
    FormalAuto { coeffs: c }
}
