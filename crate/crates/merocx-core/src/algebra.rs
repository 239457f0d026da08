//! Truncated enveloping algebra of the positive Witt slice `L_1..L_N`.
//!
//! Relations `[L_i, L_j] = (j - i) L_{i+j}` (zero for `i + j > N`), PBW monomials of
//! weight `<= M` and length `<= Lmax`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Zero};

use crate::laurent::LaurentElem;
use crate::scalar::Q;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelParams {
    pub n: u32,
    pub m: u32,
    pub b0: u32,
    pub lmax: u32,
}

impl ModelParams {
    pub const DEFAULT: ModelParams = ModelParams { n: 3, m: 6, b0: 2, lmax: 3 };

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return crate::invalid("model.N must be positive");
        }
        if self.lmax == 0 {
            return crate::invalid("model.Lmax must be positive");
        }
        if self.n > self.m.max(1) && self.m > 0 {
            return crate::invalid("model.N must not exceed model.M");
        }
        if self.n > 15 || self.m > 24 || self.lmax > 8 {
            return crate::invalid("model too large for desk scale (N<=15, M<=24, Lmax<=8)");
        }
        Ok(())
    }
}

/// A PBW monomial: non-decreasing generator indices (empty = unit).
pub type Mono = Vec<u8>;

pub fn mono_weight(m: &[u8]) -> u32 {
    m.iter().map(|x| *x as u32).sum()
}

pub fn mono_name(m: &[u8]) -> String {
    use core::fmt::Write;
    if m.is_empty() {
        return "1".into();
    }
    let mut s = String::new();
    for g in m {
        let _ = write!(s, "L{g}");
    }
    s
}

/// Basis tables and structure constants for fixed parameters.
#[derive(Clone, Debug)]
pub struct Model {
    pub params: ModelParams,
    basis: Vec<Mono>,
    index: BTreeMap<Mono, u16>,
    weights: Vec<u32>,
    mult: Vec<Vec<Vec<(u16, Q)>>>,
    preimage: Vec<Vec<(u16, u16, Q)>>,
}

/// Element of A as sparse coefficients over basis indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AlgebraElem {
    pub terms: BTreeMap<u16, Q>,
}

impl AlgebraElem {
    pub fn zero() -> Self {
        Self::default()
    }
    pub fn basis(i: u16) -> Self {
        let mut t = BTreeMap::new();
        t.insert(i, Q::one());
        AlgebraElem { terms: t }
    }
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    pub fn add_term(&mut self, i: u16, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(i).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&i);
        }
    }
    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (i, c) in &o.terms {
            r.add_term(*i, c.clone());
        }
        r
    }
    pub fn scale(&self, c: &Q) -> Self {
        let mut r = AlgebraElem::zero();
        for (i, x) in &self.terms {
            r.add_term(*i, x * c);
        }
        r
    }
    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(&-Q::one()))
    }
}

/// ν_G-form: homogeneous pieces `(weight m, P_m(g))` attached to a variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NuForm {
    pub var: u32,
    pub pieces: Vec<(u32, AlgebraElem)>,
}

impl NuForm {
    /// The Laurent expansion `sum_m P_m(g) z^{-m}` as (element, z-factor, dz-weight) pieces.
    pub fn expansion(&self) -> Vec<(AlgebraElem, LaurentElem, u32)> {
        self.pieces
            .iter()
            .map(|(m, g)| (g.clone(), LaurentElem::monomial(Q::one(), &[(self.var, -(*m as i32))]), *m))
            .collect()
    }
}

impl Model {
    pub fn new(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let basis = enumerate_basis(&params);
        let index: BTreeMap<Mono, u16> = basis.iter().enumerate().map(|(i, m)| (m.clone(), i as u16)).collect();
        let weights = basis.iter().map(|m| mono_weight(m)).collect();
        let mut model = Model { params, basis, index, weights, mult: Vec::new(), preimage: Vec::new() };
        let d = model.basis.len();
        let mut memo = BTreeMap::new();
        let mut mult = vec![vec![Vec::new(); d]; d];
        for i in 0..d {
            for j in 0..d {
                let mut w = model.basis[i].clone();
                w.extend_from_slice(&model.basis[j]);
                let r = model.normal_order(&w, &mut memo);
                mult[i][j] = r.terms.into_iter().collect();
            }
        }
        model.mult = mult;
        model.rebuild_preimage();
        Ok(model)
    }

    fn rebuild_preimage(&mut self) {
        let d = self.basis.len();
        let mut pre = vec![Vec::new(); d];
        for i in 0..d {
            for j in 0..d {
                for (k, c) in &self.mult[i][j] {
                    pre[*k as usize].push((i as u16, j as u16, c.clone()));
                }
            }
        }
        self.preimage = pre;
    }

    /// A deliberately corrupted copy (mutation tests): adds `delta` to the
    /// coefficient of basis `k` in `b_i * b_j`.
    pub fn corrupted(&self, i: u16, j: u16, k: u16, delta: Q) -> Self {
        let mut m = self.clone();
        let mut e = AlgebraElem { terms: m.mult[i as usize][j as usize].iter().cloned().collect() };
        e.add_term(k, delta);
        m.mult[i as usize][j as usize] = e.terms.into_iter().collect();
        m.rebuild_preimage();
        m
    }

    fn normal_order(&self, w: &[u8], memo: &mut BTreeMap<Mono, AlgebraElem>) -> AlgebraElem {
        if mono_weight(w) > self.params.m {
            return AlgebraElem::zero();
        }
        if let Some(r) = memo.get(w) {
            return r.clone();
        }
        let r = match (0..w.len().saturating_sub(1)).find(|&k| w[k] > w[k + 1]) {
            None => match self.index.get(w) {
                Some(i) => AlgebraElem::basis(*i),
                None => AlgebraElem::zero(),
            },
            Some(k) => {
                let (a, b) = (w[k], w[k + 1]);
                let mut sw = w.to_vec();
                sw.swap(k, k + 1);
                let mut r = self.normal_order(&sw, memo);
                if (a + b) as u32 <= self.params.n {
                    let mut br = w[..k].to_vec();
                    br.push(a + b);
                    br.extend_from_slice(&w[k + 2..]);
                    let c = Q::from_integer((b as i64 - a as i64).into());
                    r = r.add(&self.normal_order(&br, memo).scale(&c));
                }
                r
            }
        };
        memo.insert(w.to_vec(), r.clone());
        r
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }
    pub fn basis(&self) -> &[Mono] {
        &self.basis
    }
    pub fn mono(&self, i: u16) -> &Mono {
        &self.basis[i as usize]
    }
    pub fn index_of(&self, m: &[u8]) -> Option<u16> {
        self.index.get(m).copied()
    }
    pub fn weight(&self, i: u16) -> u32 {
        self.weights[i as usize]
    }
    pub fn unit(&self) -> u16 {
        0
    }
    pub fn generator(&self, g: u8) -> Option<u16> {
        self.index_of(&[g])
    }

    /// Structure constants of `b_i * b_j`.
    pub fn mult_basis(&self, i: u16, j: u16) -> &[(u16, Q)] {
        &self.mult[i as usize][j as usize]
    }

    /// All `(i, j, c)` with `c = coefficient of b_k in b_i * b_j`, `c != 0`.
    pub fn preimage(&self, k: u16) -> &[(u16, u16, Q)] {
        &self.preimage[k as usize]
    }

    pub fn multiply(&self, a: &AlgebraElem, b: &AlgebraElem) -> AlgebraElem {
        let mut r = AlgebraElem::zero();
        for (i, x) in &a.terms {
            for (j, y) in &b.terms {
                let xy = x * y;
                for (k, c) in self.mult_basis(*i, *j) {
                    r.add_term(*k, c * &xy);
                }
            }
        }
        r
    }

    pub fn project(&self, a: &AlgebraElem, m: u32) -> AlgebraElem {
        AlgebraElem { terms: a.terms.iter().filter(|(i, _)| self.weight(**i) == m).map(|(i, c)| (*i, c.clone())).collect() }
    }

    pub fn gen_elem(&self, g: u8) -> AlgebraElem {
        self.generator(g).map(AlgebraElem::basis).unwrap_or_default()
    }

    /// `ad L_k`: the weight-`k` raising derivation `L_i -> (i - k) L_{i+k}`.
    pub fn apply_tk(&self, k: u8, a: &AlgebraElem) -> AlgebraElem {
        let l = self.gen_elem(k);
        self.multiply(&l, a).sub(&self.multiply(a, &l))
    }

    /// T_G = ad L_1, so `T_G(L_i) = (i - 1) L_{i+1}`.
    pub fn apply_tg(&self, a: &AlgebraElem) -> AlgebraElem {
        self.apply_tk(1, a)
    }

    /// Grading operator K_G.
    pub fn apply_kg(&self, a: &AlgebraElem) -> AlgebraElem {
        AlgebraElem {
            terms: a
                .terms
                .iter()
                .filter(|(i, _)| self.weight(**i) > 0)
                .map(|(i, c)| (*i, c * Q::from_integer(self.weight(*i).into())))
                .collect(),
        }
    }

    /// PBW-orthonormal pairing.
    pub fn pairing(&self, a: &AlgebraElem, b: &AlgebraElem) -> Q {
        let mut s = Q::zero();
        for (i, x) in &a.terms {
            if let Some(y) = b.terms.get(i) {
                s += x * y;
            }
        }
        s
    }

    pub fn nu_form(&self, g: &AlgebraElem, var: u32) -> NuForm {
        let mut pieces: BTreeMap<u32, AlgebraElem> = BTreeMap::new();
        for (i, c) in &g.terms {
            pieces.entry(self.weight(*i)).or_default().add_term(*i, c.clone());
        }
        NuForm { var, pieces: pieces.into_iter().collect() }
    }

    /// First failing triple of basis indices, if associativity is broken.
    pub fn associativity_witness(&self) -> Option<(u16, u16, u16)> {
        let d = self.dim() as u16;
        for i in 0..d {
            for j in 0..d {
                let ij = AlgebraElem { terms: self.mult_basis(i, j).iter().cloned().collect() };
                for k in 0..d {
                    let jk = AlgebraElem { terms: self.mult_basis(j, k).iter().cloned().collect() };
                    let l = self.multiply(&ij, &AlgebraElem::basis(k));
                    let r = self.multiply(&AlgebraElem::basis(i), &jk);
                    if l != r {
                        return Some((i, j, k));
                    }
                }
            }
        }
        None
    }

    /// Basis of the centre of A (dimension computed by exact elimination).
    pub fn center_dim(&self) -> usize {
        let d = self.dim();
        // rows: for each generator-basis pair (b, k): coefficient of b_k in [b, a]
        let mut rows: Vec<Vec<Q>> = Vec::new();
        for b in 0..d as u16 {
            let mut block = vec![vec![Q::zero(); d]; d];
            for a in 0..d as u16 {
                let c = self
                    .multiply(&AlgebraElem::basis(b), &AlgebraElem::basis(a))
                    .sub(&self.multiply(&AlgebraElem::basis(a), &AlgebraElem::basis(b)));
                for (k, x) in c.terms {
                    block[k as usize][a as usize] = x;
                }
            }
            rows.extend(block);
        }
        d - crate::linalg::dense_rank_q(&rows)
    }

    /// Max over output basis `k` of `sum_{i,j} |c^k_{ij}|`.
    pub fn structure_norm(&self) -> Q {
        let d = self.dim();
        let mut col = vec![Q::zero(); d];
        for i in 0..d {
            for j in 0..d {
                for (k, c) in &self.mult[i][j] {
                    col[*k as usize] += num_traits::Signed::abs(c);
                }
            }
        }
        col.into_iter().max().unwrap_or_else(Q::zero)
    }
}

/// Graded-then-lexicographic PBW monomials (weight, then length, then indices).
pub fn enumerate_basis(p: &ModelParams) -> Vec<Mono> {
    let mut out: Vec<Mono> = Vec::new();
    fn rec(p: &ModelParams, cur: &mut Mono, start: u8, out: &mut Vec<Mono>) {
        out.push(cur.clone());
        if cur.len() as u32 >= p.lmax {
            return;
        }
        for g in start..=p.n as u8 {
            if mono_weight(cur) + g as u32 <= p.m {
                cur.push(g);
                rec(p, cur, g, out);
                cur.pop();
            }
        }
    }
    rec(p, &mut Vec::new(), 1, &mut out);
    out.sort_by(|a, b| (mono_weight(a), a.len(), a).cmp(&(mono_weight(b), b.len(), b)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    fn names(p: ModelParams) -> Vec<String> {
        enumerate_basis(&p).iter().map(|m| mono_name(m)).collect()
    }

    #[test]
    fn basis_examples() {
        assert_eq!(names(ModelParams { n: 1, m: 2, b0: 2, lmax: 2 }), ["1", "L1", "L1L1"]);
        assert_eq!(names(ModelParams { n: 2, m: 2, b0: 2, lmax: 2 }), ["1", "L1", "L2", "L1L1"]);
        assert_eq!(names(ModelParams { n: 1, m: 0, b0: 2, lmax: 2 }), ["1"]);
    }

    #[test]
    fn default_model_dimensions() {
        let m = Model::new(ModelParams::DEFAULT).unwrap();
        assert_eq!(m.dim(), 16);
        let mut by_w = [0usize; 7];
        for i in 0..m.dim() as u16 {
            by_w[m.weight(i) as usize] += 1;
        }
        assert_eq!(by_w, [1, 1, 2, 3, 3, 3, 3]);
    }

    #[test]
    fn witt_normal_ordering() {
        let m = Model::new(ModelParams::DEFAULT).unwrap();
        let l1 = m.gen_elem(1);
        let l2 = m.gen_elem(2);
        let l3 = m.gen_elem(3);
        let l1l2 = AlgebraElem::basis(m.index_of(&[1, 2]).unwrap());
        assert_eq!(m.multiply(&l2, &l1), l1l2.sub(&l3));
        assert_eq!(m.multiply(&l1, &AlgebraElem::basis(0)), l1);
        let l1l1 = AlgebraElem::basis(m.index_of(&[1, 1]).unwrap());
        assert_eq!(m.multiply(&l1, &l1), l1l1);
    }

    #[test]
    fn exact_associativity_default() {
        let m = Model::new(ModelParams::DEFAULT).unwrap();
        assert_eq!(m.associativity_witness(), None);
        let m = Model::new(ModelParams { n: 3, m: 4, b0: 2, lmax: 3 }).unwrap();
        assert_eq!(m.associativity_witness(), None);
    }

    #[test]
    fn grading_compatibility_and_tg_derivation() {
        let m = Model::new(ModelParams::DEFAULT).unwrap();
        let d = m.dim() as u16;
        for i in 0..d {
            for j in 0..d {
                let (a, b) = (AlgebraElem::basis(i), AlgebraElem::basis(j));
                let ab = m.multiply(&a, &b);
                for w in 0..=6 {
                    let mut rhs = AlgebraElem::zero();
                    for p in 0..=w {
                        rhs = rhs.add(&m.multiply(&m.project(&a, p), &m.project(&b, w - p)));
                    }
                    assert_eq!(m.project(&ab, w), rhs);
                }
                let lhs = m.apply_tg(&ab);
                let rhs = m.multiply(&m.apply_tg(&a), &b).add(&m.multiply(&a, &m.apply_tg(&b)));
                assert_eq!(lhs, rhs);
                for (k, _) in &m.apply_tg(&a).terms {
                    assert_eq!(m.weight(*k), m.weight(i) + 1);
                }
            }
        }
    }

    #[test]
    fn translation_examples() {
        let m = Model::new(ModelParams::DEFAULT).unwrap();
        assert!(m.apply_tg(&m.gen_elem(1)).is_zero());
        assert_eq!(m.apply_tg(&m.gen_elem(2)), m.gen_elem(3));
        assert!(m.apply_tg(&AlgebraElem::basis(0)).is_zero());
    }

    #[test]
    fn pairing_and_projection() {
        let m = Model::new(ModelParams::DEFAULT).unwrap();
        let (l1, l2) = (m.gen_elem(1), m.gen_elem(2));
        assert_eq!(m.pairing(&l1, &l1), q(1));
        assert_eq!(m.pairing(&l1, &l2), q(0));
        assert_eq!(m.pairing(&l1.scale(&q(2)).add(&l2), &l2), q(1));
        assert_eq!(m.project(&l1.add(&l2), 2), l2);
        assert!(m.project(&l1, 7).is_zero());
        let l1l2 = AlgebraElem::basis(m.index_of(&[1, 2]).unwrap());
        assert_eq!(m.project(&l1l2, 3), l1l2);
    }

    #[test]
    fn nu_forms() {
        let m = Model::new(ModelParams::DEFAULT).unwrap();
        let nf = m.nu_form(&m.gen_elem(2), 1);
        let ex = nf.expansion();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].0, m.gen_elem(2));
        assert_eq!(ex[0].1, LaurentElem::monomial(Q::one(), &[(1, -2)]));
        assert_eq!(ex[0].2, 2);
        assert!(m.nu_form(&AlgebraElem::zero(), 1).pieces.is_empty());
        let nf = m.nu_form(&m.gen_elem(1).add(&m.gen_elem(3)), 1);
        let ws: Vec<u32> = nf.expansion().iter().map(|p| p.2).collect();
        assert_eq!(ws, [1, 3]);
    }

    #[test]
    fn centre_of_default_model() {
        let m = Model::new(ModelParams::DEFAULT).unwrap();
        // brute force: count basis-diagonal central elements is not enough, so
        // compare against an independent commutator test on random combos
        let c = m.center_dim();
        assert!(c >= 2); // 1 and L3 are central
    }
}
