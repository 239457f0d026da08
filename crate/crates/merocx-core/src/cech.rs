//! Čech–de Rham double complex of a codimension-one foliation atlas.
//!
//! Sections are rational intervals, holonomies are polynomial embeddings.
//! `C^{k,l}` assigns to every chain `U_0 -h_1-> ... -h_k-> U_k` a polynomial
//! `l`-form on `U_0` (`l` in {0, 1}); a 1-form `g(t) dt` is stored as `g`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};

use crate::algebra::Model;
use crate::cochain::Cochain;
use crate::linalg::SpRowZ;
use crate::scalar::{fmt_q, Q};
use crate::{Error, Result};

/// Dense univariate polynomial with rational coefficients, lowest degree first.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct UPoly(Vec<Q>);

impl UPoly {
    pub fn new(mut c: Vec<Q>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        UPoly(c)
    }
    pub fn zero() -> Self {
        UPoly(Vec::new())
    }
    pub fn constant(c: Q) -> Self {
        Self::new(vec![c])
    }
    /// The coordinate `t`.
    pub fn t() -> Self {
        Self::new(vec![Q::zero(), Q::one()])
    }
    pub fn monomial(d: usize) -> Self {
        let mut c = vec![Q::zero(); d + 1];
        c[d] = Q::one();
        UPoly(c)
    }
    pub fn coeffs(&self) -> &[Q] {
        &self.0
    }
    pub fn coeff(&self, i: usize) -> Q {
        self.0.get(i).cloned().unwrap_or_else(Q::zero)
    }
    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
    /// Degree, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }
    pub fn add(&self, o: &Self) -> Self {
        let n = self.0.len().max(o.0.len());
        Self::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }
    pub fn add_scaled(&mut self, o: &Self, c: &Q) {
        *self = self.add(&o.scale(c));
    }
    pub fn scale(&self, c: &Q) -> Self {
        Self::new(self.0.iter().map(|x| x * c).collect())
    }
    pub fn mul(&self, o: &Self) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut c = vec![Q::zero(); self.0.len() + o.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in o.0.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(c)
    }
    pub fn derivative(&self) -> Self {
        Self::new(self.0.iter().enumerate().skip(1).map(|(i, a)| a * Q::from_integer((i as i64).into())).collect())
    }
    pub fn eval(&self, x: &Q) -> Q {
        self.0.iter().rev().fold(Q::zero(), |acc, a| acc * x + a)
    }
    /// `self ∘ h`.
    pub fn compose(&self, h: &Self) -> Self {
        self.0.iter().rev().fold(Self::zero(), |acc, a| acc.mul(h).add(&Self::constant(a.clone())))
    }
    pub fn display(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, a) in self.0.iter().enumerate().filter(|p| !p.1.is_zero()) {
            let neg = a.is_negative();
            if s.is_empty() {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let m = a.abs();
            match (i, m.is_one()) {
                (0, _) => s.push_str(&fmt_q(&m)),
                (_, true) => {}
                _ => s.push_str(&format!("{}*", fmt_q(&m))),
            }
            match i {
                0 => {}
                1 => s.push('t'),
                _ => s.push_str(&format!("t^{i}")),
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Section {
    pub id: String,
    pub a: Q,
    pub b: Q,
}

/// Holonomy embedding `poly: from -> to`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Holonomy {
    pub from: usize,
    pub to: usize,
    pub poly: UPoly,
}

/// Finite transversal basis with holonomy embeddings. Arrows `0..S` are the
/// identities of the sections; user holonomies follow in input order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoliationAtlas {
    pub sections: Vec<Section>,
    pub arrows: Vec<Holonomy>,
}

/// Chain `U_start -h_1-> ... -h_k-> U_k` given by arrow indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chain {
    pub start: usize,
    pub arrows: Vec<usize>,
}

const BERNSTEIN_DEPTH: u32 = 24;

/// Bernstein coefficients of `p` on `[a, b]` (degree `n` = len - 1).
fn bernstein(p: &UPoly, a: &Q, b: &Q, n: usize) -> Vec<Q> {
    // p(a + (b-a) s) in the power basis of s, then the power-to-Bernstein change
    let affine = UPoly::new(vec![a.clone(), b - a]);
    let q = p.compose(&affine);
    (0..=n)
        .map(|j| {
            (0..=j).fold(Q::zero(), |acc, i| {
                acc + q.coeff(i) * crate::scalar::binom(j as i64, i as u32) / crate::scalar::binom(n as i64, i as u32)
            })
        })
        .collect()
}

/// Certifies `p > 0` on the closed interval by Bernstein subdivision.
pub fn positive_on(p: &UPoly, a: &Q, b: &Q) -> bool {
    let n = p.degree().unwrap_or(0);
    let mut stack = vec![(a.clone(), b.clone(), 0u32)];
    while let Some((lo, hi, depth)) = stack.pop() {
        let c = bernstein(p, &lo, &hi, n);
        if !c[0].is_positive() || !c[n].is_positive() {
            return false; // endpoint value
        }
        if c.iter().all(|x| x.is_positive()) {
            continue;
        }
        if depth >= BERNSTEIN_DEPTH {
            return false;
        }
        let mid = (&lo + &hi) / Q::from_integer(2.into());
        stack.push((lo, mid.clone(), depth + 1));
        stack.push((mid, hi, depth + 1));
    }
    true
}

impl FoliationAtlas {
    /// Validates sections and holonomies and adds identity arrows. Each
    /// holonomy must have `h' > 0` on its source interval and map it into the
    /// target interval.
    pub fn new(sections: Vec<Section>, holonomies: Vec<Holonomy>) -> Result<Self> {
        if sections.is_empty() {
            return crate::invalid("atlas has no sections");
        }
        for (i, s) in sections.iter().enumerate() {
            if s.a >= s.b {
                return crate::invalid(format!("section {} has an empty interval", s.id));
            }
            if sections[..i].iter().any(|o| o.id == s.id) {
                return crate::invalid(format!("duplicate section id {}", s.id));
            }
        }
        let mut arrows: Vec<Holonomy> =
            (0..sections.len()).map(|i| Holonomy { from: i, to: i, poly: UPoly::t() }).collect();
        for h in holonomies {
            let (Some(src), Some(dst)) = (sections.get(h.from), sections.get(h.to)) else {
                return crate::invalid("holonomy refers to an unknown section");
            };
            let name = format!("{} -> {} ({})", src.id, dst.id, h.poly.display());
            if !positive_on(&h.poly.derivative(), &src.a, &src.b) {
                return crate::invalid(format!("holonomy {name} is not orientation preserving on its section"));
            }
            let (ia, ib) = (h.poly.eval(&src.a), h.poly.eval(&src.b));
            if ia < dst.a || ib > dst.b {
                return crate::invalid(format!("holonomy {name} leaves the target interval"));
            }
            if arrows.contains(&h) {
                if h.from == h.to && h.poly == UPoly::t() {
                    continue;
                }
                return crate::invalid(format!("duplicate holonomy {name}"));
            }
            arrows.push(h);
        }
        Ok(FoliationAtlas { sections, arrows })
    }

    pub fn section_index(&self, id: &str) -> Option<usize> {
        self.sections.iter().position(|s| s.id == id)
    }

    pub fn is_identity(&self, a: usize) -> bool {
        a < self.sections.len()
    }

    pub fn num_holonomies(&self) -> usize {
        self.arrows.len() - self.sections.len()
    }

    /// Arrow equal to `h_b ∘ h_a` (first `a`, then `b`), if present.
    pub fn composite(&self, a: usize, b: usize) -> Option<usize> {
        let (ha, hb) = (&self.arrows[a], &self.arrows[b]);
        if ha.to != hb.from {
            return None;
        }
        let p = hb.poly.compose(&ha.poly);
        self.arrows.iter().position(|h| h.from == ha.from && h.to == hb.to && h.poly == p)
    }

    /// All chains of length `k`, in lexicographic order.
    pub fn chains(&self, k: usize) -> Vec<Chain> {
        let mut out: Vec<Chain> =
            (0..self.sections.len()).map(|s| Chain { start: s, arrows: Vec::new() }).collect();
        for _ in 0..k {
            let mut next = Vec::new();
            for c in &out {
                let end = self.chain_end(c);
                for (i, h) in self.arrows.iter().enumerate() {
                    if h.from == end {
                        let mut a = c.arrows.clone();
                        a.push(i);
                        next.push(Chain { start: c.start, arrows: a });
                    }
                }
            }
            out = next;
        }
        out.sort();
        out
    }

    pub fn chain_end(&self, c: &Chain) -> usize {
        c.arrows.last().map_or(c.start, |&a| self.arrows[a].to)
    }

    pub fn chain_name(&self, c: &Chain) -> String {
        let mut s = self.sections[c.start].id.clone();
        for &a in &c.arrows {
            let h = &self.arrows[a];
            s.push_str(&format!(" -[{}]-> {}", h.poly.display(), self.sections[h.to].id));
        }
        s
    }

    fn check_chain(&self, c: &Chain) -> Result<()> {
        let mut at = c.start;
        if at >= self.sections.len() {
            return crate::invalid("chain starts at an unknown section");
        }
        for &a in &c.arrows {
            match self.arrows.get(a) {
                Some(h) if h.from == at => at = h.to,
                _ => return crate::invalid("chain arrows are not composable in the atlas"),
            }
        }
        Ok(())
    }

    /// Adds missing composites until the arrow set is closed under
    /// composition; fails once more than `max_arrows` arrows would be needed.
    pub fn close_under_composition(&self, max_arrows: usize) -> Result<Self> {
        let mut hol: Vec<Holonomy> = self.arrows[self.sections.len()..].to_vec();
        loop {
            let atlas = FoliationAtlas::new(self.sections.clone(), hol.clone())?;
            let n = atlas.arrows.len();
            let mut added = false;
            for a in 0..n {
                for b in 0..n {
                    if atlas.arrows[a].to != atlas.arrows[b].from || atlas.composite(a, b).is_some() {
                        continue;
                    }
                    let p = atlas.arrows[b].poly.compose(&atlas.arrows[a].poly);
                    let h = Holonomy { from: atlas.arrows[a].from, to: atlas.arrows[b].to, poly: p };
                    if !hol.contains(&h) {
                        hol.push(h);
                        added = true;
                    }
                }
            }
            if !added {
                return Ok(atlas);
            }
            if hol.len() + self.sections.len() > max_arrows {
                return crate::invalid(format!("composition closure exceeds {max_arrows} arrows"));
            }
        }
    }

    /// True when every holonomy is affine (needed for a finite degree cap).
    pub fn is_affine(&self) -> bool {
        self.arrows.iter().all(|h| h.poly.degree().unwrap_or(0) <= 1)
    }

    /// Point of the target section reached from `t` in `U_start` along `c`.
    pub fn transport(&self, c: &Chain, t: &Q) -> Q {
        c.arrows.iter().fold(t.clone(), |x, &a| self.arrows[a].poly.eval(&x))
    }

    /// Basepoints: the midpoint of each section.
    pub fn basepoints(&self) -> Vec<Q> {
        self.sections.iter().map(|s| (&s.a + &s.b) / Q::from_integer(2.into())).collect()
    }
}

/// Element of `C^{k,l}`: chain to the coefficient polynomial of the form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CechForm {
    pub k: usize,
    pub l: usize,
    pub comps: BTreeMap<Chain, UPoly>,
}

impl CechForm {
    pub fn zero(k: usize, l: usize) -> Self {
        CechForm { k, l, comps: BTreeMap::new() }
    }
    pub fn is_zero(&self) -> bool {
        self.comps.is_empty()
    }
    /// Builds a form after checking every chain against the atlas.
    pub fn from_components(atlas: &FoliationAtlas, k: usize, l: usize, comps: Vec<(Chain, UPoly)>) -> Result<Self> {
        if l > 1 {
            return crate::invalid("form degree exceeds the section dimension");
        }
        let mut f = Self::zero(k, l);
        for (c, p) in comps {
            if c.arrows.len() != k {
                return crate::invalid(format!("chain {} has length {}, expected {k}", atlas.chain_name(&c), c.arrows.len()));
            }
            atlas.check_chain(&c)?;
            f.add(&c, &p, &Q::one());
        }
        Ok(f)
    }
    pub fn get(&self, c: &Chain) -> UPoly {
        self.comps.get(c).cloned().unwrap_or_default()
    }
    pub fn add(&mut self, c: &Chain, p: &UPoly, s: &Q) {
        let e = self.comps.entry(c.clone()).or_default();
        e.add_scaled(p, s);
        if e.is_zero() {
            self.comps.remove(c);
        }
    }
    pub fn add_form(&mut self, o: &Self, s: &Q) {
        for (c, p) in &o.comps {
            self.add(c, p, s);
        }
    }
    pub fn scale(&self, s: &Q) -> Self {
        let mut f = Self::zero(self.k, self.l);
        f.add_form(self, s);
        f
    }
    pub fn sub(&self, o: &Self) -> Self {
        let mut f = self.clone();
        f.add_form(o, &-Q::one());
        f
    }
}

/// Pullback of an `l`-form along `h`.
fn pullback(l: usize, p: &UPoly, h: &UPoly) -> UPoly {
    let q = p.compose(h);
    if l == 1 {
        q.mul(&h.derivative())
    } else {
        q
    }
}

fn sign(e: usize) -> Q {
    if e % 2 == 0 {
        Q::one()
    } else {
        -Q::one()
    }
}

/// `(-1)^k d`. A 1-form maps to the zero form of degree 2.
pub fn vertical_d(w: &CechForm) -> CechForm {
    let mut out = CechForm::zero(w.k, w.l + 1);
    if w.l == 0 {
        let s = sign(w.k);
        for (c, p) in &w.comps {
            out.add(c, &p.derivative(), &s);
        }
    }
    out
}

/// `δ = Σ_{i=0}^{k+1} (-1)^i δ_i`: pullback along `h_1`, compositions
/// `h_{i+1} h_i`, and dropping the last arrow.
pub fn horizontal_delta(atlas: &FoliationAtlas, w: &CechForm) -> Result<CechForm> {
    let k = w.k;
    let mut out = CechForm::zero(k + 1, w.l);
    if w.l > 1 {
        return Ok(out);
    }
    for c in atlas.chains(k + 1) {
        let mut acc = UPoly::zero();
        let h1 = &atlas.arrows[c.arrows[0]];
        let tail = Chain { start: h1.to, arrows: c.arrows[1..].to_vec() };
        acc.add_scaled(&pullback(w.l, &w.get(&tail), &h1.poly), &Q::one());
        for i in 1..=k {
            let Some(comp) = atlas.composite(c.arrows[i - 1], c.arrows[i]) else {
                return Err(Error::InvalidArgument(format!(
                    "missing composite of arrows {} and {} in chain {}",
                    i,
                    i + 1,
                    atlas.chain_name(&c)
                )));
            };
            let mut a = c.arrows[..i - 1].to_vec();
            a.push(comp);
            a.extend_from_slice(&c.arrows[i + 1..]);
            acc.add_scaled(&w.get(&Chain { start: c.start, arrows: a }), &sign(i));
        }
        let head = Chain { start: c.start, arrows: c.arrows[..k].to_vec() };
        acc.add_scaled(&w.get(&head), &sign(k + 1));
        if !acc.is_zero() {
            out.comps.insert(c, acc);
        }
    }
    Ok(out)
}

/// Total differential `δ + (-1)^k d` on a form of bidegree `(k, l)`; returns
/// the `(k+1, l)` and `(k, l+1)` parts.
pub fn total_d(atlas: &FoliationAtlas, w: &CechForm) -> Result<(CechForm, CechForm)> {
    Ok((horizontal_delta(atlas, w)?, vertical_d(w)))
}

/// Sign convention of the product.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CupSign {
    /// `(-1)^{k k'}`, as displayed for the double complex.
    Bidegree,
    /// `(-1)^{l k'}`: moves the form degree of the first factor past the
    /// Čech degree of the second; the total differential is a graded
    /// derivation for this sign.
    Koszul,
}

/// `(ω η)(h_1..h_{k+k'}) = (-1)^{k k'} ω(h_1..h_k) · (h_k ⋯ h_1)^* η(h_{k+1}..)`.
pub fn cup_product(atlas: &FoliationAtlas, w: &CechForm, e: &CechForm) -> Result<CechForm> {
    cup_product_with(atlas, w, e, CupSign::Bidegree)
}

pub fn cup_product_with(atlas: &FoliationAtlas, w: &CechForm, e: &CechForm, conv: CupSign) -> Result<CechForm> {
    if w.l + e.l > 1 {
        return crate::invalid("form degrees exceed the section dimension");
    }
    let n = w.k + e.k;
    let s = sign(match conv {
        CupSign::Bidegree => w.k * e.k,
        CupSign::Koszul => w.l * e.k,
    });
    let mut out = CechForm::zero(n, w.l + e.l);
    for c in atlas.chains(n) {
        let head = Chain { start: c.start, arrows: c.arrows[..w.k].to_vec() };
        let a = w.get(&head);
        if a.is_zero() {
            continue;
        }
        let tail = Chain { start: atlas.chain_end(&head), arrows: c.arrows[w.k..].to_vec() };
        let mut b = e.get(&tail);
        for &h in head.arrows.iter().rev() {
            b = pullback(e.l, &b, &atlas.arrows[h].poly);
        }
        let p = a.mul(&b);
        if !p.is_zero() {
            out.add(&c, &p, &s);
        }
    }
    Ok(out)
}

/// Checks that the product is defined on chains of the requested length.
pub fn cup_product_checked(atlas: &FoliationAtlas, w: &CechForm, e: &CechForm, chain_len: usize) -> Result<CechForm> {
    if chain_len < w.k + e.k {
        return crate::invalid(format!("chain too short: length {chain_len} < {}", w.k + e.k));
    }
    cup_product(atlas, w, e)
}

/// Coordinates of the degree-capped space `C^{k,l}`: chain-major, then
/// monomial degree (`0..=dmax` for functions, `0..dmax` for 1-forms).
pub struct CapBasis {
    pub chains: Vec<Chain>,
    pub width: usize,
}

impl CapBasis {
    pub fn new(atlas: &FoliationAtlas, k: usize, l: usize, dmax: usize) -> Self {
        CapBasis { chains: atlas.chains(k), width: if l == 0 { dmax + 1 } else { dmax } }
    }
    pub fn dim(&self) -> usize {
        self.chains.len() * self.width
    }
    pub fn element(&self, k: usize, l: usize, idx: usize) -> CechForm {
        let mut f = CechForm::zero(k, l);
        f.add(&self.chains[idx / self.width], &UPoly::monomial(idx % self.width), &Q::one());
        f
    }
    /// Coordinates of a form, `None` if it leaves the capped space.
    pub fn coords(&self, f: &CechForm) -> Option<Vec<(u32, Q)>> {
        let mut v = Vec::new();
        for (c, p) in &f.comps {
            let pos = self.chains.binary_search(c).ok()?;
            if p.coeffs().len() > self.width {
                return None;
            }
            for (d, x) in p.coeffs().iter().enumerate() {
                if !x.is_zero() {
                    v.push(((pos * self.width + d) as u32, x.clone()));
                }
            }
        }
        v.sort_by_key(|e| e.0);
        Some(v)
    }
}

/// Total-degree summands `C^{n,0} ⊕ C^{n-1,1}`.
fn total_blocks(n: usize) -> Vec<(usize, usize)> {
    let mut b = vec![(n, 0)];
    if n >= 1 {
        b.push((n - 1, 1));
    }
    b
}

/// Matrix of the total differential from total degree `n` to `n + 1`, as
/// rows (one per source basis vector) over the target coordinates.
pub fn total_matrix(atlas: &FoliationAtlas, n: usize, dmax: usize) -> Result<(Vec<Vec<(u32, Q)>>, usize)> {
    if !atlas.is_affine() {
        return Err(Error::Unsupported("degree-capped cohomology needs affine holonomies".into()));
    }
    if dmax == 0 {
        return crate::invalid("dmax must be at least 1");
    }
    let tgt: Vec<((usize, usize), CapBasis)> =
        total_blocks(n + 1).into_iter().map(|(k, l)| ((k, l), CapBasis::new(atlas, k, l, dmax))).collect();
    let offsets: Vec<usize> = tgt.iter().scan(0, |acc, (_, b)| {
        let o = *acc;
        *acc += b.dim();
        Some(o)
    }).collect();
    let tdim = offsets.last().copied().unwrap_or(0) + tgt.last().map_or(0, |t| t.1.dim());
    let mut rows = Vec::new();
    for (k, l) in total_blocks(n) {
        let src = CapBasis::new(atlas, k, l, dmax);
        for idx in 0..src.dim() {
            let e = src.element(k, l, idx);
            let (dh, dv) = total_d(atlas, &e)?;
            let mut row = Vec::new();
            for part in [dh, dv] {
                if part.is_zero() {
                    continue;
                }
                let Some(bi) = tgt.iter().position(|(kl, _)| *kl == (part.k, part.l)) else { continue };
                let c = tgt[bi].1.coords(&part).ok_or_else(|| Error::CrossCheck("differential left the capped space".into()))?;
                row.extend(c.into_iter().map(|(j, x)| (j + offsets[bi] as u32, x)));
            }
            row.sort_by_key(|e| e.0);
            rows.push(row);
        }
    }
    Ok((rows, tdim))
}

/// Betti numbers of the degree-capped total complex.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BettiTable {
    pub dmax: usize,
    /// `dims[n]`: dimension of total degree `n`.
    pub dims: Vec<usize>,
    /// `ranks[n]`: rank of the differential out of degree `n`.
    pub ranks: Vec<usize>,
    pub betti: Vec<usize>,
}

/// Total-complex Betti numbers for total degrees `0..=kmax`, by exact rank
/// (cross-checked against the modular rank).
pub fn cdr_cohomology(atlas: &FoliationAtlas, kmax: usize, dmax: usize) -> Result<BettiTable> {
    let mut dims = Vec::new();
    let mut ranks = Vec::new();
    for n in 0..=kmax {
        let (rows, _) = total_matrix(atlas, n, dmax)?;
        dims.push(rows.len());
        let z: Vec<SpRowZ> = rows.iter().map(crate::linalg::to_integer_row).collect();
        ranks.push(crate::linalg::checked_rank(&z)?);
    }
    let betti = (0..=kmax).map(|n| dims[n] - ranks[n] - if n > 0 { ranks[n - 1] } else { 0 }).collect();
    Ok(BettiTable { dmax, dims, ranks, betti })
}

/// Shipped atlases: a single section; two disjoint sections; the same two
/// sections joined by an affine holonomy.
pub fn shipped_atlases() -> Vec<(&'static str, FoliationAtlas)> {
    let sec = |id: &str, a: i64, b: i64| Section { id: id.into(), a: Q::from_integer(a.into()), b: Q::from_integer(b.into()) };
    let half = Q::new(1.into(), 2.into());
    let single = FoliationAtlas::new(vec![sec("U", 0, 1)], vec![]).expect("valid atlas");
    let disjoint = FoliationAtlas::new(vec![sec("U", 0, 1), sec("V", 0, 2)], vec![]).expect("valid atlas");
    let joined = FoliationAtlas::new(
        vec![sec("U", 0, 1), sec("V", 0, 2)],
        vec![Holonomy { from: 0, to: 1, poly: UPoly::new(vec![half.clone(), Q::one()]) }],
    )
    .expect("valid atlas");
    vec![("single", single), ("disjoint", disjoint), ("joined", joined)]
}

/// Refines an atlas by a copy of section `s` joined to it by the identity
/// holonomy, adding the composites through the copy.
pub fn refine_with_copy(atlas: &FoliationAtlas, s: usize) -> Result<FoliationAtlas> {
    let mut sections = atlas.sections.clone();
    let mut copy = atlas.sections.get(s).cloned().ok_or_else(|| Error::InvalidArgument("unknown section".into()))?;
    copy.id = format!("{}'", copy.id);
    sections.push(copy);
    let mut hol: Vec<Holonomy> = atlas.arrows[atlas.sections.len()..].to_vec();
    hol.push(Holonomy { from: sections.len() - 1, to: s, poly: UPoly::t() });
    FoliationAtlas::new(sections, hol)?.close_under_composition(4 * atlas.arrows.len() + 4)
}

/// Skeleton of the association `h_i ~ g_i`, `ω(h) ~ F(g)`: each holonomy
/// carries a label in A (identities carry the unit). For every chain of
/// length `l` the value `F(g_{h_1}, .., g_{h_l}; z)` is evaluated at
/// `z_j = p_j + j`, with `p_j` the basepoint of the `j`-th section on the
/// chain, giving one constant `(l, 0)`-form per output basis element.
/// This is a structural translation, not a chain map.
pub fn dictionary_map(model: &Model, f: &Cochain, atlas: &FoliationAtlas, labels: &[u16]) -> Result<Vec<(u16, CechForm)>> {
    if labels.len() != atlas.num_holonomies() {
        return crate::invalid(format!("{} labels for {} holonomies", labels.len(), atlas.num_holonomies()));
    }
    if let Some(&b) = labels.iter().find(|&&b| b as usize >= model.dim()) {
        return crate::invalid(format!("label {b} is not a basis index"));
    }
    if f.params != model.params {
        return crate::invalid("cochain does not belong to the model");
    }
    let label = |a: usize| if atlas.is_identity(a) { model.unit() } else { labels[a - atlas.sections.len()] };
    let bp = atlas.basepoints();
    let mut out: BTreeMap<u16, CechForm> = BTreeMap::new();
    for c in atlas.chains(f.l) {
        let tuple: Vec<u16> = c.arrows.iter().map(|&a| label(a)).collect();
        let Some(row) = f.table.get(&tuple) else { continue };
        let mut point = BTreeMap::new();
        for (j, &a) in c.arrows.iter().enumerate() {
            point.insert(j as u32 + 1, &bp[atlas.arrows[a].to] + Q::from_integer(((j + 1) as i64).into()));
        }
        for (o, v) in row {
            let x = v.evaluate(&point).ok_or_else(|| {
                Error::InvalidArgument(format!("value on chain {} has a pole at the basepoints", atlas.chain_name(&c)))
            })?;
            out.entry(*o).or_insert_with(|| CechForm::zero(f.l, 0)).add(&c, &UPoly::constant(x), &Q::one());
        }
    }
    Ok(out.into_iter().filter(|(_, w)| !w.is_zero()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qi(n: i64) -> Q {
        Q::from_integer(n.into())
    }

    #[test]
    fn polynomial_ops() {
        let p = UPoly::new(vec![qi(1), qi(0), qi(1)]);
        assert_eq!(p.compose(&UPoly::new(vec![qi(1), qi(1)])), UPoly::new(vec![qi(2), qi(2), qi(1)]));
        assert_eq!(p.derivative(), UPoly::new(vec![qi(0), qi(2)]));
        assert_eq!(p.display(), "1 + t^2");
    }

    #[test]
    fn orientation_certificate() {
        // (t - 1/2)^2 + 1/100 > 0 on [0,1] needs subdivision
        let p = UPoly::new(vec![Q::new(26.into(), 100.into()), qi(-1), qi(1)]);
        assert!(positive_on(&p, &qi(0), &qi(1)));
        let r = UPoly::new(vec![Q::new(1.into(), 4.into()), qi(-1), qi(1)]);
        assert!(!positive_on(&r, &qi(0), &qi(1)));
        assert!(!positive_on(&UPoly::new(vec![qi(-1), qi(1)]), &qi(0), &qi(2)));
    }

    #[test]
    fn atlas_validation() {
        let s = |id: &str| Section { id: id.into(), a: qi(0), b: qi(1) };
        let rev = Holonomy { from: 0, to: 1, poly: UPoly::new(vec![qi(1), qi(-1)]) };
        assert!(FoliationAtlas::new(vec![s("U"), s("V")], vec![rev]).is_err());
        let out = Holonomy { from: 0, to: 1, poly: UPoly::new(vec![qi(1), qi(1)]) };
        assert!(FoliationAtlas::new(vec![s("U"), s("V")], vec![out]).is_err());
        assert_eq!(shipped_atlases()[2].1.chains(1).len(), 3);
    }
}
