//! Constrained cochain cells `C^l_k` over the pole-pattern frame.
//!
//! The frame at a basis tuple is the span of pure pole patterns
//! `prod (z_i - z_j)^{-o_ij}` with `o_ij <= cap_ij`, where the cap combines the
//! window `E`, POLE (`β`) and COMPOSE(k) (`β - k`). Values are stored in tree
//! coordinates. SHUFFLE only couples permutations of one tuple with the same
//! output, so cells are assembled block by block over
//! `(multiset of arguments, output, pole degree)`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::RefCell;
use num_traits::{One, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::algebra::{Model, ModelParams};
use crate::cochain::{beta, internal_weight, shuffles, GCochain, PoleCochain, Tuple};
use crate::linalg::{self, SpRowQ};
use crate::pattern::{all_patterns, reduce, PoleForm, TreePat, MAX_SLOTS};
use crate::scalar::{primitive, Q};
use crate::{Error, Result};

/// Which axiom predicates a cell imposes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AxiomSet {
    pub kg: bool,
    pub tg: bool,
    pub shuffle: bool,
    pub pole: bool,
    pub compose: bool,
}

impl AxiomSet {
    pub const NONE: AxiomSet = AxiomSet { kg: false, tg: false, shuffle: false, pole: false, compose: false };

    /// `{KG, SHUFFLE, POLE, COMPOSE(k)}`.
    pub fn cohomology_default() -> Self {
        AxiomSet { kg: true, tg: false, shuffle: true, pole: true, compose: true }
    }

    /// Parses a comma-separated list such as `KG,SHUFFLE,POLE,COMPOSE`.
    pub fn parse(s: &str) -> Result<Self> {
        let mut a = AxiomSet::NONE;
        for raw in s.split(',') {
            let t = raw.trim().to_ascii_uppercase();
            match t.as_str() {
                "" => {}
                "KG" => a.kg = true,
                "TG" => a.tg = true,
                "SHUFFLE" => a.shuffle = true,
                "POLE" => a.pole = true,
                "COMPOSE" | "COMPOSE(K)" => a.compose = true,
                _ => return Err(Error::InvalidArgument(format!("unknown axiom '{}'", raw.trim()))),
            }
        }
        Ok(a)
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.kg {
            v.push("KG");
        }
        if self.tg {
            v.push("TG");
        }
        if self.shuffle {
            v.push("SHUFFLE");
        }
        if self.pole {
            v.push("POLE");
        }
        if self.compose {
            v.push("COMPOSE");
        }
        v
    }

    pub fn to_list(&self) -> String {
        self.names().join(",")
    }
}

/// Truncation knobs shared by all cells of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Truncation {
    /// Window `E`: bound on every pole exponent.
    pub e: u32,
    pub axioms: AxiomSet,
}

/// RREF of the frame span at one tuple, in tree coordinates.
#[derive(Clone, Debug, Default)]
pub struct FrameSpan {
    /// Pivot tree pattern -> reduced row.
    pub rows: BTreeMap<TreePat, PoleForm>,
    /// Number of spanning patterns before reduction.
    pub patterns: usize,
}

impl FrameSpan {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// `v` minus its projection along the pivots; zero iff `v` lies in the span.
    pub fn residual(&self, v: &PoleForm) -> PoleForm {
        let mut r = v.clone();
        for (p, c) in &v.terms {
            if let Some(row) = self.rows.get(p) {
                r.add_scaled(row, &-c.clone());
            }
        }
        r
    }

    /// Coordinates of `v` (assumed in the span) along the pivot rows.
    pub fn coords(&self, v: &PoleForm) -> Vec<Q> {
        self.rows.keys().map(|p| v.terms.get(p).cloned().unwrap_or_else(Q::zero)).collect()
    }
}

fn span_of(forms: &[PoleForm]) -> BTreeMap<TreePat, PoleForm> {
    let mut cols: BTreeMap<TreePat, u32> = BTreeMap::new();
    for f in forms {
        for t in f.terms.keys() {
            cols.insert(*t, 0);
        }
    }
    let keys: Vec<TreePat> = cols.keys().copied().collect();
    for (i, k) in keys.iter().enumerate() {
        cols.insert(*k, i as u32);
    }
    let rows: Vec<SpRowQ> = forms.iter().map(|f| f.terms.iter().map(|(t, c)| (cols[t], c.clone())).collect()).collect();
    linalg::rref(&rows)
        .into_iter()
        .map(|(p, row)| {
            let mut f = PoleForm::zero();
            for (c, x) in row {
                f.add_term(keys[c as usize], x);
            }
            (keys[p as usize], f)
        })
        .collect()
}

/// Frame spans per (arity, caps, pole degree), cached.
pub struct Frames<'m> {
    pub model: &'m Model,
    pub trunc: Truncation,
    cache: RefCell<BTreeMap<(usize, Vec<u8>, u32), Rc<FrameSpan>>>,
}

impl<'m> Frames<'m> {
    pub fn new(model: &'m Model, trunc: Truncation) -> Self {
        Frames { model, trunc, cache: RefCell::new(BTreeMap::new()) }
    }

    /// Cap on `o_ij` for the slot pair `(i, j)` of `tuple` in a cell of index `k`.
    pub fn cap(&self, tuple: &[u16], i: usize, j: usize, k: u32) -> u8 {
        let mut c = self.trunc.e;
        let a = self.trunc.axioms;
        if a.pole || a.compose {
            let b = beta(self.model, tuple[i - 1], tuple[j - 1]);
            c = c.min(b.saturating_sub(if a.compose { k } else { 0 }));
        }
        c.min(u8::MAX as u32) as u8
    }

    fn caps(&self, tuple: &[u16], k: u32) -> Vec<u8> {
        let l = tuple.len();
        let mut v = Vec::new();
        for i in 1..=l {
            for j in i + 1..=l {
                v.push(self.cap(tuple, i, j, k));
            }
        }
        v
    }

    /// Frame span at `tuple` with pole degree `s`.
    pub fn span(&self, tuple: &[u16], k: u32, s: u32) -> Rc<FrameSpan> {
        let l = tuple.len();
        let caps = self.caps(tuple, k);
        let key = (l, caps.clone(), s);
        if let Some(x) = self.cache.borrow().get(&key) {
            return x.clone();
        }
        let pair_index = |i: u8, j: u8| -> usize {
            let (i, j) = (i as usize, j as usize);
            // position of (i, j) in the row-major pair list
            (i - 1) * (2 * l - i) / 2 + (j - i - 1)
        };
        let pats = if l == 0 {
            if s == 0 {
                vec![crate::pattern::Pattern::new()]
            } else {
                Vec::new()
            }
        } else {
            all_patterns(l, s, &|i, j| caps[pair_index(i, j)])
        };
        let forms: Vec<PoleForm> = pats.iter().map(reduce).collect();
        let span = Rc::new(FrameSpan { rows: span_of(&forms), patterns: pats.len() });
        self.cache.borrow_mut().insert(key, span.clone());
        span
    }

    /// Pole degrees allowed at `(tuple, out)`.
    pub fn degrees(&self, tuple: &[u16], out: u16, k: u32) -> Vec<u32> {
        let l = tuple.len();
        if l == 0 {
            return vec![0];
        }
        if self.trunc.axioms.kg {
            let w = internal_weight(self.model, tuple, out);
            return if w >= 0 { vec![w as u32] } else { Vec::new() };
        }
        let total: u32 = self.caps(tuple, k).iter().map(|c| *c as u32).sum();
        (0..=total).collect()
    }
}

/// The constrained subspace `C^l_k` with a deterministic basis.
#[derive(Clone, Debug)]
pub struct ComplexCell {
    pub params: ModelParams,
    pub l: usize,
    pub k: u32,
    pub trunc: Truncation,
    pub basis: Vec<PoleCochain>,
    /// Internal weight `wt(out) - sum wt(in)` of each basis cochain (D preserves it).
    pub grading: Vec<i64>,
    /// Dimension of the ambient frame (sum of per-tuple frame spans).
    pub frame_dim: usize,
}

impl ComplexCell {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `sum_i c_i basis_i`.
    pub fn combine(&self, coeffs: &[Q]) -> PoleCochain {
        let mut f = GCochain::zero(self.params, self.l, self.k);
        for (b, c) in self.basis.iter().zip(coeffs) {
            if !c.is_zero() {
                f.add_scaled(b, c);
            }
        }
        f
    }
}

/// Combinations with repetition of `0..dim` of size `l`, in lexicographic order.
pub fn multisets(dim: u16, l: usize) -> Vec<Tuple> {
    let mut out = Vec::new();
    fn rec(start: u16, dim: u16, l: usize, cur: &mut Tuple, out: &mut Vec<Tuple>) {
        if cur.len() == l {
            out.push(cur.clone());
            return;
        }
        for b in start..dim {
            cur.push(b);
            rec(b, dim, l, cur, out);
            cur.pop();
        }
    }
    rec(0, dim, l, &mut Vec::new(), &mut out);
    out
}

/// Distinct permutations of a sorted tuple, in lexicographic order.
pub fn permutations(sorted: &[u16]) -> Vec<Tuple> {
    let mut cur = sorted.to_vec();
    let mut out = vec![cur.clone()];
    loop {
        let n = cur.len();
        if n < 2 {
            return out;
        }
        let Some(i) = (0..n - 1).rev().find(|&i| cur[i] < cur[i + 1]) else { return out };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
        out.push(cur.clone());
    }
}

fn primitive_q(v: &[Q]) -> Vec<Q> {
    primitive(v).into_iter().map(Q::from_integer).collect()
}

/// Basis of one `(multiset, out, s)` block.
fn block_basis(frames: &Frames, ms: &[u16], out: u16, k: u32, s: u32) -> (Vec<PoleCochain>, usize) {
    let model = frames.model;
    let l = ms.len();
    let perms = permutations(ms);
    let spans: Vec<Rc<FrameSpan>> = perms.iter().map(|t| frames.span(t, k, s)).collect();
    let frame_dim: usize = spans.iter().map(|s| s.dim()).sum();
    if frame_dim == 0 {
        return (Vec::new(), 0);
    }
    let mut offsets = Vec::with_capacity(perms.len());
    let mut n = 0u32;
    for sp in &spans {
        offsets.push(n);
        n += sp.dim() as u32;
    }
    let build = |x: &[Q]| -> PoleCochain {
        let mut f = GCochain::zero(model.params, l, k);
        for (pi, t) in perms.iter().enumerate() {
            let mut v = PoleForm::zero();
            for (j, row) in spans[pi].rows.values().enumerate() {
                let c = &x[offsets[pi] as usize + j];
                if !c.is_zero() {
                    v.add_scaled(row, c);
                }
            }
            f.add_entry(t, out, &v, &Q::one());
        }
        f
    };
    if !(frames.trunc.axioms.shuffle && l >= 2) {
        let mut basis = Vec::with_capacity(n as usize);
        for u in 0..n as usize {
            let mut x = vec![Q::zero(); n as usize];
            x[u] = Q::one();
            basis.push(build(&x));
        }
        return (basis, frame_dim);
    }
    // shuffle constraints: key (p, g, tree pattern) -> row over unknowns
    let pidx: BTreeMap<&Tuple, usize> = perms.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let mut cons: BTreeMap<(usize, Tuple, TreePat), BTreeMap<u32, Q>> = BTreeMap::new();
    for p in 1..l {
        for (neg, inv) in shuffles(l, p) {
            for t in &perms {
                let pi = pidx[t];
                let mut g = vec![0u16; l];
                for pos in 0..l {
                    g[inv[pos]] = t[pos];
                }
                for (j, row) in spans[pi].rows.values().enumerate() {
                    let u = offsets[pi] + j as u32;
                    for (tp, c) in &row.terms {
                        let e = cons.entry((p, g.clone(), *tp)).or_default().entry(u).or_insert_with(Q::zero);
                        if neg {
                            *e -= c;
                        } else {
                            *e += c;
                        }
                    }
                }
            }
        }
    }
    let rows: Vec<SpRowQ> =
        cons.into_values().map(|r| r.into_iter().filter(|(_, c)| !c.is_zero()).collect::<SpRowQ>()).filter(|r| !r.is_empty()).collect();
    let ns = linalg::nullspace(&rows, n);
    let basis = ns
        .into_iter()
        .map(|v| {
            let mut x = vec![Q::zero(); n as usize];
            for (c, q) in v {
                x[c as usize] = q;
            }
            build(&primitive_q(&x))
        })
        .collect();
    (basis, frame_dim)
}

/// Builds `C^l_k` for the frames' truncation. `l = 0` gives A itself.
pub fn build_cell_basis(frames: &Frames, l: usize, k: u32) -> Result<ComplexCell> {
    let model = frames.model;
    if l > MAX_SLOTS {
        return crate::invalid(format!("l = {l} exceeds the supported {MAX_SLOTS} slots"));
    }
    let dim = model.dim() as u16;
    let mut basis = Vec::new();
    let mut grading = Vec::new();
    let mut frame_dim = 0;
    for ms in multisets(dim, l) {
        for out in 0..dim {
            let w = internal_weight(model, &ms, out);
            for s in frames.degrees(&ms, out, k) {
                let (b, fd) = block_basis(frames, &ms, out, k, s);
                frame_dim += fd;
                grading.extend(core::iter::repeat(w).take(b.len()));
                basis.extend(b);
            }
        }
    }
    let mut cell = ComplexCell { params: model.params, l, k, trunc: frames.trunc, basis, grading, frame_dim };
    if frames.trunc.axioms.tg && l >= 1 {
        impose_tg(model, &mut cell);
    }
    Ok(cell)
}

/// Restricts a cell to the kernel of the TG identity, grading block by grading block.
fn impose_tg(model: &Model, cell: &mut ComplexCell) {
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, w) in cell.grading.iter().enumerate() {
        groups.entry(*w).or_default().push(i);
    }
    let mut basis = Vec::new();
    let mut grading = Vec::new();
    for (w, idx) in groups {
        let mut keys = Keys::default();
        let mut cols: Vec<SpRowQ> = Vec::new();
        for &i in &idx {
            let defect = tg_defect(model, &cell.basis[i]);
            cols.push(keys.flatten(&defect, 0));
        }
        for v in linalg::nullspace(&transpose(&cols), idx.len() as u32) {
            let mut x = vec![Q::zero(); idx.len()];
            for (c, q) in v {
                x[c as usize] = q;
            }
            let x = primitive_q(&x);
            let mut f = GCochain::zero(cell.params, cell.l, cell.k);
            for (j, c) in x.iter().enumerate() {
                if !c.is_zero() {
                    f.add_scaled(&cell.basis[idx[j]], c);
                }
            }
            basis.push(f);
            grading.push(w);
        }
    }
    cell.basis = basis;
    cell.grading = grading;
}

/// `sum_i d_i F - sum_i F(.., T_G g_i, ..)` as a cochain (zero iff TG holds).
pub fn tg_defect(model: &Model, f: &PoleCochain) -> PoleCochain {
    use crate::cochain::Value;
    let dim = model.dim() as u16;
    let mut d = GCochain::zero(f.params, f.l, f.k);
    for (t, o, v) in f.entries() {
        for i in 1..=f.l as u32 {
            d.add_entry(t, o, &Value::differentiate(v, i), &Q::one());
        }
    }
    let mut tg: Vec<Vec<(u16, Q)>> = vec![Vec::new(); dim as usize];
    for j in 0..dim {
        for (k, c) in model.apply_tg(&crate::AlgebraElem::basis(j)).terms {
            tg[k as usize].push((j, c));
        }
    }
    for (t, o, v) in f.entries() {
        for i in 0..f.l {
            for (j, c) in &tg[t[i] as usize] {
                let mut nt = t.clone();
                nt[i] = *j;
                d.add_entry(&nt, o, v, &-c.clone());
            }
        }
    }
    d
}

/// Interns `(tag, tuple, out, tree pattern)` coordinates as column indices.
#[derive(Default)]
pub struct Keys {
    map: BTreeMap<(u8, Tuple, u16, TreePat), u32>,
}

impl Keys {
    pub fn id(&mut self, tag: u8, t: &Tuple, o: u16, p: TreePat) -> u32 {
        let n = self.map.len() as u32;
        *self.map.entry((tag, t.clone(), o, p)).or_insert(n)
    }
    pub fn len(&self) -> usize {
        self.map.len()
    }
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
    /// Flattens a cochain into sparse coordinates under `tag`.
    pub fn flatten(&mut self, f: &PoleCochain, tag: u8) -> SpRowQ {
        let mut r: SpRowQ = Vec::new();
        for (t, o, v) in f.entries() {
            for (p, c) in &v.terms {
                r.push((self.id(tag, t, o, *p), c.clone()));
            }
        }
        r.sort_by_key(|x| x.0);
        r
    }
}

/// Column vectors to row vectors.
pub fn transpose(cols: &[SpRowQ]) -> Vec<SpRowQ> {
    let mut rows: BTreeMap<u32, SpRowQ> = BTreeMap::new();
    for (j, c) in cols.iter().enumerate() {
        for (r, v) in c {
            rows.entry(*r).or_default().push((j as u32, v.clone()));
        }
    }
    rows.into_values().collect()
}

/// Deterministic pseudo-random combination of the basis with integer
/// coefficients in `[-range, range]`.
pub fn random_cochain(cell: &ComplexCell, seed: u64, range: u32) -> Result<PoleCochain> {
    if cell.dim() == 0 {
        return Err(Error::InvalidArgument(format!("cell ({},{}) is zero-dimensional", cell.l, cell.k)));
    }
    let coeffs = random_coeffs(cell.dim(), seed, range);
    Ok(cell.combine(&coeffs))
}

/// `n` seeded integers in `[-range, range]`, not all zero.
pub fn random_coeffs(n: usize, seed: u64, range: u32) -> Vec<Q> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 2 * range as u64 + 1;
    let mut v: Vec<Q> = (0..n).map(|_| Q::from_integer(((rng.next_u64() % span) as i64 - range as i64).into())).collect();
    if v.iter().all(|x| x.is_zero()) && n > 0 {
        v[(rng.next_u64() % n as u64) as usize] = Q::one();
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cochain::{check_compose, check_kg, check_pole, check_shuffle_all};

    fn small() -> Model {
        Model::new(ModelParams { n: 1, m: 2, b0: 2, lmax: 2 }).unwrap()
    }

    #[test]
    fn l0_is_the_algebra() {
        let m = Model::new(ModelParams::DEFAULT).unwrap();
        let fr = Frames::new(&m, Truncation { e: 6, axioms: AxiomSet::cohomology_default() });
        assert_eq!(build_cell_basis(&fr, 0, 2).unwrap().dim(), m.dim());
    }

    #[test]
    fn unconstrained_window_zero() {
        let m = Model::new(ModelParams { n: 2, m: 3, b0: 2, lmax: 2 }).unwrap();
        let fr = Frames::new(&m, Truncation { e: 0, axioms: AxiomSet::NONE });
        let d = m.dim();
        assert_eq!(build_cell_basis(&fr, 1, 0).unwrap().dim(), d * d);
    }

    #[test]
    fn permutations_and_multisets() {
        assert_eq!(permutations(&[1, 1, 2]).len(), 3);
        assert_eq!(permutations(&[1, 2, 3]).len(), 6);
        assert_eq!(multisets(3, 2).len(), 6);
    }

    #[test]
    fn basis_cochains_satisfy_axioms() {
        let m = Model::new(ModelParams { n: 2, m: 4, b0: 1, lmax: 2 }).unwrap();
        let fr = Frames::new(&m, Truncation { e: 3, axioms: AxiomSet::cohomology_default() });
        for l in 1..=3 {
            for k in 0..=2 {
                let c = build_cell_basis(&fr, l, k).unwrap();
                for b in &c.basis {
                    assert!(check_kg(&m, b).ok);
                    assert!(check_shuffle_all(&m, b).ok);
                    assert!(check_pole(&m, b).ok);
                    assert!(check_compose(&m, b, k).ok);
                }
                if k > 0 {
                    let prev = build_cell_basis(&fr, l, k - 1).unwrap();
                    assert!(c.dim() <= prev.dim());
                }
            }
        }
    }

    #[test]
    fn random_cochain_is_deterministic() {
        let m = small();
        let fr = Frames::new(&m, Truncation { e: 2, axioms: AxiomSet::cohomology_default() });
        let c = build_cell_basis(&fr, 2, 0).unwrap();
        assert!(c.dim() > 0);
        assert_eq!(random_cochain(&c, 5, 3).unwrap(), random_cochain(&c, 5, 3).unwrap());
        let f = random_cochain(&c, 5, 3).unwrap();
        assert!(check_kg(&m, &f).ok && check_shuffle_all(&m, &f).ok);
        let empty = ComplexCell { basis: Vec::new(), grading: Vec::new(), ..c };
        assert!(random_cochain(&empty, 1, 3).is_err());
    }

    #[test]
    fn axiom_parsing() {
        let a = AxiomSet::parse("KG, shuffle,POLE,COMPOSE").unwrap();
        assert_eq!(a, AxiomSet::cohomology_default());
        assert!(AxiomSet::parse("KG,FOO").is_err());
        assert_eq!(a.to_list(), "KG,SHUFFLE,POLE,COMPOSE");
    }
}
