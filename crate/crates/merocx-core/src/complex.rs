//! The coboundary on cells: D-stable subcomplex, D∘D = 0 verification and
//! cohomology ranks with cross-checked exact elimination.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_traits::Zero;

use crate::algebra::Model;
use crate::cell::{build_cell_basis, tg_defect, transpose, ComplexCell, Frames, Keys, Truncation};
use crate::cochain::{coboundary, internal_weight, shuffle_sum, GCochain, PoleCochain};
use crate::linalg::{self, SpRowQ, SpRowZ};
use crate::pattern::PoleForm;
use crate::scalar::{primitive, Q};
use crate::{Error, Result};

/// Cells above this dimension skip the dense oracle.
pub const DENSE_ORACLE_MAX: usize = 200;

/// Matrix of `D^l_k` in the bases of the source and target stable cells.
#[derive(Clone, Debug, PartialEq)]
pub struct CoboundaryMatrix {
    pub l: usize,
    pub k: u32,
    pub rows: usize,
    pub cols: usize,
    /// `(row, col, value)`, sorted by column then row.
    pub entries: Vec<(u32, u32, Q)>,
}

/// Ranks from every elimination path that was run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankReport {
    pub exact: usize,
    pub modular: usize,
    pub dense: Option<usize>,
}

/// One `(l, k)` entry of the cohomology table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CohomologyEntry {
    pub l: usize,
    pub k: u32,
    pub cell_dim: usize,
    pub stable_dim: usize,
    pub rank_out: RankReport,
    pub rank_in: RankReport,
    pub kernel: usize,
    pub betti: usize,
}

/// Outcome of a D∘D = 0 check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DdReport {
    pub l: usize,
    pub k: u32,
    pub ok: bool,
    pub checked: usize,
    pub witness: Option<String>,
}

/// Owns the frames and caches cells and stable cells.
pub struct Engine<'m> {
    pub model: &'m Model,
    pub frames: Frames<'m>,
    cells: BTreeMap<(usize, u32), Rc<ComplexCell>>,
    stable: BTreeMap<(usize, u32), Rc<ComplexCell>>,
}

impl<'m> Engine<'m> {
    pub fn new(model: &'m Model, trunc: Truncation) -> Self {
        Engine { model, frames: Frames::new(model, trunc), cells: BTreeMap::new(), stable: BTreeMap::new() }
    }

    pub fn trunc(&self) -> Truncation {
        self.frames.trunc
    }

    pub fn cell(&mut self, l: usize, k: u32) -> Result<Rc<ComplexCell>> {
        if let Some(c) = self.cells.get(&(l, k)) {
            return Ok(c.clone());
        }
        let c = Rc::new(build_cell_basis(&self.frames, l, k)?);
        self.cells.insert((l, k), c.clone());
        Ok(c)
    }

    /// Linear functionals whose joint vanishing says `DF` lies in `C^{l+1}_{k-1}`.
    pub fn membership_defect(&self, f: &PoleCochain, keys: &mut Keys) -> SpRowQ {
        let model = self.model;
        let ax = self.frames.trunc.axioms;
        let d = coboundary(model, f);
        let kt = f.k.saturating_sub(1);
        let mut out: BTreeMap<u32, Q> = BTreeMap::new();
        let mut push = |keys: &mut Keys, tag: u8, t: &Vec<u16>, o: u16, v: &PoleForm| {
            for (p, c) in &v.terms {
                let id = keys.id(tag, t, o, *p);
                let e = out.entry(id).or_insert_with(Q::zero);
                *e += c;
            }
        };
        for (t, o, v) in d.entries() {
            let mut by_deg: BTreeMap<u32, PoleForm> = BTreeMap::new();
            for (p, c) in &v.terms {
                by_deg.entry(p.degree()).or_default().add_term(*p, c.clone());
            }
            let allowed = self.frames.degrees(t, o, kt);
            for (s, part) in by_deg {
                if ax.kg && internal_weight(model, t, o) != s as i64 || !allowed.contains(&s) {
                    push(keys, 0, t, o, &part);
                } else {
                    let res = self.frames.span(t, kt, s).residual(&part);
                    push(keys, 0, t, o, &res);
                }
            }
        }
        if ax.shuffle {
            for p in 1..d.l {
                let s = shuffle_sum(&d, p).expect("p in range");
                for (t, o, v) in s.entries() {
                    push(keys, p as u8, t, o, v);
                }
            }
        }
        if ax.tg && d.l >= 1 {
            let s = tg_defect(model, &d);
            for (t, o, v) in s.entries() {
                push(keys, 200, t, o, v);
            }
        }
        out.into_iter().filter(|(_, c)| !c.is_zero()).collect()
    }

    /// Largest subspace of `C^l_k` mapped by D into `C^{l+1}_{k-1}`. For `k = 0`
    /// the column terminates (D := 0) and the cell is returned unchanged.
    /// Because D∘D = 0 on tables, one pass is already the fixpoint.
    pub fn stable(&mut self, l: usize, k: u32) -> Result<Rc<ComplexCell>> {
        if let Some(c) = self.stable.get(&(l, k)) {
            return Ok(c.clone());
        }
        let cell = self.cell(l, k)?;
        let st = if k == 0 { (*cell).clone() } else { self.refine(&cell) };
        let st = Rc::new(st);
        self.stable.insert((l, k), st.clone());
        Ok(st)
    }

    /// One refinement pass on an arbitrary cell.
    pub fn refine(&self, cell: &ComplexCell) -> ComplexCell {
        let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, w) in cell.grading.iter().enumerate() {
            groups.entry(*w).or_default().push(i);
        }
        let mut basis = Vec::new();
        let mut grading = Vec::new();
        for (w, idx) in groups {
            let mut keys = Keys::default();
            let cols: Vec<SpRowQ> = idx.iter().map(|&i| self.membership_defect(&cell.basis[i], &mut keys)).collect();
            if cols.iter().all(|c| c.is_empty()) {
                for &i in &idx {
                    basis.push(cell.basis[i].clone());
                    grading.push(w);
                }
                continue;
            }
            for v in linalg::nullspace(&transpose(&cols), idx.len() as u32) {
                let mut x = vec![Q::zero(); idx.len()];
                for (c, q) in v {
                    x[c as usize] = q;
                }
                let x: Vec<Q> = primitive(&x).into_iter().map(Q::from_integer).collect();
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
        ComplexCell { basis, grading, ..cell.clone() }
    }

    /// Idempotence of the refinement: every stable basis cochain already maps into the target cell.
    pub fn stable_is_fixpoint(&mut self, l: usize, k: u32) -> Result<bool> {
        let st = self.stable(l, k)?;
        if k == 0 {
            return Ok(true);
        }
        let mut keys = Keys::default();
        Ok(st.basis.iter().all(|b| self.membership_defect(b, &mut keys).is_empty()))
    }

    /// Stable cells for every `(l, k)` in the ranges, in `(l, k)` order.
    pub fn stable_subcomplex(&mut self, l_max: usize, k_max: u32) -> Result<Vec<Rc<ComplexCell>>> {
        let mut out = Vec::new();
        for l in 0..=l_max {
            for k in 0..=k_max {
                out.push(self.stable(l, k)?);
            }
        }
        Ok(out)
    }

    /// Applies D∘D to every basis cochain of the (stable or raw) cell.
    pub fn dd_zero_check(&mut self, l: usize, k: u32, on_stable: bool) -> Result<DdReport> {
        let cell = if on_stable { self.stable(l, k)? } else { self.cell(l, k)? };
        let mut rep = DdReport { l, k, ok: true, checked: 0, witness: None };
        for (i, b) in cell.basis.iter().enumerate() {
            let dd = coboundary(self.model, &coboundary(self.model, b));
            rep.checked += 1;
            let first = dd.entries().next().map(|(t, o, v)| (t.clone(), o, v.terms.len()));
            if let Some((t, o, nterms)) = first {
                rep.ok = false;
                let names: Vec<String> = t.iter().map(|x| crate::algebra::mono_name(self.model.mono(*x))).collect();
                rep.witness = Some(format!(
                    "basis cochain {i}: DD nonzero at ({}) -> {} with {} term(s)",
                    names.join(","),
                    crate::algebra::mono_name(self.model.mono(o)),
                    nterms
                ));
                break;
            }
        }
        Ok(rep)
    }

    /// Rank of D on the stable cell `(l, k)`, measured in ambient coordinates and
    /// summed over the internal-weight grading (D preserves it).
    pub fn rank_of_d(&mut self, l: usize, k: u32) -> Result<RankReport> {
        if k == 0 {
            return Ok(RankReport { exact: 0, modular: 0, dense: Some(0) });
        }
        let st = self.stable(l, k)?;
        let dense_ok = st.dim() <= DENSE_ORACLE_MAX;
        let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, w) in st.grading.iter().enumerate() {
            groups.entry(*w).or_default().push(i);
        }
        let mut rep = RankReport { exact: 0, modular: 0, dense: if dense_ok { Some(0) } else { None } };
        for idx in groups.values() {
            let mut keys = Keys::default();
            let rows: Vec<SpRowZ> = idx
                .iter()
                .map(|&i| linalg::to_integer_row(&keys.flatten(&coboundary(self.model, &st.basis[i]), 0)))
                .collect();
            let g = rank_all_paths(&rows, keys.len(), dense_ok)?;
            rep.exact += g.exact;
            rep.modular += g.modular;
            if let (Some(a), Some(b)) = (rep.dense.as_mut(), g.dense) {
                *a += b;
            }
        }
        Ok(rep)
    }

    /// `dim ker D^l_k - dim im D^{l-1}_{k+1}` on the stable subcomplex.
    pub fn cohomology_rank(&mut self, l: usize, k: u32) -> Result<CohomologyEntry> {
        let cell_dim = self.cell(l, k)?.dim();
        let st = self.stable(l, k)?;
        let rank_out = self.rank_of_d(l, k)?;
        let rank_in = if l == 0 { RankReport { exact: 0, modular: 0, dense: Some(0) } } else { self.rank_of_d(l - 1, k + 1)? };
        let kernel = st.dim() - rank_out.exact;
        if rank_in.exact > kernel {
            return Err(Error::CrossCheck(format!("image dimension {} exceeds kernel dimension {kernel} at ({l},{k})", rank_in.exact)));
        }
        Ok(CohomologyEntry { l, k, cell_dim, stable_dim: st.dim(), rank_out, rank_in, kernel, betti: kernel - rank_in.exact })
    }

    /// D^l_k in the bases of the stable cells `(l, k)` and `(l+1, k-1)`.
    pub fn coboundary_matrix(&mut self, l: usize, k: u32) -> Result<CoboundaryMatrix> {
        let src = self.stable(l, k)?;
        if k == 0 {
            let tgt = self.stable(l + 1, 0)?;
            return Ok(CoboundaryMatrix { l, k, rows: tgt.dim(), cols: src.dim(), entries: Vec::new() });
        }
        let tgt = self.stable(l + 1, k - 1)?;
        let mut keys = Keys::default();
        let tb: Vec<SpRowQ> = tgt.basis.iter().map(|b| keys.flatten(b, 0)).collect();
        let images: Vec<SpRowQ> = src.basis.iter().map(|b| keys.flatten(&coboundary(self.model, b), 0)).collect();
        let coords = linalg::coordinates(&tb, &images)
            .ok_or_else(|| Error::CrossCheck(format!("D({l},{k}) leaves the stable target cell")))?;
        let mut entries = Vec::new();
        for (j, x) in coords.into_iter().enumerate() {
            for (i, c) in x.into_iter().enumerate() {
                if !c.is_zero() {
                    entries.push((i as u32, j as u32, c));
                }
            }
        }
        Ok(CoboundaryMatrix { l, k, rows: tgt.dim(), cols: src.dim(), entries })
    }
}

/// Exact sparse rank, modular rank, and (optionally) the dense rational oracle;
/// any disagreement is an error.
pub fn rank_all_paths(rows: &[SpRowZ], ncols: usize, dense: bool) -> Result<RankReport> {
    let exact = linalg::sparse_ff_rank(rows);
    let modular = linalg::modular_rank(rows);
    if exact != modular {
        return Err(Error::CrossCheck(format!("modular rank {modular} != exact rank {exact}")));
    }
    let dense = if dense {
        let m: Vec<Vec<Q>> = rows
            .iter()
            .map(|r| {
                let mut v = vec![Q::zero(); ncols];
                for (c, x) in r {
                    v[*c as usize] = Q::from_integer(x.clone());
                }
                v
            })
            .collect();
        let d = linalg::dense_rank_q(&m);
        if d != exact {
            return Err(Error::CrossCheck(format!("dense oracle rank {d} != sparse rank {exact}")));
        }
        Some(d)
    } else {
        None
    };
    Ok(RankReport { exact, modular, dense })
}

/// Rejects cells built under different truncations.
pub fn check_compatible(a: &ComplexCell, b: &ComplexCell) -> Result<()> {
    if a.params != b.params || a.trunc != b.trunc {
        return Err(Error::InvalidArgument(format!("cells ({},{}) and ({},{}) use different truncation parameters", a.l, a.k, b.l, b.k)));
    }
    Ok(())
}

/// Integer matrix of a set of cochains in shared ambient coordinates (helper for oracles).
pub fn ambient_rows(cs: &[PoleCochain]) -> (Vec<SpRowZ>, usize) {
    let mut keys = Keys::default();
    let rows = cs.iter().map(|c| linalg::to_integer_row(&keys.flatten(c, 0))).collect();
    (rows, keys.len())
}

pub fn dense_of(rows: &[SpRowZ], ncols: usize) -> Vec<Vec<BigInt>> {
    rows.iter()
        .map(|r| {
            let mut v = vec![BigInt::zero(); ncols];
            for (c, x) in r {
                v[*c as usize] = x.clone();
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ModelParams;
    use crate::cell::AxiomSet;

    #[test]
    fn betti0_is_centre_dimension() {
        let m = Model::new(ModelParams::DEFAULT).unwrap();
        let mut e = Engine::new(&m, Truncation { e: 6, axioms: AxiomSet::cohomology_default() });
        let h = e.cohomology_rank(0, 1).unwrap();
        assert_eq!(h.betti, m.center_dim());
    }

    #[test]
    fn dd_zero_and_fixpoint_small() {
        let m = Model::new(ModelParams { n: 2, m: 4, b0: 1, lmax: 2 }).unwrap();
        let mut e = Engine::new(&m, Truncation { e: 3, axioms: AxiomSet::cohomology_default() });
        for l in 0..=2 {
            for k in 0..=2 {
                assert!(e.dd_zero_check(l, k, true).unwrap().ok);
                assert!(e.stable_is_fixpoint(l, k).unwrap());
                let h = e.cohomology_rank(l, k).unwrap();
                assert_eq!(h.rank_out.exact, h.rank_out.modular);
            }
        }
    }

    #[test]
    fn corrupted_product_breaks_dd() {
        let m = Model::new(ModelParams { n: 3, m: 4, b0: 1, lmax: 3 }).unwrap();
        let l1 = m.generator(1).unwrap();
        let l2 = m.generator(2).unwrap();
        // L1*L1 picks up a spurious L2, so (L1 L1) L1 - L1 (L1 L1) = [L2, L1] = -L3
        let bad = m.corrupted(l1, l1, l2, crate::scalar::q(1));
        assert!(bad.associativity_witness().is_some());
        let mut e = Engine::new(&bad, Truncation { e: 2, axioms: AxiomSet::NONE });
        let r = e.dd_zero_check(0, 2, false).unwrap();
        assert!(!r.ok);
        assert!(r.witness.is_some());
    }

    #[test]
    fn coboundary_matrix_composes_to_zero() {
        let m = Model::new(ModelParams { n: 2, m: 3, b0: 1, lmax: 2 }).unwrap();
        let mut e = Engine::new(&m, Truncation { e: 2, axioms: AxiomSet::cohomology_default() });
        let a = e.coboundary_matrix(0, 2).unwrap();
        let b = e.coboundary_matrix(1, 1).unwrap();
        assert_eq!(a.rows, b.cols);
        // (B A)_{ij} = sum_r B_ir A_rj
        let mut prod: BTreeMap<(u32, u32), Q> = BTreeMap::new();
        for (r, j, x) in &a.entries {
            for (i, r2, y) in &b.entries {
                if r2 == r {
                    *prod.entry((*i, *j)).or_insert_with(Q::zero) += x * y;
                }
            }
        }
        assert!(prod.values().all(|v| v.is_zero()));
    }
}
