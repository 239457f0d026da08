//! Cells and the coboundary engine against brute-force routes.

use std::collections::BTreeMap;

use merocx_core::cell::{build_cell_basis, random_coeffs, random_cochain, AxiomSet, Frames, Truncation};
use merocx_core::cochain::{check_compose, check_kg, check_pole, check_shuffle_all, coboundary, internal_weight};
use merocx_core::complex::{ambient_rows, rank_all_paths, Engine};
use merocx_core::linalg::dense_rank_q;
use merocx_core::scalar::q;
use merocx_core::{Model, ModelParams, PoleCochain, Q};

fn kg_only() -> AxiomSet {
    AxiomSet { kg: true, ..AxiomSet::NONE }
}

/// dim of the KG cell at l = 1 equals the nullity of the KG-violation map on
/// the unconstrained cell, computed densely from the Laurent values.
fn kg_dim_oracle(p: ModelParams, e: u32) {
    let m = Model::new(p).unwrap();
    let free = build_cell_basis(&Frames::new(&m, Truncation { e, axioms: AxiomSet::NONE }), 1, 0).unwrap();
    let kg = build_cell_basis(&Frames::new(&m, Truncation { e, axioms: kg_only() }), 1, 0).unwrap();
    let mut keys: BTreeMap<(Vec<u16>, u16, Vec<i32>), usize> = BTreeMap::new();
    let mut rows: Vec<BTreeMap<usize, Q>> = Vec::new();
    for b in &free.basis {
        let mut row = BTreeMap::new();
        for (t, o, v) in b.to_laurent().entries() {
            assert_eq!(v.poles().count(), 0, "no pairs at l = 1");
            for (exp, c) in v.terms() {
                let deg: i64 = exp.iter().map(|x| *x as i64).sum();
                if deg + internal_weight(&m, t, o) != 0 {
                    let n = keys.len();
                    let id = *keys.entry((t.clone(), o, exp.clone())).or_insert(n);
                    row.insert(id, c.clone());
                }
            }
        }
        rows.push(row);
    }
    let dense: Vec<Vec<Q>> = rows.iter().map(|r| (0..keys.len()).map(|j| r.get(&j).cloned().unwrap_or_else(|| q(0))).collect()).collect();
    let nullity = free.dim() - dense_rank_q(&dense);
    assert_eq!(kg.dim(), nullity, "{p:?} E = {e}");
    assert!(kg.dim() > 0);
}

#[test]
fn kg_dimension_matches_dense_nullspace() {
    kg_dim_oracle(ModelParams { n: 1, m: 2, b0: 2, lmax: 2 }, 2);
    kg_dim_oracle(ModelParams { n: 2, m: 3, b0: 1, lmax: 2 }, 3);
}

/// Rank of D recomputed after an invertible change of basis, without the
/// grading split the engine uses.
#[test]
fn ranks_survive_basis_change() {
    let m = Model::new(ModelParams { n: 2, m: 4, b0: 1, lmax: 2 }).unwrap();
    let mut eng = Engine::new(&m, Truncation { e: 3, axioms: AxiomSet::cohomology_default() });
    for l in 0..=2 {
        for k in 1..=2 {
            let st = eng.stable(l, k).unwrap();
            let n = st.dim();
            // upper unitriangular mix, reversed order
            let mut mixed: Vec<PoleCochain> = Vec::new();
            for i in (0..n).rev() {
                let mut f = st.basis[i].clone();
                let c = random_coeffs(n, 17 + i as u64, 3);
                for j in i + 1..n {
                    f.add_scaled(&st.basis[j], &c[j]);
                }
                mixed.push(coboundary(&m, &f));
            }
            let (rows, nc) = ambient_rows(&mixed);
            let r = rank_all_paths(&rows, nc, true).unwrap();
            assert_eq!(r.exact, eng.rank_of_d(l, k).unwrap().exact, "({l},{k})");
        }
    }
}

#[test]
fn predicates_and_d_are_linear() {
    let m = Model::new(ModelParams::DEFAULT).unwrap();
    let mut eng = Engine::new(&m, Truncation { e: 4, axioms: AxiomSet::cohomology_default() });
    for (l, k) in [(1, 1), (2, 2), (2, 0)] {
        let c = eng.cell(l, k).unwrap();
        let f = random_cochain(&c, 1, 5).unwrap();
        let g = random_cochain(&c, 2, 5).unwrap();
        let mut h = f.scale(&q(3));
        h.add_scaled(&g, &q(-7));
        assert!(check_kg(&m, &h).ok && check_shuffle_all(&m, &h).ok && check_pole(&m, &h).ok && check_compose(&m, &h, k).ok);
        let mut dh = coboundary(&m, &f).scale(&q(3));
        dh.add_scaled(&coboundary(&m, &g), &q(-7));
        assert_eq!(coboundary(&m, &h), dh);
        // D shifts the bidegree by (+1, -1)
        let d = coboundary(&m, &f);
        assert_eq!((d.l, d.k), (l + 1, k.saturating_sub(1)));
    }
}

/// Without axioms every image stays in the frame, so refinement removes nothing.
#[test]
fn unconstrained_cells_are_already_stable() {
    let m = Model::new(ModelParams { n: 1, m: 2, b0: 2, lmax: 2 }).unwrap();
    let mut eng = Engine::new(&m, Truncation { e: 3, axioms: AxiomSet::NONE });
    for l in 0..=1 {
        for k in 0..=1 {
            assert_eq!(eng.stable(l, k).unwrap().dim(), eng.cell(l, k).unwrap().dim(), "({l},{k})");
            assert!(eng.dd_zero_check(l, k, false).unwrap().ok);
        }
    }
}

#[test]
fn betti_table_is_reproducible() {
    let m = Model::new(ModelParams { n: 2, m: 4, b0: 1, lmax: 2 }).unwrap();
    let t = Truncation { e: 3, axioms: AxiomSet::cohomology_default() };
    let run = || {
        let mut e = Engine::new(&m, t);
        (0..=2).flat_map(|l| (0..=2).map(move |k| (l, k))).map(|(l, k)| e.cohomology_rank(l, k).unwrap()).collect::<Vec<_>>()
    };
    let a = run();
    assert_eq!(a, run());
    for h in &a {
        assert_eq!(h.kernel, h.stable_dim - h.rank_out.exact);
        assert_eq!(h.betti + h.rank_in.exact, h.kernel);
    }
}
