use merocx_core::cell::{random_cochain, AxiomSet, Truncation};
use merocx_core::cochain::{coboundary, cup};
use merocx_core::complex::Engine;
use merocx_core::scalar::q;
use merocx_core::star::*;
use merocx_core::*;

fn setup() -> Model {
    Model::new(ModelParams { n: 3, m: 4, b0: 2, lmax: 3 }).unwrap()
}

fn trunc() -> Truncation {
    Truncation { e: 3, axioms: AxiomSet::cohomology_default() }
}

#[test]
fn leibniz_on_random_stable_pairs() {
    let m = setup();
    let mut e = Engine::new(&m, trunc());
    let b = DualBasis::canonical(&m);
    for seed in 0..6u64 {
        let (lf, lg) = [(1, 1), (0, 1), (1, 0), (2, 1), (1, 2), (0, 0)][seed as usize];
        let f = random_cochain(&e.stable(lf, 1).unwrap(), seed, 4).unwrap();
        let g = random_cochain(&e.stable(lg, 2).unwrap(), seed + 50, 4).unwrap();
        let r = leibniz_check(&m, &f, &g, 3, &b).unwrap();
        assert!(r.ok, "seed {seed}: {r:?}");
        assert_eq!(r.sign, if lf % 2 == 0 { 1 } else { -1 });
    }
}

#[test]
fn leibniz_rejects_terminal_column_and_accepts_zero() {
    let m = setup();
    let b = DualBasis::canonical(&m);
    let z: PoleCochain = GCochain::zero(m.params, 1, 0);
    assert!(matches!(leibniz_check(&m, &z, &z, 3, &b), Err(Error::InvalidArgument(_))));
    let z: PoleCochain = GCochain::zero(m.params, 1, 1);
    assert!(leibniz_check(&m, &z, &z, 3, &b).unwrap().ok);
}

#[test]
fn leibniz_l0_branch_by_brute_force() {
    // F = a in A: D(a ∪ G) = Da ∪ G + a ∪ DG, term by term on dense ambient tables.
    let m = setup();
    let mut e = Engine::new(&m, trunc());
    let g = random_cochain(&e.stable(1, 1).unwrap(), 3, 4).unwrap();
    for a in [m.gen_elem(1), m.gen_elem(2).add(&AlgebraElem::basis(m.unit()).scale(&q(3)))] {
        let f: PoleCochain = GCochain::from_algebra(&m, &a, 1);
        let lhs = coboundary(&m, &cup(&m, &f, &g));
        let mut rhs = cup(&m, &coboundary(&m, &f), &g);
        rhs.add_scaled(&cup(&m, &f, &coboundary(&m, &g)), &q(1));
        assert_eq!(lhs.to_laurent(), rhs.to_laurent());
        assert!(leibniz_check(&m, &f, &g, 4, &DualBasis::canonical(&m)).unwrap().ok);
    }
}

#[test]
fn basis_independence_bit_exact() {
    let m = setup();
    let mut e = Engine::new(&m, trunc());
    let c = e.cell(1, 1).unwrap();
    for seed in 0..4u64 {
        let f = random_cochain(&c, seed, 5).unwrap();
        let g = random_cochain(&c, seed + 9, 5).unwrap();
        let a = star(&m, &[f.clone(), g.clone()], &[], 4, &DualBasis::canonical(&m)).unwrap();
        let b = star(&m, &[f, g], &[], 4, &DualBasis::remixed(&m, seed)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn zero_factor_and_commutator_laws() {
    let m = setup();
    let mut e = Engine::new(&m, trunc());
    let c = e.cell(1, 1).unwrap();
    let b = DualBasis::canonical(&m);
    let f = random_cochain(&c, 1, 5).unwrap();
    let g = random_cochain(&c, 2, 5).unwrap();
    let h = random_cochain(&c, 3, 5).unwrap();
    let z: PoleCochain = GCochain::zero(m.params, 1, 1);
    assert!(star(&m, &[f.clone(), z.clone()], &[], 3, &b).unwrap().is_zero());
    assert!(commutator(&m, &f, &f, 3, &b).unwrap().is_zero());
    assert!(commutator(&m, &f, &z, 3, &b).unwrap().is_zero());
    // bilinearity: [2f + h, g] = 2[f,g] + [h,g]
    let mut fh = f.scale(&q(2));
    fh.add_scaled(&h, &q(1));
    let lhs = commutator(&m, &fh, &g, 3, &b).unwrap();
    let a = commutator(&m, &f, &g, 3, &b).unwrap();
    let c2 = commutator(&m, &h, &g, 3, &b).unwrap();
    for (ord, v) in &lhs.coefficients {
        let mut r = GCochain::zero(m.params, v.l, v.k);
        if let Some(x) = a.coefficient(*ord) {
            r.add_scaled(x, &q(2));
        }
        if let Some(x) = c2.coefficient(*ord) {
            r.add_scaled(x, &q(1));
        }
        assert_eq!(&r, v);
    }
    // antisymmetry
    let ba = commutator(&m, &g, &f, 3, &b).unwrap();
    for (ord, v) in &a.coefficients {
        assert_eq!(ba.coefficient(*ord).unwrap(), &v.scale(&q(-1)));
    }
}

#[test]
fn products_land_in_target_cell() {
    let m = setup();
    let mut e = Engine::new(&m, trunc());
    let b = DualBasis::canonical(&m);
    for (l1, k1, l2, k2) in [(1, 1, 1, 1), (1, 2, 1, 1), (2, 1, 1, 2)] {
        let f = random_cochain(&e.cell(l1, k1).unwrap(), 11, 5).unwrap();
        let g = random_cochain(&e.cell(l2, k2).unwrap(), 12, 5).unwrap();
        let r = star(&m, &[f, g], &[], 4, &b).unwrap();
        assert_eq!((r.target_l, r.target_k, r.t), (l1 + l2, k1.min(k2), k1 + k2 - k1.min(k2)));
        let (mem, _) = star_membership(&m, &r, true);
        assert!(mem.ok, "{:?}", mem.violations.first());
    }
}

#[test]
fn cauchy_bounds_hold_with_poles() {
    let m = setup();
    let mut e = Engine::new(&m, trunc());
    let b = DualBasis::canonical(&m);
    let c = e.cell(2, 1).unwrap();
    for seed in 0..4u64 {
        let f = random_cochain(&c, seed, 5).unwrap();
        let g = random_cochain(&c, seed + 20, 5).unwrap();
        let r = star(&m, &[f.clone(), g.clone()], &[], 4, &b).unwrap();
        assert!(r.coefficients.len() > 1, "expected several λ-orders");
        let rep = bound_check(&m, &r, &[f, g], &[scalar::qf(1, 2), q(2)], 8).unwrap();
        assert!(rep.ok && rep.factor_ok, "{rep:?}");
    }
    let z: PoleCochain = GCochain::zero(m.params, 1, 1);
    let r = star(&m, std::slice::from_ref(&z), &[], 2, &b).unwrap();
    assert!(bound_check(&m, &r, &[z], &[q(1)], 4).unwrap().ok);
}

#[test]
fn unit_case_bound_is_tight() {
    let m = setup();
    let b = DualBasis::canonical(&m);
    let mut f: PoleCochain = GCochain::zero(m.params, 1, 1);
    for i in 0..m.dim() as u16 {
        f.add_entry(&[i], i, &PoleForm::constant(q(1)), &q(1));
    }
    let r = star(&m, &[f.clone()], &[], 0, &b).unwrap();
    let rep = bound_check(&m, &r, &[f], &[q(1)], 4).unwrap();
    assert!(rep.ok);
    assert_eq!(rep.lines[0].norm, rep.lines[0].bound);
}

#[test]
fn laurent_round_trip_into_frame() {
    let m = setup();
    let mut e = Engine::new(&m, trunc());
    for (l, k) in [(1, 1), (2, 1), (3, 0)] {
        let f = random_cochain(&e.cell(l, k).unwrap(), 7, 4).unwrap();
        assert_eq!(f.to_laurent().to_pole().unwrap(), f);
    }
    // (z1 - z3) / ((z1 - z2)(z2 - z3)) = 1/(z1-z2) + 1/(z2-z3) lies in the frame
    let v = LaurentElem::from_parts(&[1, 3], vec![(vec![1, 0], q(1)), (vec![0, 1], q(-1))], &[]).unwrap()
        .mul(&LaurentElem::pole(1, 2, 1)).mul(&LaurentElem::pole(2, 3, 1));
    let pf = pattern::from_laurent(&v, 3).unwrap();
    assert_eq!(pf.to_laurent(), v);
    assert!(pattern::from_laurent(&LaurentElem::var(1), 1).is_err());
}
