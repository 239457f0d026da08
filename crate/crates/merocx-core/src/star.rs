//! The λ-graded star product of cochains, its Cauchy bounds, commutator and
//! graded Leibniz law.
//!
//! Each factor's A-valued output `X` is contracted against a graded basis and
//! its pairing-dual, `sum_s (X, ḡ_s) g_s`; the factors are then combined by the
//! Alexander–Whitney cup (later factors take the next slot variables). The
//! λ-exponent of a term is its internal weight `wt(out) - sum wt(in)`, which D
//! preserves, so `D(F*G) = DF*G + (-1)^{l_F} F*DG` holds coefficient by
//! coefficient.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use num_traits::{One, Signed, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::algebra::{AlgebraElem, Model};
use crate::cochain::{check_compose, check_kg, check_pole, check_shuffle_all, coboundary, cup, internal_weight, Check, GCochain, Value};
use crate::scalar::Q;
use crate::{Error, Result};

/// A declared identification `factor_a.z_i = factor_b.z_j` (1-based factors and variables).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Identification {
    pub factor_a: usize,
    pub var_a: u32,
    pub factor_b: usize,
    pub var_b: u32,
}

/// Graded basis `{g_s}` of A with its pairing-dual `{ḡ_s}`, per weight.
#[derive(Clone, Debug)]
pub struct DualBasis {
    pub pairs: Vec<(AlgebraElem, AlgebraElem)>,
}

impl DualBasis {
    /// The PBW basis, self-dual under the orthonormal pairing.
    pub fn canonical(model: &Model) -> Self {
        DualBasis { pairs: (0..model.dim() as u16).map(|i| (AlgebraElem::basis(i), AlgebraElem::basis(i))).collect() }
    }

    /// A seeded invertible re-mixing inside each weight space, with the dual
    /// basis computed from the exact inverse.
    pub fn remixed(model: &Model, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut by_w: BTreeMap<u32, Vec<u16>> = BTreeMap::new();
        for i in 0..model.dim() as u16 {
            by_w.entry(model.weight(i)).or_default().push(i);
        }
        let mut pairs = Vec::new();
        for idx in by_w.values() {
            let n = idx.len();
            let (p, inv) = loop {
                let p: Vec<Vec<Q>> =
                    (0..n).map(|_| (0..n).map(|_| Q::from_integer(((rng.next_u32() % 7) as i64 - 3).into())).collect()).collect();
                if let Some(inv) = invert(&p) {
                    break (p, inv);
                }
            };
            // g_s = sum_j P_sj b_j ; ḡ_s = sum_j (P^{-1})_js b_j so that (g_s, ḡ_t) = δ_st
            for s in 0..n {
                let mut g = AlgebraElem::zero();
                let mut gb = AlgebraElem::zero();
                for j in 0..n {
                    g.add_term(idx[j], p[s][j].clone());
                    gb.add_term(idx[j], inv[j][s].clone());
                }
                pairs.push((g, gb));
            }
        }
        DualBasis { pairs }
    }

    /// `sum_s (x, ḡ_s) g_s`.
    pub fn contract(&self, model: &Model, x: &AlgebraElem) -> AlgebraElem {
        let mut r = AlgebraElem::zero();
        for (g, gb) in &self.pairs {
            let c = model.pairing(x, gb);
            if !c.is_zero() {
                r = r.add(&g.scale(&c));
            }
        }
        r
    }
}

fn invert(m: &[Vec<Q>]) -> Option<Vec<Vec<Q>>> {
    let n = m.len();
    let mut a: Vec<Vec<Q>> = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, p);
        let inv = a[c][c].recip();
        for x in a[c].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = a[r][c].clone();
                for k in 0..2 * n {
                    let t = &a[c][k] * &f;
                    a[r][k] -= t;
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}

/// Coefficients of the λ-series of a star product.
#[derive(Clone, Debug, PartialEq)]
pub struct StarResult<V> {
    /// λ-exponent -> coefficient cochain (only nonzero coefficients are stored).
    pub coefficients: BTreeMap<i64, GCochain<V>>,
    pub lambda: u32,
    pub identifications: Vec<Identification>,
    /// Merged variables (always 0: only r = 0 is supported).
    pub r: usize,
    /// `sum k_i - k_target`.
    pub t: u32,
    pub radii: Vec<Q>,
    pub target_l: usize,
    pub target_k: u32,
}

impl<V: Value> StarResult<V> {
    pub fn is_zero(&self) -> bool {
        self.coefficients.values().all(|c| c.is_zero())
    }

    pub fn coefficient(&self, m: i64) -> Option<&GCochain<V>> {
        self.coefficients.get(&m)
    }

    /// Sum of all coefficients (the λ = 1 specialization).
    pub fn total(&self) -> GCochain<V> {
        let params = self.coefficients.values().next().map(|c| c.params);
        let mut f = GCochain::zero(params.unwrap_or(crate::ModelParams::DEFAULT), self.target_l, self.target_k);
        for c in self.coefficients.values() {
            f.params = c.params;
            f.add_scaled(c, &Q::one());
        }
        f
    }

    fn sub(&self, o: &Self) -> Self {
        let mut r = self.clone();
        for (m, c) in &o.coefficients {
            let e = r.coefficients.entry(*m).or_insert_with(|| GCochain::zero(c.params, c.l, c.k));
            e.add_scaled(c, &-Q::one());
        }
        r.coefficients.retain(|_, c| !c.is_zero());
        r
    }
}

/// Validates identifications against the factors; cross-factor merges are
/// recognized but unsupported.
pub fn validate_identifications(ls: &[usize], ids: &[Identification]) -> Result<()> {
    let mut seen = Vec::new();
    for id in ids {
        for (f, v) in [(id.factor_a, id.var_a), (id.factor_b, id.var_b)] {
            if f == 0 || f > ls.len() {
                return Err(Error::InvalidArgument(format!("identification names factor {f}, but there are {} factors", ls.len())));
            }
            if v == 0 || v as usize > ls[f - 1] {
                return Err(Error::UnknownVariable(v));
            }
            if seen.contains(&(f, v)) {
                return Err(Error::InvalidArgument(format!("variable {f}.z{v} is identified twice")));
            }
            seen.push((f, v));
        }
        if id.factor_a == id.factor_b {
            return Err(Error::InvalidArgument(format!(
                "identification {}.z{} = {}.z{} merges two variables of one factor (configuration-space violation)",
                id.factor_a, id.var_a, id.factor_b, id.var_b
            )));
        }
    }
    if !ids.is_empty() {
        return Err(Error::Unsupported("cross-factor identifications (r > 0) have no derivable multilinear reading; only r = 0 is supported".into()));
    }
    Ok(())
}

/// Parses identifications like `"1.z2=2.z1"`, comma separated.
pub fn parse_identifications(s: &str) -> Result<Vec<Identification>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let bad = || Error::InvalidArgument(format!("cannot parse identification '{part}' (expected like 1.z2=2.z1)"));
        let (a, b) = part.split_once('=').ok_or_else(bad)?;
        let side = |x: &str| -> Option<(usize, u32)> {
            let (f, v) = x.trim().split_once('.')?;
            let v = v.trim().strip_prefix('z')?;
            Some((f.trim().parse().ok()?, v.parse().ok()?))
        };
        let (fa, va) = side(a).ok_or_else(bad)?;
        let (fb, vb) = side(b).ok_or_else(bad)?;
        out.push(Identification { factor_a: fa, var_a: va, factor_b: fb, var_b: vb });
    }
    Ok(out)
}

/// Contracts each output against the dual pair basis.
pub fn contract_outputs<V: Value>(model: &Model, f: &GCochain<V>, basis: &DualBasis) -> GCochain<V> {
    let mut r = GCochain::zero(f.params, f.l, f.k);
    for (t, o, v) in f.entries() {
        let x = basis.contract(model, &AlgebraElem::basis(o));
        for (o2, c) in &x.terms {
            r.add_entry(t, *o2, v, c);
        }
    }
    r
}

/// The star product of `factors` up to λ-order `lambda` (`|m| <= lambda`).
pub fn star<V: Value>(
    model: &Model,
    factors: &[GCochain<V>],
    ids: &[Identification],
    lambda: u32,
    basis: &DualBasis,
) -> Result<StarResult<V>> {
    if factors.is_empty() {
        return crate::invalid("star needs at least one factor");
    }
    for f in factors {
        crate::cochain::require_same_model(&factors[0], f)?;
        if f.params != model.params {
            return crate::invalid("factor built for a different model");
        }
    }
    let ls: Vec<usize> = factors.iter().map(|f| f.l).collect();
    validate_identifications(&ls, ids)?;
    let mut acc = contract_outputs(model, &factors[0], basis);
    for f in &factors[1..] {
        acc = cup(model, &acc, &contract_outputs(model, f, basis));
    }
    let k_sum: u32 = factors.iter().map(|f| f.k).sum();
    let k_target = factors.iter().map(|f| f.k).min().unwrap_or(0);
    let mut coefficients: BTreeMap<i64, GCochain<V>> = BTreeMap::new();
    for (t, o, v) in acc.entries() {
        let m = internal_weight(model, t, o);
        if m.unsigned_abs() > lambda as u64 {
            continue;
        }
        coefficients.entry(m).or_insert_with(|| GCochain::zero(model.params, acc.l, k_target)).add_entry(t, o, v, &Q::one());
    }
    Ok(StarResult {
        coefficients,
        lambda,
        identifications: ids.to_vec(),
        r: 0,
        t: k_sum - k_target,
        radii: vec![Q::one(); factors.len()],
        target_l: acc.l,
        target_k: k_target,
    })
}

/// `star(F, G) - star(G, F)`.
pub fn commutator<V: Value>(model: &Model, f: &GCochain<V>, g: &GCochain<V>, lambda: u32, basis: &DualBasis) -> Result<StarResult<V>> {
    let a = star(model, &[f.clone(), g.clone()], &[], lambda, basis)?;
    let b = star(model, &[g.clone(), f.clone()], &[], lambda, basis)?;
    Ok(a.sub(&b))
}

/// Membership of each coefficient in the product cell: KG (if requested), POLE and COMPOSE(k_target).
/// SHUFFLE is reported separately because cup products do not preserve it.
pub fn star_membership<V: Value>(model: &Model, res: &StarResult<V>, kg: bool) -> (Check, Check) {
    let mut main = Check { ok: true, violations: Vec::new() };
    let mut sh = Check { ok: true, violations: Vec::new() };
    for c in res.coefficients.values() {
        let mut parts = vec![check_pole(model, c), check_compose(model, c, res.target_k)];
        if kg {
            parts.push(check_kg(model, c));
        }
        for p in parts {
            main.ok &= p.ok;
            main.violations.extend(p.violations);
        }
        let s = check_shuffle_all(model, c);
        sh.ok &= s.ok;
        sh.violations.extend(s.violations);
    }
    (main, sh)
}

/// Literal bound `min(M_i) * max(R_i)^{-m+n+1}`.
pub fn cauchy_bound(ms: &[Q], rs: &[Q], m: i64, n: i64) -> Result<Q> {
    if ms.is_empty() || rs.is_empty() {
        return crate::invalid("cauchy_bound needs at least one factor");
    }
    if rs.iter().any(|r| !r.is_positive()) {
        return crate::invalid("radii must be positive");
    }
    let mn = ms.iter().min().unwrap().clone();
    let r = rs.iter().max().unwrap().clone();
    Ok(mn * crate::scalar::pow_q(&r, -m + n + 1))
}

/// Per-order outcome of [`bound_check`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundLine {
    pub order: i64,
    pub norm: Q,
    pub bound: Q,
    pub ok: bool,
    pub literal_bound: Q,
    pub literal_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundReport {
    pub ok: bool,
    /// Majorants `M_i` measured on the sample grid.
    pub majorants: Vec<Q>,
    pub radii: Vec<Q>,
    /// Per-factor inequality `||M_n|| <= M_i R_i^{-n}` held for every n.
    pub factor_ok: bool,
    pub lines: Vec<BoundLine>,
}

/// λ-graded norms `n -> ||F^{(n)}||` of a factor.
pub fn graded_norms<V: Value>(model: &Model, f: &GCochain<V>) -> BTreeMap<i64, Q> {
    let mut out: BTreeMap<i64, Q> = BTreeMap::new();
    for (t, o, v) in f.entries() {
        let n = internal_weight(model, t, o);
        let x = v.max_abs();
        let e = out.entry(n).or_insert_with(Q::zero);
        if x > *e {
            *e = x;
        }
    }
    out
}

/// Checks every λ-coefficient against the Cauchy-shaped bound built from the
/// factors' measured majorants on the grid `{R_i j / grid : j = 1..grid}`.
pub fn bound_check<V: Value>(model: &Model, res: &StarResult<V>, factors: &[GCochain<V>], radii: &[Q], grid: u32) -> Result<BoundReport> {
    if radii.len() != factors.len() {
        return crate::invalid("one radius per factor is required");
    }
    if radii.iter().any(|r| !r.is_positive()) {
        return crate::invalid("radii must be positive");
    }
    let grid = grid.max(1);
    let norms: Vec<BTreeMap<i64, Q>> = factors.iter().map(|f| graded_norms(model, f)).collect();
    let mut majorants = Vec::new();
    let mut factor_ok = true;
    for (nm, r) in norms.iter().zip(radii) {
        let mut best = Q::zero();
        for j in 1..=grid {
            let z = r * Q::new(j.into(), grid.into());
            let val: Q = nm.iter().map(|(n, c)| c * crate::scalar::pow_q(&z, *n)).sum();
            if val > best {
                best = val;
            }
        }
        for (n, c) in nm {
            if *c > &best * crate::scalar::pow_q(r, -*n) {
                factor_ok = false;
            }
        }
        majorants.push(best);
    }
    let ka = model.structure_norm();
    let ka_pow = crate::scalar::pow_q(&ka, factors.len() as i64 - 1);
    let prod_m: Q = majorants.iter().fold(Q::one(), |a, b| a * b);
    // sum over splits n_1 + .. + n_q = m of prod R_i^{-n_i}, with n_i ranging over each factor's orders
    let mut split: BTreeMap<i64, Q> = BTreeMap::new();
    split.insert(0, Q::one());
    for (nm, r) in norms.iter().zip(radii) {
        let mut next: BTreeMap<i64, Q> = BTreeMap::new();
        for (s, a) in &split {
            for n in nm.keys() {
                *next.entry(s + n).or_insert_with(Q::zero) += a * crate::scalar::pow_q(r, -*n);
            }
        }
        split = next;
    }
    let mut lines = Vec::new();
    let mut ok = factor_ok;
    for (m, c) in &res.coefficients {
        let norm = c.norm();
        let bound = &ka_pow * &prod_m * split.get(m).cloned().unwrap_or_else(Q::zero);
        let literal_bound = cauchy_bound(&majorants, radii, m + 1, 0)?;
        let line_ok = norm <= bound;
        ok &= line_ok;
        lines.push(BoundLine { order: *m, literal_ok: norm <= literal_bound, norm, bound, ok: line_ok, literal_bound });
    }
    Ok(BoundReport { ok, majorants, radii: radii.to_vec(), factor_ok, lines })
}

/// Outcome of the graded Leibniz check.
#[derive(Clone, Debug, PartialEq)]
pub struct LeibnizReport {
    pub ok: bool,
    pub sign: i32,
    /// Orders with a nonzero residual.
    pub failing_orders: Vec<i64>,
    pub residual_entries: usize,
}

/// `D(F*G) = (DF)*G + (-1)^{l_F} F*(DG)` coefficient-wise up to order `lambda`.
pub fn leibniz_check<V: Value>(model: &Model, f: &GCochain<V>, g: &GCochain<V>, lambda: u32, basis: &DualBasis) -> Result<LeibnizReport> {
    if f.k == 0 || g.k == 0 {
        return Err(Error::InvalidArgument(
            "D terminates at k = 0; take factors from stable cells with k >= 1 (see stable_subcomplex)".into(),
        ));
    }
    let fg = star(model, &[f.clone(), g.clone()], &[], lambda, basis)?;
    let df = coboundary(model, f);
    let dg = coboundary(model, g);
    let a = star(model, &[df, g.clone()], &[], lambda, basis)?;
    let b = star(model, &[f.clone(), dg], &[], lambda, basis)?;
    let sign: i32 = if f.l % 2 == 0 { 1 } else { -1 };
    let mut failing = Vec::new();
    let mut residual_entries = 0;
    let orders: alloc::collections::BTreeSet<i64> = fg.coefficients.keys().chain(a.coefficients.keys()).chain(b.coefficients.keys()).copied().collect();
    for m in orders {
        let lhs = fg.coefficients.get(&m).map(|c| coboundary(model, c));
        let mut res = match lhs {
            Some(x) => x,
            None => GCochain::zero(model.params, f.l + g.l + 1, 0),
        };
        if let Some(x) = a.coefficients.get(&m) {
            res.add_scaled(x, &-Q::one());
        }
        if let Some(x) = b.coefficients.get(&m) {
            res.add_scaled(x, &Q::from_integer((-sign).into()));
        }
        if !res.is_zero() {
            failing.push(m);
            residual_entries += res.num_entries();
        }
    }
    Ok(LeibnizReport { ok: failing.is_empty(), sign, failing_orders: failing, residual_entries })
}

/// Human-readable one-line summary of a star result.
pub fn describe<V: Value>(res: &StarResult<V>) -> String {
    let orders: Vec<String> = res.coefficients.iter().map(|(m, c)| format!("λ^{m}:{}", c.num_entries())).collect();
    format!("target ({},{}), r={}, t={}, Λ={}, [{}]", res.target_l, res.target_k, res.r, res.t, res.lambda, orders.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::ModelParams;
    use crate::pattern::PoleForm;
    use crate::scalar::{q, qf};
    use crate::PoleCochain;

    fn model() -> Model {
        Model::new(ModelParams::DEFAULT).unwrap()
    }

    #[test]
    fn dual_bases_contract_to_identity() {
        let m = model();
        let x = m.gen_elem(2).add(&AlgebraElem::basis(m.index_of(&[1, 1]).unwrap()).scale(&q(3)));
        for seed in 0..5 {
            assert_eq!(DualBasis::remixed(&m, seed).contract(&m, &x), x);
        }
    }

    #[test]
    fn unit_like_single_factor() {
        let m = model();
        let mut f: PoleCochain = GCochain::zero(m.params, 1, 1);
        for b in 0..m.dim() as u16 {
            f.add_entry(&[b], b, &PoleForm::constant(q(1)), &q(1));
        }
        let r = star(&m, &[f.clone()], &[], 0, &DualBasis::canonical(&m)).unwrap();
        assert_eq!(r.coefficient(0), Some(&f));
    }

    #[test]
    fn cauchy_examples() {
        assert_eq!(cauchy_bound(&[q(1)], &[q(2)], 3, 1).unwrap(), qf(1, 2));
        assert_eq!(cauchy_bound(&[q(0)], &[q(2)], 3, 1).unwrap(), q(0));
        assert_eq!(cauchy_bound(&[q(3)], &[q(1)], 5, 4).unwrap(), q(3));
        assert!(cauchy_bound(&[q(1)], &[q(0)], 1, 1).is_err());
    }

    #[test]
    fn identification_rules() {
        let ids = parse_identifications("1.z1=1.z2").unwrap();
        assert!(matches!(validate_identifications(&[2, 2], &ids), Err(Error::InvalidArgument(_))));
        let ids = parse_identifications("1.z2=2.z1").unwrap();
        assert!(matches!(validate_identifications(&[2, 2], &ids), Err(Error::Unsupported(_))));
        assert!(matches!(validate_identifications(&[1, 2], &ids), Err(Error::UnknownVariable(2))));
        assert!(validate_identifications(&[2, 2], &[]).is_ok());
        assert!(parse_identifications("garbage").is_err());
    }
}
