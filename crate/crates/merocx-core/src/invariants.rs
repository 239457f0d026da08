//! Invariant classes `[(DΦ)*Φ]` (with `*` the star commutator): Frobenius-type solving, the relation chain,
//! class comparison with exactness certificates, and the Godbillon–Vey presets.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use num_traits::{One, Zero};

use crate::algebra::{Model, ModelParams};
use crate::cell::{AxiomSet, ComplexCell, Keys, Truncation};
use crate::cochain::{coboundary, cup, PoleCochain};
use crate::complex::Engine;
use crate::linalg::{self, SpRowQ};
use crate::scalar::Q;
use crate::star::{commutator, DualBasis, StarResult};
use crate::pattern::PoleForm;
use crate::{Error, GCochain, Result};

/// A class `[(DΦ)*Φ]` with its representative series and closedness diagnostic.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantClass {
    pub representative: StarResult<PoleForm>,
    pub phi_l: usize,
    pub phi_k: u32,
    pub target_l: usize,
    pub target_k: u32,
    /// `D` of every coefficient vanishes.
    pub closed: bool,
    /// Number of nonzero table entries in `D(representative)`.
    pub closure_residual: usize,
}

impl InvariantClass {
    pub fn is_zero(&self) -> bool {
        self.representative.is_zero()
    }
}

/// Outcome of an exactness solve.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactnessCertificate {
    pub equal: bool,
    /// `Ψ` with `DΨ = c2 - c1` (present iff `equal`).
    pub preimage: Option<PoleCochain>,
    /// Rank of the incoming D restricted to the relevant internal weights, and of
    /// the system augmented by the difference.
    pub rank: usize,
    pub rank_augmented: usize,
    pub incoming_dim: usize,
}

/// Result of [`frobenius_solve`].
#[derive(Clone, Debug, PartialEq)]
pub struct FrobeniusSolution {
    pub f2: PoleCochain,
    pub l2: usize,
    pub k2: u32,
}

/// The axioms used for cells that receive star products: SHUFFLE is dropped
/// because cup products do not preserve it.
pub fn product_axioms(ax: AxiomSet) -> AxiomSet {
    AxiomSet { shuffle: false, ..ax }
}

/// Checks the index bookkeeping `n0 + 1 = n + n1 - r`, `m0 - 1 = m + m1 - t`
/// for `D Φ^{n0}_{m0} = Φ^n_m * Φ^{n1}_{m1}` with `r = 0` and `t` the k-loss.
pub fn relation_indices(n0: usize, m0: u32, n: usize, m: u32, n1: usize, m1: u32) -> Result<()> {
    if m0 == 0 {
        return Err(Error::InvalidArgument(format!("m0 - 1 < 0: D terminates at k = 0 (m0 = {m0})")));
    }
    if n0 + 1 != n + n1 {
        return Err(Error::InvalidArgument(format!("index mismatch: n0 + 1 = {} but n + n1 - r = {}", n0 + 1, n + n1)));
    }
    if m0 - 1 != m.min(m1) {
        return Err(Error::InvalidArgument(format!(
            "index mismatch: m0 - 1 = {} but m + m1 - t = {} (t = {})",
            m0 - 1,
            m.min(m1),
            m + m1 - m.min(m1)
        )));
    }
    Ok(())
}

fn flatten_groups(keys: &mut Keys, f: &PoleCochain) -> SpRowQ {
    keys.flatten(f, 0)
}

/// Solves `sum_j x_j D(basis_j) = target` over the basis elements whose
/// internal weight occurs in `target`; returns the combination and rank data.
fn solve_in_image(model: &Model, cell: &ComplexCell, target: &PoleCochain) -> Result<(Option<PoleCochain>, usize, usize)> {
    let weights = target.internal_weights(model);
    let idx: Vec<usize> = (0..cell.dim()).filter(|&i| weights.contains(&cell.grading[i])).collect();
    let mut keys = Keys::default();
    let cols: Vec<SpRowQ> = idx.iter().map(|&i| flatten_groups(&mut keys, &coboundary(model, &cell.basis[i]))).collect();
    let t = flatten_groups(&mut keys, target);
    // exact ranks from the certified elimination, cross-checked against the modular path
    let (x, rank, rank_aug) = linalg::solve_with_rank(&cols, &t);
    let modular = |cs: &[SpRowQ]| linalg::modular_rank(&crate::cell::transpose(cs).iter().map(linalg::to_integer_row).collect::<Vec<_>>());
    let mut aug = cols.clone();
    aug.push(t);
    if modular(&cols) != rank || modular(&aug) != rank_aug {
        return Err(Error::CrossCheck(format!("modular and exact ranks disagree on the incoming coboundary of ({},{})", cell.l, cell.k)));
    }
    let sol = x.map(|x| {
        let mut f = GCochain::zero(cell.params, cell.l, cell.k);
        for (j, c) in idx.iter().zip(&x) {
            if !c.is_zero() {
                f.add_scaled(&cell.basis[*j], c);
            }
        }
        f
    });
    if sol.is_some() != (rank == rank_aug) {
        return Err(Error::CrossCheck("exact solve and rank test disagree on consistency".into()));
    }
    Ok((sol, rank, rank_aug))
}

/// Solves `D F0 = F0 * F2` for `F2` in the cell `(l2, k2)` of `engine`.
pub fn frobenius_solve_in(engine: &mut Engine, f0: &PoleCochain, l2: usize, k2: u32) -> Result<FrobeniusSolution> {
    let model = engine.model;
    relation_indices(f0.l, f0.k, f0.l, f0.k, l2, k2)?;
    let d0 = coboundary(model, f0);
    let cell = engine.cell(l2, k2)?;
    let mut keys = Keys::default();
    let cols: Vec<SpRowQ> = cell.basis.iter().map(|b| keys.flatten(&cup(model, f0, b), 0)).collect();
    let mut target = d0.clone();
    target.k = f0.k.min(k2);
    let t = keys.flatten(&target, 0);
    match linalg::solve(&cols, &t) {
        Some(x) => {
            let f2 = cell.combine(&x);
            let mut check = cup(model, f0, &f2);
            check.add_scaled(&target, &-Q::one());
            if !check.is_zero() {
                return Err(Error::CrossCheck("Frobenius solution does not satisfy the equation".into()));
            }
            Ok(FrobeniusSolution { f2, l2, k2 })
        }
        None => {
            let rows = crate::cell::transpose(&cols);
            let r = linalg::checked_rank(&rows.iter().map(linalg::to_integer_row).collect::<Vec<_>>())?;
            let mut aug = cols;
            aug.push(t);
            let rows = crate::cell::transpose(&aug);
            let ra = linalg::checked_rank(&rows.iter().map(linalg::to_integer_row).collect::<Vec<_>>())?;
            Err(Error::NoSolution(format!(
                "D F0 is not in F0 * C^{l2}_{k2}: rank {r}, augmented rank {ra}, cell dim {}",
                cell.dim()
            )))
        }
    }
}

/// [`frobenius_solve_in`] with the only index-consistent choice `(1, k0 - 1)`.
pub fn frobenius_solve(engine: &mut Engine, f0: &PoleCochain) -> Result<FrobeniusSolution> {
    if f0.k == 0 {
        return relation_indices(f0.l, 0, f0.l, 0, 1, 0).map(|_| unreachable!());
    }
    frobenius_solve_in(engine, f0, 1, f0.k - 1)
}

/// `[(DΦ)*Φ]` to order `lambda`, where `*` is the commutator
/// `[DΦ, Φ] = DΦ *_2 Φ - Φ *_2 DΦ`; closedness is checked coefficient-wise.
pub fn invariant_class(model: &Model, phi: &PoleCochain, lambda: u32, basis: &DualBasis) -> Result<InvariantClass> {
    if phi.k == 0 {
        return Err(Error::InvalidArgument("Φ must lie in a column with k >= 1 (D terminates at k = 0)".into()));
    }
    let dphi = coboundary(model, phi);
    let rep = commutator(model, &dphi, phi, lambda, basis)?;
    let mut residual = 0;
    for c in rep.coefficients.values() {
        residual += coboundary(model, c).num_entries();
    }
    Ok(InvariantClass {
        target_l: rep.target_l,
        target_k: rep.target_k,
        representative: rep,
        phi_l: phi.l,
        phi_k: phi.k,
        closed: residual == 0,
        closure_residual: residual,
    })
}

/// Whether the representatives differ by `DΨ` with `Ψ` in the incoming cell of
/// `engine` (bidegree `(L - 1, K + 1)` of the target).
pub fn class_equal(engine: &mut Engine, c1: &InvariantClass, c2: &InvariantClass) -> Result<ExactnessCertificate> {
    if (c1.target_l, c1.target_k) != (c2.target_l, c2.target_k) {
        return crate::invalid("classes live in different cells");
    }
    if c1.target_l == 0 {
        return crate::invalid("no incoming coboundary into l = 0");
    }
    let model = engine.model;
    let (l, k) = (c1.target_l, c1.target_k);
    let mut diff: PoleCochain = GCochain::zero(model.params, l, k);
    diff.add_scaled(&c2.representative.total(), &Q::one());
    diff.add_scaled(&c1.representative.total(), &-Q::one());
    let cell = engine.cell(l - 1, k + 1)?;
    if diff.is_zero() {
        return Ok(ExactnessCertificate {
            equal: true,
            preimage: Some(GCochain::zero(model.params, l - 1, k + 1)),
            rank: 0,
            rank_augmented: 0,
            incoming_dim: cell.dim(),
        });
    }
    let (sol, rank, rank_augmented) = solve_in_image(model, &cell, &diff)?;
    if let Some(psi) = &sol {
        let mut chk = coboundary(model, psi);
        chk.k = k;
        if chk != diff {
            return Err(Error::CrossCheck("exactness certificate does not reproduce the difference".into()));
        }
    }
    Ok(ExactnessCertificate { equal: sol.is_some(), preimage: sol, rank, rank_augmented, incoming_dim: cell.dim() })
}

/// Re-checks a certificate independently: `D(preimage) = c2 - c1`.
pub fn verify_certificate(model: &Model, c1: &InvariantClass, c2: &InvariantClass, psi: &PoleCochain) -> bool {
    let mut lhs = coboundary(model, psi);
    lhs.k = c1.target_k;
    let mut diff = c2.representative.total();
    diff.k = c1.target_k;
    diff.add_scaled(&c1.representative.total(), &-Q::one());
    lhs == diff
}

/// One relation `D Φ_i = DΦ * Φ_{i+1}` of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainStep {
    pub step: usize,
    pub n_i: usize,
    pub m_i: u32,
    pub n_next: usize,
    pub m_next: u32,
    pub next: PoleCochain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainReport {
    pub orthogonal: bool,
    pub steps: Vec<ChainStep>,
    /// Why the chain stopped.
    pub stop: String,
}

/// Iterates `D Φ_i = DΦ * Φ_{i+1}` starting from `Φ_0`, after checking the
/// orthogonality `Φ * DΦ_0 = 0`.
pub fn ogromno_chain(engine: &mut Engine, phi0: &PoleCochain, phi: &PoleCochain, max_steps: usize) -> Result<ChainReport> {
    let model = engine.model;
    if phi.k == 0 {
        return crate::invalid("Φ must have k >= 1");
    }
    let orth = cup(model, phi, &coboundary(model, phi0));
    if !orth.is_zero() {
        return Ok(ChainReport {
            orthogonal: false,
            steps: Vec::new(),
            stop: format!("orthogonality Φ * DΦ0 = 0 fails ({} nonzero entries)", orth.num_entries()),
        });
    }
    let dphi = coboundary(model, phi);
    let (n, m) = (phi.l, phi.k);
    let mut cur = phi0.clone();
    let mut steps = Vec::new();
    let stop;
    loop {
        if steps.len() >= max_steps {
            stop = format!("reached max_steps = {max_steps}");
            break;
        }
        let (ni, mi) = (cur.l, cur.k);
        // n_i = n + n_{i+1}, m_i - 1 = min(m - 1, m_{i+1})
        if ni < n || mi == 0 || mi > m {
            stop = format!("index recursion infeasible at step {}: (n_i, m_i) = ({ni}, {mi}), (n, m) = ({n}, {m})", steps.len());
            break;
        }
        let (nn, mn) = (ni - n, mi - 1);
        let di = coboundary(model, &cur);
        if di.is_zero() {
            let z = GCochain::zero(model.params, nn, mn);
            steps.push(ChainStep { step: steps.len(), n_i: ni, m_i: mi, n_next: nn, m_next: mn, next: z });
            stop = "D Φ_i = 0: chain terminates with Φ_{i+1} = 0".into();
            break;
        }
        let cell = engine.cell(nn, mn)?;
        let mut keys = Keys::default();
        let cols: Vec<SpRowQ> = cell.basis.iter().map(|b| keys.flatten(&cup(model, &dphi, b), 0)).collect();
        let t = keys.flatten(&di, 0);
        match linalg::solve(&cols, &t) {
            Some(x) => {
                let next = cell.combine(&x);
                steps.push(ChainStep { step: steps.len(), n_i: ni, m_i: mi, n_next: nn, m_next: mn, next: next.clone() });
                cur = next;
            }
            None => {
                stop = format!("step {} unsolvable in C^{nn}_{mn} (dim {})", steps.len(), cell.dim());
                break;
            }
        }
    }
    Ok(ChainReport { orthogonal: true, steps, stop })
}

/// A Godbillon–Vey-type preset: model, truncation and the bidegree of Φ.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GvPreset {
    pub name: &'static str,
    pub label: &'static str,
    pub params: ModelParams,
    pub trunc: Truncation,
    pub l: usize,
    pub k: u32,
}

const GV_MODEL: ModelParams = ModelParams { n: 3, m: 4, b0: 2, lmax: 3 };
/// At l = 0 the representative is `b -> [[b, a], a]`, which needs a Lie algebra
/// of nilpotency length three; with N = 3 it vanishes identically.
const GV_MODEL_L0: ModelParams = ModelParams { n: 4, m: 4, b0: 2, lmax: 3 };
const GV_AXIOMS: AxiomSet = AxiomSet { kg: false, tg: false, shuffle: true, pole: true, compose: true };

pub const GV_PRESETS: [GvPreset; 3] = [
    GvPreset { name: "l1k2", label: "(l,k) = (1,2)", params: GV_MODEL, trunc: Truncation { e: 2, axioms: GV_AXIOMS }, l: 1, k: 2 },
    GvPreset { name: "l0k3", label: "(l,k) = (0,3)", params: GV_MODEL_L0, trunc: Truncation { e: 2, axioms: GV_AXIOMS }, l: 0, k: 3 },
    GvPreset {
        name: "t1",
        label: "(l,k) = (1,1): the classical Godbillon–Vey case",
        params: GV_MODEL,
        trunc: Truncation { e: 2, axioms: GV_AXIOMS },
        l: 1,
        k: 1,
    },
];

pub fn gv_preset(name: &str) -> Result<GvPreset> {
    GV_PRESETS.iter().find(|p| p.name == name).copied().ok_or_else(|| {
        let names: Vec<&str> = GV_PRESETS.iter().map(|p| p.name).collect();
        Error::InvalidArgument(format!("unknown preset '{name}' (known: {})", names.join(", ")))
    })
}

/// Outcome of one GV preset run.
#[derive(Clone, Debug, PartialEq)]
pub struct GvRun {
    pub preset: &'static str,
    pub seed: u64,
    pub class: InvariantClass,
    pub nonzero: bool,
    /// Comparison of the class with zero: `equal` means the representative is exact.
    pub vanishing: ExactnessCertificate,
    /// Shift tests `Φ -> Φ + DΨ` for the given Ψ seeds.
    pub shifts: Vec<(u64, ExactnessCertificate)>,
}

/// Draws Φ from the stable cell of the preset, builds its class, and compares
/// it with the classes of `Φ + DΨ` for Ψ drawn from the incoming cell.
pub fn run_gv(model: &Model, preset: &GvPreset, seed: u64, psi_seeds: &[u64], lambda: u32) -> Result<GvRun> {
    if model.params != preset.params {
        return crate::invalid("model does not match the preset");
    }
    let mut phi_engine = Engine::new(model, preset.trunc);
    let mut prod_engine = Engine::new(model, Truncation { axioms: product_axioms(preset.trunc.axioms), ..preset.trunc });
    let basis = DualBasis::canonical(model);
    let st = phi_engine.stable(preset.l, preset.k)?;
    let phi = crate::cell::random_cochain(&st, seed, 3)?;
    let class = invariant_class(model, &phi, lambda, &basis)?;
    let mut zero = class.clone();
    zero.representative.coefficients.clear();
    let vanishing = class_equal(&mut prod_engine, &zero, &class)?;
    let mut shifts = Vec::new();
    if preset.l == 0 {
        // C^{-1} = 0: the only shift is Φ itself
        for &s in psi_seeds {
            shifts.push((s, class_equal_or_trivial(&mut prod_engine, &class, &class)?));
        }
    } else {
        let incoming = phi_engine.cell(preset.l - 1, preset.k + 1)?;
        for &s in psi_seeds {
            let psi = crate::cell::random_cochain(&incoming, s, 3)?;
            let mut shifted = phi.clone();
            let mut dpsi = coboundary(model, &psi);
            dpsi.k = phi.k;
            shifted.add_scaled(&dpsi, &Q::one());
            let c2 = invariant_class(model, &shifted, lambda, &basis)?;
            shifts.push((s, class_equal(&mut prod_engine, &class, &c2)?));
        }
    }
    Ok(GvRun { preset: preset.name, seed, nonzero: !class.is_zero(), vanishing, class, shifts })
}

fn class_equal_or_trivial(engine: &mut Engine, c1: &InvariantClass, c2: &InvariantClass) -> Result<ExactnessCertificate> {
    if c1.target_l == 0 && c1.representative == c2.representative {
        return Ok(ExactnessCertificate { equal: true, preimage: None, rank: 0, rank_augmented: 0, incoming_dim: 0 });
    }
    class_equal(engine, c1, c2)
}

/// Per-order entry counts of a representative, for reports.
pub fn order_profile(c: &InvariantClass) -> BTreeMap<i64, usize> {
    c.representative.coefficients.iter().map(|(m, f)| (*m, f.num_entries())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_bookkeeping() {
        assert!(relation_indices(1, 2, 1, 2, 1, 1).is_ok());
        assert!(relation_indices(1, 0, 1, 0, 1, 0).is_err());
        assert!(relation_indices(1, 2, 1, 2, 2, 1).is_err());
        assert!(relation_indices(1, 3, 1, 3, 1, 1).is_err());
    }

    #[test]
    fn presets_resolve() {
        assert_eq!(gv_preset("t1").unwrap().k, 1);
        assert!(gv_preset("nope").is_err());
    }
}
