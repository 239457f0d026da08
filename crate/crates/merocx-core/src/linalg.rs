//! Exact linear algebra: sparse fraction-free rank, dense Bareiss, a modular
//! fast path, a dense rational oracle, and exact kernels.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::{modp, Q};

/// Sparse row, sorted by column.
pub type SpRowZ = Vec<(u32, BigInt)>;
pub type SpRowQ = Vec<(u32, Q)>;

/// Scales a rational sparse row to a primitive integer row.
pub fn to_integer_row(r: &SpRowQ) -> SpRowZ {
    let vals: Vec<Q> = r.iter().map(|p| p.1.clone()).collect();
    let ints = crate::scalar::primitive(&vals);
    r.iter().zip(ints).map(|(p, x)| (p.0, x)).filter(|p| !p.1.is_zero()).collect()
}

/// Dense Gaussian elimination over the rationals (brute-force oracle).
pub fn dense_rank_q(rows: &[Vec<Q>]) -> usize {
    let mut m: Vec<Vec<Q>> = rows.to_vec();
    let nr = m.len();
    if nr == 0 {
        return 0;
    }
    let nc = m[0].len();
    let mut rank = 0;
    for c in 0..nc {
        let Some(p) = (rank..nr).find(|&r| !m[r][c].is_zero()) else { continue };
        m.swap(rank, p);
        let inv = m[rank][c].recip();
        for r in 0..nr {
            if r != rank && !m[r][c].is_zero() {
                let f = &m[r][c] * &inv;
                for k in c..nc {
                    let t = &m[rank][k] * &f;
                    m[r][k] -= t;
                }
            }
        }
        rank += 1;
        if rank == nr {
            break;
        }
    }
    rank
}

/// Dense fraction-free Bareiss elimination on an integer matrix.
pub fn bareiss_rank(rows: &[Vec<BigInt>]) -> usize {
    let mut m: Vec<Vec<BigInt>> = rows.to_vec();
    let nr = m.len();
    if nr == 0 {
        return 0;
    }
    let nc = m[0].len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for c in 0..nc {
        let Some(p) = (rank..nr).find(|&r| !m[r][c].is_zero()) else { continue };
        m.swap(rank, p);
        for r in rank + 1..nr {
            for k in c + 1..nc {
                let v = (&m[rank][c] * &m[r][k] - &m[r][c] * &m[rank][k]) / &prev;
                m[r][k] = v;
            }
            m[r][c] = BigInt::zero();
        }
        prev = m[rank][c].clone();
        rank += 1;
        if rank == nr {
            break;
        }
    }
    rank
}

fn row_content(r: &SpRowZ) -> BigInt {
    let mut g = BigInt::zero();
    for (_, x) in r {
        g = g.gcd(x);
        if g.is_one() {
            break;
        }
    }
    g
}

/// `a*x - b*y` on sparse integer rows.
fn combine_z(x: &SpRowZ, a: &BigInt, y: &SpRowZ, b: &BigInt) -> SpRowZ {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let ci = x.get(i).map(|p| p.0).unwrap_or(u32::MAX);
        let cj = y.get(j).map(|p| p.0).unwrap_or(u32::MAX);
        if ci < cj {
            out.push((ci, a * &x[i].1));
            i += 1;
        } else if cj < ci {
            out.push((cj, -(b * &y[j].1)));
            j += 1;
        } else {
            let v = a * &x[i].1 - b * &y[j].1;
            if !v.is_zero() {
                out.push((ci, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Sparse fraction-free elimination with Markowitz-style pivoting. Rows are
/// kept primitive (content removed) after each update.
pub fn sparse_ff_rank(rows: &[SpRowZ]) -> usize {
    let mut active: Vec<SpRowZ> = rows.iter().filter(|r| !r.is_empty()).cloned().collect();
    let mut rank = 0;
    while !active.is_empty() {
        // column counts for pivot choice
        let mut count: BTreeMap<u32, usize> = BTreeMap::new();
        for r in &active {
            for (c, _) in r {
                *count.entry(*c).or_insert(0) += 1;
            }
        }
        let mut best: Option<(usize, u64, usize, u32)> = None;
        for (i, r) in active.iter().enumerate() {
            for (c, v) in r {
                let key = ((r.len() - 1) * (count[c] - 1), v.bits());
                if best.map_or(true, |b| key < (b.0, b.1)) {
                    best = Some((key.0, key.1, i, *c));
                }
            }
        }
        let (_, _, pi, pc) = best.unwrap();
        let piv = active.swap_remove(pi);
        let pv = piv.iter().find(|p| p.0 == pc).unwrap().1.clone();
        rank += 1;
        let mut next = Vec::with_capacity(active.len());
        for r in active.into_iter() {
            match r.iter().find(|p| p.0 == pc) {
                None => next.push(r),
                Some((_, rv)) => {
                    let g = pv.gcd(rv);
                    let a = &pv / &g;
                    let b = rv / &g;
                    let mut nr = combine_z(&r, &a, &piv, &b);
                    if !nr.is_empty() {
                        let ct = row_content(&nr);
                        if !ct.is_one() {
                            for p in nr.iter_mut() {
                                p.1 = &p.1 / &ct;
                            }
                        }
                        next.push(nr);
                    }
                }
            }
        }
        active = next;
    }
    rank
}

/// Rank modulo 2^61 - 1 (a lower bound for the rational rank).
pub fn modular_rank(rows: &[SpRowZ]) -> usize {
    let rows_p: Vec<Vec<(u32, u64)>> = rows
        .iter()
        .map(|r| r.iter().map(|(c, v)| (*c, modp::reduce(v))).filter(|p| p.1 != 0).collect())
        .collect();
    modular_rank_p(rows_p)
}

fn modular_rank_p(rows: Vec<Vec<(u32, u64)>>) -> usize {
    let mut pivots: BTreeMap<u32, Vec<(u32, u64)>> = BTreeMap::new();
    for r in rows {
        if let Some(x) = reduce_mod(r, &pivots) {
            let lead = x[0].0;
            pivots.insert(lead, x);
        }
    }
    pivots.len()
}

/// Reduces `r` against monic pivot rows; returns the monic remainder if nonzero.
fn reduce_mod(mut r: Vec<(u32, u64)>, pivots: &BTreeMap<u32, Vec<(u32, u64)>>) -> Option<Vec<(u32, u64)>> {
    loop {
        if r.is_empty() {
            return None;
        }
        // find first column with a pivot
        let hit = r.iter().position(|(c, _)| pivots.contains_key(c));
        let Some(k) = hit else {
            let inv = modp::inv(r[0].1);
            for p in r.iter_mut() {
                p.1 = modp::mul(p.1, inv);
            }
            return Some(r);
        };
        if k > 0 {
            // leading entry has no pivot: make it a new pivot after full reduction of the tail
            let lead_inv = modp::inv(r[0].1);
            for p in r.iter_mut() {
                p.1 = modp::mul(p.1, lead_inv);
            }
            // eliminate tail entries that have pivots (keeps rows in a canonical-ish form)
            let mut i = 1;
            while i < r.len() {
                let c = r[i].0;
                if let Some(pr) = pivots.get(&c) {
                    let f = r[i].1;
                    r = axpy_mod(&r, pr, f);
                    i = 1;
                    continue;
                }
                i += 1;
            }
            return Some(r);
        }
        let c = r[0].0;
        let f = r[0].1;
        r = axpy_mod(&r, &pivots[&c], f);
    }
}

/// `x - f*y` mod p.
fn axpy_mod(x: &[(u32, u64)], y: &[(u32, u64)], f: u64) -> Vec<(u32, u64)> {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let ci = x.get(i).map(|p| p.0).unwrap_or(u32::MAX);
        let cj = y.get(j).map(|p| p.0).unwrap_or(u32::MAX);
        if ci < cj {
            out.push(x[i]);
            i += 1;
        } else if cj < ci {
            out.push((cj, modp::sub(0, modp::mul(f, y[j].1))));
            j += 1;
        } else {
            let v = modp::sub(x[i].1, modp::mul(f, y[j].1));
            if v != 0 {
                out.push((ci, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Exact rank with the modular cross-check; disagreement is an error.
pub fn checked_rank(rows: &[SpRowZ]) -> crate::Result<usize> {
    let exact = sparse_ff_rank(rows);
    let fast = modular_rank(rows);
    if exact != fast {
        return Err(crate::Error::CrossCheck(alloc::format!("modular rank {fast} != exact rank {exact}")));
    }
    Ok(exact)
}

fn axpy_q(x: &SpRowQ, y: &SpRowQ, f: &Q) -> SpRowQ {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        let ci = x.get(i).map(|p| p.0).unwrap_or(u32::MAX);
        let cj = y.get(j).map(|p| p.0).unwrap_or(u32::MAX);
        if ci < cj {
            out.push(x[i].clone());
            i += 1;
        } else if cj < ci {
            out.push((cj, -(f * &y[j].1)));
            j += 1;
        } else {
            let v = &x[i].1 - f * &y[j].1;
            if !v.is_zero() {
                out.push((ci, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn rref_insert(r: &SpRowQ, pivots: &mut BTreeMap<u32, SpRowQ>) -> bool {
    let mut x = r.clone();
    loop {
        let Some(k) = x.iter().position(|(c, _)| pivots.contains_key(c)) else { break };
        let c = x[k].0;
        let f = x[k].1.clone();
        x = axpy_q(&x, &pivots[&c], &f);
    }
    if x.is_empty() {
        return false;
    }
    let inv = x[0].1.recip();
    for p in x.iter_mut() {
        p.1 *= &inv;
    }
    let lead = x[0].0;
    let keys: Vec<u32> = pivots.keys().copied().collect();
    for c in keys {
        let row = &pivots[&c];
        if let Some(v) = row.iter().find(|p| p.0 == lead).map(|p| p.1.clone()) {
            let nr = axpy_q(row, &x, &v);
            pivots.insert(c, nr);
        }
    }
    pivots.insert(lead, x);
    true
}

/// Rows independent modulo p, in input order (they are independent over Q too).
fn modular_selection(rows: &[SpRowQ]) -> Vec<usize> {
    let mut piv_p: BTreeMap<u32, Vec<(u32, u64)>> = BTreeMap::new();
    let mut chosen = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        let rp: Vec<(u32, u64)> = r.iter().filter_map(|(c, v)| modp::from_q(v).map(|x| (*c, x))).filter(|p| p.1 != 0).collect();
        if let Some(x) = reduce_mod(rp, &piv_p) {
            piv_p.insert(x[0].0, x);
            chosen.push(k);
        }
    }
    chosen
}

/// Reduced row echelon form over Q, keyed by pivot column.
///
/// A modular pass picks a maximal mod-p independent subset, which is eliminated
/// exactly; every skipped row is then reduced exactly against the result and
/// inserted if it survives, so the output is exact regardless of the prime.
pub fn rref(rows: &[SpRowQ]) -> BTreeMap<u32, SpRowQ> {
    let chosen = modular_selection(rows);
    let mut pivots: BTreeMap<u32, SpRowQ> = BTreeMap::new();
    let mut is_chosen = vec![false; rows.len()];
    for k in &chosen {
        is_chosen[*k] = true;
        rref_insert(&rows[*k], &mut pivots);
    }
    for (k, r) in rows.iter().enumerate() {
        if is_chosen[k] {
            continue;
        }
        let mut res = r.clone();
        for (c, v) in r {
            if let Some(p) = pivots.get(c) {
                res = axpy_q(&res, p, v);
            }
        }
        if !res.is_empty() {
            rref_insert(&res, &mut pivots);
        }
    }
    pivots
}

/// Kernel basis read off an RREF: one vector per free column.
fn kernel_from_rref(piv: &BTreeMap<u32, SpRowQ>, ncols: u32) -> Vec<SpRowQ> {
    let mut colref: BTreeMap<u32, Vec<(u32, Q)>> = BTreeMap::new();
    for (pc, row) in piv {
        for (c, v) in row {
            if c != pc {
                colref.entry(*c).or_default().push((*pc, v.clone()));
            }
        }
    }
    let mut out = Vec::new();
    for f in 0..ncols {
        if piv.contains_key(&f) {
            continue;
        }
        let mut v: Vec<(u32, Q)> = vec![(f, Q::one())];
        if let Some(list) = colref.get(&f) {
            for (pc, x) in list {
                v.push((*pc, -x.clone()));
            }
        }
        v.sort_by_key(|p| p.0);
        out.push(v);
    }
    out
}

/// Basis of `{x in Q^ncols : rows . x = 0}`, one vector per free column.
///
/// Only the mod-p independent rows are eliminated exactly; the candidate kernel
/// is then certified against every row in integer arithmetic (a kernel of the
/// right dimension that annihilates all rows is the kernel). If certification
/// fails the full exact elimination is used.
pub fn nullspace(rows: &[SpRowQ], ncols: u32) -> Vec<SpRowQ> {
    let chosen = modular_selection(rows);
    let mut piv: BTreeMap<u32, SpRowQ> = BTreeMap::new();
    for k in &chosen {
        rref_insert(&rows[*k], &mut piv);
    }
    let cand = kernel_from_rref(&piv, ncols);
    if annihilates(rows, &cand) {
        return cand;
    }
    kernel_from_rref(&rref(rows), ncols)
}

/// Exact check that every row annihilates every vector, in integer arithmetic.
fn annihilates(rows: &[SpRowQ], vecs: &[SpRowQ]) -> bool {
    if vecs.is_empty() {
        return true;
    }
    // column -> [(vector index, integer entry)]
    let mut bycol: BTreeMap<u32, Vec<(usize, BigInt)>> = BTreeMap::new();
    for (i, v) in vecs.iter().enumerate() {
        for (c, x) in to_integer_row(v) {
            bycol.entry(c).or_default().push((i, x));
        }
    }
    let mut acc: Vec<BigInt> = vec![BigInt::zero(); vecs.len()];
    for r in rows {
        let rz = to_integer_row(r);
        let mut touched = Vec::new();
        for (c, x) in &rz {
            if let Some(list) = bycol.get(c) {
                for (i, y) in list {
                    if acc[*i].is_zero() {
                        touched.push(*i);
                    }
                    acc[*i] += x * y;
                }
            }
        }
        let mut ok = true;
        for i in touched {
            if !acc[i].is_zero() {
                ok = false;
            }
            acc[i] = BigInt::zero();
        }
        if !ok {
            return false;
        }
    }
    true
}

/// Coordinates of each target in the span of the independent vectors `basis`;
/// `None` if a target lies outside the span or the basis is dependent.
pub fn coordinates(basis: &[SpRowQ], targets: &[SpRowQ]) -> Option<Vec<Vec<Q>>> {
    let n = basis.len() as u32;
    let mut by_row: BTreeMap<u32, SpRowQ> = BTreeMap::new();
    for (j, c) in basis.iter().chain(targets.iter()).enumerate() {
        for (r, v) in c {
            by_row.entry(*r).or_default().push((j as u32, v.clone()));
        }
    }
    let rows: Vec<SpRowQ> = by_row.into_values().collect();
    let piv = rref(&rows);
    if piv.len() != n as usize || piv.keys().any(|c| *c >= n) {
        return None;
    }
    let mut out = Vec::with_capacity(targets.len());
    for j in 0..targets.len() as u32 {
        let col = n + j;
        let mut x = vec![Q::zero(); n as usize];
        for (pc, row) in &piv {
            if let Some(v) = row.iter().find(|p| p.0 == col) {
                x[*pc as usize] = v.1.clone();
            }
        }
        out.push(x);
    }
    Some(out)
}

/// Solves `sum_i x_i cols_i = target` over Q; `None` if inconsistent.
pub fn solve(cols: &[SpRowQ], target: &SpRowQ) -> Option<Vec<Q>> {
    solve_with_rank(cols, target).0
}

/// [`solve`] plus the exact ranks of `cols` and of `cols` augmented by `target`.
pub fn solve_with_rank(cols: &[SpRowQ], target: &SpRowQ) -> (Option<Vec<Q>>, usize, usize) {
    // transpose into rows indexed by ambient coordinate, with the target appended
    let n = cols.len() as u32;
    let mut by_row: BTreeMap<u32, SpRowQ> = BTreeMap::new();
    for (j, c) in cols.iter().enumerate() {
        for (r, v) in c {
            by_row.entry(*r).or_default().push((j as u32, v.clone()));
        }
    }
    for (r, v) in target {
        by_row.entry(*r).or_default().push((n, -v.clone()));
    }
    let rows: Vec<SpRowQ> = by_row.into_values().collect();
    let piv = rref(&rows);
    let rank_aug = piv.len();
    if piv.contains_key(&n) {
        return (None, rank_aug - 1, rank_aug);
    }
    let mut x = vec![Q::zero(); cols.len()];
    for (pc, row) in &piv {
        // x_pc + sum_free a_f x_f + a_n * 1 = 0 with free x_f = 0
        let an = row.iter().find(|p| p.0 == n).map(|p| p.1.clone()).unwrap_or_else(Q::zero);
        x[*pc as usize] = -an;
    }
    (Some(x), rank_aug, rank_aug)
}

pub fn is_zero_row<T: Zero>(r: &[(u32, T)]) -> bool {
    r.iter().all(|p| p.1.is_zero())
}

pub fn max_abs(r: &SpRowQ) -> Q {
    r.iter().map(|p| p.1.abs()).max().unwrap_or_else(Q::zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn random_rows(seed: u64, nr: usize, nc: usize, density: u32, rank_cap: usize) -> Vec<Vec<i64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let basis: Vec<Vec<i64>> = (0..rank_cap)
            .map(|_| (0..nc).map(|_| if rng.next_u32() % 100 < density { (rng.next_u32() % 7) as i64 - 3 } else { 0 }).collect())
            .collect();
        (0..nr)
            .map(|_| {
                let mut r = vec![0i64; nc];
                for b in &basis {
                    let f = (rng.next_u32() % 5) as i64 - 2;
                    for k in 0..nc {
                        r[k] += f * b[k];
                    }
                }
                r
            })
            .collect()
    }

    fn sparse(r: &[i64]) -> SpRowZ {
        r.iter().enumerate().filter(|p| *p.1 != 0).map(|(c, v)| (c as u32, BigInt::from(*v))).collect()
    }

    #[test]
    fn all_rank_paths_agree() {
        for seed in 0..40 {
            let rows = random_rows(seed, 9 + (seed as usize % 5), 11, 40, 1 + seed as usize % 8);
            let dense_q: Vec<Vec<Q>> = rows.iter().map(|r| r.iter().map(|x| q(*x)).collect()).collect();
            let dense_z: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|x| BigInt::from(*x)).collect()).collect();
            let sp: Vec<SpRowZ> = rows.iter().map(|r| sparse(r)).collect();
            let a = dense_rank_q(&dense_q);
            assert_eq!(bareiss_rank(&dense_z), a);
            assert_eq!(sparse_ff_rank(&sp), a);
            assert_eq!(modular_rank(&sp), a);
            let spq: Vec<SpRowQ> = sp.iter().map(|r| r.iter().map(|(c, v)| (*c, Q::from_integer(v.clone()))).collect()).collect();
            assert_eq!(rref(&spq).len(), a);
            let ns = nullspace(&spq, 11);
            assert_eq!(ns.len(), 11 - a);
            for v in &ns {
                for r in &spq {
                    let mut s = Q::zero();
                    for (c, x) in r {
                        if let Some(y) = v.iter().find(|p| p.0 == *c) {
                            s += x * &y.1;
                        }
                    }
                    assert!(s.is_zero());
                }
            }
        }
    }

    #[test]
    fn corrupted_entry_changes_rank() {
        let rows = random_rows(7, 8, 8, 50, 4);
        let sp: Vec<SpRowZ> = rows.iter().map(|r| sparse(r)).collect();
        let before = sparse_ff_rank(&sp);
        let mut bad = rows.clone();
        bad[0][0] += 1000;
        bad[3][5] -= 77;
        let after = sparse_ff_rank(&bad.iter().map(|r| sparse(r)).collect::<Vec<_>>());
        assert_ne!(before, after);
    }

    #[test]
    fn coordinates_in_span() {
        let b: Vec<SpRowQ> = vec![vec![(0, q(1)), (2, q(1))], vec![(1, q(2))]];
        let t: Vec<SpRowQ> = vec![vec![(0, q(3)), (1, q(4)), (2, q(3))]];
        assert_eq!(coordinates(&b, &t), Some(vec![vec![q(3), q(2)]]));
        assert_eq!(coordinates(&b, &[vec![(0, q(1))]]), None);
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let cols: Vec<SpRowQ> = vec![vec![(0, q(1)), (1, q(1))], vec![(1, q(1)), (2, q(1))]];
        let t: SpRowQ = vec![(0, q(2)), (1, q(5)), (2, q(3))];
        assert_eq!(solve(&cols, &t), Some(vec![q(2), q(3)]));
        let bad: SpRowQ = vec![(0, q(1))];
        assert_eq!(solve(&cols, &bad), None);
    }
}
