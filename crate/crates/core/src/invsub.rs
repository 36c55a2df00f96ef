//! Common invariant subspaces of matrix sets (column action A·v), found with
//! a MeatAxe-style search: random algebra elements, kernels of irreducible
//! factors of their minimal polynomials, spinning, and Norton's dual test.

use crate::field::{Echelon, Fe, FieldCtx, Matrix, Subspace, UniPoly};
use crate::rng::{self, Rng};
use rand::Rng as _;
use std::collections::VecDeque;

/// Random algebra elements tried per dimension before giving up.
pub const BUDGET_PER_DIM: usize = 20;

/// Smallest subspace containing `seed` and invariant under every matrix.
pub fn spin(seed: &Subspace, mats: &[Matrix], f: &FieldCtx) -> Subspace {
    spin_vectors(seed.ambient(), seed.vectors(), mats, f)
}

fn spin_vectors(d: usize, seed: Vec<Vec<Fe>>, mats: &[Matrix], f: &FieldCtx) -> Subspace {
    let mut basis = Echelon::new(d);
    let mut queue = VecDeque::new();
    let mut kept = Vec::new();
    for v in seed {
        if basis.insert(&v, f) {
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        for m in mats {
            let w = m.mul_vec(&v, f);
            if basis.insert(&w, f) {
                queue.push_back(w);
            }
        }
        kept.push(v);
    }
    Subspace::from_vectors(d, kept, f)
}

/// Outcome of the search, with the evidence behind a negative answer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Search {
    Found(Subspace),
    /// Norton's criterion certified that no proper subspace exists.
    Irreducible,
    /// Budget exhausted without a certificate.
    Exhausted,
}

fn random_element(mats: &[Matrix], d: usize, f: &FieldCtx, r: &mut Rng) -> Matrix {
    let mut theta = Matrix::scalar(d, f.random(r));
    if mats.is_empty() {
        return theta;
    }
    let terms = r.gen_range(1..=3);
    for _ in 0..terms {
        let len = r.gen_range(1..=2usize.min(2 * d));
        let mut w = mats[r.gen_range(0..mats.len())].clone();
        for _ in 1..len {
            w = w.mul(&mats[r.gen_range(0..mats.len())], f);
        }
        theta = theta.add(&w.scale(f.random_nonzero(r), f), f);
    }
    theta
}

/// Search with an explicit budget of random algebra elements.
pub fn search(mats: &[Matrix], d: usize, budget: usize, seed: u64, f: &FieldCtx) -> Search {
    if d <= 1 {
        return Search::Irreducible;
    }
    let transposes: Vec<Matrix> = mats.iter().map(|m| m.transpose()).collect();
    let mut r = rng::rng(seed);
    for attempt in 0..budget {
        let theta = random_element(mats, d, f, &mut r);
        let Ok(mp) = theta.min_poly(f) else { continue };
        let Ok(factors) = mp.factor(f, rng::derive(seed, attempt as u64)) else {
            continue;
        };
        let mut factors: Vec<UniPoly> = factors.into_iter().map(|(g, _)| g).collect();
        factors.sort_by_key(|g| g.deg().unwrap_or(0));
        for g in factors {
            let gt = g.eval_matrix(&theta, f);
            let kernel = gt.kernel(f);
            let Some(v) = kernel.vectors().into_iter().next() else {
                continue;
            };
            let w = spin_vectors(d, vec![v], mats, f);
            if w.dim() < d {
                return Search::Found(w);
            }
            if Some(kernel.dim()) == g.deg() {
                let Some(u) = gt.transpose().kernel(f).vectors().into_iter().next() else {
                    continue;
                };
                let wt = spin_vectors(d, vec![u], &transposes, f);
                if wt.dim() < d {
                    return Search::Found(wt.annihilator(f));
                }
                return Search::Irreducible;
            }
        }
    }
    Search::Exhausted
}

/// A nontrivial common invariant subspace, if one is found.
pub fn common_invariant_subspace(
    mats: &[Matrix],
    d: usize,
    seed: u64,
    f: &FieldCtx,
) -> Option<Subspace> {
    match search(mats, d, BUDGET_PER_DIM * d.max(1), seed, f) {
        Search::Found(v) => {
            debug_assert!(v.dim() > 0 && v.dim() < d && mats.iter().all(|m| v.is_invariant(m, f)));
            Some(v)
        }
        _ => None,
    }
}

/// Flag refinement: T with T⁻¹·Aᵢ·T block lower triangular for every i, each
/// diagonal block admitting no further common invariant subspace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicFlag {
    pub t: Matrix,
    pub t_inv: Matrix,
    pub blocks: Vec<usize>,
}

pub fn atomic_flag(mats: &[Matrix], d: usize, seed: u64, f: &FieldCtx) -> AtomicFlag {
    let (t, blocks) = flag_rec(mats, d, seed, f);
    let t_inv = t.inverse(f).expect("flag basis is invertible");
    AtomicFlag { t, t_inv, blocks }
}

fn flag_rec(mats: &[Matrix], d: usize, seed: u64, f: &FieldCtx) -> (Matrix, Vec<usize>) {
    let Some(v) = common_invariant_subspace(mats, d, seed, f) else {
        return (Matrix::identity(d), vec![d]);
    };
    let k = v.dim();
    // Columns: completion first, then the invariant subspace.
    let mut cols: Vec<Vec<Fe>> = v
        .complement_indices(f)
        .into_iter()
        .map(|i| Matrix::unit(d, 1, i, 0).col(0))
        .collect();
    cols.extend(v.vectors());
    let t0 = Matrix::from_rows(cols).transpose();
    let t0_inv = t0.inverse(f).expect("completed basis");
    let conj: Vec<Matrix> = mats.iter().map(|m| t0_inv.mul(m, f).mul(&t0, f)).collect();
    let top: Vec<Matrix> = conj.iter().map(|m| m.block(0, 0, d - k, d - k)).collect();
    let bottom: Vec<Matrix> = conj.iter().map(|m| m.block(d - k, d - k, k, k)).collect();
    let (t1, b1) = flag_rec(&top, d - k, rng::derive(seed, 1), f);
    let (t2, b2) = flag_rec(&bottom, k, rng::derive(seed, 2), f);
    let mut blocks = b1;
    blocks.extend(b2);
    (t0.mul(&t1.direct_sum(&t2), f), blocks)
}

/// Every conjugated matrix vanishes above the diagonal blocks.
pub fn is_block_lower(m: &Matrix, blocks: &[usize]) -> bool {
    let mut start = 0;
    for &b in blocks {
        for r in start..start + b {
            for c in start + b..m.cols() {
                if !m[(r, c)].is_zero() {
                    return false;
                }
            }
        }
        start += b;
    }
    true
}
