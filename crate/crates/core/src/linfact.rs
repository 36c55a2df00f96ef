//! Factorization of full monic linear matrices into atoms.
//!
//! With an invertible constant term the atoms come from a flag of common
//! invariant subspaces of A₀⁻¹Aᵢ. Otherwise the pencil is dilated by ℓ×ℓ
//! matrix variables until its constant term is invertible, split there, and
//! the split is carried back to the original size by a rank argument over the
//! ℓ slices of the transforming matrices.

use crate::error::{Error, Result, Side};
use crate::field::{Echelon, Fe, FieldCtx, Matrix, Subspace};
use crate::invsub::{self, Search, BUDGET_PER_DIM};
use crate::linmat::{matrix_to_json, random_point, LinearMatrix, LinearMatrixDoc};
use crate::rng;
use serde::{Deserialize, Serialize};

/// Retries of the randomized steps of [`factor_general`] with fresh seeds.
pub const DEFAULT_RETRIES: usize = 3;

/// Random samples per dilation size. Small sizes keep the invariant-subspace
/// search cheap, so sampling is generous before growing ℓ.
pub const DILATION_TRIALS: usize = 64;

/// T_left·L·T_right = B with B block lower triangular.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomicBlockForm {
    pub t_left: Matrix,
    pub t_right: Matrix,
    pub b: LinearMatrix,
    pub blocks: Vec<usize>,
}

impl AtomicBlockForm {
    pub fn offsets(&self) -> Vec<usize> {
        let mut out = vec![0];
        for &b in &self.blocks {
            out.push(out.last().unwrap() + b);
        }
        out
    }

    pub fn diagonal_block(&self, j: usize) -> LinearMatrix {
        let o = self.offsets();
        self.b.block(o[j], o[j], self.blocks[j], self.blocks[j])
    }

    /// A block with constant diagonal is invertible and contributes a unit.
    pub fn is_unit_block(&self, j: usize) -> bool {
        self.diagonal_block(j).is_constant()
    }

    pub fn atom_count(&self) -> usize {
        (0..self.blocks.len())
            .filter(|&j| !self.is_unit_block(j))
            .count()
    }

    /// Identity except block row j, which is copied from B.
    pub fn factor(&self, j: usize) -> LinearMatrix {
        let o = self.offsets();
        let rows: Vec<usize> = (o[j]..o[j + 1]).collect();
        self.keep_rows(|r| rows.contains(&r))
    }

    /// Product of the first j factors: B's block rows below j, identity after.
    pub fn prefix(&self, j: usize) -> LinearMatrix {
        let o = self.offsets();
        self.keep_rows(|r| r < o[j])
    }

    fn keep_rows(&self, keep: impl Fn(usize) -> bool) -> LinearMatrix {
        let d = self.b.dim();
        let mut out = LinearMatrix::identity(&self.b.ctx, d, self.b.nvars());
        for r in (0..d).filter(|&r| keep(r)) {
            for c in 0..d {
                out.set_entry(r, c, &self.b.entry(r, c));
            }
        }
        out
    }

    /// Exact coefficientwise check of the conjugation and of the block shape.
    pub fn check(&self, l: &LinearMatrix) -> bool {
        let f = &l.ctx;
        let conj = l.left_mul(&self.t_left).right_mul(&self.t_right);
        conj == self.b
            && self.blocks.iter().sum::<usize>() == l.dim()
            && self
                .b
                .coeffs()
                .iter()
                .all(|m| invsub::is_block_lower(m, &self.blocks))
            && self.t_left.is_invertible(f)
            && self.t_right.is_invertible(f)
    }

    pub fn to_linfactorization(&self) -> Result<LinFactorization> {
        let f = &self.b.ctx;
        let factors = (0..self.blocks.len()).map(|j| self.factor(j)).collect();
        let atom = (0..self.blocks.len())
            .map(|j| !self.is_unit_block(j))
            .collect();
        Ok(LinFactorization {
            left: self.t_left.inverse(f)?,
            factors,
            atom,
            right: self.t_right.inverse(f)?,
        })
    }

    pub fn to_doc(&self) -> AtomicBlockFormDoc {
        AtomicBlockFormDoc {
            field: self.b.ctx.spec(),
            t_left: matrix_to_json(&self.t_left),
            t_right: matrix_to_json(&self.t_right),
            b: self.b.to_doc(),
            blocks: self.blocks.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AtomicBlockFormDoc {
    pub field: String,
    pub t_left: Vec<Vec<u64>>,
    pub t_right: Vec<Vec<u64>>,
    #[serde(rename = "B")]
    pub b: LinearMatrixDoc,
    pub blocks: Vec<usize>,
}

/// L = left · F₁ ⋯ F_k · right with scalar ends.
#[derive(Clone, Debug)]
pub struct LinFactorization {
    pub left: Matrix,
    pub factors: Vec<LinearMatrix>,
    pub atom: Vec<bool>,
    pub right: Matrix,
}

impl LinFactorization {
    pub fn atom_count(&self) -> usize {
        self.atom.iter().filter(|&&a| a).count()
    }

    /// Product identity at random m×m points.
    pub fn check(&self, l: &LinearMatrix, trials: usize, m: usize, seed: u64) -> Result<bool> {
        let f = &l.ctx;
        let mut r = rng::rng(seed);
        let id = Matrix::identity(m);
        for _ in 0..trials {
            let pt = random_point(f, l.nvars(), m, &mut r);
            let mut acc = self.left.kron(&id, f);
            for fac in &self.factors {
                acc = acc.mul(&fac.eval_linmat(&pt)?, f);
            }
            acc = acc.mul(&self.right.kron(&id, f), f);
            if acc != l.eval_linmat(&pt)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn monic_side(l: &LinearMatrix) -> Option<Side> {
    if l.is_right_monic() {
        Some(Side::Right)
    } else if l.is_left_monic() {
        Some(Side::Left)
    } else {
        None
    }
}

/// Atomic block form of a monic pencil whose constant term is invertible.
pub fn factor_special(l: &LinearMatrix, seed: u64) -> Result<(LinFactorization, AtomicBlockForm)> {
    let form = special_form(l, seed)?;
    Ok((form.to_linfactorization()?, form))
}

fn special_form(l: &LinearMatrix, seed: u64) -> Result<AtomicBlockForm> {
    if !l.is_square() {
        return Err(Error::NotSquare);
    }
    let f = &l.ctx;
    let a0_inv = l
        .a0()
        .inverse(f)
        .map_err(|_| Error::Precondition("constant term is singular".into()))?;
    if monic_side(l).is_none() {
        return Err(Error::NotMonic(Side::Right));
    }
    let d = l.dim();
    let mats: Vec<Matrix> = l.coeffs()[1..].iter().map(|a| a0_inv.mul(a, f)).collect();
    let flag = invsub::atomic_flag(&mats, d, seed, f);
    let t_left = flag.t_inv.mul(&a0_inv, f);
    let b = l.left_mul(&t_left).right_mul(&flag.t);
    Ok(AtomicBlockForm {
        t_left,
        t_right: flag.t,
        b,
        blocks: flag.blocks,
    })
}

/// Output of [`hkv_descent`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Descent {
    pub u: Matrix,
    pub v: Matrix,
    pub e1: usize,
    pub e2: usize,
    /// Σ (rank Pᵢ + rank P̂ᵢ) and its lower bound 2·dim Σ range(Pᵢ).
    pub p_ranks: (usize, usize),
    /// Σ (rank Qᵢ + rank Q̂ᵢ) and its lower bound.
    pub q_ranks: (usize, usize),
    /// Slice index that satisfied the counting claim.
    pub index: usize,
    /// Whether the projected P slice (true) or projected Q slice was used.
    pub projected_p: bool,
}

/// Projections P̂ᵢ onto range(Pᵢ) ∖ Σ_{j≠i} range(Pⱼ), each D×D.
fn projections(ps: &[Matrix], dim: usize, f: &FieldCtx) -> Vec<Matrix> {
    let ranges: Vec<Subspace> = ps.iter().map(|p| Subspace::column_space(p, f)).collect();
    (0..ps.len())
        .map(|i| {
            let others = ranges
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .fold(Subspace::zero(dim), |acc, (_, s)| acc.sum(s, f));
            let inter = ranges[i].intersect(&others, f);
            let mut ech = Echelon::new(dim);
            let mut basis: Vec<Vec<Fe>> = Vec::new();
            for v in inter.vectors() {
                if ech.insert(&v, f) {
                    basis.push(v);
                }
            }
            let lo = basis.len();
            for v in ranges[i].vectors() {
                if ech.insert(&v, f) {
                    basis.push(v);
                }
            }
            let hi = basis.len();
            for k in 0..dim {
                let e = Matrix::unit(1, dim, 0, k).row(0).to_vec();
                if ech.insert(&e, f) {
                    basis.push(e);
                }
            }
            let bm = Matrix::from_rows(basis).transpose();
            let bm_inv = bm.inverse(f).expect("completed basis");
            let mut sel = Matrix::zeros(dim, dim);
            for k in lo..hi {
                sel[(k, k)] = Fe::ONE;
            }
            bm.mul(&sel, f).mul(&bm_inv, f)
        })
        .collect()
}

/// Indices of a maximal independent subset of the rows, in index order.
fn independent_rows(m: &Matrix, take: usize, f: &FieldCtx) -> Vec<usize> {
    let mut ech = Echelon::new(m.cols());
    let mut out = Vec::new();
    for r in 0..m.rows() {
        if out.len() == take {
            break;
        }
        if ech.insert(m.row(r), f) {
            out.push(r);
        }
    }
    out
}

/// Carry a block-triangular split of L(Y), Y the ℓ×ℓ generic matrices, back
/// to L. `g`, `h` satisfy: G·L(Y)·H has a zero d1×d2 top-right block, where
/// L(Y) uses the layout of [`LinearMatrix::dilate`].
pub fn hkv_descent(
    l: &LinearMatrix,
    ell: usize,
    g: &Matrix,
    h: &Matrix,
    d1: usize,
    d2: usize,
) -> Result<Descent> {
    let f = &l.ctx;
    let d = l.dim();
    if l.coeffs()[1..].iter().all(|a| a.is_zero()) {
        return Err(Error::Precondition(
            "every variable coefficient is zero".into(),
        ));
    }
    if d1 == 0 || d2 == 0 || d1 + d2 != d * ell || g.rows() != d * ell || h.rows() != d * ell {
        return Err(Error::Precondition(
            "block sizes do not match the dilation".into(),
        ));
    }
    // P_x[a][r] = G[a][r·ℓ + x], Q_x[r][b] = H[r·ℓ + x][d1 + b].
    let ps: Vec<Matrix> = (0..ell)
        .map(|x| Matrix::from_fn(d1, d, |a, r| g[(a, r * ell + x)]))
        .collect();
    let qs: Vec<Matrix> = (0..ell)
        .map(|x| Matrix::from_fn(d, d2, |r, b| h[(r * ell + x, d1 + b)]))
        .collect();
    let mut a0_sum = Matrix::zeros(d1, d2);
    for x in 0..ell {
        a0_sum = a0_sum.add(&ps[x].mul(l.a0(), f).mul(&qs[x], f), f);
    }
    let vanishes = a0_sum.is_zero()
        && l.coeffs()[1..].iter().all(|a| {
            ps.iter()
                .all(|p| qs.iter().all(|q| p.mul(a, f).mul(q, f).is_zero()))
        });
    if !vanishes {
        return Err(Error::Precondition(
            "top-right block of the dilated pencil is not zero".into(),
        ));
    }
    let p_hat = projections(&ps, d1, f);
    let qts: Vec<Matrix> = qs.iter().map(|q| q.transpose()).collect();
    let q_hat: Vec<Matrix> = projections(&qts, d2, f)
        .into_iter()
        .map(|m| m.transpose())
        .collect();

    let rank = |m: &Matrix| m.rank(f);
    let p_span = ps
        .iter()
        .fold(Subspace::zero(d1), |acc, p| {
            acc.sum(&Subspace::column_space(p, f), f)
        })
        .dim();
    let q_span = qts
        .iter()
        .fold(Subspace::zero(d2), |acc, q| {
            acc.sum(&Subspace::column_space(q, f), f)
        })
        .dim();
    let p_total: usize = (0..ell).map(|i| rank(&ps[i]) + rank(&p_hat[i])).sum();
    let q_total: usize = (0..ell).map(|i| rank(&qs[i]) + rank(&q_hat[i])).sum();
    if p_total < 2 * p_span || q_total < 2 * q_span {
        return Err(Error::Internal(format!(
            "rank inequality fails: {p_total} < {} or {q_total} < {}",
            2 * p_span,
            2 * q_span
        )));
    }

    for i in 0..ell {
        let pp = p_hat[i].mul(&ps[i], f);
        let qq = qs[i].mul(&q_hat[i], f);
        let candidates = [(pp, qs[i].clone(), true), (ps[i].clone(), qq, false)];
        for (rows_src, cols_src, projected_p) in candidates {
            let (a, b) = (rank(&rows_src), rank(&cols_src));
            if a == 0 || b == 0 || a + b < d {
                continue;
            }
            let e1 = a.min(d - 1);
            let e2 = d - e1;
            let top = rows_src.select_rows(&independent_rows(&rows_src, e1, f));
            let u = top.complete_rows(f);
            let ct = cols_src.transpose();
            let right = ct.select_rows(&independent_rows(&ct, e2, f));
            let completion = right
                .complete_rows(f)
                .select_rows(&(e2..d).collect::<Vec<_>>());
            let v = completion.vstack(&right).transpose();
            let out = Descent {
                u,
                v,
                e1,
                e2,
                p_ranks: (p_total, 2 * p_span),
                q_ranks: (q_total, 2 * q_span),
                index: i,
                projected_p,
            };
            let conj = l.left_mul(&out.u).right_mul(&out.v);
            if !conj
                .coeffs()
                .iter()
                .all(|m| m.block(0, e1, e1, e2).is_zero())
            {
                return Err(Error::Internal("descended block is not zero".into()));
            }
            return Ok(out);
        }
    }
    Err(Error::Internal(
        "no slice satisfies the counting claim".into(),
    ))
}

/// Atomic block form of a full monic pencil (constant term arbitrary).
pub fn factor_general(l: &LinearMatrix, seed: u64) -> Result<AtomicBlockForm> {
    if !l.is_square() {
        return Err(Error::NotSquare);
    }
    if monic_side(l).is_none() {
        return Err(Error::NotMonic(Side::Right));
    }
    if !l.is_full_randomized(8, rng::derive(seed, 0)) {
        return Err(Error::NotFull);
    }
    let mut last = Error::Exhausted("no attempt made".into());
    for attempt in 0..DEFAULT_RETRIES as u64 {
        match factor_rec(l, rng::derive(seed, attempt + 1)) {
            Ok(form) => return Ok(form),
            Err(e @ Error::Exhausted(_)) => last = e,
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

fn factor_rec(l: &LinearMatrix, seed: u64) -> Result<AtomicBlockForm> {
    let f = &l.ctx;
    let d = l.dim();
    let atom = || AtomicBlockForm {
        t_left: Matrix::identity(d),
        t_right: Matrix::identity(d),
        b: l.clone(),
        blocks: vec![d],
    };
    if d <= 1 || l.coeffs()[1..].iter().all(|a| a.is_zero()) {
        return Ok(atom());
    }
    let mut split = rng::Splitter::new(seed);
    let dil = l.find_invertible_dilation(DILATION_TRIALS, split.next_seed())?;
    let ell = dil.l;
    let (lp, _) = l.dilate(&dil.point)?;
    let w_inv = dil.constant.inverse(f)?;
    let dd = d * ell;
    let mats: Vec<Matrix> = lp.coeffs()[1..].iter().map(|a| w_inv.mul(a, f)).collect();
    let mut found = None;
    for _ in 0..2 {
        match invsub::search(&mats, dd, BUDGET_PER_DIM * dd, split.next_seed(), f) {
            Search::Found(v) => {
                found = Some(v);
                break;
            }
            Search::Irreducible => break,
            Search::Exhausted => continue,
        }
    }
    let Some(v) = found else { return Ok(atom()) };
    let k = v.dim();
    let mut cols: Vec<Vec<Fe>> = v
        .complement_indices(f)
        .into_iter()
        .map(|i| Matrix::unit(dd, 1, i, 0).col(0))
        .collect();
    cols.extend(v.vectors());
    let t = Matrix::from_rows(cols).transpose();
    let g = t.inverse(f)?.mul(&w_inv, f);
    let desc = hkv_descent(l, ell, &g, &t, dd - k, k)?;
    let conj = l.left_mul(&desc.u).right_mul(&desc.v);
    let (e1, e2) = (desc.e1, desc.e2);
    let c = conj.block(0, 0, e1, e1);
    let dm = conj.block(e1, e1, e2, e2);
    let fc = factor_rec(&c, split.next_seed())?;
    let fd = factor_rec(&dm, split.next_seed())?;
    let t_left = fc.t_left.direct_sum(&fd.t_left).mul(&desc.u, f);
    let t_right = desc.v.mul(&fc.t_right.direct_sum(&fd.t_right), f);
    let b = l.left_mul(&t_left).right_mul(&t_right);
    let mut blocks = fc.blocks;
    blocks.extend(fd.blocks);
    Ok(AtomicBlockForm {
        t_left,
        t_right,
        b,
        blocks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Formula;
    use crate::higman::linearize;
    use crate::linmat::monicize;

    fn lin(f: &FieldCtx, n: usize, rows: &[&[&str]]) -> LinearMatrix {
        crate::linmat::tests::lin(f, n, rows)
    }

    #[test]
    fn special_examples() {
        let f = FieldCtx::prime(5).unwrap();
        let one = lin(&f, 1, &[&["1 + x"]]);
        let (fac, form) = factor_special(&one, 0).unwrap();
        assert_eq!((fac.atom_count(), form.blocks.len()), (1, 1));
        let dg = lin(&f, 2, &[&["1 + x", "0"], &["0", "1 + y"]]);
        let (fac, form) = factor_special(&dg, 0).unwrap();
        assert_eq!(fac.atom_count(), 2);
        assert!(form.check(&dg));
        assert!(fac.check(&dg, 10, 2, 1).unwrap());
        assert!(factor_special(&lin(&f, 1, &[&["x"]]), 0).is_err());
    }

    #[test]
    fn special_on_running_example() {
        let f = FieldCtx::prime(5).unwrap();
        // x + xyx shifted by x ← x + 1 and y ← y + 1 so the value at 0 is nonzero.
        let e = Formula::parse("(x+1) + (x+1)*(y+1)*(x+1)", &f).unwrap();
        let h = linearize(&e).unwrap();
        let m = monicize(&h.l, Side::Left).unwrap();
        assert!(m.lp.a0().is_invertible(&f));
        let (fac, form) = factor_special(&m.lp, 3).unwrap();
        assert_eq!(form.atom_count(), 2);
        assert!(form.check(&m.lp));
        assert!(fac.check(&m.lp, 10, 2, 2).unwrap());
    }

    #[test]
    fn descent_on_diagonal() {
        let f = FieldCtx::prime(2).unwrap();
        let dg = lin(&f, 2, &[&["x", "0"], &["0", "y"]]);
        let id = Matrix::identity(4);
        let out = hkv_descent(&dg, 2, &id, &id, 2, 2).unwrap();
        assert_eq!((out.e1, out.e2), (1, 1));
        assert!(out.p_ranks.0 >= out.p_ranks.1 && out.q_ranks.0 >= out.q_ranks.1);
        let zero = lin(&f, 2, &[&["1", "0"], &["0", "1"]]);
        assert!(matches!(
            hkv_descent(&zero, 2, &id, &id, 2, 2),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn general_examples() {
        let f = FieldCtx::prime(2).unwrap();
        let x = lin(&f, 1, &[&["x"]]);
        assert_eq!(factor_general(&x, 0).unwrap().blocks, vec![1]);
        let outer = lin(&f, 1, &[&["x", "x"], &["x", "x"]]);
        assert!(factor_general(&outer, 0).is_err());
        let dg = lin(&f, 2, &[&["x", "0"], &["0", "y"]]);
        let form = factor_general(&dg, 0).unwrap();
        assert_eq!(form.blocks, vec![1, 1]);
        assert!(form.check(&dg));
        for j in 0..form.blocks.len() {
            let blk = form.diagonal_block(j);
            assert!(blk.is_right_monic() || blk.is_left_monic());
        }
    }

    #[test]
    fn general_on_commutator() {
        let f = FieldCtx::prime(2).unwrap();
        // xy + yx vanishes at every scalar point of every extension.
        for (text, atoms) in [
            ("x*y + y*x", 1),
            ("(x*y + y*x)*(1 + x)", 2),
            ("x*x*y + x*y*x", 2),
        ] {
            let e = Formula::parse(text, &f).unwrap();
            let h = linearize(&e).unwrap();
            let m = monicize(&h.l, Side::Left).unwrap();
            let form = factor_general(&m.lp, 5).unwrap();
            assert!(form.check(&m.lp), "{text}");
            assert_eq!(form.atom_count(), atoms, "{text}");
        }
    }
}
