use super::{Fe, FieldCtx, UniPoly};
use crate::error::{Error, Result};
use crate::rng::Rng;
use std::ops::{Index, IndexMut};

/// Dense row-major matrix over a finite field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<Fe>,
}

impl Index<(usize, usize)> for Matrix {
    type Output = Fe;
    fn index(&self, (r, c): (usize, usize)) -> &Fe {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Fe {
        &mut self.data[r * self.cols + c]
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![Fe::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Fe::ONE;
        }
        m
    }

    /// Scalar multiple of the identity.
    pub fn scalar(n: usize, c: Fe) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Fe>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Fe) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Integer entries reduced into the prime subfield.
    pub fn from_ints(f: &FieldCtx, rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| f.from_int(x)).collect())
                .collect(),
        )
    }

    /// Elementary matrix E_{rc}.
    pub fn unit(rows: usize, cols: usize, r: usize, c: usize) -> Self {
        let mut m = Self::zeros(rows, cols);
        m[(r, c)] = Fe::ONE;
        m
    }

    pub fn random(rows: usize, cols: usize, f: &FieldCtx, rng: &mut Rng) -> Self {
        Self::from_fn(rows, cols, |_, _| f.random(rng))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Fe {
        self[(r, c)]
    }

    pub fn row(&self, r: usize) -> &[Fe] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn col(&self, c: usize) -> Vec<Fe> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn data(&self) -> &[Fe] {
        &self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|r| {
                (0..self.cols).all(|c| self[(r, c)] == if r == c { Fe::ONE } else { Fe::ZERO })
            })
    }

    pub fn map(&self, f: impl Fn(Fe) -> Fe) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn add(&self, o: &Self, f: &FieldCtx) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (o.rows, o.cols),
            "shape mismatch in add"
        );
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(&a, &b)| f.add(a, b))
                .collect(),
        }
    }

    pub fn sub(&self, o: &Self, f: &FieldCtx) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (o.rows, o.cols),
            "shape mismatch in sub"
        );
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&o.data)
                .map(|(&a, &b)| f.sub(a, b))
                .collect(),
        }
    }

    pub fn neg(&self, f: &FieldCtx) -> Self {
        self.map(|x| f.neg(x))
    }

    pub fn scale(&self, c: Fe, f: &FieldCtx) -> Self {
        self.map(|x| f.mul(x, c))
    }

    pub fn mul(&self, o: &Self, f: &FieldCtx) -> Self {
        assert_eq!(self.cols, o.rows, "shape mismatch in mul");
        let mut out = Self::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                let orow = o.row(k);
                let base = i * o.cols;
                for (j, &b) in orow.iter().enumerate() {
                    if !b.is_zero() {
                        out.data[base + j] = f.mul_add(a, b, out.data[base + j]);
                    }
                }
            }
        }
        out
    }

    /// Row vector times matrix.
    pub fn vec_mul(v: &[Fe], m: &Self, f: &FieldCtx) -> Vec<Fe> {
        assert_eq!(v.len(), m.rows);
        let mut out = vec![Fe::ZERO; m.cols];
        for (k, &a) in v.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in m.row(k).iter().enumerate() {
                if !b.is_zero() {
                    out[j] = f.mul_add(a, b, out[j]);
                }
            }
        }
        out
    }

    /// Matrix times column vector.
    pub fn mul_vec(&self, v: &[Fe], f: &FieldCtx) -> Vec<Fe> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(Fe::ZERO, |acc, (&a, &b)| f.mul_add(a, b, acc))
            })
            .collect()
    }

    /// Kronecker product: entry ((a,j),(b,k)) = self[a,b]·o[j,k].
    pub fn kron(&self, o: &Self, f: &FieldCtx) -> Self {
        Self::from_fn(self.rows * o.rows, self.cols * o.cols, |r, c| {
            f.mul(self[(r / o.rows, c / o.cols)], o[(r % o.rows, c % o.cols)])
        })
    }

    pub fn direct_sum(&self, o: &Self) -> Self {
        let mut m = Self::zeros(self.rows + o.rows, self.cols + o.cols);
        m.set_block(0, 0, self);
        m.set_block(self.rows, self.cols, o);
        m
    }

    pub fn hstack(&self, o: &Self) -> Self {
        assert_eq!(self.rows, o.rows);
        let mut m = Self::zeros(self.rows, self.cols + o.cols);
        m.set_block(0, 0, self);
        m.set_block(0, self.cols, o);
        m
    }

    pub fn vstack(&self, o: &Self) -> Self {
        assert_eq!(self.cols, o.cols);
        let mut data = self.data.clone();
        data.extend_from_slice(&o.data);
        Matrix {
            rows: self.rows + o.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Self) {
        for r in 0..b.rows {
            for c in 0..b.cols {
                self[(r0 + r, c0 + c)] = b[(r, c)];
            }
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |r, c| self[(r0 + r, c0 + c)])
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), self.cols, |r, c| self[(idx[r], c)])
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        Self::from_fn(self.rows, idx.len(), |r, c| self[(r, idx[c])])
    }

    /// Permutation matrix with `P[perm[i], i] = 1`, so `P e_i = e_{perm[i]}`.
    pub fn permutation(perm: &[usize]) -> Self {
        let mut m = Self::zeros(perm.len(), perm.len());
        for (i, &p) in perm.iter().enumerate() {
            m[(p, i)] = Fe::ONE;
        }
        m
    }

    /// Reduced row echelon form (first-nonzero-column pivoting, pivots
    /// normalized to 1) and the pivot columns.
    pub fn rref(&self, f: &FieldCtx) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(pr) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(row, pr);
            let inv = f.inv(m[(row, col)]).expect("nonzero pivot");
            for c in col..m.cols {
                m[(row, c)] = f.mul(m[(row, c)], inv);
            }
            for r in 0..m.rows {
                if r == row {
                    continue;
                }
                let factor = m[(r, col)];
                if factor.is_zero() {
                    continue;
                }
                for c in col..m.cols {
                    let v = f.mul(factor, m[(row, c)]);
                    m[(r, c)] = f.sub(m[(r, c)], v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn rank(&self, f: &FieldCtx) -> usize {
        self.rref(f).1.len()
    }

    /// Right kernel {v : M v = 0}.
    pub fn kernel(&self, f: &FieldCtx) -> Subspace {
        let (r, pivots) = self.rref(f);
        let mut basis = Vec::new();
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![Fe::ZERO; self.cols];
            v[free] = Fe::ONE;
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = f.neg(r[(i, free)]);
            }
            basis.push(v);
        }
        Subspace::from_vectors(self.cols, basis, f)
    }

    /// Rank and right kernel.
    pub fn rank_and_nullspace(&self, f: &FieldCtx) -> (usize, Subspace) {
        let k = self.kernel(f);
        (self.cols - k.dim(), k)
    }

    pub fn inverse(&self, f: &FieldCtx) -> Result<Self> {
        if !self.is_square() {
            return Err(Error::NotSquare);
        }
        let n = self.rows;
        let aug = self.hstack(&Self::identity(n));
        let (r, pivots) = aug.rref(f);
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return Err(Error::Singular);
        }
        Ok(r.block(0, n, n, n))
    }

    pub fn is_invertible(&self, f: &FieldCtx) -> bool {
        self.is_square() && self.rank(f) == self.rows
    }

    pub fn det(&self, f: &FieldCtx) -> Fe {
        assert!(self.is_square());
        let mut m = self.clone();
        let n = self.rows;
        let mut det = Fe::ONE;
        for col in 0..n {
            let Some(pr) = (col..n).find(|&r| !m[(r, col)].is_zero()) else {
                return Fe::ZERO;
            };
            if pr != col {
                m.swap_rows(pr, col);
                det = f.neg(det);
            }
            let piv = m[(col, col)];
            det = f.mul(det, piv);
            let inv = f.inv(piv).expect("nonzero");
            for r in col + 1..n {
                let factor = f.mul(m[(r, col)], inv);
                if factor.is_zero() {
                    continue;
                }
                for c in col..n {
                    let v = f.mul(factor, m[(col, c)]);
                    m[(r, c)] = f.sub(m[(r, c)], v);
                }
            }
        }
        det
    }

    /// Monic minimal polynomial: the lcm of the local minimal polynomials of
    /// enough standard vectors to cover the whole space.
    pub fn min_poly(&self, f: &FieldCtx) -> Result<UniPoly> {
        if !self.is_square() {
            return Err(Error::NotSquare);
        }
        let n = self.rows;
        let mut cover = Echelon::new(n);
        let mut acc = UniPoly::one();
        for i in 0..n {
            let mut e = vec![Fe::ZERO; n];
            e[i] = Fe::ONE;
            if cover.reduce(&e, f).iter().all(|x| x.is_zero()) {
                continue;
            }
            let mut local = Echelon::new(n);
            let mut w = e;
            let mut k = 0;
            let rel = loop {
                let mut coeff = vec![Fe::ZERO; k + 1];
                coeff[k] = Fe::ONE;
                cover.insert(&w, f);
                if let Some(rel) = local.insert_tracked(&w, coeff, f) {
                    break rel;
                }
                w = self.mul_vec(&w, f);
                k += 1;
            };
            let p = UniPoly::from_coeffs(rel);
            let g = acc.gcd(&p, f);
            acc = acc.mul(&p, f).divrem(&g, f).0.monic(f);
        }
        Ok(acc)
    }

    /// Complete the given linearly independent rows to an invertible matrix
    /// by appending standard basis vectors in index order.
    pub fn complete_rows(&self, f: &FieldCtx) -> Self {
        let extra = Subspace::from_rows(self, f).complement_indices(f);
        let mut m = self.clone();
        for i in extra {
            m = m.vstack(&Self::unit(1, self.cols, 0, i));
        }
        m
    }
}

/// Incremental echelon basis, optionally tracking linear combinations.
#[derive(Clone, Debug)]
pub struct Echelon {
    n: usize,
    rows: Vec<(usize, Vec<Fe>, Vec<Fe>)>,
}

impl Echelon {
    pub fn new(n: usize) -> Self {
        Echelon {
            n,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Basis vectors in insertion order.
    pub fn vectors(&self) -> impl Iterator<Item = &[Fe]> {
        self.rows.iter().map(|r| r.1.as_slice())
    }

    pub fn contains(&self, v: &[Fe], f: &FieldCtx) -> bool {
        self.reduce(v, f).iter().all(|x| x.is_zero())
    }

    pub fn reduce(&self, v: &[Fe], f: &FieldCtx) -> Vec<Fe> {
        let mut w = v.to_vec();
        for (p, r, _) in &self.rows {
            let c = w[*p];
            if !c.is_zero() {
                for j in 0..self.n {
                    w[j] = f.sub(w[j], f.mul(c, r[j]));
                }
            }
        }
        w
    }

    /// Insert `v`; true when it enlarged the span.
    pub fn insert(&mut self, v: &[Fe], f: &FieldCtx) -> bool {
        self.insert_tracked(v, Vec::new(), f).is_none()
    }

    /// Insert `v` whose expression in the tracked generators is `coeff`.
    /// Returns the dependency (with last entry 1) when `v` is in the span.
    pub fn insert_tracked(
        &mut self,
        v: &[Fe],
        mut coeff: Vec<Fe>,
        f: &FieldCtx,
    ) -> Option<Vec<Fe>> {
        let mut w = v.to_vec();
        for (p, r, c) in &self.rows {
            let a = w[*p];
            if a.is_zero() {
                continue;
            }
            for j in 0..self.n {
                w[j] = f.sub(w[j], f.mul(a, r[j]));
            }
            for (j, &cj) in c.iter().enumerate() {
                if j < coeff.len() {
                    coeff[j] = f.sub(coeff[j], f.mul(a, cj));
                }
            }
        }
        match w.iter().position(|x| !x.is_zero()) {
            None => Some(coeff),
            Some(p) => {
                let inv = f.inv(w[p]).expect("nonzero");
                let w: Vec<Fe> = w.iter().map(|&x| f.mul(x, inv)).collect();
                let coeff: Vec<Fe> = coeff.iter().map(|&x| f.mul(x, inv)).collect();
                self.rows.push((p, w, coeff));
                None
            }
        }
    }
}

/// A subspace of F^D held as a canonical reduced row echelon basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient: usize,
    basis: Matrix,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: Matrix::zeros(0, ambient),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Subspace {
            ambient,
            basis: Matrix::identity(ambient),
        }
    }

    pub fn from_rows(m: &Matrix, f: &FieldCtx) -> Self {
        let (r, pivots) = m.rref(f);
        Subspace {
            ambient: m.cols(),
            basis: r.block(0, 0, pivots.len(), m.cols()),
        }
    }

    pub fn from_vectors(ambient: usize, vs: Vec<Vec<Fe>>, f: &FieldCtx) -> Self {
        if vs.is_empty() {
            return Self::zero(ambient);
        }
        Self::from_rows(&Matrix::from_rows(vs), f)
    }

    /// Column space of a matrix.
    pub fn column_space(m: &Matrix, f: &FieldCtx) -> Self {
        Self::from_rows(&m.transpose(), f)
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.rows()
    }

    /// Basis vectors as rows (canonical RREF).
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    pub fn vectors(&self) -> Vec<Vec<Fe>> {
        (0..self.dim())
            .map(|r| self.basis.row(r).to_vec())
            .collect()
    }

    pub fn pivots(&self) -> Vec<usize> {
        (0..self.dim())
            .map(|r| {
                self.basis
                    .row(r)
                    .iter()
                    .position(|x| !x.is_zero())
                    .expect("nonzero row")
            })
            .collect()
    }

    pub fn contains(&self, v: &[Fe], f: &FieldCtx) -> bool {
        let mut w = v.to_vec();
        for (r, p) in self.pivots().into_iter().enumerate() {
            let c = w[p];
            if c.is_zero() {
                continue;
            }
            for (j, &b) in self.basis.row(r).iter().enumerate() {
                w[j] = f.sub(w[j], f.mul(c, b));
            }
        }
        w.iter().all(|x| x.is_zero())
    }

    pub fn contains_space(&self, o: &Subspace, f: &FieldCtx) -> bool {
        o.vectors().iter().all(|v| self.contains(v, f))
    }

    pub fn sum(&self, o: &Subspace, f: &FieldCtx) -> Self {
        Self::from_rows(&self.basis.vstack(&o.basis), f)
    }

    pub fn intersect(&self, o: &Subspace, f: &FieldCtx) -> Self {
        if self.dim() == 0 || o.dim() == 0 {
            return Self::zero(self.ambient);
        }
        // a·U = b·W  ⇔  (a, -b)·[U; W] = 0
        let stacked = self.basis.vstack(&o.basis);
        let ker = stacked.transpose().kernel(f);
        let vs = ker
            .vectors()
            .into_iter()
            .map(|c| Matrix::vec_mul(&c[..self.dim()], &self.basis, f))
            .collect();
        Self::from_vectors(self.ambient, vs, f)
    }

    /// Standard basis indices completing this subspace to the whole space,
    /// chosen greedily in index order.
    pub fn complement_indices(&self, f: &FieldCtx) -> Vec<usize> {
        let mut cur = self.clone();
        let mut out = Vec::new();
        for i in 0..self.ambient {
            if cur.dim() == self.ambient {
                break;
            }
            let mut e = vec![Fe::ZERO; self.ambient];
            e[i] = Fe::ONE;
            if !cur.contains(&e, f) {
                cur = Subspace::from_vectors(
                    self.ambient,
                    {
                        let mut v = cur.vectors();
                        v.push(e);
                        v
                    },
                    f,
                );
                out.push(i);
            }
        }
        out
    }

    /// Is the subspace mapped into itself by `m` acting on column vectors?
    pub fn is_invariant(&self, m: &Matrix, f: &FieldCtx) -> bool {
        self.vectors()
            .iter()
            .all(|v| self.contains(&m.mul_vec(v, f), f))
    }

    /// Annihilator {w : w·v = 0 for all v in self}.
    pub fn annihilator(&self, f: &FieldCtx) -> Self {
        self.basis.kernel(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn spec_examples() {
        let f2 = FieldCtx::prime(2).unwrap();
        let (r, k) = Matrix::identity(3).rank_and_nullspace(&f2);
        assert_eq!((r, k.dim()), (3, 0));
        let (r, k) = Matrix::zeros(3, 3).rank_and_nullspace(&f2);
        assert_eq!((r, k), (0, Subspace::full(3)));
        let (r, k) = Matrix::from_ints(&f2, &[&[1, 1], &[1, 1]]).rank_and_nullspace(&f2);
        assert_eq!(r, 1);
        assert_eq!(k.vectors(), vec![vec![Fe(1), Fe(1)]]);

        let f5 = FieldCtx::prime(5).unwrap();
        let d = Matrix::from_ints(&f5, &[&[2, 0], &[0, 3]]);
        assert_eq!(
            d.inverse(&f5).unwrap(),
            Matrix::from_ints(&f5, &[&[3, 0], &[0, 2]])
        );
        assert_eq!(
            Matrix::identity(4).inverse(&f5).unwrap(),
            Matrix::identity(4)
        );
        assert_eq!(
            Matrix::from_ints(&f5, &[&[1, 2], &[2, 4]]).inverse(&f5),
            Err(Error::Singular)
        );
    }

    fn minor_rank(m: &Matrix, f: &FieldCtx) -> usize {
        let n = m.rows();
        let mut best = 0;
        for rs in 1u32..(1 << n) {
            for cs in 1u32..(1 << n) {
                if rs.count_ones() != cs.count_ones() {
                    continue;
                }
                let ri: Vec<usize> = (0..n).filter(|i| rs >> i & 1 == 1).collect();
                let ci: Vec<usize> = (0..n).filter(|i| cs >> i & 1 == 1).collect();
                if !m.select_rows(&ri).select_cols(&ci).det(f).is_zero() {
                    best = best.max(ri.len());
                }
            }
        }
        best
    }

    #[test]
    fn rank_matches_minors() {
        let f2 = FieldCtx::prime(2).unwrap();
        let mut r = rng::rng(3);
        for _ in 0..200 {
            let m = Matrix::random(4, 4, &f2, &mut r);
            let (rank, ker) = m.rank_and_nullspace(&f2);
            assert_eq!(rank, minor_rank(&m, &f2));
            assert_eq!(rank + ker.dim(), 4);
            for v in ker.vectors() {
                assert!(m.mul_vec(&v, &f2).iter().all(|x| x.is_zero()));
            }
        }
    }

    #[test]
    fn min_poly_examples() {
        let f5 = FieldCtx::prime(5).unwrap();
        assert_eq!(
            Matrix::identity(3).min_poly(&f5).unwrap(),
            UniPoly::from_coeffs(vec![Fe(4), Fe(1)])
        );
        let j = Matrix::from_ints(&f5, &[&[0, 1], &[0, 0]]);
        assert_eq!(
            j.min_poly(&f5).unwrap(),
            UniPoly::from_coeffs(vec![Fe(0), Fe(0), Fe(1)])
        );
        let f2 = FieldCtx::prime(2).unwrap();
        // companion matrix of x^3 + x + 1
        let c = Matrix::from_ints(&f2, &[&[0, 0, 1], &[1, 0, 1], &[0, 1, 0]]);
        assert_eq!(
            c.min_poly(&f2).unwrap(),
            UniPoly::from_coeffs(vec![Fe(1), Fe(1), Fe(0), Fe(1)])
        );
        let mut r = rng::rng(9);
        for _ in 0..100 {
            let m = Matrix::random(5, 5, &f2, &mut r);
            let m = m.direct_sum(&m);
            let mp = m.min_poly(&f2).unwrap();
            assert!(mp.eval_matrix(&m, &f2).is_zero());
            for (g, _) in mp.factor(&f2, 1).unwrap() {
                let smaller = mp.divrem(&g, &f2).0;
                assert!(!smaller.eval_matrix(&m, &f2).is_zero());
            }
        }
        assert_eq!(Matrix::zeros(2, 3).min_poly(&f2), Err(Error::NotSquare));
    }

    #[test]
    fn inverse_and_subspaces() {
        let f = FieldCtx::build_extension(3, 2, 1).unwrap();
        let mut r = rng::rng(4);
        for _ in 0..50 {
            let m = Matrix::random(5, 5, &f, &mut r);
            match m.inverse(&f) {
                Ok(inv) => {
                    assert!(m.mul(&inv, &f).is_identity());
                    assert!(inv.mul(&m, &f).is_identity());
                }
                Err(_) => assert!(m.det(&f).is_zero()),
            }
            let u = Subspace::from_rows(&Matrix::random(2, 5, &f, &mut r), &f);
            let w = Subspace::from_rows(&Matrix::random(4, 5, &f, &mut r), &f);
            let i = u.intersect(&w, &f);
            assert!(u.contains_space(&i, &f) && w.contains_space(&i, &f));
            assert_eq!(i.dim() + u.sum(&w, &f).dim(), u.dim() + w.dim());
            let ext = u.complement_indices(&f);
            assert_eq!(ext.len() + u.dim(), 5);
        }
    }
}
