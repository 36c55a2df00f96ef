//! Linear matrices L = A₀ + Σ Aᵢxᵢ and the calculus around them.

use crate::error::{Error, Result};
use crate::field::{Fe, FieldCtx, Matrix};
use serde::{Deserialize, Serialize};

/// Affine matrix A₀ + Σ Aᵢxᵢ; square in the factorization calculus, but
/// rectangular shapes are allowed (ABP layers use them).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearMatrix {
    pub ctx: FieldCtx,
    rows: usize,
    cols: usize,
    a: Vec<Matrix>,
}

impl LinearMatrix {
    /// `a[0]` is the constant part, `a[i]` the coefficient of variable i-1.
    pub fn new(ctx: &FieldCtx, a: Vec<Matrix>) -> Result<Self> {
        let Some(first) = a.first() else {
            return Err(Error::Dimension(
                "a linear matrix needs a constant part".into(),
            ));
        };
        let (rows, cols) = (first.rows(), first.cols());
        if a.iter().any(|m| m.rows() != rows || m.cols() != cols) {
            return Err(Error::Dimension(
                "coefficient matrices differ in shape".into(),
            ));
        }
        Ok(LinearMatrix {
            ctx: ctx.clone(),
            rows,
            cols,
            a,
        })
    }

    pub fn zeros(ctx: &FieldCtx, rows: usize, cols: usize, nvars: usize) -> Self {
        LinearMatrix {
            ctx: ctx.clone(),
            rows,
            cols,
            a: vec![Matrix::zeros(rows, cols); nvars + 1],
        }
    }

    pub fn constant(ctx: &FieldCtx, nvars: usize, m: Matrix) -> Self {
        let mut l = Self::zeros(ctx, m.rows(), m.cols(), nvars);
        l.a[0] = m;
        l
    }

    pub fn identity(ctx: &FieldCtx, d: usize, nvars: usize) -> Self {
        Self::constant(ctx, nvars, Matrix::identity(d))
    }

    /// 1×1 matrix holding a single affine form `c₀ + Σ cᵢxᵢ`.
    pub fn form(ctx: &FieldCtx, coeffs: &[Fe]) -> Self {
        LinearMatrix {
            ctx: ctx.clone(),
            rows: 1,
            cols: 1,
            a: coeffs.iter().map(|&c| Matrix::scalar(1, c)).collect(),
        }
    }

    pub fn var(ctx: &FieldCtx, nvars: usize, i: usize) -> Self {
        let mut l = Self::zeros(ctx, 1, 1, nvars);
        l.a[i + 1][(0, 0)] = Fe::ONE;
        l
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

    /// Dimension of a square linear matrix.
    pub fn dim(&self) -> usize {
        debug_assert!(self.is_square());
        self.rows
    }

    pub fn nvars(&self) -> usize {
        self.a.len() - 1
    }

    pub fn coeff(&self, i: usize) -> &Matrix {
        &self.a[i]
    }

    pub fn coeff_mut(&mut self, i: usize) -> &mut Matrix {
        &mut self.a[i]
    }

    pub fn coeffs(&self) -> &[Matrix] {
        &self.a
    }

    pub fn a0(&self) -> &Matrix {
        &self.a[0]
    }

    /// Affine form at (r, c) as `[c₀, c₁, …, c_n]`.
    pub fn entry(&self, r: usize, c: usize) -> Vec<Fe> {
        self.a.iter().map(|m| m[(r, c)]).collect()
    }

    pub fn set_entry(&mut self, r: usize, c: usize, form: &[Fe]) {
        for (i, m) in self.a.iter_mut().enumerate() {
            m[(r, c)] = form.get(i).copied().unwrap_or(Fe::ZERO);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(|m| m.is_zero())
    }

    pub fn is_constant(&self) -> bool {
        self.a[1..].iter().all(|m| m.is_zero())
    }

    pub fn with_nvars(mut self, n: usize) -> Self {
        while self.a.len() < n + 1 {
            self.a.push(Matrix::zeros(self.rows, self.cols));
        }
        self
    }

    fn map(&self, f: impl Fn(&Matrix) -> Matrix) -> Self {
        let a: Vec<Matrix> = self.a.iter().map(f).collect();
        LinearMatrix {
            ctx: self.ctx.clone(),
            rows: a[0].rows(),
            cols: a[0].cols(),
            a,
        }
    }

    /// S·L for a scalar matrix S.
    pub fn left_mul(&self, s: &Matrix) -> Self {
        self.map(|m| s.mul(m, &self.ctx))
    }

    /// L·S for a scalar matrix S.
    pub fn right_mul(&self, s: &Matrix) -> Self {
        self.map(|m| m.mul(s, &self.ctx))
    }

    pub fn scale(&self, c: Fe) -> Self {
        self.map(|m| m.scale(c, &self.ctx))
    }

    pub fn transpose(&self) -> Self {
        self.map(|m| m.transpose())
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.nvars().max(o.nvars());
        let (a, b) = (self.clone().with_nvars(n), o.clone().with_nvars(n));
        let a: Vec<Matrix> =
            a.a.iter()
                .zip(&b.a)
                .map(|(x, y)| x.add(y, &self.ctx))
                .collect();
        LinearMatrix {
            ctx: self.ctx.clone(),
            rows: self.rows,
            cols: self.cols,
            a,
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(self.ctx.neg(Fe::ONE)))
    }

    pub fn direct_sum(&self, o: &Self) -> Self {
        let n = self.nvars().max(o.nvars());
        let (a, b) = (self.clone().with_nvars(n), o.clone().with_nvars(n));
        let a: Vec<Matrix> = a.a.iter().zip(&b.a).map(|(x, y)| x.direct_sum(y)).collect();
        LinearMatrix {
            ctx: self.ctx.clone(),
            rows: a[0].rows(),
            cols: a[0].cols(),
            a,
        }
    }

    pub fn hstack(&self, o: &Self) -> Self {
        let n = self.nvars().max(o.nvars());
        let (a, b) = (self.clone().with_nvars(n), o.clone().with_nvars(n));
        let a: Vec<Matrix> = a.a.iter().zip(&b.a).map(|(x, y)| x.hstack(y)).collect();
        LinearMatrix {
            ctx: self.ctx.clone(),
            rows: a[0].rows(),
            cols: a[0].cols(),
            a,
        }
    }

    pub fn vstack(&self, o: &Self) -> Self {
        let n = self.nvars().max(o.nvars());
        let (a, b) = (self.clone().with_nvars(n), o.clone().with_nvars(n));
        let a: Vec<Matrix> = a.a.iter().zip(&b.a).map(|(x, y)| x.vstack(y)).collect();
        LinearMatrix {
            ctx: self.ctx.clone(),
            rows: a[0].rows(),
            cols: a[0].cols(),
            a,
        }
    }

    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Self {
        self.map(|m| m.block(r0, c0, rows, cols))
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        self.map(|m| m.select_rows(idx))
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        self.map(|m| m.select_cols(idx))
    }

    /// Substitute xᵢ ← xᵢ + sign·αᵢ.
    pub fn shift(&self, alpha: &[Fe], negate: bool) -> Self {
        let f = &self.ctx;
        let mut out = self.clone();
        for (i, &al) in alpha.iter().enumerate().take(self.nvars()) {
            let al = if negate { f.neg(al) } else { al };
            if !al.is_zero() {
                out.a[0] = out.a[0].add(&self.a[i + 1].scale(al, f), f);
            }
        }
        out
    }

    /// Value at a scalar point.
    pub fn eval_scalar(&self, point: &[Fe]) -> Matrix {
        let f = &self.ctx;
        let mut m = self.a[0].clone();
        for (i, &x) in point.iter().enumerate().take(self.nvars()) {
            if !x.is_zero() {
                m = m.add(&self.a[i + 1].scale(x, f), f);
            }
        }
        m
    }

    /// A₀⊗I_m + Σ Aᵢ⊗Mᵢ.
    pub fn eval_linmat(&self, point: &[Matrix]) -> Result<Matrix> {
        if point.len() < self.nvars() {
            return Err(Error::Dimension(format!(
                "expected {} matrices, got {}",
                self.nvars(),
                point.len()
            )));
        }
        let m = point.first().map_or(1, |p| p.rows());
        if point.iter().any(|p| p.rows() != m || p.cols() != m) {
            return Err(Error::Dimension(
                "evaluation matrices must share one square dimension".into(),
            ));
        }
        let f = &self.ctx;
        let mut out = Matrix::zeros(self.rows * m, self.cols * m);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let a0 = self.a[0][(r, c)];
                if !a0.is_zero() {
                    for k in 0..m {
                        out[(r * m + k, c * m + k)] = a0;
                    }
                }
                for (i, p) in point.iter().enumerate().take(self.nvars()) {
                    let ai = self.a[i + 1][(r, c)];
                    if ai.is_zero() {
                        continue;
                    }
                    for x in 0..m {
                        for y in 0..m {
                            let v = p[(x, y)];
                            if !v.is_zero() {
                                let cell = &mut out[(r * m + x, c * m + y)];
                                *cell = f.mul_add(ai, v, *cell);
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// [A₁ A₂ … A_n] (rows × n·cols).
    pub fn stacked_coeffs(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows, self.cols * self.nvars());
        for i in 0..self.nvars() {
            m.set_block(0, i * self.cols, &self.a[i + 1]);
        }
        m
    }

    pub fn to_doc(&self) -> LinearMatrixDoc {
        LinearMatrixDoc {
            field: self.ctx.spec(),
            d: self.is_square().then_some(self.rows),
            rows: (!self.is_square()).then_some(self.rows),
            cols: (!self.is_square()).then_some(self.cols),
            n: self.nvars(),
            a: self.a.iter().map(matrix_to_json).collect(),
        }
    }

    pub fn from_doc(doc: &LinearMatrixDoc) -> Result<Self> {
        let ctx = FieldCtx::from_spec(&doc.field)?;
        let (rows, cols) = match (doc.d, doc.rows, doc.cols) {
            (Some(d), None, None) => (d, d),
            (None, Some(r), Some(c)) => (r, c),
            _ => return Err(Error::Format("give either d or rows and cols".into())),
        };
        if doc.a.len() != doc.n + 1 {
            return Err(Error::Format(format!(
                "expected {} coefficient matrices",
                doc.n + 1
            )));
        }
        let a = doc
            .a
            .iter()
            .map(|m| matrix_from_json(&ctx, m, rows, cols))
            .collect::<Result<Vec<_>>>()?;
        LinearMatrix::new(&ctx, a)
    }
}

/// JSON form `{field, d, n, A}`; rectangular matrices use `rows`/`cols`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearMatrixDoc {
    pub field: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub cols: Option<usize>,
    pub n: usize,
    #[serde(rename = "A")]
    pub a: Vec<Vec<Vec<u64>>>,
}

pub fn matrix_to_json(m: &Matrix) -> Vec<Vec<u64>> {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|x| x.index()).collect())
        .collect()
}

pub fn matrix_from_json(
    ctx: &FieldCtx,
    rows_json: &[Vec<u64>],
    rows: usize,
    cols: usize,
) -> Result<Matrix> {
    if rows_json.len() != rows || rows_json.iter().any(|r| r.len() != cols) {
        return Err(Error::Format(format!("expected a {rows}×{cols} matrix")));
    }
    let mut m = Matrix::zeros(rows, cols);
    for (r, row) in rows_json.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            m[(r, c)] = ctx
                .element(v)
                .ok_or_else(|| Error::Format(format!("{v} is not a field element")))?;
        }
    }
    Ok(m)
}

use crate::abp::{AbpDoc, Chain};
use crate::error::Side;
use crate::field::{extension_at_least, Embedding};
use crate::rng::{self, Rng};

impl LinearMatrix {
    /// Map every coefficient into a larger field.
    pub fn embed(&self, e: &Embedding) -> Self {
        let a = self.a.iter().map(|m| e.map_matrix(m)).collect();
        LinearMatrix {
            ctx: e.big.clone(),
            rows: self.rows,
            cols: self.cols,
            a,
        }
    }

    /// [A₁ … A_n] has full row rank.
    pub fn is_right_monic(&self) -> bool {
        self.stacked_coeffs().rank(&self.ctx) == self.rows
    }

    /// [A₁; …; A_n] has full column rank.
    pub fn is_left_monic(&self) -> bool {
        self.transpose().is_right_monic()
    }

    pub fn is_monic(&self, side: Side) -> bool {
        match side {
            Side::Right => self.is_right_monic(),
            Side::Left => self.is_left_monic(),
        }
    }

    /// Blow-up rank test: full iff some ℓ ≤ 2d and random ℓ×ℓ point give
    /// rank dℓ. Samples come from an extension of order ≥ 4dℓ.
    pub fn is_full_randomized(&self, trials: usize, seed: u64) -> bool {
        let d = self.dim();
        if d == 0 {
            return true;
        }
        if self.a0().is_invertible(&self.ctx) {
            return true;
        }
        let mut split = rng::Splitter::new(seed);
        for l in 1..=2 * d {
            let Ok(emb) = extension_at_least(&self.ctx, (4 * d * l) as u64, split.next_seed())
            else {
                return false;
            };
            let big = self.embed(&emb);
            let mut r = split.next_rng();
            for _ in 0..trials {
                let pt = random_point(&emb.big, self.nvars(), l, &mut r);
                if big.eval_linmat(&pt).expect("shapes").rank(&emb.big) == d * l {
                    return true;
                }
            }
        }
        false
    }

    /// Dilation by ℓ×ℓ matrices M: constant term A₀⊗I + ΣAᵢ⊗Mᵢ and one
    /// fresh variable y_(i,j,k) with coefficient Aᵢ⊗E_jk, ordered
    /// lexicographically by (i, j, k).
    pub fn dilate(&self, m: &[Matrix]) -> Result<(LinearMatrix, Vec<DilatedVar>)> {
        let n = self.nvars();
        let l = m.first().map_or(1, |x| x.rows());
        let c = self.eval_linmat(m)?;
        let mut a = vec![c];
        let mut map = Vec::with_capacity(n * l * l);
        for i in 0..n {
            for j in 0..l {
                for k in 0..l {
                    a.push(self.a[i + 1].kron(&Matrix::unit(l, l, j, k), &self.ctx));
                    map.push((i, j, k));
                }
            }
        }
        Ok((LinearMatrix::new(&self.ctx, a)?, map))
    }

    /// Smallest dilation with invertible constant term: base-field samples
    /// for ℓ = 1..2d (about `trials`·2d/ℓ each), then (over prime fields) extension samples pushed down
    /// through the regular representation.
    pub fn find_invertible_dilation(&self, trials: usize, seed: u64) -> Result<Dilation> {
        let d = self.dim();
        let n = self.nvars();
        let mut split = rng::Splitter::new(seed);
        let f = &self.ctx;
        if self.a0().is_invertible(f) {
            let point = vec![Matrix::zeros(1, 1); n];
            return Ok(Dilation {
                l: 1,
                constant: self.a0().clone(),
                point,
            });
        }
        for l in 1..=2 * d.max(1) {
            let cells = (n * l * l) as u32;
            let space = f
                .order()
                .checked_pow(cells)
                .filter(|&s| s <= EXHAUSTIVE_POINTS);
            if let Some(space) = space {
                for idx in 0..space {
                    let point = indexed_point(f, n, l, idx);
                    let constant = self.eval_linmat(&point)?;
                    if constant.is_invertible(f) {
                        return Ok(Dilation { l, constant, point });
                    }
                }
                continue;
            }
            // Later stages cost (d·ℓ)³, so small ℓ get more samples.
            let mut r = split.next_rng();
            for _ in 0..trials * (2 * d).div_ceil(l) {
                let point = random_point(f, n, l, &mut r);
                let constant = self.eval_linmat(&point)?;
                if constant.is_invertible(f) {
                    return Ok(Dilation { l, constant, point });
                }
            }
        }
        if f.is_prime_field() {
            for l in 1..=2 * d.max(1) {
                let emb = extension_at_least(f, (4 * d * l) as u64, split.next_seed())?;
                if emb.big.k() == 1 {
                    continue;
                }
                let big = self.embed(&emb);
                let mut r = split.next_rng();
                for _ in 0..trials {
                    let ext = random_point(&emb.big, n, l, &mut r);
                    if !big.eval_linmat(&ext)?.is_invertible(&emb.big) {
                        continue;
                    }
                    let point: Vec<Matrix> = ext
                        .iter()
                        .map(|x| crate::expr::push_down(x, &emb.big))
                        .collect();
                    let constant = self.eval_linmat(&point)?;
                    if constant.is_invertible(f) {
                        return Ok(Dilation {
                            l: l * emb.big.k(),
                            constant,
                            point,
                        });
                    }
                }
            }
        }
        Err(Error::Exhausted(
            "no invertible dilation up to 2d (not full, or unlucky seed)".into(),
        ))
    }
}

/// Fresh variable of a dilation: (original variable, row, column).
pub type DilatedVar = (usize, usize, usize);

/// Dilation point with its invertible constant term.
#[derive(Clone, Debug)]
pub struct Dilation {
    pub l: usize,
    pub point: Vec<Matrix>,
    pub constant: Matrix,
}

/// Point spaces up to this size are searched exhaustively.
const EXHAUSTIVE_POINTS: u64 = 4096;

/// The `idx`-th point in base-q digit order.
fn indexed_point(f: &FieldCtx, n: usize, l: usize, mut idx: u64) -> Vec<Matrix> {
    let q = f.order();
    (0..n)
        .map(|_| {
            Matrix::from_fn(l, l, |_, _| {
                let v = f.element(idx % q).expect("in range");
                idx /= q;
                v
            })
        })
        .collect()
}

pub fn random_point(ctx: &FieldCtx, n: usize, m: usize, r: &mut Rng) -> Vec<Matrix> {
    (0..n).map(|_| Matrix::random(m, m, ctx, r)).collect()
}

/// Structural tag of a polynomial matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    UpperUnitriangular,
    LowerUnitriangular,
    GeneralUnit,
    Scalar,
    General,
}

/// Matrix of polynomials held as a chain of affine layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMatrix {
    pub chain: Chain,
    pub shape: Shape,
}

impl PolyMatrix {
    pub fn new(chain: Chain, shape: Shape) -> Self {
        PolyMatrix { chain, shape }
    }

    pub fn identity(ctx: &FieldCtx, nvars: usize, d: usize) -> Self {
        PolyMatrix {
            chain: Chain::identity(ctx, nvars, d),
            shape: Shape::Scalar,
        }
    }

    pub fn scalar(ctx: &FieldCtx, nvars: usize, m: &Matrix) -> Self {
        PolyMatrix {
            chain: Chain::constant(ctx, nvars, m.clone()),
            shape: Shape::Scalar,
        }
    }

    pub fn linear(l: &LinearMatrix, shape: Shape) -> Self {
        PolyMatrix {
            chain: Chain::from_linear(l),
            shape,
        }
    }

    pub fn rows(&self) -> usize {
        self.chain.rows()
    }

    pub fn cols(&self) -> usize {
        self.chain.cols()
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.chain.ctx
    }

    pub fn nvars(&self) -> usize {
        self.chain.nvars()
    }

    pub fn entry(&self, r: usize, c: usize) -> crate::abp::Abp {
        self.chain.entry(r, c)
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        use Shape::*;
        let shape = match (self.shape, o.shape) {
            (a, b) if a == b => a,
            (Scalar, _) | (_, Scalar) => General,
            (General, _) | (_, General) => General,
            _ => GeneralUnit,
        };
        Ok(PolyMatrix {
            chain: self.chain.mul(&o.chain)?,
            shape,
        })
    }

    /// S·A for a scalar matrix S.
    pub fn apply_scalar_left(&self, s: &Matrix) -> Self {
        let shape = if self.shape == Shape::Scalar {
            Shape::Scalar
        } else {
            Shape::General
        };
        PolyMatrix {
            chain: self.chain.left_scalar(s),
            shape,
        }
    }

    /// A·S for a scalar matrix S.
    pub fn apply_scalar_right(&self, s: &Matrix) -> Self {
        let shape = if self.shape == Shape::Scalar {
            Shape::Scalar
        } else {
            Shape::General
        };
        PolyMatrix {
            chain: self.chain.right_scalar(s),
            shape,
        }
    }

    /// A ⊕ I_k.
    pub fn pad_identity(&self, k: usize) -> Self {
        if k == 0 {
            return self.clone();
        }
        let id = Chain::identity(self.ctx(), self.nvars(), k);
        PolyMatrix {
            chain: self.chain.direct_sum(&id),
            shape: self.shape,
        }
    }

    pub fn direct_sum(&self, o: &Self) -> Self {
        let shape = if self.shape == o.shape {
            self.shape
        } else {
            Shape::General
        };
        PolyMatrix {
            chain: self.chain.direct_sum(&o.chain),
            shape,
        }
    }

    pub fn eval_matrix(&self, point: &[Matrix]) -> Result<Matrix> {
        self.chain.eval_matrix(point)
    }

    /// Exact check of the tagged structure via zero tests on entries.
    pub fn check_shape(&self) -> bool {
        let (r, c) = (self.rows(), self.cols());
        let one = crate::abp::Abp::one(self.ctx(), self.nvars());
        let unit_diag = |s: &Self| r == c && (0..r).all(|i| s.entry(i, i).sub(&one).is_zero());
        match self.shape {
            Shape::UpperUnitriangular => {
                unit_diag(self) && (0..r).all(|i| (0..i).all(|j| self.entry(i, j).is_zero()))
            }
            Shape::LowerUnitriangular => {
                unit_diag(self) && (0..r).all(|i| (i + 1..c).all(|j| self.entry(i, j).is_zero()))
            }
            Shape::Scalar => {
                (0..r).all(|i| (0..c).all(|j| self.entry(i, j).degree().unwrap_or(0) == 0))
            }
            Shape::GeneralUnit | Shape::General => true,
        }
    }

    /// Exact equality of all entries.
    pub fn equals(&self, o: &Self) -> bool {
        self.rows() == o.rows()
            && self.cols() == o.cols()
            && (0..self.rows())
                .all(|i| (0..self.cols()).all(|j| self.entry(i, j).sub(&o.entry(i, j)).is_zero()))
    }

    pub fn to_doc(&self) -> PolyMatrixDoc {
        PolyMatrixDoc {
            shape: self.shape,
            rows: self.rows(),
            cols: self.cols(),
            chain: self.chain.to_doc(),
        }
    }

    pub fn from_doc(doc: &PolyMatrixDoc) -> Result<Self> {
        let chain = Chain::from_doc(&doc.chain)?;
        if chain.rows() != doc.rows || chain.cols() != doc.cols {
            return Err(Error::Format(
                "polynomial matrix shape does not match its chain".into(),
            ));
        }
        Ok(PolyMatrix {
            chain,
            shape: doc.shape,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyMatrixDoc {
    pub shape: Shape,
    pub rows: usize,
    pub cols: usize,
    pub chain: AbpDoc,
}

/// Result of monicization. Right: U·L·S = L′ ⊕ I_r with U polynomial and S
/// scalar. Left: S·L·U = L′ ⊕ I_r.
#[derive(Clone, Debug)]
pub struct MonicizationCert {
    pub side: Side,
    pub u: PolyMatrix,
    pub u_inv: PolyMatrix,
    pub s: Matrix,
    pub s_inv: Matrix,
    pub r: usize,
    pub lp: LinearMatrix,
}

impl MonicizationCert {
    /// Check the defining identity and U·U⁻¹ = I at random m×m points.
    pub fn check(&self, l: &LinearMatrix, trials: usize, m: usize, seed: u64) -> Result<bool> {
        let f = &l.ctx;
        let mut r = rng::rng(seed);
        let d = l.dim();
        let target = self
            .lp
            .direct_sum(&LinearMatrix::identity(f, self.r, l.nvars()));
        let sk = self.s.kron(&Matrix::identity(m), f);
        for _ in 0..trials {
            let pt = random_point(f, l.nvars(), m, &mut r);
            let u = self.u.eval_matrix(&pt)?;
            let lv = l.eval_linmat(&pt)?;
            let lhs = match self.side {
                Side::Right => u.mul(&lv, f).mul(&sk, f),
                Side::Left => sk.mul(&lv, f).mul(&u, f),
            };
            if lhs != target.eval_linmat(&pt)? {
                return Ok(false);
            }
            if u.mul(&self.u_inv.eval_matrix(&pt)?, f) != Matrix::identity(d * m) {
                return Ok(false);
            }
        }
        Ok(self.lp.is_monic(self.side) && self.r < d)
    }
}

/// Monicize a full linear matrix on the given side.
pub fn monicize(l: &LinearMatrix, side: Side) -> Result<MonicizationCert> {
    if !l.is_square() {
        return Err(Error::Dimension(
            "monicize needs a square linear matrix".into(),
        ));
    }
    match side {
        Side::Right => monicize_right(l),
        Side::Left => {
            // Mirror: every step acts on columns instead of rows.
            let c = monicize_right_generic(l, true)?;
            Ok(c)
        }
    }
}

fn monicize_right(l: &LinearMatrix) -> Result<MonicizationCert> {
    monicize_right_generic(l, false)
}

/// One routine for both sides. With `mirror`, rows and columns swap roles:
/// scalar operations act on rows and the polynomial unit acts on columns.
fn monicize_right_generic(l: &LinearMatrix, mirror: bool) -> Result<MonicizationCert> {
    let f = l.ctx.clone();
    let n = l.nvars();
    let d0 = l.dim();
    let side = if mirror { Side::Left } else { Side::Right };
    // Work on the transpose when mirroring so the scalar bookkeeping is shared;
    // polynomial operations are applied in the original orientation.
    let mut cur = if mirror { l.transpose() } else { l.clone() };
    let mut s_total = Matrix::identity(d0);
    let mut s_inv_total = Matrix::identity(d0);
    let mut u = PolyMatrix::identity(&f, n, d0);
    let mut u_inv = PolyMatrix::identity(&f, n, d0);
    let mut r = 0usize;
    loop {
        let d = cur.dim();
        if cur.is_right_monic() {
            break;
        }
        if d == 1 {
            return Err(Error::Unit);
        }
        let b = cur.stacked_coeffs();
        let y = b
            .transpose()
            .kernel(&f)
            .vectors()
            .into_iter()
            .next()
            .ok_or_else(|| Error::Internal("rank deficit without kernel".into()))?;
        let p = y
            .iter()
            .rposition(|x| !x.is_zero())
            .expect("nonzero kernel vector");
        let mut rows: Vec<Vec<Fe>> = (0..d)
            .filter(|&i| i != p)
            .map(|i| Matrix::unit(1, d, 0, i).row(0).to_vec())
            .collect();
        rows.push(y);
        let u1 = Matrix::from_rows(rows);
        let u1_inv = u1.inverse(&f)?;
        let m1 = cur.left_mul(&u1);
        let last = m1.a0().row(d - 1).to_vec();
        let Some(c) = last.iter().position(|x| !x.is_zero()) else {
            return Err(Error::NotFull);
        };
        let mut perm: Vec<usize> = (0..d).collect();
        perm.swap(c, d - 1);
        let s1 = Matrix::permutation(&perm);
        let m2 = m1.right_mul(&s1);
        let alpha = m2.a0()[(d - 1, d - 1)];
        let ainv = f.inv(alpha).expect("nonzero");
        let mut sp = Matrix::identity(d);
        let mut sp_inv = Matrix::identity(d);
        for i in 0..d - 1 {
            let li = m2.a0()[(d - 1, i)];
            if !li.is_zero() {
                sp[(d - 1, i)] = f.neg(f.mul(li, ainv));
                sp_inv[(d - 1, i)] = f.mul(li, ainv);
            }
        }
        let m3 = m2.right_mul(&sp);
        // R = I − Σ (L_id/α)·E_id clears the last column; scale the last row by α⁻¹.
        let mut rmat = LinearMatrix::identity(&f, d, n);
        let mut rinv = LinearMatrix::identity(&f, d, n);
        for i in 0..d - 1 {
            let form = m3.entry(i, d - 1);
            rmat.set_entry(
                i,
                d - 1,
                &form
                    .iter()
                    .map(|&x| f.neg(f.mul(x, ainv)))
                    .collect::<Vec<_>>(),
            );
            rinv.set_entry(
                i,
                d - 1,
                &form.iter().map(|&x| f.mul(x, ainv)).collect::<Vec<_>>(),
            );
        }
        let mut scale = Matrix::identity(d);
        scale[(d - 1, d - 1)] = ainv;
        let mut scale_inv = Matrix::identity(d);
        scale_inv[(d - 1, d - 1)] = alpha;
        let step = rmat.left_mul(&scale).right_mul(&u1);
        let step_inv = rinv.left_mul(&u1_inv).right_mul(&scale_inv);
        let s_step = s1.mul(&sp, &f);
        let s_step_inv = sp_inv.mul(&s1, &f);
        let next = m3.block(0, 0, d - 1, d - 1);
        // Lift to the full size: the finished identity block stays untouched.
        let pad = d0 - d;
        let step_full = pad_linear(&step, pad);
        let step_inv_full = pad_linear(&step_inv, pad);
        let s_full = s_step.direct_sum(&Matrix::identity(pad));
        let s_inv_full = s_step_inv.direct_sum(&Matrix::identity(pad));
        if mirror {
            // Original orientation: L·Uᵀ… with reversed products.
            u = u.mul(&PolyMatrix::linear(
                &step_full.transpose(),
                Shape::GeneralUnit,
            ))?;
            u_inv =
                PolyMatrix::linear(&step_inv_full.transpose(), Shape::GeneralUnit).mul(&u_inv)?;
            s_total = s_full.transpose().mul(&s_total, &f);
            s_inv_total = s_inv_total.mul(&s_inv_full.transpose(), &f);
        } else {
            u = PolyMatrix::linear(&step_full, Shape::GeneralUnit).mul(&u)?;
            u_inv = u_inv.mul(&PolyMatrix::linear(&step_inv_full, Shape::GeneralUnit))?;
            s_total = s_total.mul(&s_full, &f);
            s_inv_total = s_inv_full.mul(&s_inv_total, &f);
        }
        cur = next;
        r += 1;
    }
    let lp = if mirror { cur.transpose() } else { cur };
    u.shape = Shape::GeneralUnit;
    u_inv.shape = Shape::GeneralUnit;
    Ok(MonicizationCert {
        side,
        u,
        u_inv,
        s: s_total,
        s_inv: s_inv_total,
        r,
        lp,
    })
}

/// Embed a k×k linear matrix as the top-left block of (k+pad)×(k+pad),
/// identity elsewhere. The finished part sits at the bottom-right.
fn pad_linear(l: &LinearMatrix, pad: usize) -> LinearMatrix {
    l.direct_sum(&LinearMatrix::identity(&l.ctx, pad, l.nvars()))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::expr::Formula;

    fn f5() -> FieldCtx {
        FieldCtx::prime(5).unwrap()
    }

    /// Linear matrix from affine-form strings in the given variables.
    pub(crate) fn lin(f: &FieldCtx, n: usize, rows: &[&[&str]]) -> LinearMatrix {
        let d = rows.len();
        let c = rows[0].len();
        let mut l = LinearMatrix::zeros(f, d, c, n);
        for (i, row) in rows.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                let p = Formula::parse(s, f).unwrap().to_sparse().unwrap();
                let mut form = vec![Fe::ZERO; n + 1];
                for (w, &v) in p.terms() {
                    match w.as_slice() {
                        [] => form[0] = v,
                        [k] => form[k + 1] = v,
                        _ => panic!("not affine"),
                    }
                }
                l.set_entry(i, j, &form);
            }
        }
        l
    }

    #[test]
    fn evaluation() {
        let f = f5();
        let x = lin(&f, 1, &[&["x"]]);
        assert_eq!(
            x.eval_linmat(&[Matrix::scalar(1, Fe(3))]).unwrap(),
            Matrix::scalar(1, Fe(3))
        );
        let id = lin(&f, 1, &[&["1", "0"], &["0", "1"]]);
        let mut r = rng::rng(0);
        assert_eq!(
            id.eval_linmat(&random_point(&f, 1, 3, &mut r)).unwrap(),
            Matrix::identity(6)
        );
        let dg = lin(&f, 2, &[&["x", "0"], &["0", "y"]]);
        assert_eq!(
            dg.eval_linmat(&[Matrix::identity(1), Matrix::identity(1)])
                .unwrap(),
            Matrix::identity(2)
        );
        assert!(dg.eval_linmat(&[Matrix::identity(1)]).is_err());
    }

    #[test]
    fn monicity() {
        let f = f5();
        assert!(lin(&f, 2, &[&["1+x", "0"], &["0", "1+y"]]).is_right_monic());
        assert!(!lin(&f, 2, &[&["1", "0"], &["0", "1"]]).is_right_monic());
        assert!(!lin(&f, 1, &[&["x", "0"], &["0", "1"]]).is_right_monic());
        assert!(lin(&f, 2, &[&["x", "y"], &["0", "0"]]).is_left_monic());
        assert!(!lin(&f, 2, &[&["x", "y"], &["0", "0"]]).is_right_monic());
    }

    #[test]
    fn fullness() {
        let f = FieldCtx::prime(2).unwrap();
        assert!(lin(&f, 1, &[&["x"]]).is_full_randomized(8, 1));
        assert!(!lin(&f, 1, &[&["x", "x"], &["x", "x"]]).is_full_randomized(8, 1));
        assert!(lin(&f, 2, &[&["x", "y"], &["y", "0"]]).is_full_randomized(8, 1));
        // 2×2 commutator pencil: full but singular on every scalar point
        assert!(lin(&f, 2, &[&["x", "y"], &["y", "x"]]).is_full_randomized(8, 2));
        let mut r = rng::rng(5);
        for _ in 0..20 {
            // u·vᵀ with affine u entries is rank-deficient
            let d = 3;
            let u = lin(&f, 2, &[&["x"], &["y"], &["x+y"]]);
            let v = Matrix::random(1, d, &f, &mut r);
            let a: Vec<Matrix> = u.coeffs().iter().map(|m| m.mul(&v, &f)).collect();
            let l = LinearMatrix::new(&f, a).unwrap();
            assert!(!l.is_full_randomized(8, 3));
        }
    }

    #[test]
    fn monicize_examples() {
        let f = f5();
        let l = lin(&f, 2, &[&["1+x", "0"], &["0", "1+y"]]);
        let c = monicize(&l, Side::Right).unwrap();
        assert_eq!((c.r, c.s.clone()), (0, Matrix::identity(2)));
        assert_eq!(c.lp, l);
        let l = lin(&f, 1, &[&["x", "0"], &["0", "1"]]);
        let c = monicize(&l, Side::Right).unwrap();
        assert_eq!(c.r, 1);
        assert_eq!(c.lp, lin(&f, 1, &[&["x"]]));
        assert!(c.check(&l, 10, 2, 7).unwrap());
        let id = lin(&f, 1, &[&["1", "0"], &["0", "1"]]);
        assert_eq!(monicize(&id, Side::Right).unwrap_err(), Error::Unit);
        assert_eq!(monicize(&id, Side::Left).unwrap_err(), Error::Unit);
    }

    #[test]
    fn monicize_both_sides() {
        let f = FieldCtx::prime(3).unwrap();
        let l = lin(
            &f,
            2,
            &[&["x", "1", "0"], &["0", "y", "1"], &["1+x", "0", "2"]],
        );
        for side in [Side::Right, Side::Left] {
            let c = monicize(&l, side).unwrap();
            assert!(c.check(&l, 10, 2, 9).unwrap(), "{side}");
        }
        let l = lin(&f, 2, &[&["0", "x"], &["2*y", "1"]]);
        for side in [Side::Right, Side::Left] {
            let c = monicize(&l, side).unwrap();
            assert!(c.check(&l, 10, 2, 9).unwrap(), "{side}");
        }
    }

    #[test]
    fn dilation() {
        let f = f5();
        let x = lin(&f, 1, &[&["x"]]);
        let (dl, map) = x.dilate(&[Matrix::scalar(1, Fe(2))]).unwrap();
        assert_eq!(dl, lin(&f, 1, &[&["2+x"]]));
        assert_eq!(map, vec![(0, 0, 0)]);
        let l = lin(&f, 2, &[&["1+x", "y"], &["0", "1+y"]]);
        let mut r = rng::rng(1);
        let pt = random_point(&f, 2, 2, &mut r);
        let (dl, map) = l.dilate(&pt).unwrap();
        assert_eq!((dl.dim(), dl.nvars(), map.len()), (4, 8, 8));
        assert!(dl.is_right_monic());
        assert_eq!(dl.a0(), &l.eval_linmat(&pt).unwrap());
    }

    #[test]
    fn invertible_dilations() {
        let f = FieldCtx::prime(2).unwrap();
        let inv = lin(&f, 1, &[&["1+x", "0"], &["x", "1"]]);
        let d = inv.find_invertible_dilation(8, 0).unwrap();
        assert_eq!(d.l, 1);
        assert!(d.point.iter().all(|m| m.is_zero()));
        let d = lin(&f, 1, &[&["x"]])
            .find_invertible_dilation(8, 0)
            .unwrap();
        assert_eq!((d.l, d.point[0].clone()), (1, Matrix::scalar(1, Fe::ONE)));
        let dg = lin(&f, 2, &[&["x", "0"], &["0", "y"]]);
        let d = dg.find_invertible_dilation(8, 0).unwrap();
        assert_eq!(d.l, 1);
        // odd skew-symmetric pencil: singular at every scalar point, yet full
        let f3 = FieldCtx::prime(3).unwrap();
        let skew = lin(
            &f3,
            3,
            &[&["0", "x", "y"], &["2*x", "0", "z"], &["2*y", "2*z", "0"]],
        );
        let d = skew.find_invertible_dilation(8, 0).unwrap();
        assert!(d.l >= 2 && d.constant.is_invertible(&f3));
        assert!(skew.is_full_randomized(8, 0));
        assert!(lin(&f, 1, &[&["x", "x"], &["x", "x"]])
            .find_invertible_dilation(4, 0)
            .is_err());
    }

    #[test]
    fn polymatrix_products() {
        let f = FieldCtx::prime(3).unwrap();
        let a = PolyMatrix::linear(
            &lin(&f, 2, &[&["1", "x"], &["0", "1"]]),
            Shape::UpperUnitriangular,
        );
        let b = PolyMatrix::linear(
            &lin(&f, 2, &[&["1", "y*2"], &["0", "1"]]),
            Shape::UpperUnitriangular,
        );
        let ab = a.mul(&b).unwrap();
        assert_eq!(ab.shape, Shape::UpperUnitriangular);
        assert!(ab.check_shape());
        let id = PolyMatrix::identity(&f, 2, 2);
        assert!(a.mul(&id).unwrap().equals(&a));
        let ainv = PolyMatrix::linear(
            &lin(&f, 2, &[&["1", "2*x"], &["0", "1"]]),
            Shape::UpperUnitriangular,
        );
        assert!(a.mul(&ainv).unwrap().equals(&id));
        let doc = serde_json::to_string(&ab.to_doc()).unwrap();
        let back = PolyMatrix::from_doc(&serde_json::from_str(&doc).unwrap()).unwrap();
        assert!(back.equals(&ab));
    }

    #[test]
    fn json_round_trip() {
        let f = FieldCtx::build_extension(2, 3, 0).unwrap();
        let l = LinearMatrix::new(
            &f,
            vec![Matrix::identity(2), Matrix::scalar(2, f.generator())],
        )
        .unwrap();
        let text = serde_json::to_string(&l.to_doc()).unwrap();
        let back = LinearMatrix::from_doc(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, l);
        assert!(text.contains("\"d\":2"));
    }
}
