//! Algebraic branching programs.
//!
//! A [`Chain`] is a product of affine transfer matrices `L₁·L₂⋯L_D`; its
//! vertices are the row/column indices between consecutive layers and its
//! edges the nonzero affine entries. An [`Abp`] is a chain with a single
//! source and a single sink. Chains with wider ends represent matrices of
//! polynomials (see `linmat::PolyMatrix`).
//!
//! Identity testing works on words: constant edges are closed off into a
//! transitive closure K, and each letter acts on row vectors by r ↦ r·H_j·K.
//! The coefficient of a word is the sink coordinate of the resulting vector,
//! so the span of all reachable vectors decides zeroness exactly.

use crate::error::{Error, Result};
use crate::expr::{Formula, FreePoly, Node, Word};
use crate::field::{Echelon, Fe, FieldCtx, Matrix};
use crate::linmat::LinearMatrix;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};

/// Product of affine layers; always at least one layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chain {
    pub ctx: FieldCtx,
    nvars: usize,
    layers: Vec<LinearMatrix>,
}

impl Chain {
    pub fn new(ctx: &FieldCtx, nvars: usize, layers: Vec<LinearMatrix>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Dimension("a chain needs at least one layer".into()));
        }
        if layers.windows(2).any(|w| w[0].cols() != w[1].rows()) {
            return Err(Error::Dimension("consecutive layers do not chain".into()));
        }
        let nvars = layers
            .iter()
            .map(|l| l.nvars())
            .max()
            .unwrap_or(0)
            .max(nvars);
        let layers = layers.into_iter().map(|l| l.with_nvars(nvars)).collect();
        Ok(Chain {
            ctx: ctx.clone(),
            nvars,
            layers,
        })
    }

    pub fn from_linear(l: &LinearMatrix) -> Self {
        Chain {
            ctx: l.ctx.clone(),
            nvars: l.nvars(),
            layers: vec![l.clone()],
        }
    }

    pub fn constant(ctx: &FieldCtx, nvars: usize, m: Matrix) -> Self {
        Self::from_linear(&LinearMatrix::constant(ctx, nvars, m))
    }

    pub fn identity(ctx: &FieldCtx, nvars: usize, d: usize) -> Self {
        Self::constant(ctx, nvars, Matrix::identity(d))
    }

    pub fn zeros(ctx: &FieldCtx, nvars: usize, rows: usize, cols: usize) -> Self {
        Self::constant(ctx, nvars, Matrix::zeros(rows, cols))
    }

    pub fn rows(&self) -> usize {
        self.layers[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.layers.last().expect("nonempty").cols()
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[LinearMatrix] {
        &self.layers
    }

    /// Vertex count.
    pub fn size(&self) -> usize {
        self.rows() + self.layers.iter().map(|l| l.cols()).sum::<usize>()
    }

    pub fn with_nvars(mut self, n: usize) -> Self {
        if n > self.nvars {
            self.nvars = n;
            self.layers = self.layers.into_iter().map(|l| l.with_nvars(n)).collect();
        }
        self
    }

    fn align(&self, o: &Self) -> (Self, Self) {
        let n = self.nvars.max(o.nvars);
        (self.clone().with_nvars(n), o.clone().with_nvars(n))
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        if self.cols() != o.rows() {
            return Err(Error::Dimension(format!(
                "{}×{} times {}×{}",
                self.rows(),
                self.cols(),
                o.rows(),
                o.cols()
            )));
        }
        let (mut a, b) = self.align(o);
        a.layers.extend(b.layers);
        Ok(a.compress())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        if self.rows() != o.rows() || self.cols() != o.cols() {
            return Err(Error::Dimension("sum of differently shaped chains".into()));
        }
        let (mut a, mut b) = self.align(o);
        let depth = a.depth().max(b.depth());
        for c in [&mut a, &mut b] {
            let id = LinearMatrix::identity(&self.ctx, c.cols(), c.nvars);
            while c.layers.len() < depth {
                c.layers.push(id.clone());
            }
        }
        let layers = if depth == 1 {
            vec![a.layers[0].add(&b.layers[0])]
        } else {
            let mut v = vec![a.layers[0].hstack(&b.layers[0])];
            for t in 1..depth - 1 {
                v.push(a.layers[t].direct_sum(&b.layers[t]));
            }
            v.push(a.layers[depth - 1].vstack(&b.layers[depth - 1]));
            v
        };
        Ok(Chain {
            ctx: self.ctx.clone(),
            nvars: a.nvars,
            layers,
        }
        .compress())
    }

    pub fn scale(&self, c: Fe) -> Self {
        let mut out = self.clone();
        out.layers[0] = out.layers[0].scale(c);
        out.compress()
    }

    pub fn neg(&self) -> Self {
        self.scale(self.ctx.neg(Fe::ONE))
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    /// S·M for a scalar matrix S.
    pub fn left_scalar(&self, s: &Matrix) -> Self {
        let mut out = self.clone();
        out.layers[0] = out.layers[0].left_mul(s);
        out.compress()
    }

    /// M·S for a scalar matrix S.
    pub fn right_scalar(&self, s: &Matrix) -> Self {
        let mut out = self.clone();
        let last = out.layers.len() - 1;
        out.layers[last] = out.layers[last].right_mul(s);
        out.compress()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut out = self.clone();
        out.layers[0] = out.layers[0].select_rows(idx);
        out.compress()
    }

    pub fn select_cols(&self, idx: &[usize]) -> Self {
        let mut out = self.clone();
        let last = out.layers.len() - 1;
        out.layers[last] = out.layers[last].select_cols(idx);
        out.compress()
    }

    pub fn entry(&self, r: usize, c: usize) -> Abp {
        Abp(self.select_rows(&[r]).select_cols(&[c]))
    }

    /// Block-diagonal sum.
    pub fn direct_sum(&self, o: &Self) -> Self {
        let (mut a, mut b) = self.align(o);
        let depth = a.depth().max(b.depth());
        for c in [&mut a, &mut b] {
            let id = LinearMatrix::identity(&self.ctx, c.cols(), c.nvars);
            while c.layers.len() < depth {
                c.layers.push(id.clone());
            }
        }
        let layers = a
            .layers
            .iter()
            .zip(&b.layers)
            .map(|(x, y)| x.direct_sum(y))
            .collect();
        Chain {
            ctx: self.ctx.clone(),
            nvars: a.nvars,
            layers,
        }
        .compress()
    }

    /// Assemble a matrix from ABP entries.
    pub fn from_entries(ctx: &FieldCtx, nvars: usize, grid: &[Vec<Abp>]) -> Result<Self> {
        let rows = grid.len();
        let cols = grid.first().map_or(0, |r| r.len());
        let mut acc = Chain::zeros(ctx, nvars, rows, cols);
        for (i, row) in grid.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Dimension("ragged entry grid".into()));
            }
            for (j, e) in row.iter().enumerate() {
                if e.0.layers.iter().all(|l| l.is_zero()) {
                    continue;
                }
                let ei = Matrix::unit(rows, 1, i, 0);
                let ej = Matrix::unit(1, cols, 0, j);
                let placed = e.0.left_scalar(&ei).right_scalar(&ej);
                acc = acc.add(&placed)?;
            }
        }
        Ok(acc)
    }

    /// Word reversal applied entrywise, then transposed: layers in reverse
    /// order, each transposed.
    pub fn reversed(&self) -> Self {
        let layers = self.layers.iter().rev().map(|l| l.transpose()).collect();
        Chain {
            ctx: self.ctx.clone(),
            nvars: self.nvars,
            layers,
        }
    }

    /// Substitute xᵢ ← xᵢ ± αᵢ in every layer.
    pub fn shift_vars(&self, alpha: &[Fe], negate: bool) -> Self {
        let layers = self.layers.iter().map(|l| l.shift(alpha, negate)).collect();
        Chain {
            ctx: self.ctx.clone(),
            nvars: self.nvars,
            layers,
        }
        .compress()
    }

    /// Value at a scalar point.
    pub fn eval_scalar(&self, point: &[Fe]) -> Matrix {
        let mut acc = self.layers[0].eval_scalar(point);
        for l in &self.layers[1..] {
            acc = acc.mul(&l.eval_scalar(point), &self.ctx);
        }
        acc
    }

    /// Block matrix whose (i, j) block is entry (i, j) evaluated at `point`.
    pub fn eval_matrix(&self, point: &[Matrix]) -> Result<Matrix> {
        let mut acc = self.layers[0].eval_linmat(point)?;
        for l in &self.layers[1..] {
            acc = acc.mul(&l.eval_linmat(point)?, &self.ctx);
        }
        Ok(acc)
    }

    /// Fold constant layers into neighbours and drop dead vertices.
    pub fn compress(mut self) -> Self {
        let mut t = 0;
        while self.layers.len() > 1 && t < self.layers.len() {
            if self.layers[t].is_constant() {
                let c = self.layers.remove(t);
                if t < self.layers.len() {
                    self.layers[t] = self.layers[t].left_mul(c.a0());
                } else {
                    self.layers[t - 1] = self.layers[t - 1].right_mul(c.a0());
                }
            } else {
                t += 1;
            }
        }
        self.trim()
    }

    fn trim(mut self) -> Self {
        loop {
            let mut changed = false;
            for t in 1..self.layers.len() {
                let (left, right) = (&self.layers[t - 1], &self.layers[t]);
                let keep: Vec<usize> = (0..left.cols())
                    .filter(|&v| {
                        let has_in = left
                            .coeffs()
                            .iter()
                            .any(|m| (0..m.rows()).any(|r| !m[(r, v)].is_zero()));
                        let has_out = right
                            .coeffs()
                            .iter()
                            .any(|m| m.row(v).iter().any(|x| !x.is_zero()));
                        has_in && has_out
                    })
                    .collect();
                if keep.len() < left.cols() {
                    changed = true;
                    if keep.is_empty() {
                        return Chain::zeros(&self.ctx, self.nvars, self.rows(), self.cols());
                    }
                    self.layers[t - 1] = self.layers[t - 1].select_cols(&keep);
                    self.layers[t] = self.layers[t].select_rows(&keep);
                }
            }
            if !changed {
                return self;
            }
        }
    }

    pub fn to_doc(&self) -> AbpDoc {
        let mut layers = Vec::new();
        let mut next = 0usize;
        let mut bounds = vec![self.rows()];
        bounds.extend(self.layers.iter().map(|l| l.cols()));
        let mut offsets = Vec::new();
        for &b in &bounds {
            offsets.push(next);
            layers.push((next..next + b).collect());
            next += b;
        }
        let mut edges = Vec::new();
        for (t, l) in self.layers.iter().enumerate() {
            for r in 0..l.rows() {
                for c in 0..l.cols() {
                    let form = l.entry(r, c);
                    if form.iter().all(|x| x.is_zero()) {
                        continue;
                    }
                    edges.push(EdgeDoc {
                        from: offsets[t] + r,
                        to: offsets[t + 1] + c,
                        r#const: form[0].index(),
                        coeffs: form[1..].iter().map(|x| x.index()).collect(),
                    });
                }
            }
        }
        AbpDoc {
            field: self.ctx.spec(),
            nvars: self.nvars,
            layers,
            edges,
        }
    }

    pub fn from_doc(doc: &AbpDoc) -> Result<Self> {
        let ctx = FieldCtx::from_spec(&doc.field)?;
        if doc.layers.len() < 2 {
            return Err(Error::Format(
                "an ABP needs at least two vertex layers".into(),
            ));
        }
        let mut place = HashMap::new();
        for (t, layer) in doc.layers.iter().enumerate() {
            for (i, &v) in layer.iter().enumerate() {
                if place.insert(v, (t, i)).is_some() {
                    return Err(Error::Format(format!("vertex {v} listed twice")));
                }
            }
        }
        let mut layers: Vec<LinearMatrix> = (1..doc.layers.len())
            .map(|t| {
                LinearMatrix::zeros(
                    &ctx,
                    doc.layers[t - 1].len(),
                    doc.layers[t].len(),
                    doc.nvars,
                )
            })
            .collect();
        for e in &doc.edges {
            let (&(tf, i), &(tt, j)) = match (place.get(&e.from), place.get(&e.to)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::Format("edge endpoint is not a listed vertex".into())),
            };
            if tt != tf + 1 || e.coeffs.len() != doc.nvars {
                return Err(Error::Format(
                    "edges must join consecutive layers and carry nvars coefficients".into(),
                ));
            }
            let elt = |v: u64| {
                ctx.element(v)
                    .ok_or_else(|| Error::Format(format!("{v} is not a field element")))
            };
            let mut form = vec![elt(e.r#const)?];
            for &c in &e.coeffs {
                form.push(elt(c)?);
            }
            layers[tf].set_entry(i, j, &form);
        }
        Chain::new(&ctx, doc.nvars, layers)
    }
}

/// JSON form of a chain or ABP.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbpDoc {
    pub field: String,
    pub nvars: usize,
    pub layers: Vec<Vec<usize>>,
    pub edges: Vec<EdgeDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeDoc {
    pub from: usize,
    pub to: usize,
    #[serde(rename = "const")]
    pub r#const: u64,
    pub coeffs: Vec<u64>,
}

/// A single-source, single-sink branching program.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Abp(Chain);

impl Abp {
    pub fn from_chain(c: Chain) -> Result<Self> {
        if c.rows() != 1 || c.cols() != 1 {
            return Err(Error::Dimension(
                "an ABP has one source and one sink".into(),
            ));
        }
        Ok(Abp(c))
    }

    pub fn chain(&self) -> &Chain {
        &self.0
    }

    pub fn into_chain(self) -> Chain {
        self.0
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.0.ctx
    }

    pub fn nvars(&self) -> usize {
        self.0.nvars
    }

    pub fn depth(&self) -> usize {
        self.0.depth()
    }

    pub fn size(&self) -> usize {
        self.0.size()
    }

    pub fn constant(ctx: &FieldCtx, nvars: usize, c: Fe) -> Self {
        Abp(Chain::constant(ctx, nvars, Matrix::scalar(1, c)))
    }

    pub fn zero(ctx: &FieldCtx, nvars: usize) -> Self {
        Self::constant(ctx, nvars, Fe::ZERO)
    }

    pub fn one(ctx: &FieldCtx, nvars: usize) -> Self {
        Self::constant(ctx, nvars, Fe::ONE)
    }

    pub fn var(ctx: &FieldCtx, nvars: usize, i: usize) -> Self {
        Abp(Chain::from_linear(&LinearMatrix::var(
            ctx,
            nvars.max(i + 1),
            i,
        )))
    }

    /// Single affine form `[c₀, c₁, …]`.
    pub fn form(ctx: &FieldCtx, nvars: usize, coeffs: &[Fe]) -> Self {
        Abp(Chain::from_linear(&LinearMatrix::form(ctx, coeffs)).with_nvars(nvars))
    }

    pub fn from_formula(f: &Formula) -> Self {
        fn go(n: &Node, ctx: &FieldCtx, nv: usize) -> Chain {
            match n {
                Node::Const(c) => Chain::constant(ctx, nv, Matrix::scalar(1, *c)),
                Node::Var(i) => Chain::from_linear(&LinearMatrix::var(ctx, nv, *i)),
                Node::Add(a, b) => go(a, ctx, nv).add(&go(b, ctx, nv)).expect("1×1"),
                Node::Mul(a, b) => go(a, ctx, nv).mul(&go(b, ctx, nv)).expect("1×1"),
            }
        }
        Abp(go(&f.root, &f.ctx, f.nvars))
    }

    pub fn from_sparse(p: &FreePoly) -> Self {
        Self::from_formula(&p.to_formula())
    }

    pub fn product(&self, o: &Self) -> Self {
        Abp(self.0.mul(&o.0).expect("1×1"))
    }

    pub fn sum(&self, o: &Self) -> Self {
        Abp(self.0.add(&o.0).expect("1×1"))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Abp(self.0.sub(&o.0).expect("1×1"))
    }

    pub fn scale(&self, c: Fe) -> Self {
        Abp(self.0.scale(c))
    }

    pub fn shift_vars(&self, alpha: &[Fe], negate: bool) -> Self {
        Abp(self.0.shift_vars(alpha, negate))
    }

    /// The polynomial with every word reversed.
    pub fn reversed(&self) -> Self {
        Abp(self.0.reversed())
    }

    pub fn eval_scalar(&self, point: &[Fe]) -> Fe {
        self.0.eval_scalar(point)[(0, 0)]
    }

    pub fn eval_matrix(&self, point: &[Matrix]) -> Result<Matrix> {
        self.0.eval_matrix(point)
    }

    fn engine(&self) -> Engine {
        Engine::new(&self.0)
    }

    pub fn is_zero(&self) -> bool {
        self.engine().is_zero()
    }

    /// Degree of the computed polynomial; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.engine().degree()
    }

    pub fn coefficient_of_word(&self, w: &[usize]) -> Fe {
        self.engine().coefficient(w)
    }

    pub fn constant_term(&self) -> Fe {
        self.coefficient_of_word(&[])
    }

    /// Lexicographically least word of maximal degree with its coefficient.
    pub fn leading_word(&self) -> Option<(Word, Fe)> {
        self.engine().leading_word()
    }

    /// Exact sparse expansion (fails above `max_terms` monomials).
    pub fn to_sparse(&self, max_terms: usize) -> Result<FreePoly> {
        self.engine().expand(max_terms)
    }

    /// Sparse form restricted to the candidate words.
    pub fn to_sparse_abp(&self, candidates: &[Word]) -> FreePoly {
        let e = self.engine();
        let mut p = FreePoly::zero(self.ctx(), self.nvars());
        for w in candidates {
            let c = e.coefficient(w);
            if !c.is_zero() && p.coefficient(w).is_zero() {
                p.add_term(w.clone(), c);
            }
        }
        p
    }

    pub fn to_doc(&self) -> AbpDoc {
        self.0.to_doc()
    }

    pub fn from_doc(doc: &AbpDoc) -> Result<Self> {
        Self::from_chain(Chain::from_doc(doc)?)
    }
}

/// All subwords of the monomials of `p` up to length `max_len`.
pub fn subword_candidates(p: &FreePoly, max_len: usize) -> Vec<Word> {
    let mut s = std::collections::BTreeSet::new();
    for w in p.terms().keys() {
        for i in 0..=w.len() {
            for j in i..=w.len().min(i + max_len) {
                s.insert(w[i..j].to_vec());
            }
        }
    }
    s.into_iter().collect()
}

type Edges = Vec<(usize, usize, Fe)>;

/// Flattened graph with constant edges in topological order and one sparse
/// edge list per letter.
struct Engine {
    ctx: FieldCtx,
    total: usize,
    sink: usize,
    consts: Edges,
    letters: Vec<Edges>,
    depth: usize,
}

impl Engine {
    fn new(c: &Chain) -> Self {
        let n = c.nvars;
        let mut offsets = vec![0usize];
        let mut next = c.rows();
        for l in &c.layers {
            offsets.push(next);
            next += l.cols();
        }
        let mut consts = Vec::new();
        let mut letters = vec![Vec::new(); n];
        for (t, l) in c.layers.iter().enumerate() {
            for r in 0..l.rows() {
                for col in 0..l.cols() {
                    let (a, b) = (offsets[t] + r, offsets[t + 1] + col);
                    let v = l.coeff(0)[(r, col)];
                    if !v.is_zero() {
                        consts.push((a, b, v));
                    }
                    for (j, edges) in letters.iter_mut().enumerate() {
                        let v = l.coeff(j + 1)[(r, col)];
                        if !v.is_zero() {
                            edges.push((a, b, v));
                        }
                    }
                }
            }
        }
        Engine {
            ctx: c.ctx.clone(),
            total: next,
            sink: next - 1,
            consts,
            letters,
            depth: c.depth(),
        }
    }

    fn close_row(&self, r: &mut [Fe]) {
        for &(a, b, v) in &self.consts {
            if !r[a].is_zero() {
                r[b] = self.ctx.mul_add(r[a], v, r[b]);
            }
        }
    }

    fn close_col(&self, c: &mut [Fe]) {
        for &(a, b, v) in self.consts.iter().rev() {
            if !c[b].is_zero() {
                c[a] = self.ctx.mul_add(v, c[b], c[a]);
            }
        }
    }

    /// r ↦ r·H_j·K
    fn step_row(&self, r: &[Fe], j: usize) -> Vec<Fe> {
        let mut out = vec![Fe::ZERO; self.total];
        for &(a, b, v) in &self.letters[j] {
            if !r[a].is_zero() {
                out[b] = self.ctx.mul_add(r[a], v, out[b]);
            }
        }
        self.close_row(&mut out);
        out
    }

    /// c ↦ H_j·K·c
    fn step_col(&self, c: &[Fe], j: usize) -> Vec<Fe> {
        let mut k = c.to_vec();
        self.close_col(&mut k);
        let mut out = vec![Fe::ZERO; self.total];
        for &(a, b, v) in &self.letters[j] {
            if !k[b].is_zero() {
                out[a] = self.ctx.mul_add(v, k[b], out[a]);
            }
        }
        out
    }

    fn start_row(&self) -> Vec<Fe> {
        let mut r = vec![Fe::ZERO; self.total];
        r[0] = Fe::ONE;
        self.close_row(&mut r);
        r
    }

    fn sink_col(&self) -> Vec<Fe> {
        let mut c = vec![Fe::ZERO; self.total];
        c[self.sink] = Fe::ONE;
        c
    }

    fn dot(&self, a: &[Fe], b: &[Fe]) -> Fe {
        a.iter().zip(b).fold(Fe::ZERO, |acc, (&x, &y)| {
            if x.is_zero() || y.is_zero() {
                acc
            } else {
                self.ctx.mul_add(x, y, acc)
            }
        })
    }

    fn coefficient(&self, w: &[usize]) -> Fe {
        if w.iter().any(|&j| j >= self.letters.len()) {
            return Fe::ZERO;
        }
        let mut r = self.start_row();
        for &j in w {
            r = self.step_row(&r, j);
        }
        r[self.sink]
    }

    fn is_zero(&self) -> bool {
        let mut basis = Echelon::new(self.total);
        let mut queue = VecDeque::new();
        let r = self.start_row();
        if basis.insert(&r, &self.ctx) {
            queue.push_back(r);
        }
        while let Some(r) = queue.pop_front() {
            if !r[self.sink].is_zero() {
                return false;
            }
            for j in 0..self.letters.len() {
                let w = self.step_row(&r, j);
                if basis.insert(&w, &self.ctx) {
                    queue.push_back(w);
                }
            }
        }
        true
    }

    /// Bases of span{r_w : |w| = e} for e = 0, 1, … until the span dies.
    fn forward_levels(&self) -> Vec<Vec<Vec<Fe>>> {
        let mut levels = Vec::new();
        let mut cur = vec![self.start_row()];
        while !cur.is_empty() && levels.len() <= self.depth {
            let mut next = Echelon::new(self.total);
            let mut next_vecs = Vec::new();
            for r in &cur {
                for j in 0..self.letters.len() {
                    let w = self.step_row(r, j);
                    if next.insert(&w, &self.ctx) {
                        next_vecs.push(w);
                    }
                }
            }
            levels.push(std::mem::replace(&mut cur, next_vecs));
        }
        levels
    }

    /// Bases of span{c_u : |u| = e} for e = 0..=k.
    fn backward_levels(&self, k: usize) -> Vec<Vec<Vec<Fe>>> {
        let mut levels = vec![vec![self.sink_col()]];
        for _ in 0..k {
            let mut next = Echelon::new(self.total);
            let mut vecs = Vec::new();
            for c in levels.last().expect("nonempty") {
                for j in 0..self.letters.len() {
                    let w = self.step_col(c, j);
                    if next.insert(&w, &self.ctx) {
                        vecs.push(w);
                    }
                }
            }
            levels.push(vecs);
        }
        levels
    }

    fn degree(&self) -> Option<usize> {
        self.forward_levels()
            .iter()
            .rposition(|lvl| lvl.iter().any(|r| !r[self.sink].is_zero()))
    }

    fn leading_word(&self) -> Option<(Word, Fe)> {
        let k = self.degree()?;
        let back = self.backward_levels(k);
        let mut r = self.start_row();
        let mut word = Vec::with_capacity(k);
        for i in 0..k {
            let target = &back[k - i - 1];
            let (j, next) = (0..self.letters.len())
                .map(|j| (j, self.step_row(&r, j)))
                .find(|(_, cand)| target.iter().any(|b| !self.dot(cand, b).is_zero()))
                .expect("degree witness extends");
            word.push(j);
            r = next;
        }
        let c = r[self.sink];
        debug_assert!(!c.is_zero());
        Some((word, c))
    }

    fn expand(&self, max_terms: usize) -> Result<FreePoly> {
        let mut out = FreePoly::zero(&self.ctx, self.letters.len());
        let Some(k) = self.degree() else {
            return Ok(out);
        };
        let back = self.backward_levels(k);
        let live = |r: &[Fe], remaining: usize| {
            back[..=remaining]
                .iter()
                .flatten()
                .any(|b| !self.dot(r, b).is_zero())
        };
        let mut stack = vec![(Vec::new(), self.start_row())];
        let mut visited = 0usize;
        while let Some((w, r)) = stack.pop() {
            visited += 1;
            if visited > max_terms.saturating_mul(k + 1).max(1024) {
                return Err(Error::CapExceeded(format!(
                    "sparse expansion beyond {max_terms} terms"
                )));
            }
            if !r[self.sink].is_zero() {
                if out.len() >= max_terms {
                    return Err(Error::CapExceeded(format!(
                        "sparse expansion beyond {max_terms} terms"
                    )));
                }
                out.add_term(w.clone(), r[self.sink]);
            }
            if w.len() == k {
                continue;
            }
            let remaining = k - w.len() - 1;
            for j in (0..self.letters.len()).rev() {
                let next = self.step_row(&r, j);
                if live(&next, remaining) {
                    let mut w2 = w.clone();
                    w2.push(j);
                    stack.push((w2, next));
                }
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::random_formula;
    use crate::rng;

    fn abp(s: &str, f: &FieldCtx) -> Abp {
        Abp::from_formula(&Formula::parse(s, f).unwrap())
    }

    fn sparse(s: &str, f: &FieldCtx) -> FreePoly {
        Formula::parse(s, f).unwrap().to_sparse().unwrap()
    }

    #[test]
    fn formula_conversion() {
        let f = FieldCtx::prime(2).unwrap();
        let x = abp("x1", &f);
        assert_eq!((x.depth(), x.size()), (1, 2));
        assert_eq!(
            abp("x + x*y*x", &f).to_sparse(100).unwrap(),
            sparse("x + x*y*x", &f)
        );
        assert!(abp("0", &f).is_zero());
        assert!(abp("0", &f).to_sparse(10).unwrap().is_zero());
    }

    #[test]
    fn arithmetic() {
        let f = FieldCtx::prime(5).unwrap();
        let p = abp("x", &f).product(&abp("1+y*x", &f));
        assert_eq!(p.to_sparse(100).unwrap(), sparse("x + x*y*x", &f));
        let a = abp("x*y + 3*z", &f);
        assert!(a.sum(&a.scale(f.from_int(-1))).is_zero());
        assert!(a.product(&Abp::one(&f, 3)).sub(&a).is_zero());
    }

    #[test]
    fn shifts() {
        let f = FieldCtx::prime(5).unwrap();
        let a = abp("1+x", &f).shift_vars(&[f.from_int(-1)], false);
        assert_eq!(a.to_sparse(10).unwrap(), sparse("x", &f));
        let b = abp("x*y*x + 2*y", &f);
        assert_eq!(
            b.shift_vars(&[Fe::ZERO, Fe::ZERO], false)
                .to_sparse(10)
                .unwrap(),
            b.to_sparse(10).unwrap()
        );
        let mut r = rng::rng(4);
        for _ in 0..50 {
            let g = Abp::from_formula(&random_formula(&f, 3, 12, &mut r));
            let al: Vec<Fe> = (0..3).map(|_| f.random(&mut r)).collect();
            assert!(g
                .shift_vars(&al, false)
                .shift_vars(&al, true)
                .sub(&g)
                .is_zero());
        }
    }

    #[test]
    fn zero_tests() {
        let f = FieldCtx::prime(2).unwrap();
        assert!(abp("x1*x2 - x1*x2", &f).is_zero());
        assert!(!abp("x1*x2 - x2*x1", &f).is_zero());
        let prod = abp("x", &f).product(&abp("1 + y*x", &f));
        assert!(prod.sub(&abp("x + x*y*x", &f)).is_zero());
    }

    #[test]
    fn coefficients_and_leading_words() {
        let f = FieldCtx::prime(5).unwrap();
        let a = abp("x + x*y*x", &f);
        assert_eq!(a.coefficient_of_word(&[0, 1, 0]), Fe::ONE);
        assert_eq!(a.coefficient_of_word(&[0, 1]), Fe::ZERO);
        assert_eq!(abp("3 + x*y", &f).constant_term(), f.from_int(3));
        assert_eq!(a.leading_word(), Some((vec![0, 1, 0], Fe::ONE)));
        assert_eq!(abp("5 + 0*x + 5", &f).leading_word(), None);
        assert_eq!(abp("(2+3)*x + 5", &f).leading_word(), None);
        assert_eq!(
            Abp::constant(&f, 2, f.from_int(5 + 3)).leading_word(),
            Some((vec![], f.from_int(3)))
        );
        assert_eq!(
            abp("y*x + 2*x*y + x", &f).leading_word(),
            Some((vec![0, 1], f.from_int(2)))
        );
        assert_eq!(abp("x*y*y - x*y*y + x*x", &f).degree(), Some(2));
    }

    #[test]
    fn restricted_expansion() {
        let f = FieldCtx::prime(2).unwrap();
        let g = sparse("x + x*y*x", &f);
        let cands = subword_candidates(&g, 3);
        let x = abp("x", &f).to_sparse_abp(&cands);
        let h = abp("1 + y*x", &f).to_sparse_abp(&cands);
        assert_eq!(x.mul(&h), g);
        assert!(Abp::zero(&f, 2).to_sparse_abp(&cands).is_zero());
        let one_xy = sparse("1+x*y", &f);
        let words: Vec<Word> = one_xy.terms().keys().cloned().collect();
        assert_eq!(abp("1+x*y", &f).to_sparse_abp(&words), one_xy);
    }

    #[test]
    fn json_round_trip() {
        let f = FieldCtx::build_extension(3, 2, 0).unwrap();
        let a = Abp::from_formula(&Formula::parse("{t+1}*x*y + y*{2t} + 1", &f).unwrap());
        let doc = a.to_doc();
        let text = serde_json::to_string(&doc).unwrap();
        let back = Abp::from_doc(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(serde_json::to_string(&back.to_doc()).unwrap(), text);
        assert!(back.sub(&a).is_zero());
    }

    #[test]
    fn entries_assemble() {
        let f = FieldCtx::prime(3).unwrap();
        let grid = vec![
            vec![abp("x", &f), abp("1", &f)],
            vec![abp("0", &f), abp("x*y+2", &f)],
        ];
        let m = Chain::from_entries(&f, 2, &grid).unwrap();
        for (i, row) in grid.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                assert!(m.entry(i, j).sub(e).is_zero());
            }
        }
        let mut r = rng::rng(1);
        let pt: Vec<Matrix> = (0..2).map(|_| Matrix::random(2, 2, &f, &mut r)).collect();
        let ev = m.eval_matrix(&pt).unwrap();
        assert_eq!(ev.block(2, 2, 2, 2), grid[1][1].eval_matrix(&pt).unwrap());
    }

    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]
        #[test]
        fn zero_test_matches_expansion(seed in any::<u64>()) {
            let f = FieldCtx::prime(2).unwrap();
            let mut r = rng::rng(seed);
            let g = random_formula(&f, 2, 12, &mut r);
            let h = random_formula(&f, 2, 12, &mut r);
            let d = g.sub(&h).mul(&h);
            prop_assert_eq!(Abp::from_formula(&d).is_zero(), d.to_sparse().unwrap().is_zero());
            prop_assert_eq!(Abp::from_formula(&g).is_zero(), g.to_sparse().unwrap().is_zero());
        }

        #[test]
        fn operations_commute_with_expansion(seed in any::<u64>()) {
            let f = FieldCtx::prime(3).unwrap();
            let mut r = rng::rng(seed);
            let g = random_formula(&f, 3, 9, &mut r);
            let h = random_formula(&f, 3, 9, &mut r);
            let (a, b) = (Abp::from_formula(&g), Abp::from_formula(&h));
            let (sg, sh) = (g.to_sparse().unwrap(), h.to_sparse().unwrap());
            prop_assert_eq!(a.product(&b).to_sparse(1 << 16).unwrap(), sg.mul(&sh));
            prop_assert_eq!(a.sum(&b).to_sparse(1 << 16).unwrap(), sg.add(&sh));
            prop_assert_eq!(a.scale(Fe(2)).to_sparse(1 << 16).unwrap(), sg.scale(Fe(2)));
        }

        #[test]
        fn leading_word_is_top_degree(seed in any::<u64>()) {
            let f = FieldCtx::prime(2).unwrap();
            let mut r = rng::rng(seed);
            let g = random_formula(&f, 3, 12, &mut r);
            let s = g.to_sparse().unwrap();
            let a = Abp::from_formula(&g);
            match a.leading_word() {
                None => prop_assert!(s.is_zero()),
                Some((w, c)) => {
                    prop_assert_eq!(Some(w.len()), s.degree());
                    prop_assert_eq!(s.coefficient(&w), c);
                    let least = s.terms().keys().filter(|m| m.len() == w.len()).min().unwrap();
                    prop_assert_eq!(least, &w);
                }
            }
            for (w, &c) in s.terms() {
                prop_assert_eq!(a.coefficient_of_word(w), c);
            }
        }
    }
}
