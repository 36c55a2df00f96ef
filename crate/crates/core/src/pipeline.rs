//! End-to-end factorization.
//!
//! f ⊕ I_s = P·L·Q (linearization), S·L·U = L′ ⊕ I_r (left monicization),
//! T_left·L′·T_right = B (atomic block form) and B = G₁⋯G_k with Gⱼ equal to
//! the identity outside block row j. Together
//!
//!   f ⊕ I_s = P · C₀ · (G₁⊕I)⋯(G_k⊕I) · D₀
//!
//! with C₀ scalar and D₀ a unit. Irreducible factors are peeled off from the
//! right: the linear prefix C and the first column v of the remaining tail
//! satisfy C_low·v = 0, a trivializer N splits that product, and one entry of
//! N⁻¹v is the next factor.

use crate::abp::{subword_candidates, Abp, AbpDoc, Chain};
use crate::error::{Error, Result, Side};
use crate::expr::{Formula, FreePoly, Node, Word};
use crate::field::{extension_at_least, Fe, FieldCtx, Matrix};
use crate::higman::linearize;
use crate::linfact::{factor_general, factor_special, AtomicBlockForm};
use crate::linmat::{monicize, random_point, LinearMatrix, PolyMatrix, Shape};
use crate::rng;
use serde::{Deserialize, Serialize};

/// Which side of the trivialized product vanishes at an index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    /// Column i of C·N is zero.
    ColumnZero,
    /// Row i of N⁻¹·v is zero.
    RowZero,
}

#[derive(Clone, Debug)]
pub struct TrivializeCert {
    pub n: PolyMatrix,
    pub n_inv: PolyMatrix,
    pub pattern: Vec<Pattern>,
}

impl TrivializeCert {
    /// Exact zero pattern, affine C·N, degree bound, and N·N⁻¹ = I at random points.
    pub fn check(&self, c: &LinearMatrix, v: &Chain, trials: usize, seed: u64) -> Result<bool> {
        let d = v.rows();
        let cn = Chain::from_linear(c).mul(&self.n.chain)?;
        let nv = self.n_inv.chain.mul(v)?;
        for (i, p) in self.pattern.iter().enumerate() {
            let ok = match p {
                Pattern::ColumnZero => (0..c.rows()).all(|r| cn.entry(r, i).is_zero()),
                Pattern::RowZero => nv.entry(i, 0).is_zero(),
            };
            if !ok {
                return Ok(false);
            }
        }
        for r in 0..c.rows() {
            for j in 0..d {
                if cn.entry(r, j).degree().unwrap_or(0) > 1 {
                    return Ok(false);
                }
            }
        }
        for r in 0..d {
            for j in 0..d {
                if self.n.entry(r, j).degree().unwrap_or(0) > d * d {
                    return Ok(false);
                }
            }
        }
        let f = &c.ctx;
        let mut rg = rng::rng(seed);
        for _ in 0..trials {
            let pt = random_point(f, v.nvars().max(c.nvars()), 2, &mut rg);
            let prod = self
                .n
                .eval_matrix(&pt)?
                .mul(&self.n_inv.eval_matrix(&pt)?, f);
            if prod != Matrix::identity(2 * d) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Split C·v = 0 (C affine u×d, v a d×1 polynomial column) by a unit N.
pub fn trivialize(c: &LinearMatrix, v: &Chain) -> Result<TrivializeCert> {
    if v.cols() != 1 || c.cols() != v.rows() {
        return Err(Error::Dimension(
            "trivialize needs C (u×d) and v (d×1)".into(),
        ));
    }
    let nvars = c.nvars().max(v.nvars());
    let c = c.clone().with_nvars(nvars);
    let v = v.clone().with_nvars(nvars);
    if c.rows() > 0 {
        let cv = Chain::from_linear(&c).mul(&v)?;
        if (0..c.rows()).any(|r| !cv.entry(r, 0).is_zero()) {
            return Err(Error::Precondition("C·v is not zero".into()));
        }
    }
    let (n, n_inv, pattern) = triv_rec(&c, &v)?;
    Ok(TrivializeCert {
        n: PolyMatrix::new(n, Shape::GeneralUnit),
        n_inv: PolyMatrix::new(n_inv, Shape::GeneralUnit),
        pattern,
    })
}

/// Highest-degree word occurring in some entry of the column.
fn top_word(entries: &[Abp]) -> Option<Word> {
    let degs: Vec<Option<usize>> = entries.iter().map(|e| e.degree()).collect();
    let best = degs.iter().flatten().max()?;
    let i = degs.iter().position(|d| d.as_ref() == Some(best))?;
    entries[i].leading_word().map(|(w, _)| w)
}

fn triv_rec(c: &LinearMatrix, v: &Chain) -> Result<(Chain, Chain, Vec<Pattern>)> {
    let f = c.ctx.clone();
    let n = c.nvars();
    let d = v.rows();
    let id = || Chain::identity(&f, n, d);
    let entries: Vec<Abp> = (0..d).map(|i| v.entry(i, 0)).collect();
    let Some(m) = top_word(&entries) else {
        return Ok((id(), id(), vec![Pattern::RowZero; d]));
    };
    if c.rows() == 0 {
        return Ok((id(), id(), vec![Pattern::ColumnZero; d]));
    }
    if d == 1 {
        return Ok((id(), id(), vec![Pattern::ColumnZero]));
    }
    let vm: Vec<Fe> = entries.iter().map(|e| e.coefficient_of_word(&m)).collect();
    let mut cols = vec![vm.clone()];
    let span = crate::field::Subspace::from_vectors(d, vec![vm.clone()], &f);
    cols.extend(
        span.complement_indices(&f)
            .into_iter()
            .map(|i| Matrix::unit(d, 1, i, 0).col(0)),
    );
    let t0 = Matrix::from_rows(cols).transpose();
    let t0_inv = t0.inverse(&f)?;
    for a in &c.coeffs()[1..] {
        if !a.mul_vec(&vm, &f).iter().all(|x| x.is_zero()) {
            return Err(Error::Internal(
                "top coefficient vector is not killed by the variable part".into(),
            ));
        }
    }
    let cv = c.a0().mul_vec(&vm, &f);
    let ct0 = c.right_mul(&t0);
    let mut t1 = LinearMatrix::identity(&f, d, n);
    let mut t1_inv = LinearMatrix::identity(&f, d, n);
    let mut next = ct0.clone();
    let head = match cv.iter().position(|x| !x.is_zero()) {
        Some(i) => {
            let ainv = f.inv(cv[i]).expect("nonzero");
            for j in 1..d {
                let form: Vec<Fe> = ct0.entry(i, j).iter().map(|&x| f.mul(x, ainv)).collect();
                let neg: Vec<Fe> = form.iter().map(|&x| f.neg(x)).collect();
                t1.set_entry(0, j, &neg);
                t1_inv.set_entry(0, j, &form);
                for (r, &cr) in cv.iter().enumerate() {
                    let cur = next.entry(r, j);
                    let upd: Vec<Fe> = cur
                        .iter()
                        .zip(&neg)
                        .map(|(&a, &b)| f.mul_add(cr, b, a))
                        .collect();
                    next.set_entry(r, j, &upd);
                }
            }
            Pattern::RowZero
        }
        None => Pattern::ColumnZero,
    };
    let w = Chain::from_linear(&t1_inv).mul(&v.left_scalar(&t0_inv))?;
    let rest: Vec<usize> = (1..d).collect();
    let (n2, n2_inv, pat2) = triv_rec(&next.select_cols(&rest), &w.select_rows(&rest))?;
    let one = Chain::identity(&f, n, 1);
    let nn = Chain::constant(&f, n, t0)
        .mul(&Chain::from_linear(&t1))?
        .mul(&one.direct_sum(&n2))?;
    let nn_inv = one
        .direct_sum(&n2_inv)
        .mul(&Chain::from_linear(&t1_inv))?
        .mul(&Chain::constant(&f, n, t0_inv))?;
    let mut pattern = vec![head];
    pattern.extend(pat2);
    Ok((nn, nn_inv, pattern))
}

/// One extraction step: given the linear prefix C (d×d) and the first column
/// v of the tail with rows 1.. of C·v zero, return (g, h, N·e_i) where
/// g = (C·N)₀ᵢ, h = (N⁻¹v)ᵢ and C·v's corner equals g·h.
pub fn extract_factor(c: &LinearMatrix, v: &Chain) -> Result<(Abp, Abp, Chain)> {
    let d = c.dim();
    let rows: Vec<usize> = (1..d).collect();
    let low = c.select_rows(&rows);
    let cert = trivialize(&low, v)?;
    let nv = cert.n_inv.chain.mul(v)?;
    let i = (0..d)
        .find(|&i| cert.pattern[i] == Pattern::ColumnZero && !nv.entry(i, 0).is_zero())
        .ok_or_else(|| {
            Error::Precondition("tail column vanishes after trivialization (not full)".into())
        })?;
    let col = cert.n.chain.select_cols(&[i]);
    let g = Abp::from_chain(Chain::from_linear(&c.select_rows(&[0])).mul(&col)?)?;
    let h = nv.entry(i, 0);
    if g.degree().unwrap_or(0) == 0 || h.degree().unwrap_or(0) == 0 {
        return Err(Error::Precondition(
            "extraction produced a constant factor (non-atom tail or unit prefix)".into(),
        ));
    }
    Ok((g, h, col))
}

/// Top-level branch taken by [`factor_polynomial`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    Constant,
    Linear,
    /// A base-field point with nonzero value exists; shifted to the origin.
    Shifted,
    /// Vanishes at every base-field point; dilation route.
    General,
}

#[derive(Clone, Debug)]
pub struct FactorOptions {
    pub route: Side,
    /// Random evaluations used by verification on top of the exact test.
    pub trials: usize,
    pub retries: usize,
}

impl Default for FactorOptions {
    fn default() -> Self {
        FactorOptions {
            route: Side::Left,
            trials: 40,
            retries: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verification {
    pub mode: String,
    pub trials: usize,
    pub dims: Vec<usize>,
    pub seed: u64,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct Factorization {
    pub ctx: FieldCtx,
    pub nvars: usize,
    pub input: String,
    pub factors: Vec<Abp>,
    /// Left cofactors produced while peeling, outermost last.
    pub intermediates: Vec<Abp>,
    /// Dimension of the atomic block each factor was read from.
    pub atom_dims: Vec<usize>,
    pub case: Case,
    pub route: Side,
    pub seed: u64,
    pub attempts: usize,
    pub verification: Verification,
}

impl Factorization {
    pub fn r(&self) -> usize {
        self.factors.len()
    }

    pub fn product(&self) -> Abp {
        let one = Abp::one(&self.ctx, self.nvars);
        self.factors.iter().fold(one, |acc, g| acc.product(g))
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.factors
            .iter()
            .map(|g| g.degree().unwrap_or(0))
            .collect()
    }

    /// Sparse forms of the factors. With a reference polynomial only subwords
    /// of its monomials are probed; the result is kept if the product matches.
    pub fn sparse_factors(&self, reference: Option<&FreePoly>) -> Result<Vec<FreePoly>> {
        if let Some(p) = reference {
            let deg = p.degree().unwrap_or(0);
            let cands = subword_candidates(p, deg);
            let fs: Vec<FreePoly> = self
                .factors
                .iter()
                .map(|g| g.to_sparse_abp(&cands))
                .collect();
            let prod = fs.iter().fold(
                FreePoly::constant(&self.ctx, self.nvars, Fe::ONE),
                |a, b| a.mul(b),
            );
            if prod == *p {
                return Ok(fs);
            }
        }
        self.factors.iter().map(|g| g.to_sparse(1 << 16)).collect()
    }

    pub fn to_doc(&self, sparse: Option<&[FreePoly]>) -> FactorizationDoc {
        FactorizationDoc {
            field: self.ctx.spec(),
            input: self.input.clone(),
            factors: self.factors.iter().map(|g| g.to_doc()).collect(),
            sparse_factors: sparse.map(|ps| ps.iter().map(|p| p.to_string()).collect()),
            r: self.r(),
            atom_dims: self.atom_dims.clone(),
            case: self.case,
            route: self.route,
            verification: self.verification.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FactorizationDoc {
    pub field: String,
    pub input: String,
    pub factors: Vec<AbpDoc>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub sparse_factors: Option<Vec<String>>,
    pub r: usize,
    #[serde(default)]
    pub atom_dims: Vec<usize>,
    pub case: Case,
    pub route: Side,
    pub verification: Verification,
}

impl FactorizationDoc {
    pub fn factors(&self) -> Result<Vec<Abp>> {
        self.factors.iter().map(Abp::from_doc).collect()
    }
}

fn shift_node(n: &Node, alpha: &[Fe]) -> Node {
    match n {
        Node::Const(c) => Node::Const(*c),
        Node::Var(i) if !alpha[*i].is_zero() => Node::add(Node::Var(*i), Node::Const(alpha[*i])),
        Node::Var(i) => Node::Var(*i),
        Node::Add(a, b) => Node::add(shift_node(a, alpha), shift_node(b, alpha)),
        Node::Mul(a, b) => Node::mul(shift_node(a, alpha), shift_node(b, alpha)),
    }
}

fn reverse_node(n: &Node) -> Node {
    match n {
        Node::Const(_) | Node::Var(_) => n.clone(),
        Node::Add(a, b) => Node::add(reverse_node(a), reverse_node(b)),
        Node::Mul(a, b) => Node::mul(reverse_node(b), reverse_node(a)),
    }
}

/// Formula with every product reversed.
pub fn reverse_formula(f: &Formula) -> Formula {
    Formula::new(&f.ctx, f.nvars, reverse_node(&f.root))
}

/// Base-field point with f(α) ≠ 0: exhaustive for small point spaces.
fn base_point(f: &Formula, seed: u64) -> Option<(Vec<Fe>, Fe)> {
    let ctx = &f.ctx;
    let q = ctx.order();
    let n = f.nvars;
    if let Some(space) = q.checked_pow(n as u32).filter(|&s| s <= 4096) {
        for mut idx in 0..space {
            let pt: Vec<Fe> = (0..n)
                .map(|_| {
                    let v = ctx.element(idx % q).expect("in range");
                    idx /= q;
                    v
                })
                .collect();
            let val = f.eval_scalar(&pt);
            if !val.is_zero() {
                return Some((pt, val));
            }
        }
        return None;
    }
    crate::expr::commutative_witness_base(f, 64, seed).map(|w| (w.point, w.value))
}

/// Pencil data for one factorization run.
struct Linearized {
    form: AtomicBlockForm,
    c0: Matrix,
    tail: Chain,
    r: usize,
}

fn linearize_and_split(f: &Formula, general: bool, seed: u64) -> Result<Linearized> {
    let ctx = &f.ctx;
    let n = f.nvars;
    let h = linearize(f)?;
    let m = monicize(&h.l, Side::Left)?;
    if !m.check(&h.l, 10, 2, rng::derive(seed, 1))? {
        return Err(Error::Internal("monicization identity failed".into()));
    }
    let form = if general {
        factor_general(&m.lp, rng::derive(seed, 2))?
    } else {
        factor_special(&m.lp, rng::derive(seed, 2))?.1
    };
    if !form.check(&m.lp) {
        return Err(Error::Internal("atomic block form identity failed".into()));
    }
    let r = m.r;
    let pad = Matrix::identity(r);
    let c0 = m
        .s_inv
        .mul(&form.t_left.inverse(ctx)?.direct_sum(&pad), ctx);
    let right = form.t_right.inverse(ctx)?.direct_sum(&pad);
    let tail = Chain::constant(ctx, n, right)
        .mul(&m.u_inv.chain)?
        .mul(&h.q.chain.select_cols(&[0]))?;
    Ok(Linearized { form, c0, tail, r })
}

/// Output of one extraction run.
struct Peeled {
    factors: Vec<Abp>,
    /// Left cofactors g, one per step.
    intermediates: Vec<Abp>,
    /// Size of the atomic block behind each factor.
    atom_dims: Vec<usize>,
}

impl Peeled {
    fn map(self, g: impl Fn(&Abp) -> Abp) -> Peeled {
        Peeled {
            factors: self.factors.iter().map(&g).collect(),
            intermediates: self.intermediates.iter().map(&g).collect(),
            atom_dims: self.atom_dims,
        }
    }
}

/// Factors of f (left route) and the intermediate left cofactors.
fn factor_left(f: &Formula, general: bool, seed: u64) -> Result<Peeled> {
    let ctx = &f.ctx;
    let n = f.nvars;
    let lin = linearize_and_split(f, general, seed)?;
    let form = &lin.form;
    let atoms: Vec<usize> = (0..form.blocks.len())
        .filter(|&j| !form.is_unit_block(j))
        .collect();
    if atoms.is_empty() {
        return Err(Error::Internal("nonconstant input produced no atom".into()));
    }
    let atom_dims: Vec<usize> = atoms.iter().map(|&j| form.blocks[j]).collect();
    if atoms.len() == 1 {
        return Ok(Peeled {
            factors: vec![Abp::from_formula(f)],
            intermediates: vec![],
            atom_dims,
        });
    }
    let pad = |l: LinearMatrix| l.direct_sum(&LinearMatrix::identity(ctx, lin.r, n));
    let mut tail = lin.tail;
    let mut upto = form.blocks.len();
    let mut hs = Vec::new();
    let mut gs = Vec::new();
    for &j in atoms[1..].iter().rev() {
        let mut v = tail;
        for jj in (j..upto).rev() {
            v = Chain::from_linear(&pad(form.factor(jj))).mul(&v)?;
        }
        let c = pad(form.prefix(j)).left_mul(&lin.c0);
        let (g, h, col) = extract_factor(&c, &v)?;
        hs.push(h);
        gs.push(g);
        tail = col;
        upto = j;
    }
    let mut factors = vec![gs.last().expect("at least one step").clone()];
    factors.extend(hs.into_iter().rev());
    Ok(Peeled {
        factors,
        intermediates: gs,
        atom_dims,
    })
}

/// Exact identity test of Πfactors = f, plus random matrix evaluations at
/// dimension ⌈deg/2⌉+1 when the degree exceeds 8.
pub fn verify_factorization(
    f: &Formula,
    factors: &[Abp],
    trials: usize,
    seed: u64,
) -> Verification {
    let ctx = &f.ctx;
    let n = factors
        .iter()
        .map(|g| g.nvars())
        .max()
        .unwrap_or(0)
        .max(f.nvars);
    if factors.iter().any(|g| g.ctx() != ctx) {
        return Verification {
            mode: "exact".into(),
            trials: 0,
            dims: vec![],
            seed,
            ok: false,
        };
    }
    let fa = Abp::from_formula(&f.clone().with_nvars(n));
    let widen = |g: &Abp| Abp::from_chain(g.chain().clone().with_nvars(n)).expect("1×1");
    let prod = factors
        .iter()
        .fold(Abp::one(ctx, n), |acc, g| acc.product(&widen(g)));
    let diff = prod.sub(&fa);
    let mut ok = !factors.is_empty() && diff.is_zero();
    let deg = fa.degree().unwrap_or(0);
    if ok {
        let sum: usize = factors.iter().map(|g| g.degree().unwrap_or(0)).sum();
        ok = sum == deg;
    }
    if deg <= 8 {
        return Verification {
            mode: "exact".into(),
            trials: 0,
            dims: vec![],
            seed,
            ok,
        };
    }
    let m = deg.div_ceil(2) + 1;
    let mut rg = rng::rng(seed);
    for _ in 0..trials {
        if !ok {
            break;
        }
        let pt = random_point(ctx, n, m, &mut rg);
        match (prod.eval_matrix(&pt), f.eval_matrix(&pt)) {
            (Ok(a), Ok(b)) => ok = a == b,
            _ => ok = false,
        }
    }
    Verification {
        mode: "exact+random".into(),
        trials,
        dims: vec![m],
        seed,
        ok,
    }
}

/// Factor a polynomial into irreducibles. The product of the returned
/// factors equals the input exactly (the unit is absorbed on the left).
pub fn factor_polynomial(f: &Formula, seed: u64, opts: &FactorOptions) -> Result<Factorization> {
    let ctx = &f.ctx;
    let fa = Abp::from_formula(f);
    if fa.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let deg = fa.degree().expect("nonzero");
    let done = |p: Peeled, case: Case, attempts: usize| {
        let verification = verify_factorization(f, &p.factors, opts.trials, rng::derive(seed, 99));
        Factorization {
            ctx: ctx.clone(),
            nvars: f.nvars,
            input: f.to_string(),
            factors: p.factors,
            intermediates: p.intermediates,
            atom_dims: p.atom_dims,
            case,
            route: opts.route,
            seed,
            attempts,
            verification,
        }
    };
    if deg <= 1 {
        let case = if deg == 0 {
            Case::Constant
        } else {
            Case::Linear
        };
        let atom_dims = if deg == 0 { vec![] } else { vec![1] };
        let p = Peeled {
            factors: vec![fa],
            intermediates: vec![],
            atom_dims,
        };
        return Ok(done(p, case, 0));
    }
    let mut last = Error::Exhausted("no attempt made".into());
    let mut failed = None;
    for attempt in 0..opts.retries.max(1) {
        let s = rng::derive(seed, attempt as u64);
        let run = match opts.route {
            Side::Left => run_left(f, s),
            Side::Right => run_left(&reverse_formula(f), s).map(|(p, case)| {
                let mut p = p.map(Abp::reversed);
                p.factors.reverse();
                p.intermediates.reverse();
                p.atom_dims.reverse();
                (p, case)
            }),
        };
        match run {
            Ok((p, case)) => {
                let out = done(p, case, attempt + 1);
                if out.verification.ok {
                    return Ok(out);
                }
                failed = Some(out);
            }
            Err(e @ (Error::Exhausted(_) | Error::Internal(_) | Error::Precondition(_))) => {
                last = e
            }
            Err(e) => return Err(e),
        }
    }
    failed.ok_or(last)
}

fn run_left(f: &Formula, seed: u64) -> Result<(Peeled, Case)> {
    let ctx = &f.ctx;
    match base_point(f, rng::derive(seed, 7)) {
        Some((alpha, value)) => {
            let vinv = ctx.inv(value).expect("nonzero");
            let shifted = Formula::new(
                ctx,
                f.nvars,
                Node::mul(Node::Const(vinv), shift_node(&f.root, &alpha)),
            );
            let mut p = factor_left(&shifted, false, seed)?.map(|g| g.shift_vars(&alpha, true));
            p.factors[0] = p.factors[0].scale(value);
            Ok((p, Case::Shifted))
        }
        None => Ok((factor_left(f, true, seed)?, Case::General)),
    }
}

/// r = 1 query: nonconstant and no nontrivial factorization.
pub fn is_irreducible(f: &Formula, seed: u64, opts: &FactorOptions) -> Result<bool> {
    let fact = factor_polynomial(f, seed, opts)?;
    Ok(fact.r() == 1 && fact.degrees()[0] >= 1)
}

/// Outcome of the stable-association test with its witness when positive.
#[derive(Clone, Debug)]
pub struct StableAssociation {
    pub associated: bool,
    /// Field of the witness (the input field or an extension).
    pub witness_field: Option<FieldCtx>,
    pub p: Option<Matrix>,
    pub q: Option<Matrix>,
    pub dims: (usize, usize),
}

/// Full pencil that is both left and right monic, stably associated with f.
fn bimonic_pencil(f: &Formula) -> Result<LinearMatrix> {
    let mut l = linearize(f)?.l;
    loop {
        if !l.is_left_monic() {
            l = monicize(&l, Side::Left)?.lp;
        } else if !l.is_right_monic() {
            l = monicize(&l, Side::Right)?.lp;
        } else {
            return Ok(l);
        }
    }
}

/// Decide whether f and g are stable associates by solving P·A = B·Q over
/// scalar matrices for their monic pencils A and B.
pub fn stable_associates(f: &Formula, g: &Formula, seed: u64) -> Result<StableAssociation> {
    let ctx = &f.ctx;
    let (fa, ga) = (Abp::from_formula(f), Abp::from_formula(g));
    if fa.is_zero() || ga.is_zero() {
        return Err(Error::ZeroPolynomial);
    }
    let no = |dims| StableAssociation {
        associated: false,
        witness_field: None,
        p: None,
        q: None,
        dims,
    };
    let (df, dg) = (fa.degree().unwrap(), ga.degree().unwrap());
    if df == 0 || dg == 0 {
        let both = df == 0 && dg == 0;
        return Ok(StableAssociation {
            associated: both,
            witness_field: both.then(|| ctx.clone()),
            p: both.then(|| Matrix::scalar(1, fa.constant_term())),
            q: both.then(|| Matrix::scalar(1, ga.constant_term())),
            dims: (0, 0),
        });
    }
    let n = f.nvars.max(g.nvars);
    let a = bimonic_pencil(&f.clone().with_nvars(n))?;
    let b = bimonic_pencil(&g.clone().with_nvars(n))?;
    let d = a.dim();
    if d != b.dim() {
        return Ok(no((d, b.dim())));
    }
    // Unknowns: P (d² entries, row-major) then Q.
    let dd = d * d;
    let mut eqs = Vec::new();
    for k in 0..=n {
        let (ak, bk) = (a.coeff(k), b.coeff(k));
        for i in 0..d {
            for j in 0..d {
                let mut row = vec![Fe::ZERO; 2 * dd];
                for c in 0..d {
                    row[i * d + c] = ctx.add(row[i * d + c], ak[(c, j)]);
                    row[dd + c * d + j] = ctx.sub(row[dd + c * d + j], bk[(i, c)]);
                }
                eqs.push(row);
            }
        }
    }
    let sol = Matrix::from_rows(eqs).kernel(ctx).vectors();
    if sol.is_empty() {
        return Ok(no((d, d)));
    }
    let split = |field: &FieldCtx, x: &[Fe]| {
        let p = Matrix::from_fn(d, d, |i, j| x[i * d + j]);
        let q = Matrix::from_fn(d, d, |i, j| x[dd + i * d + j]);
        let _ = field;
        (p, q)
    };
    let witness_ok =
        |field: &FieldCtx, p: &Matrix, q: &Matrix, a: &LinearMatrix, b: &LinearMatrix| {
            p.is_invertible(field) && q.is_invertible(field) && a.left_mul(p) == b.right_mul(q)
        };
    let combine = |field: &FieldCtx, coeffs: &[Fe], basis: &[Vec<Fe>]| -> Vec<Fe> {
        let mut x = vec![Fe::ZERO; 2 * dd];
        for (c, v) in coeffs.iter().zip(basis) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi = field.mul_add(*c, *vi, *xi);
            }
        }
        x
    };
    let q_ord = ctx.order();
    let k = sol.len();
    let mut rg = rng::rng(seed);
    let exhaustive = q_ord.checked_pow(k as u32).filter(|&s| s <= 4096);
    let mut candidates: Vec<Vec<Fe>> = Vec::new();
    if let Some(space) = exhaustive {
        for mut idx in 1..space {
            candidates.push(
                (0..k)
                    .map(|_| {
                        let v = ctx.element(idx % q_ord).unwrap();
                        idx /= q_ord;
                        v
                    })
                    .collect(),
            );
        }
    } else {
        for _ in 0..32 {
            candidates.push((0..k).map(|_| ctx.random(&mut rg)).collect());
        }
    }
    for c in &candidates {
        let x = combine(ctx, c, &sol);
        let (p, q) = split(ctx, &x);
        if witness_ok(ctx, &p, &q, &a, &b) {
            return Ok(StableAssociation {
                associated: true,
                witness_field: Some(ctx.clone()),
                p: Some(p),
                q: Some(q),
                dims: (d, d),
            });
        }
    }
    // An invertible solution may exist only over an extension.
    let emb = extension_at_least(ctx, (8 * d).max(64) as u64, rng::derive(seed, 1))?;
    if emb.big.k() > ctx.k() {
        let big = emb.big.clone();
        let basis: Vec<Vec<Fe>> = sol
            .iter()
            .map(|v| v.iter().map(|&x| emb.map(x)).collect())
            .collect();
        let (ab, bb) = (a.embed(&emb), b.embed(&emb));
        for _ in 0..32 {
            let c: Vec<Fe> = (0..k).map(|_| big.random(&mut rg)).collect();
            let (p, q) = split(&big, &combine(&big, &c, &basis));
            if witness_ok(&big, &p, &q, &ab, &bb) {
                return Ok(StableAssociation {
                    associated: true,
                    witness_field: Some(big),
                    p: Some(p),
                    q: Some(q),
                    dims: (d, d),
                });
            }
        }
    }
    Ok(no((d, d)))
}

/// Sparse-in, sparse-out factorization.
pub fn factor_sparse(
    p: &FreePoly,
    seed: u64,
    opts: &FactorOptions,
) -> Result<(Factorization, Vec<FreePoly>)> {
    let fact = factor_polynomial(&p.to_formula(), seed, opts)?;
    let sparse = fact.sparse_factors(Some(p))?;
    Ok((fact, sparse))
}
