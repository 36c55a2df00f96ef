//! Input language: formulas in noncommuting variables, their parser, sparse
//! polynomials, evaluation, and a brute-force factorization oracle.

use crate::error::{Error, Result};
use crate::field::{extension_at_least, Embedding, Fe, FieldCtx, Matrix};
use crate::rng::{self, Rng};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

/// A word over the variable indices (0-based), i.e. a monomial.
pub type Word = Vec<usize>;

/// Default cap on the degree of sparse expansions.
pub const SPARSE_DEGREE_CAP: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Const(Fe),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
}

#[allow(clippy::should_implement_trait)]
impl Node {
    pub fn add(a: Node, b: Node) -> Node {
        Node::Add(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Node, b: Node) -> Node {
        Node::Mul(Box::new(a), Box::new(b))
    }

    pub fn size(&self) -> usize {
        match self {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Add(a, b) | Node::Mul(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Const(_) | Node::Var(_) => 0,
            Node::Add(a, b) | Node::Mul(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    /// Syntactic degree: Add takes the max, Mul the sum.
    pub fn degree_bound(&self) -> usize {
        match self {
            Node::Const(_) => 0,
            Node::Var(_) => 1,
            Node::Add(a, b) => a.degree_bound().max(b.degree_bound()),
            Node::Mul(a, b) => a.degree_bound() + b.degree_bound(),
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            Node::Const(_) => None,
            Node::Var(i) => Some(*i),
            Node::Add(a, b) | Node::Mul(a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn mul_count(&self) -> usize {
        match self {
            Node::Const(_) | Node::Var(_) => 0,
            Node::Add(a, b) => a.mul_count() + b.mul_count(),
            Node::Mul(a, b) => 1 + a.mul_count() + b.mul_count(),
        }
    }

    /// Value if the subtree contains no variables.
    pub fn constant_value(&self, f: &FieldCtx) -> Option<Fe> {
        match self {
            Node::Const(c) => Some(*c),
            Node::Var(_) => None,
            Node::Add(a, b) => Some(f.add(a.constant_value(f)?, b.constant_value(f)?)),
            Node::Mul(a, b) => Some(f.mul(a.constant_value(f)?, b.constant_value(f)?)),
        }
    }
}

/// A formula together with its field and variable count.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Formula {
    pub ctx: FieldCtx,
    pub nvars: usize,
    pub root: Node,
}

impl Formula {
    pub fn new(ctx: &FieldCtx, nvars: usize, root: Node) -> Self {
        let nvars = nvars.max(root.max_var().map_or(0, |m| m + 1));
        Formula {
            ctx: ctx.clone(),
            nvars,
            root,
        }
    }

    pub fn parse(text: &str, ctx: &FieldCtx) -> Result<Self> {
        let root = Parser::new(text, ctx).parse()?;
        Ok(Formula::new(ctx, 0, root))
    }

    pub fn with_nvars(mut self, n: usize) -> Self {
        self.nvars = self.nvars.max(n);
        self
    }

    pub fn constant(ctx: &FieldCtx, nvars: usize, c: Fe) -> Self {
        Formula::new(ctx, nvars, Node::Const(c))
    }

    pub fn var(ctx: &FieldCtx, nvars: usize, i: usize) -> Self {
        Formula::new(ctx, nvars, Node::Var(i))
    }

    pub fn size(&self) -> usize {
        self.root.size()
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn degree_bound(&self) -> usize {
        self.root.degree_bound()
    }

    pub fn add(&self, o: &Formula) -> Formula {
        Formula::new(
            &self.ctx,
            self.nvars.max(o.nvars),
            Node::add(self.root.clone(), o.root.clone()),
        )
    }

    pub fn mul(&self, o: &Formula) -> Formula {
        Formula::new(
            &self.ctx,
            self.nvars.max(o.nvars),
            Node::mul(self.root.clone(), o.root.clone()),
        )
    }

    pub fn sub(&self, o: &Formula) -> Formula {
        let neg = Node::mul(Node::Const(self.ctx.neg(Fe::ONE)), o.root.clone());
        Formula::new(
            &self.ctx,
            self.nvars.max(o.nvars),
            Node::add(self.root.clone(), neg),
        )
    }

    /// Evaluate at a scalar point of a field containing the formula's field.
    pub fn eval_scalar_in(&self, emb: &Embedding, point: &[Fe]) -> Fe {
        fn go(n: &Node, e: &Embedding, pt: &[Fe]) -> Fe {
            let f = &e.big;
            match n {
                Node::Const(c) => e.map(*c),
                Node::Var(i) => pt[*i],
                Node::Add(a, b) => f.add(go(a, e, pt), go(b, e, pt)),
                Node::Mul(a, b) => f.mul(go(a, e, pt), go(b, e, pt)),
            }
        }
        go(&self.root, emb, point)
    }

    pub fn eval_scalar(&self, point: &[Fe]) -> Fe {
        let emb = Embedding::new(&self.ctx, &self.ctx, 0).expect("identity embedding");
        self.eval_scalar_in(&emb, point)
    }

    /// Evaluate at square matrices of a common dimension; constants become c·I.
    pub fn eval_matrix(&self, point: &[Matrix]) -> Result<Matrix> {
        let emb = Embedding::new(&self.ctx, &self.ctx, 0).expect("identity embedding");
        self.eval_matrix_in(&emb, point)
    }

    /// Matrix evaluation over a field containing the formula's field.
    pub fn eval_matrix_in(&self, emb: &Embedding, point: &[Matrix]) -> Result<Matrix> {
        if point.len() < self.nvars {
            return Err(Error::Dimension(format!(
                "expected {} matrices, got {}",
                self.nvars,
                point.len()
            )));
        }
        let m = point.first().map_or(1, |p| p.rows());
        if point.iter().any(|p| p.rows() != m || p.cols() != m) {
            return Err(Error::Dimension(
                "evaluation matrices must share one square dimension".into(),
            ));
        }
        fn go(n: &Node, e: &Embedding, pt: &[Matrix], m: usize) -> Matrix {
            let f = &e.big;
            match n {
                Node::Const(c) => Matrix::scalar(m, e.map(*c)),
                Node::Var(i) => pt[*i].clone(),
                Node::Add(a, b) => go(a, e, pt, m).add(&go(b, e, pt, m), f),
                Node::Mul(a, b) => go(a, e, pt, m).mul(&go(b, e, pt, m), f),
            }
        }
        Ok(go(&self.root, emb, point, m))
    }

    /// Coefficient-exact expansion; fails above the degree cap.
    pub fn to_sparse(&self) -> Result<FreePoly> {
        self.to_sparse_capped(SPARSE_DEGREE_CAP)
    }

    pub fn to_sparse_capped(&self, cap: usize) -> Result<FreePoly> {
        if self.degree_bound() > cap {
            return Err(Error::CapExceeded(format!(
                "degree bound {} exceeds {}",
                self.degree_bound(),
                cap
            )));
        }
        fn go(n: &Node, c: &FieldCtx, nv: usize) -> FreePoly {
            match n {
                Node::Const(a) => FreePoly::constant(c, nv, *a),
                Node::Var(i) => FreePoly::monomial(c, nv, vec![*i], Fe::ONE),
                Node::Add(a, b) => go(a, c, nv).add(&go(b, c, nv)),
                Node::Mul(a, b) => go(a, c, nv).mul(&go(b, c, nv)),
            }
        }
        Ok(go(&self.root, &self.ctx, self.nvars))
    }
}

fn var_name(i: usize) -> String {
    format!("x{}", i + 1)
}

impl fmt::Display for Formula {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(n: &Node, c: &FieldCtx, in_mul: bool, out: &mut fmt::Formatter<'_>) -> fmt::Result {
            match n {
                Node::Const(a) => write!(out, "{}", c.render(*a)),
                Node::Var(i) => write!(out, "{}", var_name(*i)),
                Node::Add(a, b) => {
                    if in_mul {
                        write!(out, "(")?;
                    }
                    go(a, c, false, out)?;
                    write!(out, " + ")?;
                    go(b, c, false, out)?;
                    if in_mul {
                        write!(out, ")")?;
                    }
                    Ok(())
                }
                Node::Mul(a, b) => {
                    go(a, c, true, out)?;
                    write!(out, "*")?;
                    go(b, c, true, out)
                }
            }
        }
        go(&self.root, &self.ctx, false, out)
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    ctx: &'a FieldCtx,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, ctx: &'a FieldCtx) -> Self {
        Parser {
            s: text.as_bytes(),
            pos: 0,
            ctx,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn parse(mut self) -> Result<Node> {
        if self.peek().is_none() {
            return self.err("empty expression");
        }
        let n = self.expr()?;
        if self.peek().is_some() {
            return self.err(format!("unexpected `{}`", self.s[self.pos] as char));
        }
        Ok(n)
    }

    fn neg(&self, n: Node) -> Node {
        Node::mul(Node::Const(self.ctx.neg(Fe::ONE)), n)
    }

    fn expr(&mut self) -> Result<Node> {
        let mut acc = if self.peek() == Some(b'-') {
            self.pos += 1;
            let t = self.term()?;
            self.neg(t)
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = Node::add(acc, self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    let t = self.term()?;
                    acc = Node::add(acc, self.neg(t));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = Node::mul(acc, self.factor()?);
        }
        Ok(acc)
    }

    fn integer(&mut self) -> Option<Fe> {
        let start = self.pos;
        let mut v = Fe::ZERO;
        let ten = self.ctx.from_int(10);
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            let d = self.ctx.from_int((self.s[self.pos] - b'0') as i64);
            v = self.ctx.add(self.ctx.mul(v, ten), d);
            self.pos += 1;
        }
        (self.pos > start).then_some(v)
    }

    fn factor(&mut self) -> Result<Node> {
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'{') => self.braced(),
            Some(c) if c.is_ascii_digit() => Ok(Node::Const(self.integer().expect("digit"))),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                let tok = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii");
                match tok {
                    "x" => Ok(Node::Var(0)),
                    "y" => Ok(Node::Var(1)),
                    "z" => Ok(Node::Var(2)),
                    _ => match tok.strip_prefix('x').and_then(|d| d.parse::<usize>().ok()) {
                        Some(i) if (1..=1 << 16).contains(&i) => Ok(Node::Var(i - 1)),
                        _ => {
                            self.pos = start;
                            Err(Error::UnknownVariable(tok.to_string()))
                        }
                    },
                }
            }
            Some(c) => self.err(format!("unexpected `{}`", c as char)),
        }
    }

    /// `{ poly in t }` extension constant.
    fn braced(&mut self) -> Result<Node> {
        let start = self.pos;
        self.pos += 1;
        let Some(rel) = self.s[self.pos..].iter().position(|&c| c == b'}') else {
            return self.err("unterminated `{`");
        };
        let body = std::str::from_utf8(&self.s[self.pos..self.pos + rel])
            .expect("ascii")
            .to_string();
        self.pos += rel + 1;
        let bad = || Error::BadCoefficient(format!("{{{body}}}"));
        let f = self.ctx;
        let mut coeffs = vec![0i64; 0];
        let cleaned: String = body.chars().filter(|c| !c.is_whitespace()).collect();
        let normalized = cleaned.replace('-', "+-");
        for part in normalized.split('+').filter(|s| !s.is_empty()) {
            let (sign, part) = match part.strip_prefix('-') {
                Some(r) => (-1i64, r),
                None => (1, part),
            };
            let (coef, power) = if let Some(idx) = part.find('t') {
                let c = part[..idx].trim_end_matches('*');
                let c: i64 = if c.is_empty() {
                    1
                } else {
                    c.parse().map_err(|_| bad())?
                };
                let rest = &part[idx + 1..];
                let e: usize = if rest.is_empty() {
                    1
                } else {
                    rest.strip_prefix('^')
                        .and_then(|r| r.parse().ok())
                        .ok_or_else(bad)?
                };
                (c, e)
            } else {
                (part.parse::<i64>().map_err(|_| bad())?, 0)
            };
            if power >= f.k() {
                let _ = start;
                return Err(bad());
            }
            if coeffs.len() <= power {
                coeffs.resize(power + 1, 0);
            }
            coeffs[power] += sign * coef;
        }
        let p = f.p() as i64;
        let c: Vec<u64> = coeffs.iter().map(|&x| x.rem_euclid(p) as u64).collect();
        Ok(Node::Const(f.from_coeffs(&c)))
    }
}

/// Sparse noncommutative polynomial: word → nonzero coefficient.
/// Equality ignores the declared variable count.
#[derive(Clone, Debug)]
pub struct FreePoly {
    pub ctx: FieldCtx,
    pub nvars: usize,
    terms: BTreeMap<Word, Fe>,
}

impl PartialEq for FreePoly {
    fn eq(&self, o: &Self) -> bool {
        self.ctx == o.ctx && self.terms == o.terms
    }
}

impl Eq for FreePoly {}

impl FreePoly {
    pub fn zero(ctx: &FieldCtx, nvars: usize) -> Self {
        FreePoly {
            ctx: ctx.clone(),
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ctx: &FieldCtx, nvars: usize, c: Fe) -> Self {
        Self::monomial(ctx, nvars, Vec::new(), c)
    }

    pub fn monomial(ctx: &FieldCtx, nvars: usize, w: Word, c: Fe) -> Self {
        let mut p = Self::zero(ctx, nvars);
        p.add_term(w, c);
        p
    }

    pub fn from_terms(
        ctx: &FieldCtx,
        nvars: usize,
        terms: impl IntoIterator<Item = (Word, Fe)>,
    ) -> Self {
        let mut p = Self::zero(ctx, nvars);
        for (w, c) in terms {
            p.add_term(w, c);
        }
        p
    }

    pub fn add_term(&mut self, w: Word, c: Fe) {
        if let Some(&m) = w.iter().max() {
            self.nvars = self.nvars.max(m + 1);
        }
        let e = self.terms.entry(w).or_insert(Fe::ZERO);
        *e = self.ctx.add(*e, c);
        if e.is_zero() {
            self.terms.retain(|_, v| !v.is_zero());
        }
    }

    pub fn terms(&self) -> &BTreeMap<Word, Fe> {
        &self.terms
    }

    pub fn coefficient(&self, w: &[usize]) -> Fe {
        self.terms.get(w).copied().unwrap_or(Fe::ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree; `None` for zero.
    pub fn degree(&self) -> Option<usize> {
        self.terms.keys().map(|w| w.len()).max()
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut p = self.clone();
        p.nvars = p.nvars.max(o.nvars);
        for (w, &c) in &o.terms {
            p.add_term(w.clone(), c);
        }
        p
    }

    pub fn scale(&self, c: Fe) -> Self {
        let mut p = Self::zero(&self.ctx, self.nvars);
        for (w, &a) in &self.terms {
            p.add_term(w.clone(), self.ctx.mul(a, c));
        }
        p
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.scale(self.ctx.neg(Fe::ONE)))
    }

    /// Convolution product.
    pub fn mul(&self, o: &Self) -> Self {
        let mut acc: BTreeMap<Word, Fe> = BTreeMap::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &o.terms {
                let mut w = a.clone();
                w.extend_from_slice(b);
                let e = acc.entry(w).or_insert(Fe::ZERO);
                *e = self.ctx.mul_add(ca, cb, *e);
            }
        }
        acc.retain(|_, v| !v.is_zero());
        FreePoly {
            ctx: self.ctx.clone(),
            nvars: self.nvars.max(o.nvars),
            terms: acc,
        }
    }

    /// First nonzero coefficient in word order (None for zero).
    pub fn first_coefficient(&self) -> Option<Fe> {
        self.terms.values().next().copied()
    }

    /// Scalar multiple with first coefficient 1.
    pub fn normalized(&self) -> Self {
        match self.first_coefficient() {
            Some(c) => self.scale(self.ctx.inv(c).expect("nonzero")),
            None => self.clone(),
        }
    }

    /// Equal up to a nonzero scalar.
    pub fn associate(&self, o: &Self) -> bool {
        self.normalized().terms == o.normalized().terms
    }

    pub fn to_formula(&self) -> Formula {
        let mut root: Option<Node> = None;
        for (w, &c) in &self.terms {
            let mut m = Node::Const(c);
            for &i in w {
                m = Node::mul(m, Node::Var(i));
            }
            root = Some(match root {
                None => m,
                Some(r) => Node::add(r, m),
            });
        }
        Formula::new(&self.ctx, self.nvars, root.unwrap_or(Node::Const(Fe::ZERO)))
    }

    pub fn eval_matrix(&self, point: &[Matrix]) -> Result<Matrix> {
        self.to_formula().eval_matrix(point)
    }
}

impl fmt::Display for FreePoly {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(out, "0");
        }
        let mut first = true;
        for (w, &c) in &self.terms {
            if !first {
                write!(out, " + ")?;
            }
            first = false;
            let word = w.iter().map(|&i| var_name(i)).collect::<Vec<_>>().join("*");
            match (c == Fe::ONE, w.is_empty()) {
                (_, true) => write!(out, "{}", self.ctx.render(c))?,
                (true, false) => write!(out, "{word}")?,
                (false, false) => write!(out, "{}*{word}", self.ctx.render(c))?,
            }
        }
        Ok(())
    }
}

/// A scalar point over a field containing the formula's field.
#[derive(Clone, Debug)]
pub struct ScalarWitness {
    pub embedding: Embedding,
    pub point: Vec<Fe>,
    pub value: Fe,
}

/// Search for a scalar point where `f` is nonzero, sampling from an
/// extension of order at least 4·(degree bound).
pub fn commutative_witness(f: &Formula, trials: usize, seed: u64) -> Result<Option<ScalarWitness>> {
    let need = 4 * f.degree_bound().max(1) as u64;
    let emb = extension_at_least(&f.ctx, need, rng::derive(seed, 0))?;
    Ok(witness_in(f, emb, trials, rng::derive(seed, 1)))
}

/// Like [`commutative_witness`] but sampling only the formula's own field.
pub fn commutative_witness_base(f: &Formula, trials: usize, seed: u64) -> Option<ScalarWitness> {
    let emb = Embedding::new(&f.ctx, &f.ctx, 0).expect("identity embedding");
    witness_in(f, emb, trials, seed)
}

fn witness_in(f: &Formula, emb: Embedding, trials: usize, seed: u64) -> Option<ScalarWitness> {
    let mut r = rng::rng(seed);
    let big = emb.big.clone();
    if f.nvars == 0 {
        let v = f.eval_scalar_in(&emb, &[]);
        return (!v.is_zero()).then_some(ScalarWitness {
            embedding: emb,
            point: vec![],
            value: v,
        });
    }
    for _ in 0..trials {
        let pt: Vec<Fe> = (0..f.nvars).map(|_| big.random(&mut r)).collect();
        let v = f.eval_scalar_in(&emb, &pt);
        if !v.is_zero() {
            return Some(ScalarWitness {
                embedding: emb,
                point: pt,
                value: v,
            });
        }
    }
    None
}

/// Base-field matrices at which a formula evaluates to an invertible matrix.
#[derive(Clone, Debug)]
pub struct ImagePoint {
    pub dim: usize,
    pub mats: Vec<Matrix>,
    pub image: Matrix,
}

/// Search dimensions 1, 2, .. for base-field matrices with `f(M)` invertible.
/// Over prime fields, extension-field samples are also tried and pushed
/// down through the regular representation.
pub fn invertible_image_point(
    f: &Formula,
    dim_hint: usize,
    trials: usize,
    seed: u64,
) -> Result<ImagePoint> {
    let ctx = &f.ctx;
    let max_dim = (2 * f.size() * ctx.k()).max(dim_hint).max(1);
    let mut r = rng::rng(seed);
    let start = dim_hint.clamp(1, max_dim);
    let check = |mats: Vec<Matrix>| -> Result<Option<ImagePoint>> {
        let image = f.eval_matrix(&mats)?;
        Ok(image.is_invertible(ctx).then(|| ImagePoint {
            dim: image.rows(),
            mats,
            image,
        }))
    };
    for m in start..=max_dim {
        for _ in 0..trials {
            let mats: Vec<Matrix> = (0..f.nvars)
                .map(|_| Matrix::random(m, m, ctx, &mut r))
                .collect();
            if let Some(p) = check(mats)? {
                return Ok(p);
            }
        }
        if ctx.is_prime_field() {
            let need = (4 * f.degree_bound().max(1) * m) as u64;
            let emb = extension_at_least(ctx, need, rng::derive(seed, m as u64))?;
            let big = emb.big.clone();
            let kk = big.k();
            if kk > 1 && m * kk <= max_dim {
                for _ in 0..trials {
                    let ext: Vec<Matrix> = (0..f.nvars)
                        .map(|_| Matrix::random(m, m, &big, &mut r))
                        .collect();
                    if !f.eval_matrix_in(&emb, &ext)?.is_invertible(&big) {
                        continue;
                    }
                    let mats = ext.iter().map(|e| push_down(e, &big)).collect();
                    if let Some(p) = check(mats)? {
                        return Ok(p);
                    }
                }
            }
        }
    }
    Err(Error::Exhausted(
        "no invertible image point found; increase trials".into(),
    ))
}

/// Replace every entry of a matrix over F_{p^K} by its K×K regular representation.
pub fn push_down(m: &Matrix, big: &FieldCtx) -> Matrix {
    let k = big.k();
    let mut out = Matrix::zeros(m.rows() * k, m.cols() * k);
    for r in 0..m.rows() {
        for c in 0..m.cols() {
            out.set_block(r * k, c * k, &big.regular_rep(m[(r, c)]));
        }
    }
    out
}

/// Caps of the brute-force oracle.
pub const ORACLE_MAX_DEGREE: usize = 5;
pub const ORACLE_MAX_VARS: usize = 3;
pub const ORACLE_MAX_ORDER: u64 = 5;
const ORACLE_MAX_ENUM: u64 = 1 << 22;

/// All splits f = g·h into nonconstant factors, with g normalized to first
/// coefficient 1. Exhaustive: every monomial of a left factor is a prefix of a
/// monomial of f and every monomial of a right factor a suffix, so the
/// smaller-degree side is enumerated over those candidates and the other side
/// is solved for linearly.
pub fn brute_force_factor(f: &FreePoly) -> Result<Vec<(FreePoly, FreePoly)>> {
    let ctx = &f.ctx;
    let deg = f.degree().unwrap_or(0);
    if deg > ORACLE_MAX_DEGREE || f.nvars > ORACLE_MAX_VARS || ctx.order() > ORACLE_MAX_ORDER {
        return Err(Error::CapExceeded(format!(
            "oracle needs deg ≤ {ORACLE_MAX_DEGREE}, n ≤ {ORACLE_MAX_VARS}, q ≤ {ORACLE_MAX_ORDER}"
        )));
    }
    let mut out = BTreeSet::new();
    for a in 1..deg {
        let b = deg - a;
        let prefixes = affixes(f, a, true);
        let suffixes = affixes(f, b, false);
        let left_side = a <= b;
        let (enum_words, solve_words, enum_deg) = if left_side {
            (&prefixes, &suffixes, a)
        } else {
            (&suffixes, &prefixes, b)
        };
        for cand in enumerate_polys(ctx, f.nvars, enum_words, enum_deg)? {
            let solved = if left_side {
                solve_right(f, &cand, solve_words)
            } else {
                solve_left(f, &cand, solve_words)
            };
            let Some(other) = solved else { continue };
            let (g, h) = if left_side {
                (cand, other)
            } else {
                (other, cand)
            };
            if g.mul(&h) != *f {
                return Err(Error::Internal("oracle produced a wrong split".into()));
            }
            let c = g.first_coefficient().expect("nonzero");
            let g = g.normalized();
            let h = h.scale(c);
            out.insert((key(&g), key(&h)));
        }
    }
    Ok(out
        .into_iter()
        .map(|(g, h)| (from_key(ctx, f.nvars, g), from_key(ctx, f.nvars, h)))
        .collect())
}

type Key = Vec<(Word, u64)>;

fn key(p: &FreePoly) -> Key {
    p.terms
        .iter()
        .map(|(w, c)| (w.clone(), c.index()))
        .collect()
}

fn from_key(ctx: &FieldCtx, n: usize, k: Key) -> FreePoly {
    FreePoly::from_terms(ctx, n, k.into_iter().map(|(w, c)| (w, Fe(c))))
}

fn affixes(f: &FreePoly, max_len: usize, prefix: bool) -> Vec<Word> {
    let mut s = BTreeSet::new();
    for w in f.terms.keys() {
        for l in 0..=max_len.min(w.len()) {
            s.insert(if prefix {
                w[..l].to_vec()
            } else {
                w[w.len() - l..].to_vec()
            });
        }
    }
    s.into_iter().collect()
}

/// Polynomials supported on `words` with degree exactly `deg` and first
/// coefficient 1.
fn enumerate_polys(ctx: &FieldCtx, n: usize, words: &[Word], deg: usize) -> Result<Vec<FreePoly>> {
    let q = ctx.order();
    let m = words.len() as u32;
    let total = q
        .checked_pow(m)
        .filter(|&t| t <= ORACLE_MAX_ENUM)
        .ok_or_else(|| Error::CapExceeded("oracle search space".into()))?;
    let mut out = Vec::new();
    for idx in 0..total {
        let mut x = idx;
        let mut terms = Vec::new();
        for w in words {
            let c = x % q;
            x /= q;
            if c != 0 {
                terms.push((w.clone(), Fe(c)));
            }
        }
        if terms.first().map(|t| t.1) != Some(Fe::ONE) || !terms.iter().any(|(w, _)| w.len() == deg)
        {
            continue;
        }
        out.push(FreePoly::from_terms(ctx, n, terms));
    }
    Ok(out)
}

/// Solve f = g·h for h supported on `words`.
fn solve_right(f: &FreePoly, g: &FreePoly, words: &[Word]) -> Option<FreePoly> {
    solve_linear(f, words, |s| {
        g.terms.iter().map(|(p, &c)| (concat(p, s), c)).collect()
    })
}

/// Solve f = g·h for g supported on `words`.
fn solve_left(f: &FreePoly, h: &FreePoly, words: &[Word]) -> Option<FreePoly> {
    solve_linear(f, words, |p| {
        h.terms.iter().map(|(s, &c)| (concat(p, s), c)).collect()
    })
}

fn concat(a: &[usize], b: &[usize]) -> Word {
    let mut w = a.to_vec();
    w.extend_from_slice(b);
    w
}

fn solve_linear(
    f: &FreePoly,
    unknowns: &[Word],
    image: impl Fn(&Word) -> Vec<(Word, Fe)>,
) -> Option<FreePoly> {
    let ctx = &f.ctx;
    let mut rows: HashMap<Word, usize> = HashMap::new();
    let mut eqs: Vec<Vec<Fe>> = Vec::new();
    let n = unknowns.len();
    let mut row_of = |w: Word, eqs: &mut Vec<Vec<Fe>>| -> usize {
        *rows.entry(w).or_insert_with(|| {
            eqs.push(vec![Fe::ZERO; n + 1]);
            eqs.len() - 1
        })
    };
    for (j, u) in unknowns.iter().enumerate() {
        for (w, c) in image(u) {
            let r = row_of(w, &mut eqs);
            eqs[r][j] = ctx.add(eqs[r][j], c);
        }
    }
    for (w, &c) in &f.terms {
        let r = row_of(w.clone(), &mut eqs);
        eqs[r][n] = c;
    }
    let (m, pivots) = Matrix::from_rows(eqs).rref(ctx);
    if pivots.last() == Some(&n) {
        return None;
    }
    let mut sol = FreePoly::zero(ctx, f.nvars);
    for (i, &p) in pivots.iter().enumerate() {
        sol.add_term(unknowns[p].clone(), m[(i, n)]);
    }
    Some(sol)
}

/// Length of a complete factorization into irreducibles (oracle).
pub fn brute_force_length(f: &FreePoly) -> Result<usize> {
    let mut memo = HashMap::new();
    length_rec(f, &mut memo)
}

fn length_rec(f: &FreePoly, memo: &mut HashMap<Key, usize>) -> Result<usize> {
    let k = key(&f.normalized());
    if let Some(&v) = memo.get(&k) {
        return Ok(v);
    }
    let mut best = 1;
    for (g, h) in brute_force_factor(f)? {
        best = best.max(length_rec(&g, memo)? + length_rec(&h, memo)?);
    }
    memo.insert(k, best);
    Ok(best)
}

/// Oracle irreducibility: nonconstant with no nontrivial split.
pub fn brute_force_irreducible(f: &FreePoly) -> Result<bool> {
    Ok(f.degree().unwrap_or(0) >= 1 && brute_force_factor(f)?.is_empty())
}

/// Random formula generator used by tests and the acceptance corpus.
pub fn random_formula(ctx: &FieldCtx, nvars: usize, size: usize, r: &mut Rng) -> Formula {
    use rand::Rng as _;
    fn go(ctx: &FieldCtx, n: usize, size: usize, r: &mut Rng) -> Node {
        if size <= 2 {
            return if r.gen_bool(0.75) {
                Node::Var(r.gen_range(0..n))
            } else {
                Node::Const(ctx.random_nonzero(r))
            };
        }
        let left = r.gen_range(1..size - 1);
        let a = go(ctx, n, left, r);
        let b = go(ctx, n, size - 1 - left, r);
        if r.gen_bool(0.5) {
            Node::add(a, b)
        } else {
            Node::mul(a, b)
        }
    }
    Formula::new(ctx, nvars, go(ctx, nvars.max(1), size.max(1), r)).with_nvars(nvars)
}
