use super::{prime_factors, Fe, FieldCtx, Matrix};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Dense univariate polynomial, lowest degree first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UniPoly(Vec<Fe>);

const NAIVE_LIMIT: u128 = 4096;

impl UniPoly {
    pub fn from_coeffs(mut c: Vec<Fe>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        UniPoly(c)
    }

    pub fn zero() -> Self {
        UniPoly(Vec::new())
    }

    pub fn one() -> Self {
        UniPoly(vec![Fe::ONE])
    }

    pub fn constant(c: Fe) -> Self {
        Self::from_coeffs(vec![c])
    }

    /// The monomial x.
    pub fn x() -> Self {
        UniPoly(vec![Fe::ZERO, Fe::ONE])
    }

    pub fn coeffs(&self) -> &[Fe] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.0 == [Fe::ONE]
    }

    /// Degree; `None` for the zero polynomial.
    pub fn deg(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    fn degree(&self) -> usize {
        self.deg().unwrap_or(0)
    }

    pub fn lead(&self) -> Fe {
        self.0.last().copied().unwrap_or(Fe::ZERO)
    }

    pub fn add(&self, o: &Self, f: &FieldCtx) -> Self {
        let n = self.0.len().max(o.0.len());
        let c = (0..n)
            .map(|i| {
                f.add(
                    self.0.get(i).copied().unwrap_or_default(),
                    o.0.get(i).copied().unwrap_or_default(),
                )
            })
            .collect();
        Self::from_coeffs(c)
    }

    pub fn sub(&self, o: &Self, f: &FieldCtx) -> Self {
        self.add(&o.scale(f.neg(Fe::ONE), f), f)
    }

    pub fn scale(&self, c: Fe, f: &FieldCtx) -> Self {
        Self::from_coeffs(self.0.iter().map(|&a| f.mul(a, c)).collect())
    }

    pub fn mul(&self, o: &Self, f: &FieldCtx) -> Self {
        if self.is_zero() || o.is_zero() {
            return Self::zero();
        }
        let mut c = vec![Fe::ZERO; self.0.len() + o.0.len() - 1];
        for (i, &a) in self.0.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, &b) in o.0.iter().enumerate() {
                c[i + j] = f.mul_add(a, b, c[i + j]);
            }
        }
        Self::from_coeffs(c)
    }

    pub fn monic(&self, f: &FieldCtx) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        self.scale(f.inv(self.lead()).expect("nonzero"), f)
    }

    /// Quotient and remainder; panics if `d` is zero.
    pub fn divrem(&self, d: &Self, f: &FieldCtx) -> (Self, Self) {
        assert!(!d.is_zero(), "division by the zero polynomial");
        if self.0.len() < d.0.len() {
            return (Self::zero(), self.clone());
        }
        let mut r = self.0.clone();
        let dd = d.degree();
        let inv = f.inv(d.lead()).expect("nonzero");
        let mut q = vec![Fe::ZERO; r.len() - dd];
        for i in (0..q.len()).rev() {
            let c = f.mul(r[i + dd], inv);
            q[i] = c;
            if c.is_zero() {
                continue;
            }
            for (j, &b) in d.0.iter().enumerate() {
                r[i + j] = f.sub(r[i + j], f.mul(c, b));
            }
        }
        r.truncate(dd);
        (Self::from_coeffs(q), Self::from_coeffs(r))
    }

    pub fn rem(&self, d: &Self, f: &FieldCtx) -> Self {
        self.divrem(d, f).1
    }

    /// Monic gcd.
    pub fn gcd(&self, o: &Self, f: &FieldCtx) -> Self {
        let (mut a, mut b) = (self.clone(), o.clone());
        while !b.is_zero() {
            let r = a.rem(&b, f);
            a = b;
            b = r;
        }
        a.monic(f)
    }

    pub fn mulmod(&self, o: &Self, m: &Self, f: &FieldCtx) -> Self {
        self.mul(o, f).rem(m, f)
    }

    pub fn powmod(&self, mut e: u64, m: &Self, f: &FieldCtx) -> Self {
        let mut base = self.rem(m, f);
        let mut acc = Self::one().rem(m, f);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mulmod(&base, m, f);
            }
            base = base.mulmod(&base, m, f);
            e >>= 1;
        }
        acc
    }

    pub fn derivative(&self, f: &FieldCtx) -> Self {
        let c = self
            .0
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &a)| f.mul(a, f.from_int(i as i64)))
            .collect();
        Self::from_coeffs(c)
    }

    pub fn eval(&self, a: Fe, f: &FieldCtx) -> Fe {
        self.0
            .iter()
            .rev()
            .fold(Fe::ZERO, |acc, &c| f.mul_add(acc, a, c))
    }

    /// Evaluate at a square matrix by Horner's rule.
    pub fn eval_matrix(&self, m: &Matrix, f: &FieldCtx) -> Matrix {
        let n = m.rows();
        let mut acc = Matrix::zeros(n, n);
        for &c in self.0.iter().rev() {
            acc = acc.mul(m, f);
            for i in 0..n {
                acc[(i, i)] = f.add(acc[(i, i)], c);
            }
        }
        acc
    }

    /// Rabin's irreducibility test.
    pub fn is_irreducible(&self, f: &FieldCtx) -> bool {
        let n = match self.deg() {
            None | Some(0) => return false,
            Some(1) => return true,
            Some(n) => n,
        };
        let g = self.monic(f);
        let x = Self::x();
        let q = f.order();
        let frob_pow = |times: usize| {
            let mut h = x.clone();
            for _ in 0..times {
                h = h.powmod(q, &g, f);
            }
            h
        };
        if frob_pow(n) != x.rem(&g, f) {
            return false;
        }
        prime_factors(n as u64).into_iter().all(|r| {
            let h = frob_pow(n / r as usize).sub(&x, f);
            h.gcd(&g, f).is_one()
        })
    }

    /// Factor into monic irreducibles with multiplicities, sorted by
    /// (degree, coefficients). The leading coefficient is dropped.
    pub fn factor(&self, f: &FieldCtx, seed: u64) -> Result<Vec<(UniPoly, usize)>> {
        if self.is_zero() {
            return Err(Error::ZeroPolynomial);
        }
        let g = self.monic(f);
        let mut out = Vec::new();
        if g.degree() == 0 {
            return Ok(out);
        }
        let naive = (f.order() as u128)
            .checked_pow(g.degree() as u32)
            .is_some_and(|v| v <= NAIVE_LIMIT);
        if naive {
            out = naive_factor(&g, f);
        } else {
            let mut r = rng::rng(seed);
            for (sq, mult) in squarefree(&g, f) {
                for (part, d) in distinct_degree(&sq, f) {
                    for irr in equal_degree(&part, d, f, &mut r) {
                        out.push((irr, mult));
                    }
                }
            }
        }
        out.sort_by(|a, b| (a.0.degree(), &a.0).cmp(&(b.0.degree(), &b.0)));
        let mut merged: Vec<(UniPoly, usize)> = Vec::new();
        for (p, m) in out {
            match merged.last_mut() {
                Some((lp, lm)) if *lp == p => *lm += m,
                _ => merged.push((p, m)),
            }
        }
        Ok(merged)
    }

    /// Distinct roots in `f`.
    pub fn roots(&self, f: &FieldCtx, seed: u64) -> Vec<Fe> {
        let Ok(fac) = self.factor(f, seed) else {
            return Vec::new();
        };
        fac.into_iter()
            .filter(|(p, _)| p.degree() == 1)
            .map(|(p, _)| f.neg(p.0[0]))
            .collect()
    }
}

fn naive_factor(g: &UniPoly, f: &FieldCtx) -> Vec<(UniPoly, usize)> {
    let mut rest = g.clone();
    let mut out = Vec::new();
    let q = f.order();
    let mut d = 1;
    while 2 * d <= rest.degree() {
        let count = q.pow(d as u32);
        for idx in 0..count {
            let mut c = Vec::with_capacity(d + 1);
            let mut x = idx;
            for _ in 0..d {
                c.push(Fe(x % q));
                x /= q;
            }
            c.push(Fe::ONE);
            let cand = UniPoly::from_coeffs(c);
            let mut m = 0;
            loop {
                let (qt, r) = rest.divrem(&cand, f);
                if !r.is_zero() {
                    break;
                }
                rest = qt;
                m += 1;
            }
            if m > 0 {
                out.push((cand, m));
            }
        }
        d += 1;
    }
    if rest.degree() > 0 {
        out.push((rest, 1));
    }
    out
}

fn pth_root(g: &UniPoly, f: &FieldCtx) -> UniPoly {
    let p = f.p() as usize;
    let e = f.order() / f.p();
    let c = g.0.iter().step_by(p).map(|&a| f.pow(a, e)).collect();
    UniPoly::from_coeffs(c)
}

fn squarefree(g: &UniPoly, f: &FieldCtx) -> Vec<(UniPoly, usize)> {
    let mut out = Vec::new();
    let dg = g.derivative(f);
    if dg.is_zero() {
        for (h, m) in squarefree(&pth_root(g, f), f) {
            out.push((h, m * f.p() as usize));
        }
        return out;
    }
    let mut c = g.gcd(&dg, f);
    let mut w = g.divrem(&c, f).0;
    let mut i = 1;
    while !w.is_one() {
        let y = w.gcd(&c, f);
        let fac = w.divrem(&y, f).0;
        if !fac.is_one() {
            out.push((fac.monic(f), i));
        }
        w = y;
        c = c.divrem(&w, f).0;
        i += 1;
    }
    if !c.is_one() && c.degree() > 0 {
        for (h, m) in squarefree(&pth_root(&c.monic(f), f), f) {
            out.push((h, m * f.p() as usize));
        }
    }
    out
}

fn distinct_degree(g: &UniPoly, f: &FieldCtx) -> Vec<(UniPoly, usize)> {
    let mut out = Vec::new();
    let mut rest = g.clone();
    let x = UniPoly::x();
    let mut h = x.rem(&rest, f);
    let mut i = 1;
    while rest.degree() >= 2 * i {
        h = h.powmod(f.order(), &rest, f);
        let gg = rest.gcd(&h.sub(&x, f), f);
        if !gg.is_one() {
            rest = rest.divrem(&gg, f).0;
            h = h.rem(&rest, f);
            out.push((gg, i));
        }
        i += 1;
    }
    if rest.degree() > 0 {
        let d = rest.degree();
        out.push((rest.monic(f), d));
    }
    out
}

fn equal_degree(g: &UniPoly, d: usize, f: &FieldCtx, r: &mut Rng) -> Vec<UniPoly> {
    let n = g.degree();
    if n == d {
        return vec![g.monic(f)];
    }
    loop {
        let a = UniPoly::from_coeffs((0..n).map(|_| f.random(r)).collect());
        if a.degree() == 0 {
            continue;
        }
        let b = if f.p() == 2 {
            let mut t = a.clone();
            let mut acc = a.clone();
            for _ in 1..f.k() * d {
                t = t.mulmod(&t, g, f);
                acc = acc.add(&t, f);
            }
            acc
        } else {
            let mut t = a.clone();
            let mut norm = a.clone();
            for _ in 1..d {
                t = t.powmod(f.order(), g, f);
                norm = norm.mulmod(&t, g, f);
            }
            norm.powmod((f.order() - 1) / 2, g, f)
                .sub(&UniPoly::one(), f)
        };
        let h = g.gcd(&b, f);
        if h.degree() > 0 && h.degree() < n {
            let other = g.divrem(&h, f).0;
            let mut out = equal_degree(&h, d, f, r);
            out.extend(equal_degree(&other.monic(f), d, f, r));
            return out;
        }
    }
}
