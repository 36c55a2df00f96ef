//! Finite fields F_p and F_{p^k}, univariate polynomials over them, and dense
//! linear algebra.
//!
//! Elements are packed integers: the coefficient vector `(c_0, .., c_{k-1})`
//! of an element in the power basis is stored as `c_0 + c_1 p + .. + c_{k-1} p^{k-1}`.
//! All arithmetic goes through a [`FieldCtx`].

mod matrix;
mod poly;

pub use matrix::{Echelon, Matrix, Subspace};
pub use poly::UniPoly;

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use rand::Rng as _;
use std::fmt;
use std::sync::Arc;

/// Seed used when a field is named only by its `p^k` spec string.
pub const SPEC_FIELD_SEED: u64 = 0;

const TABLE_LIMIT: u64 = 1 << 16;
const ORDER_LIMIT: u128 = 1 << 62;

/// A field element, meaningful only together with its [`FieldCtx`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fe(pub(crate) u64);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    /// Packed integer encoding.
    pub fn index(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

#[derive(Debug)]
struct Tables {
    exp: Vec<u32>,
    log: Vec<u32>,
    // zech[n] = log(1 + g^n), or u32::MAX when 1 + g^n = 0
    zech: Vec<u32>,
}

#[derive(Debug)]
struct Inner {
    p: u64,
    k: usize,
    q: u64,
    modulus: Vec<u64>,
    tables: Option<Tables>,
}

/// A finite field context.
#[derive(Clone)]
pub struct FieldCtx {
    inner: Arc<Inner>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F({}^{}, {:?})", self.p(), self.k(), self.inner.modulus)
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.inner.p == other.inner.p && self.inner.modulus == other.inner.modulus
    }
}

impl Eq for FieldCtx {}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1 % m;
    a %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, m);
        }
        a = mulmod(a, a, m);
        e >>= 1;
    }
    r
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for sp in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(sp) {
            return n == sp;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    'outer: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

impl FieldCtx {
    /// The prime field F_p.
    pub fn prime(p: u64) -> Result<Self> {
        Self::build_extension(p, 1, 0)
    }

    /// F_{p^k}, with a defining polynomial found by random sampling and an
    /// irreducibility test.
    pub fn build_extension(p: u64, k: usize, seed: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if k == 0 {
            return Err(Error::ZeroDegree);
        }
        if p >= 1 << 61 && k == 1 {
            return Err(Error::FieldTooLarge { p, k });
        }
        let mut q: u128 = 1;
        for _ in 0..k {
            q *= p as u128;
            if q >= ORDER_LIMIT {
                return Err(Error::FieldTooLarge { p, k });
            }
        }
        let q = q as u64;
        if k == 1 {
            let inner = Inner {
                p,
                k,
                q,
                modulus: vec![0, 1],
                tables: None,
            };
            return Ok(FieldCtx {
                inner: Arc::new(inner),
            });
        }
        let base = FieldCtx::prime(p)?;
        let mut r = rng::rng(seed);
        let modulus = loop {
            let mut c: Vec<Fe> = (0..k).map(|_| base.random(&mut r)).collect();
            if c[0].is_zero() {
                continue;
            }
            c.push(Fe::ONE);
            let f = UniPoly::from_coeffs(c);
            if f.is_irreducible(&base) {
                break f.coeffs().iter().map(|c| c.0).collect::<Vec<_>>();
            }
        };
        let mut inner = Inner {
            p,
            k,
            q,
            modulus,
            tables: None,
        };
        if q <= TABLE_LIMIT {
            inner.tables = Some(build_tables(&inner));
        }
        Ok(FieldCtx {
            inner: Arc::new(inner),
        })
    }

    /// Parse a `p^k` (or bare `p`) spec string.
    pub fn from_spec(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (ps, ks) = match spec.split_once('^') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (spec, "1"),
        };
        let bad = || Error::BadFieldSpec(ps.to_string());
        let p: u64 = ps.parse().map_err(|_| bad())?;
        let k: usize = ks
            .parse()
            .map_err(|_| Error::BadFieldSpec(spec.to_string()))?;
        if !is_prime(p) {
            return Err(bad());
        }
        if k == 0 {
            return Err(Error::BadFieldSpec(spec.to_string()));
        }
        Self::build_extension(p, k, SPEC_FIELD_SEED)
    }

    pub fn spec(&self) -> String {
        format!("{}^{}", self.p(), self.k())
    }

    pub fn p(&self) -> u64 {
        self.inner.p
    }

    pub fn k(&self) -> usize {
        self.inner.k
    }

    /// Field order q = p^k.
    pub fn order(&self) -> u64 {
        self.inner.q
    }

    pub fn is_prime_field(&self) -> bool {
        self.inner.k == 1
    }

    /// Monic defining polynomial over F_p, low degree first.
    pub fn modulus(&self) -> &[u64] {
        &self.inner.modulus
    }

    pub fn zero(&self) -> Fe {
        Fe::ZERO
    }

    pub fn one(&self) -> Fe {
        Fe::ONE
    }

    /// Element from its packed index, if in range.
    pub fn element(&self, index: u64) -> Option<Fe> {
        (index < self.inner.q).then_some(Fe(index))
    }

    /// The residue of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> Fe {
        let p = self.inner.p as i128;
        Fe((((n as i128) % p + p) % p) as u64)
    }

    /// The power-basis generator t (1 when k = 1).
    pub fn generator(&self) -> Fe {
        if self.inner.k == 1 {
            Fe::ONE
        } else {
            Fe(self.inner.p)
        }
    }

    pub fn coeffs(&self, a: Fe) -> Vec<u64> {
        let p = self.inner.p;
        let mut x = a.0;
        (0..self.inner.k)
            .map(|_| {
                let d = x % p;
                x /= p;
                d
            })
            .collect()
    }

    pub fn from_coeffs(&self, c: &[u64]) -> Fe {
        let p = self.inner.p;
        let mut x = 0u64;
        for &d in c.iter().take(self.inner.k).rev() {
            x = x * p + d % p;
        }
        Fe(x)
    }

    pub fn elements(&self) -> impl Iterator<Item = Fe> {
        (0..self.inner.q).map(Fe)
    }

    pub fn random(&self, r: &mut Rng) -> Fe {
        Fe(r.gen_range(0..self.inner.q))
    }

    pub fn random_nonzero(&self, r: &mut Rng) -> Fe {
        Fe(r.gen_range(1..self.inner.q))
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        let i = &*self.inner;
        if i.k == 1 {
            let s = a.0 + b.0;
            return Fe(if s >= i.p { s - i.p } else { s });
        }
        if i.p == 2 {
            return Fe(a.0 ^ b.0);
        }
        if let Some(t) = &i.tables {
            if a.0 == 0 {
                return b;
            }
            if b.0 == 0 {
                return a;
            }
            let m = (i.q - 1) as u32;
            let la = t.log[a.0 as usize];
            let lb = t.log[b.0 as usize];
            let d = (lb + m - la) % m;
            let z = t.zech[d as usize];
            if z == u32::MAX {
                return Fe::ZERO;
            }
            return Fe(t.exp[((la + z) % m) as usize] as u64);
        }
        let (ca, cb) = (self.coeffs(a), self.coeffs(b));
        let c: Vec<u64> = ca.iter().zip(&cb).map(|(x, y)| (x + y) % i.p).collect();
        self.from_coeffs(&c)
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        let i = &*self.inner;
        if a.0 == 0 {
            return a;
        }
        if i.k == 1 {
            return Fe(i.p - a.0);
        }
        if i.p == 2 {
            return a;
        }
        let c: Vec<u64> = self.coeffs(a).iter().map(|x| (i.p - x) % i.p).collect();
        self.from_coeffs(&c)
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        let i = &*self.inner;
        if i.k == 1 {
            return Fe(if a.0 >= b.0 {
                a.0 - b.0
            } else {
                a.0 + i.p - b.0
            });
        }
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        let i = &*self.inner;
        if i.k == 1 {
            if i.p < 1 << 32 {
                return Fe(a.0 * b.0 % i.p);
            }
            return Fe(mulmod(a.0, b.0, i.p));
        }
        if a.0 == 0 || b.0 == 0 {
            return Fe::ZERO;
        }
        if let Some(t) = &i.tables {
            let m = (i.q - 1) as usize;
            let s = t.log[a.0 as usize] as usize + t.log[b.0 as usize] as usize;
            return Fe(t.exp[s % m] as u64);
        }
        self.from_coeffs(&poly_mulmod(
            &self.coeffs(a),
            &self.coeffs(b),
            &i.modulus,
            i.p,
        ))
    }

    /// a·b + c
    #[inline]
    pub fn mul_add(&self, a: Fe, b: Fe, c: Fe) -> Fe {
        self.add(self.mul(a, b), c)
    }

    pub fn pow(&self, mut a: Fe, mut e: u64) -> Fe {
        let mut r = Fe::ONE;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    pub fn inv(&self, a: Fe) -> Option<Fe> {
        if a.is_zero() {
            return None;
        }
        let i = &*self.inner;
        if let Some(t) = &i.tables {
            let m = (i.q - 1) as usize;
            let l = t.log[a.0 as usize] as usize;
            return Some(Fe(t.exp[(m - l) % m] as u64));
        }
        Some(self.pow(a, i.q - 2))
    }

    /// a / b; panics on division by zero.
    pub fn div(&self, a: Fe, b: Fe) -> Fe {
        self.mul(a, self.inv(b).expect("division by zero"))
    }

    fn is_primitive(&self, g: Fe) -> bool {
        let m = self.inner.q - 1;
        prime_factors(m)
            .into_iter()
            .all(|r| self.pow(g, m / r) != Fe::ONE)
    }

    /// Matrix of multiplication by `a` over F_p in the power basis (k×k).
    /// Column j holds the coordinates of a·t^j.
    pub fn regular_rep(&self, a: Fe) -> Matrix {
        let k = self.inner.k;
        let mut m = Matrix::zeros(k, k);
        let mut col = a;
        let t = self.generator();
        for j in 0..k {
            for (r, c) in self.coeffs(col).into_iter().enumerate() {
                m[(r, j)] = Fe(c);
            }
            col = self.mul(col, t);
        }
        m
    }

    /// Render an element: integers for prime fields, `{..}` polynomials in t otherwise.
    pub fn render(&self, a: Fe) -> String {
        if self.inner.k == 1 {
            return a.0.to_string();
        }
        let c = self.coeffs(a);
        let mut parts = Vec::new();
        for (i, &d) in c.iter().enumerate() {
            if d == 0 {
                continue;
            }
            parts.push(match (i, d) {
                (0, _) => d.to_string(),
                (1, 1) => "t".to_string(),
                (1, _) => format!("{d}*t"),
                (_, 1) => format!("t^{i}"),
                _ => format!("{d}*t^{i}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else if parts.len() == 1 && c[0] != 0 {
            parts[0].clone()
        } else {
            format!("{{{}}}", parts.join("+"))
        }
    }
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// Multiply two coefficient vectors modulo a monic modulus over F_p.
fn poly_mulmod(a: &[u64], b: &[u64], modulus: &[u64], p: u64) -> Vec<u64> {
    let k = modulus.len() - 1;
    let mut prod = vec![0u64; 2 * k];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = ((prod[i + j] as u128 + x as u128 * y as u128) % p as u128) as u64;
        }
    }
    for d in (k..2 * k).rev() {
        let c = prod[d];
        if c == 0 {
            continue;
        }
        prod[d] = 0;
        for i in 0..k {
            let s = mulmod(c, modulus[i], p);
            prod[d - k + i] = (prod[d - k + i] + p - s) % p;
        }
    }
    prod.truncate(k);
    prod
}

fn build_tables(inner: &Inner) -> Tables {
    let ctx = FieldCtx {
        inner: Arc::new(Inner {
            p: inner.p,
            k: inner.k,
            q: inner.q,
            modulus: inner.modulus.clone(),
            tables: None,
        }),
    };
    let q = inner.q;
    let g = (2..q)
        .map(Fe)
        .find(|&g| ctx.is_primitive(g))
        .expect("primitive element");
    let m = (q - 1) as usize;
    let mut exp = vec![0u32; m];
    let mut log = vec![0u32; q as usize];
    let mut x = Fe::ONE;
    for (e, slot) in exp.iter_mut().enumerate() {
        *slot = x.0 as u32;
        log[x.0 as usize] = e as u32;
        x = ctx.mul(x, g);
    }
    let zech = (0..m)
        .map(|n| {
            let s = ctx.add(Fe::ONE, Fe(exp[n] as u64));
            if s.is_zero() {
                u32::MAX
            } else {
                log[s.0 as usize]
            }
        })
        .collect();
    Tables { exp, log, zech }
}

/// Embedding of a field into a larger field of the same characteristic,
/// given by the image of the power-basis generator.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub small: FieldCtx,
    pub big: FieldCtx,
    gen_image: Fe,
}

impl Embedding {
    /// Find an embedding `small → big`; requires k_small | k_big.
    pub fn new(small: &FieldCtx, big: &FieldCtx, seed: u64) -> Result<Self> {
        if small.p() != big.p() || !big.k().is_multiple_of(small.k()) {
            return Err(Error::Precondition(
                "no embedding between these fields".into(),
            ));
        }
        let gen_image = if small.k() == 1 {
            Fe::ONE
        } else if small == big {
            // Self-embedding is the identity, not a Frobenius conjugate.
            big.generator()
        } else {
            let m = UniPoly::from_coeffs(small.modulus().iter().map(|&c| Fe(c)).collect());
            let roots = m.roots(big, seed);
            *roots
                .first()
                .ok_or_else(|| Error::Internal("defining polynomial has no root".into()))?
        };
        Ok(Embedding {
            small: small.clone(),
            big: big.clone(),
            gen_image,
        })
    }

    pub fn map(&self, a: Fe) -> Fe {
        if self.small.k() == 1 {
            return a;
        }
        let mut acc = Fe::ZERO;
        for &c in self.small.coeffs(a).iter().rev() {
            acc = self.big.add(self.big.mul(acc, self.gen_image), Fe(c));
        }
        acc
    }

    pub fn map_matrix(&self, m: &Matrix) -> Matrix {
        m.map(|x| self.map(x))
    }
}

/// Smallest extension F_{q^m} ⊇ `ctx` with order at least `min_order`,
/// together with the embedding of `ctx` into it.
pub fn extension_at_least(ctx: &FieldCtx, min_order: u64, seed: u64) -> Result<Embedding> {
    let mut m = 1usize;
    loop {
        let k = ctx.k() * m;
        let order = (ctx.p() as u128).checked_pow(k as u32);
        match order {
            Some(o) if o >= min_order as u128 || o >= ORDER_LIMIT / ctx.p() as u128 => {
                if m == 1 {
                    return Embedding::new(ctx, ctx, seed);
                }
                let big = FieldCtx::build_extension(ctx.p(), k, seed)?;
                return Embedding::new(ctx, &big, seed);
            }
            Some(_) => m += 1,
            None => return Err(Error::FieldTooLarge { p: ctx.p(), k }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_primes() {
        assert_eq!(FieldCtx::prime(4).unwrap_err(), Error::NotPrime(4));
        assert_eq!(
            FieldCtx::build_extension(2, 0, 1).unwrap_err(),
            Error::ZeroDegree
        );
        assert_eq!(
            FieldCtx::from_spec("4^1").unwrap_err().to_string(),
            "4 is not prime^k spec"
        );
    }

    #[test]
    fn f4_is_unique() {
        for seed in 0..5 {
            let f = FieldCtx::build_extension(2, 2, seed).unwrap();
            assert_eq!(f.modulus(), &[1, 1, 1]);
        }
    }

    #[test]
    fn regular_rep_of_t_in_f4() {
        let f = FieldCtx::build_extension(2, 2, 3).unwrap();
        let m = f.regular_rep(f.generator());
        assert_eq!(m.get(0, 0), Fe(0));
        assert_eq!(m.get(1, 0), Fe(1));
        assert_eq!(m.get(0, 1), Fe(1));
        assert_eq!(m.get(1, 1), Fe(1));
    }

    #[test]
    fn field_axioms_on_samples() {
        for (p, k) in [
            (2, 1),
            (5, 1),
            (101, 1),
            (2, 3),
            (3, 2),
            (7, 3),
            (2, 20),
            (1_000_003, 2),
        ] {
            let f = FieldCtx::build_extension(p, k, 11).unwrap();
            let mut r = rng::rng(7);
            for _ in 0..1000 {
                let (a, b, c) = (f.random(&mut r), f.random(&mut r), f.random(&mut r));
                assert_eq!(f.add(a, f.add(b, c)), f.add(f.add(a, b), c));
                assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
                assert_eq!(f.add(a, b), f.add(b, a));
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                assert_eq!(f.sub(f.add(a, b), b), a);
                if !a.is_zero() {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), Fe::ONE);
                }
            }
        }
    }

    #[test]
    fn regular_rep_homomorphism_exhaustive() {
        for (p, k) in [(2, 2), (2, 3), (3, 2)] {
            let f = FieldCtx::build_extension(p, k, 5).unwrap();
            let base = FieldCtx::prime(p).unwrap();
            let mut seen = std::collections::HashSet::new();
            for a in f.elements() {
                let ra = f.regular_rep(a);
                assert!(seen.insert(ra.clone()));
                for b in f.elements() {
                    let rb = f.regular_rep(b);
                    assert_eq!(f.regular_rep(f.mul(a, b)), ra.mul(&rb, &base));
                    assert_eq!(f.regular_rep(f.add(a, b)), ra.add(&rb, &base));
                }
            }
        }
    }

    #[test]
    fn self_embedding_is_identity() {
        let f = FieldCtx::from_spec("3^2").unwrap();
        let e = Embedding::new(&f, &f, 5).unwrap();
        for i in 0..f.order() {
            let x = f.element(i).unwrap();
            assert_eq!(e.map(x), x);
        }
    }

    #[test]
    fn embedding_is_homomorphism() {
        let small = FieldCtx::build_extension(3, 2, 1).unwrap();
        let big = FieldCtx::build_extension(3, 4, 2).unwrap();
        let e = Embedding::new(&small, &big, 9).unwrap();
        for a in small.elements() {
            for b in small.elements() {
                assert_eq!(e.map(small.mul(a, b)), big.mul(e.map(a), e.map(b)));
                assert_eq!(e.map(small.add(a, b)), big.add(e.map(a), e.map(b)));
            }
        }
    }

    #[test]
    fn spec_roundtrip() {
        let f = FieldCtx::from_spec("2^3").unwrap();
        assert_eq!(f.spec(), "2^3");
        assert_eq!(f, FieldCtx::from_spec("2^3").unwrap());
        assert_eq!(FieldCtx::from_spec("5").unwrap().spec(), "5^1");
    }
}
