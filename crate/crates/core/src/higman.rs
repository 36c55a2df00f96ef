//! Higman linearization: f ⊕ I_s = P·L·Q with L affine, P upper and Q lower
//! unitriangular, and the inverses of P and Q tracked alongside.
//!
//! Each step takes an entry holding a product term c·g·h at position (a, c′),
//! removes it, and appends a new index b with (a, b) = c·g, (b, c′) = −h and
//! (b, b) = 1. Then M ⊕ 1 = (I − c·g·E_ab)·M′·(I + h·E_bc′).

use crate::abp::{Abp, Chain};
use crate::error::Result;
use crate::expr::{Formula, Node};
use crate::field::{Fe, FieldCtx, Matrix};
use crate::linmat::{
    random_point, LinearMatrix, LinearMatrixDoc, PolyMatrix, PolyMatrixDoc, Shape,
};
use crate::rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Clone, Debug)]
pub struct HigmanCert {
    pub l: LinearMatrix,
    pub p: PolyMatrix,
    pub q: PolyMatrix,
    pub p_inv: PolyMatrix,
    pub q_inv: PolyMatrix,
    pub s: usize,
}

/// Affine part plus scaled product nodes whose factors are both nonconstant.
fn decompose<'a>(
    n: &'a Node,
    c: Fe,
    ctx: &FieldCtx,
    affine: &mut [Fe],
    terms: &mut Vec<(Fe, &'a Node)>,
) {
    if c.is_zero() {
        return;
    }
    match n {
        Node::Const(v) => affine[0] = ctx.mul_add(c, *v, affine[0]),
        Node::Var(i) => affine[i + 1] = ctx.add(affine[i + 1], c),
        Node::Add(a, b) => {
            decompose(a, c, ctx, affine, terms);
            decompose(b, c, ctx, affine, terms);
        }
        Node::Mul(a, b) => match (a.constant_value(ctx), b.constant_value(ctx)) {
            (Some(v), _) => decompose(b, ctx.mul(c, v), ctx, affine, terms),
            (_, Some(v)) => decompose(a, ctx.mul(c, v), ctx, affine, terms),
            _ => terms.push((c, n)),
        },
    }
}

/// I + g·E_ab as a chain of size d.
fn elementary(ctx: &FieldCtx, nvars: usize, d: usize, a: usize, b: usize, g: &Abp) -> Chain {
    let placed = g
        .chain()
        .left_scalar(&Matrix::unit(d, 1, a, 0))
        .right_scalar(&Matrix::unit(1, d, 0, b));
    Chain::identity(ctx, nvars, d).add(&placed).expect("square")
}

pub fn linearize(f: &Formula) -> Result<HigmanCert> {
    let ctx = &f.ctx;
    let n = f.nvars;
    let neg1 = ctx.neg(Fe::ONE);
    // Entries of the growing matrix: affine forms, plus pending product terms.
    let mut affine: Vec<Vec<Vec<Fe>>> = vec![vec![vec![Fe::ZERO; n + 1]]];
    let mut pending: VecDeque<(usize, usize, Fe, &Node)> = VecDeque::new();
    let mut terms = Vec::new();
    decompose(&f.root, Fe::ONE, ctx, &mut affine[0][0], &mut terms);
    pending.extend(terms.into_iter().map(|(c, t)| (0, 0, c, t)));
    let mut p = PolyMatrix::identity(ctx, n, 1);
    let mut q = PolyMatrix::identity(ctx, n, 1);
    let mut p_inv = PolyMatrix::identity(ctx, n, 1);
    let mut q_inv = PolyMatrix::identity(ctx, n, 1);
    while let Some((a, c2, c, node)) = pending.pop_front() {
        let Node::Mul(g, h) = node else {
            unreachable!("only products are pending")
        };
        let b = affine.len();
        let d = b + 1;
        for row in affine.iter_mut() {
            row.push(vec![Fe::ZERO; n + 1]);
        }
        affine.push(vec![vec![Fe::ZERO; n + 1]; d]);
        affine[b][b][0] = Fe::ONE;
        let mut t1 = Vec::new();
        decompose(g, c, ctx, &mut affine[a][b], &mut t1);
        pending.extend(t1.into_iter().map(|(k, t)| (a, b, k, t)));
        let mut t2 = Vec::new();
        decompose(h, neg1, ctx, &mut affine[b][c2], &mut t2);
        pending.extend(t2.into_iter().map(|(k, t)| (b, c2, k, t)));

        let ga = Abp::from_formula(&Formula::new(ctx, n, (**g).clone())).scale(c);
        let ha = Abp::from_formula(&Formula::new(ctx, n, (**h).clone()));
        let e1 = elementary(ctx, n, d, a, b, &ga.scale(neg1));
        let e1_inv = elementary(ctx, n, d, a, b, &ga);
        let e2 = elementary(ctx, n, d, b, c2, &ha);
        let e2_inv = elementary(ctx, n, d, b, c2, &ha.scale(neg1));
        p = PolyMatrix::new(p.pad_identity(1).chain.mul(&e1)?, Shape::UpperUnitriangular);
        p_inv = PolyMatrix::new(
            e1_inv.mul(&p_inv.pad_identity(1).chain)?,
            Shape::UpperUnitriangular,
        );
        q = PolyMatrix::new(e2.mul(&q.pad_identity(1).chain)?, Shape::LowerUnitriangular);
        q_inv = PolyMatrix::new(
            q_inv.pad_identity(1).chain.mul(&e2_inv)?,
            Shape::LowerUnitriangular,
        );
    }
    let d = affine.len();
    let mut l = LinearMatrix::zeros(ctx, d, d, n);
    for (i, row) in affine.iter().enumerate() {
        for (j, form) in row.iter().enumerate() {
            l.set_entry(i, j, form);
        }
    }
    if d == 1 {
        p.shape = Shape::UpperUnitriangular;
        q.shape = Shape::LowerUnitriangular;
        p_inv.shape = Shape::UpperUnitriangular;
        q_inv.shape = Shape::LowerUnitriangular;
    }
    Ok(HigmanCert {
        l,
        p,
        q,
        p_inv,
        q_inv,
        s: d - 1,
    })
}

impl HigmanCert {
    /// f ⊕ I_s = P·L·Q at random m×m points.
    pub fn unlinearize_check(
        &self,
        f: &Formula,
        trials: usize,
        m: usize,
        seed: u64,
    ) -> Result<bool> {
        let ctx = &f.ctx;
        let mut r = rng::rng(seed);
        for _ in 0..trials {
            let pt = random_point(ctx, f.nvars, m, &mut r);
            let lhs = f
                .eval_matrix(&pt)?
                .direct_sum(&Matrix::identity(self.s * m));
            let rhs = self
                .p
                .eval_matrix(&pt)?
                .mul(&self.l.eval_linmat(&pt)?, ctx)
                .mul(&self.q.eval_matrix(&pt)?, ctx);
            if lhs != rhs {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// P·P⁻¹ = I and Q·Q⁻¹ = I at random m×m points.
    pub fn check_inverses(&self, trials: usize, m: usize, seed: u64) -> Result<bool> {
        let ctx = self.l.ctx.clone();
        let mut r = rng::rng(seed);
        let id = Matrix::identity(self.l.dim() * m);
        for _ in 0..trials {
            let pt = random_point(&ctx, self.l.nvars(), m, &mut r);
            let pp = self
                .p
                .eval_matrix(&pt)?
                .mul(&self.p_inv.eval_matrix(&pt)?, &ctx);
            let qq = self
                .q
                .eval_matrix(&pt)?
                .mul(&self.q_inv.eval_matrix(&pt)?, &ctx);
            if pp != id || qq != id {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn to_doc(&self, input: &str) -> HigmanDoc {
        HigmanDoc {
            field: self.l.ctx.spec(),
            input: input.to_string(),
            s: self.s,
            l: self.l.to_doc(),
            p: self.p.to_doc(),
            q: self.q.to_doc(),
            p_inv: self.p_inv.to_doc(),
            q_inv: self.q_inv.to_doc(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HigmanDoc {
    pub field: String,
    pub input: String,
    pub s: usize,
    #[serde(rename = "L")]
    pub l: LinearMatrixDoc,
    #[serde(rename = "P")]
    pub p: PolyMatrixDoc,
    #[serde(rename = "Q")]
    pub q: PolyMatrixDoc,
    #[serde(rename = "Pinv")]
    pub p_inv: PolyMatrixDoc,
    #[serde(rename = "Qinv")]
    pub q_inv: PolyMatrixDoc,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::random_formula;

    fn form(ctx: &FieldCtx, c: &[i64]) -> Vec<Fe> {
        c.iter().map(|&x| ctx.from_int(x)).collect()
    }

    #[test]
    fn single_variable() {
        let f = FieldCtx::prime(2).unwrap();
        let x = Formula::parse("x1", &f).unwrap();
        let c = linearize(&x).unwrap();
        assert_eq!((c.s, c.l.dim()), (0, 1));
        assert_eq!(c.l.entry(0, 0), form(&f, &[0, 1]));
        assert!(c.p.check_shape() && c.q.check_shape());
        assert!(c.unlinearize_check(&x, 10, 2, 1).unwrap());
    }

    #[test]
    fn product_step() {
        let f = FieldCtx::prime(5).unwrap();
        let xy = Formula::parse("x*y", &f).unwrap();
        let c = linearize(&xy).unwrap();
        assert_eq!(c.l.dim(), 2);
        assert_eq!(c.l.entry(0, 0), form(&f, &[0, 0, 0]));
        assert_eq!(c.l.entry(0, 1), form(&f, &[0, 1, 0]));
        assert_eq!(c.l.entry(1, 0), form(&f, &[0, 0, -1]));
        assert_eq!(c.l.entry(1, 1), form(&f, &[1, 0, 0]));
        assert!(c.unlinearize_check(&xy, 10, 2, 3).unwrap());
        assert!(c.check_inverses(10, 2, 3).unwrap());
    }

    #[test]
    fn running_example() {
        let f = FieldCtx::prime(5).unwrap();
        let e = Formula::parse("x + x*y*x", &f).unwrap();
        let c = linearize(&e).unwrap();
        assert_eq!(c.l.dim(), 3);
        assert!(c.unlinearize_check(&e, 10, 2, 5).unwrap());
        assert!(c.check_inverses(10, 2, 5).unwrap());
        assert!(
            c.p.check_shape()
                && c.q.check_shape()
                && c.p_inv.check_shape()
                && c.q_inv.check_shape()
        );
        assert!(c.l.is_full_randomized(8, 0));
    }

    #[test]
    fn corrupted_certificate_fails() {
        let f = FieldCtx::prime(5).unwrap();
        let e = Formula::parse("x + x*y*x", &f).unwrap();
        let mut c = linearize(&e).unwrap();
        c.l.coeff_mut(1)[(0, 0)] = f.from_int(2);
        assert!(!c.unlinearize_check(&e, 10, 2, 5).unwrap());
    }

    #[test]
    fn constants() {
        let f = FieldCtx::prime(5).unwrap();
        let e = Formula::parse("3", &f).unwrap();
        let c = linearize(&e).unwrap();
        assert_eq!((c.s, c.l.entry(0, 0)), (0, form(&f, &[3])));
        assert!(c.unlinearize_check(&e, 3, 2, 5).unwrap());
    }

    #[test]
    fn random_corpus() {
        for q in [2, 3, 5, 101] {
            let f = FieldCtx::prime(q).unwrap();
            let mut r = rng::rng(q);
            for _ in 0..25 {
                let e = random_formula(&f, 3, 25, &mut r);
                let c = linearize(&e).unwrap();
                assert!(c.l.dim() <= 1 + e.root.mul_count());
                assert!(c.l.dim() <= 2 * e.size());
                assert!(c.unlinearize_check(&e, 10, 2, 7).unwrap());
                assert!(c.check_inverses(10, 2, 7).unwrap());
                assert!(c.p.check_shape() && c.q.check_shape());
                if !Abp::from_formula(&e).is_zero() {
                    assert!(c.l.is_full_randomized(8, 1));
                }
            }
        }
    }
}
