//! Property tests over random formulas.

use ncfactor::abp::{Abp, Chain};
use ncfactor::error::Side;
use ncfactor::expr::{random_formula, Formula};
use ncfactor::linmat::LinearMatrix;
use ncfactor::pipeline::{factor_polynomial, stable_associates, trivialize, FactorOptions};
use ncfactor::rng;
use ncfactor::{Fe, FieldCtx};
use proptest::prelude::*;

fn formula(q: u64, n: usize, size: usize, seed: u64) -> Option<Formula> {
    let f = FieldCtx::prime(q).unwrap();
    let e = random_formula(&f, n, size, &mut rng::rng(seed));
    (!Abp::from_formula(&e).is_zero()).then_some(e)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn product_and_degree(q in prop::sample::select(vec![2u64, 3, 5, 101]), n in 1usize..=3, size in 1usize..=20, seed: u64) {
        let Some(e) = formula(q, n, size, seed) else { return Ok(()) };
        for route in [Side::Left, Side::Right] {
            let opts = FactorOptions { route, ..Default::default() };
            let fact = factor_polynomial(&e, seed, &opts).unwrap();
            prop_assert!(fact.verification.ok);
            prop_assert!(fact.product().sub(&Abp::from_formula(&e)).is_zero());
            let total: usize = fact.degrees().iter().sum();
            prop_assert_eq!(total, Abp::from_formula(&e).degree().unwrap());
            if total > 0 {
                prop_assert_eq!(fact.atom_dims.len(), fact.r());
                prop_assert!(fact.atom_dims.iter().all(|&d| d >= 1));
            }
            if fact.r() > 1 {
                prop_assert!(fact.degrees().iter().all(|&d| d >= 1));
            }
        }
    }

    #[test]
    fn factors_are_irreducible(q in prop::sample::select(vec![2u64, 3, 5]), size in 3usize..=15, seed: u64) {
        let Some(e) = formula(q, 2, size, seed) else { return Ok(()) };
        let fact = factor_polynomial(&e, seed, &FactorOptions::default()).unwrap();
        if fact.r() > 1 {
            for g in &fact.factors {
                if let Some(gf) = g_formula(g, &e) {
                    prop_assert_eq!(factor_polynomial(&gf, seed ^ 1, &FactorOptions::default()).unwrap().r(), 1);
                }
            }
        }
    }

    #[test]
    fn products_split(q in prop::sample::select(vec![2u64, 3, 5]), s1 in 2usize..=9, s2 in 2usize..=9, seed: u64) {
        let (Some(a), Some(b)) = (formula(q, 2, s1, seed), formula(q, 2, s2, seed.wrapping_add(1))) else { return Ok(()) };
        let da = Abp::from_formula(&a).degree().unwrap();
        let db = Abp::from_formula(&b).degree().unwrap();
        let fa = factor_polynomial(&a, seed, &FactorOptions::default()).unwrap().r();
        let fb = factor_polynomial(&b, seed, &FactorOptions::default()).unwrap().r();
        let fab = factor_polynomial(&a.mul(&b), seed, &FactorOptions::default()).unwrap().r();
        // Factorization lengths are additive up to the constant factors.
        let expect = if da == 0 { 0 } else { fa } + if db == 0 { 0 } else { fb };
        prop_assert_eq!(fab, expect.max(1));
    }

    #[test]
    fn stable_association_is_reflexive(q in prop::sample::select(vec![2u64, 3, 5]), size in 1usize..=12, seed: u64) {
        let Some(e) = formula(q, 2, size, seed) else { return Ok(()) };
        prop_assert!(stable_associates(&e, &e, seed).unwrap().associated);
    }

    #[test]
    fn trivialize_gadgets(q in prop::sample::select(vec![2u64, 3, 5]), c in prop::collection::vec(0u64..5, 3), size in 1usize..=8, seed: u64) {
        let f = FieldCtx::prime(q).unwrap();
        let Some(h) = formula(q, 2, size, seed) else { return Ok(()) };
        let form: Vec<Fe> = c.iter().map(|&x| f.from_int(x as i64)).collect();
        let mut cm = LinearMatrix::zeros(&f, 1, 2, 2);
        cm.set_entry(0, 0, &form);
        cm.set_entry(0, 1, &[f.neg(Fe::ONE), Fe::ZERO, Fe::ZERO]);
        let h = Abp::from_formula(&h);
        let v = Chain::from_entries(&f, 2, &[vec![h.clone()], vec![Abp::form(&f, 2, &form).product(&h)]]).unwrap();
        let cert = trivialize(&cm, &v).unwrap();
        prop_assert!(cert.check(&cm, &v, 6, seed).unwrap());
    }
}

/// Formula for a factor via its sparse form, when small enough.
fn g_formula(g: &Abp, e: &Formula) -> Option<Formula> {
    let p = g.to_sparse(4096).ok()?;
    (p.degree()? <= 12).then(|| p.to_formula().with_nvars(e.nvars))
}
