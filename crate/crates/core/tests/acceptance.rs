//! Acceptance suite: ten criteria, each with a wall-clock limit. Prints one
//! PASS/FAIL line per criterion and fails if any criterion fails.

use ncfactor::abp::{Abp, Chain};
use ncfactor::error::Side;
use ncfactor::expr::{
    brute_force_irreducible, brute_force_length, random_formula, Formula, FreePoly, Word,
};
use ncfactor::higman::linearize;
use ncfactor::invsub::{self, atomic_flag, common_invariant_subspace, is_block_lower, Search};
use ncfactor::linfact::hkv_descent;
use ncfactor::linmat::{monicize, LinearMatrix};
use ncfactor::pipeline::{
    factor_polynomial, factor_sparse, stable_associates, trivialize, FactorOptions,
};
use ncfactor::rng::{self, Rng};
use ncfactor::{Fe, FieldCtx, Matrix, Subspace};
use rand::Rng as _;
use std::collections::HashSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

type Check = std::result::Result<(), String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn field(q: u64) -> FieldCtx {
    FieldCtx::prime(q).unwrap()
}

fn parse(s: &str, f: &FieldCtx) -> Formula {
    Formula::parse(s, f).unwrap()
}

fn sparse(s: &str, f: &FieldCtx) -> FreePoly {
    parse(s, f).to_sparse().unwrap()
}

fn opts() -> FactorOptions {
    FactorOptions::default()
}

/// Random formulas of both kinds used by the roundtrip and audit criteria.
fn corpus(count: usize, seed: u64) -> Vec<Formula> {
    let mut r = rng::rng(seed);
    let mut out = Vec::new();
    let qs = [2, 3, 5, 101];
    while out.len() < count {
        let f = field(qs[out.len() % qs.len()]);
        let n = r.gen_range(1..=3);
        let e = if out.len() % 3 == 2 {
            // Commutatively zero: a commutator times a random factor.
            let a = random_formula(&f, n, r.gen_range(3..=7), &mut r);
            let b = random_formula(&f, n, r.gen_range(3..=7), &mut r);
            let c = random_formula(&f, n, r.gen_range(1..=7), &mut r);
            let comm = a.mul(&b).sub(&b.mul(&a));
            if r.gen_bool(0.5) {
                comm.mul(&c)
            } else {
                c.mul(&comm)
            }
        } else {
            random_formula(&f, n, r.gen_range(3..=25), &mut r)
        };
        if e.size() <= 25 && !Abp::from_formula(&e).is_zero() {
            out.push(e);
        }
    }
    out
}

fn c1_running_example() -> Check {
    for q in [2, 5] {
        let f = field(q);
        let e = parse("x + x*y*x", &f);
        let p = e.to_sparse().unwrap();
        let fact = factor_polynomial(&e, 1, &opts()).map_err(|e| e.to_string())?;
        ensure(fact.r() == 2, || format!("F_{q}: r = {}", fact.r()))?;
        ensure(fact.product().sub(&Abp::from_formula(&e)).is_zero(), || {
            format!("F_{q}: product differs")
        })?;
        let sf = fact.sparse_factors(Some(&p)).map_err(|e| e.to_string())?;
        let prod = sf
            .iter()
            .fold(FreePoly::constant(&f, 2, Fe::ONE), |a, b| a.mul(b));
        ensure(prod == p, || format!("F_{q}: sparse product differs"))?;
        let a = [sparse("x", &f), sparse("1 + y*x", &f)];
        let b = [sparse("1 + x*y", &f), sparse("x", &f)];
        let matches = |want: &[FreePoly; 2]| sf.iter().zip(want).all(|(g, w)| g.associate(w));
        ensure(matches(&a) || matches(&b), || {
            format!(
                "F_{q}: factors {:?}",
                sf.iter().map(|p| p.to_string()).collect::<Vec<_>>()
            )
        })?;
    }
    Ok(())
}

fn c2_irreducible_fixtures() -> Check {
    for q in [2, 3, 5] {
        let f = field(q);
        let mut inputs: Vec<String> = vec!["1 + x*y".into(), "1 + y*x".into()];
        for v in ["x1", "x2", "x3"] {
            inputs.push(v.into());
        }
        let mut r = rng::rng(q);
        for _ in 0..10 {
            let c: Vec<u64> = (0..4).map(|_| r.gen_range(0..q)).collect();
            if c[1..].iter().all(|&x| x == 0) {
                continue;
            }
            inputs.push(format!(
                "{} + {}*x1 + {}*x2 + {}*x3",
                c[0], c[1], c[2], c[3]
            ));
        }
        for s in &inputs {
            let t = Instant::now();
            let fact = factor_polynomial(&parse(s, &f), 0, &opts()).map_err(|e| e.to_string())?;
            ensure(fact.r() == 1 && fact.verification.ok, || {
                format!("F_{q}: {s} gave r = {}", fact.r())
            })?;
            ensure(t.elapsed() < Duration::from_secs(1), || {
                format!("{s} took {:?}", t.elapsed())
            })?;
        }
    }
    Ok(())
}

fn c3_stable_associates() -> Check {
    let f = field(5);
    let yes = stable_associates(&parse("1 + x*y", &f), &parse("1 + y*x", &f), 0)
        .map_err(|e| e.to_string())?;
    ensure(yes.associated, || "1+xy vs 1+yx".into())?;
    let (p, q) = (yes.p.unwrap(), yes.q.unwrap());
    let wf = yes.witness_field.unwrap();
    ensure(p.is_invertible(&wf) && q.is_invertible(&wf), || {
        "witness not invertible".into()
    })?;
    let no = stable_associates(&parse("x1", &f), &parse("x2", &f), 0).map_err(|e| e.to_string())?;
    ensure(!no.associated, || "x1 vs x2".into())?;
    let mut r = rng::rng(3);
    let mut done = 0;
    while done < 20 {
        let q = [2, 3, 5][done % 3];
        let f = field(q);
        let a = random_formula(&f, 2, r.gen_range(1..=5), &mut r);
        let b = random_formula(&f, 2, r.gen_range(1..=5), &mut r);
        let c = Formula::constant(&f, 2, f.random_nonzero(&mut r));
        let one = Formula::constant(&f, 2, Fe::ONE);
        // 1 + ab and c·(1 + ba)·c′ are stable associates.
        let lhs = one.add(&a.mul(&b));
        let rhs =
            c.mul(&one.add(&b.mul(&a)))
                .mul(&Formula::constant(&f, 2, f.random_nonzero(&mut r)));
        if Abp::from_formula(&lhs).is_zero() || Abp::from_formula(&rhs).is_zero() {
            continue;
        }
        let out = stable_associates(&lhs, &rhs, done as u64).map_err(|e| e.to_string())?;
        ensure(out.associated, || format!("F_{q}: ({lhs}, {rhs})"))?;
        done += 1;
    }
    Ok(())
}

fn c4_roundtrip() -> Check {
    for (i, e) in corpus(200, 4).iter().enumerate() {
        let fact = factor_polynomial(e, i as u64, &opts())
            .map_err(|err| format!("{e} over {}: {err}", e.ctx.spec()))?;
        let exact = fact.product().sub(&Abp::from_formula(e)).is_zero();
        ensure(exact && fact.verification.ok, || {
            format!("{e} over {}: product differs", e.ctx.spec())
        })?;
    }
    Ok(())
}

fn all_words(n: usize, max_len: usize) -> Vec<Word> {
    let mut out: Vec<Word> = vec![vec![]];
    let mut frontier: Vec<Word> = vec![vec![]];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &frontier {
            for x in 0..n {
                let mut v = w.clone();
                v.push(x);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn oracle_agrees(p: &FreePoly, seed: u64) -> Check {
    let (fact, sf) = factor_sparse(p, seed, &opts()).map_err(|e| format!("{p}: {e}"))?;
    let want = brute_force_length(p).map_err(|e| e.to_string())?;
    ensure(fact.r() == want, || {
        format!("{p}: r = {} but oracle length {want}", fact.r())
    })?;
    ensure(fact.verification.ok, || format!("{p}: verification failed"))?;
    for g in sf.iter().filter(|g| g.degree().unwrap_or(0) > 0) {
        ensure(
            brute_force_irreducible(g).map_err(|e| e.to_string())?,
            || format!("{p}: factor {g} is reducible"),
        )?;
    }
    Ok(())
}

fn c5_oracle() -> Check {
    let f = field(2);
    let words = all_words(2, 3);
    let mut count = 0u64;
    let n = words.len();
    let mut subsets: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for i in 0..n {
        for j in i + 1..n {
            subsets.push(vec![i, j]);
            for k in j + 1..n {
                subsets.push(vec![i, j, k]);
            }
        }
    }
    for set in subsets {
        let p = FreePoly::from_terms(&f, 2, set.into_iter().map(|i| (words[i].clone(), Fe::ONE)));
        oracle_agrees(&p, count)?;
        count += 1;
    }
    let expect = n + n * (n - 1) / 2 + n * (n - 1) * (n - 2) / 6;
    ensure(count as usize == expect, || {
        format!("enumerated {count} of {expect}")
    })?;
    let mut r = rng::rng(5);
    let deg4: Vec<Word> = all_words(2, 4)
        .into_iter()
        .filter(|w| w.len() == 4)
        .collect();
    let low = all_words(2, 3);
    for t in 0..100 {
        let p = if t % 2 == 0 {
            let mut p =
                FreePoly::monomial(&f, 2, deg4[r.gen_range(0..deg4.len())].clone(), Fe::ONE);
            for _ in 0..r.gen_range(0..=3) {
                p.add_term(low[r.gen_range(0..low.len())].clone(), Fe::ONE);
            }
            p
        } else {
            // Products of two random lower-degree polynomials.
            let rand_poly = |deg: usize, r: &mut Rng| {
                let top: Vec<&Word> = low.iter().filter(|w| w.len() == deg).collect();
                let mut p =
                    FreePoly::monomial(&f, 2, top[r.gen_range(0..top.len())].clone(), Fe::ONE);
                for _ in 0..r.gen_range(0..=2) {
                    let w = &low[r.gen_range(0..low.len())];
                    if w.len() < deg {
                        p.add_term(w.clone(), Fe::ONE);
                    }
                }
                p
            };
            let d1 = r.gen_range(1..=3);
            rand_poly(d1, &mut r).mul(&rand_poly(4 - d1, &mut r))
        };
        if p.degree() != Some(4) {
            continue;
        }
        oracle_agrees(&p, 1000 + t)?;
    }
    Ok(())
}

fn c6_higman() -> Check {
    for (i, e) in corpus(200, 4).iter().enumerate() {
        let c = linearize(e).map_err(|err| err.to_string())?;
        let s = i as u64;
        ensure(
            c.unlinearize_check(e, 10, 2, s)
                .map_err(|x| x.to_string())?,
            || format!("{e}: f⊕I ≠ PLQ"),
        )?;
        ensure(
            c.check_inverses(10, 2, s).map_err(|x| x.to_string())?,
            || format!("{e}: inverses"),
        )?;
        ensure(c.l.is_full_randomized(8, s), || format!("{e}: L not full"))?;
    }
    Ok(())
}

fn c7_monicization() -> Check {
    for (i, e) in corpus(200, 4).iter().enumerate() {
        let c = linearize(e).map_err(|err| err.to_string())?;
        if c.l.is_constant() {
            continue;
        }
        for side in [Side::Left, Side::Right] {
            let m = monicize(&c.l, side).map_err(|err| format!("{e}: {err}"))?;
            ensure(
                m.check(&c.l, 10, 2, i as u64).map_err(|x| x.to_string())?,
                || format!("{e}: identity ({side:?})"),
            )?;
            ensure(m.lp.is_monic(side), || {
                format!("{e}: L′ not monic ({side:?})")
            })?;
            ensure(m.r < c.l.dim(), || format!("{e}: r = {} ≥ d", m.r))?;
        }
    }
    Ok(())
}

fn subspaces(d: usize, f: &FieldCtx) -> Vec<Subspace> {
    let vecs: Vec<Vec<Fe>> = (1..1usize << d)
        .map(|i| {
            (0..d)
                .map(|b| if i >> b & 1 == 1 { Fe::ONE } else { Fe::ZERO })
                .collect()
        })
        .collect();
    let mut seen = HashSet::new();
    let mut frontier = vec![Subspace::zero(d)];
    let mut out = Vec::new();
    while let Some(s) = frontier.pop() {
        for v in &vecs {
            if s.contains(v, f) {
                continue;
            }
            let mut g = s.vectors();
            g.push(v.clone());
            let t = Subspace::from_vectors(d, g, f);
            if seen.insert(t.clone()) {
                frontier.push(t.clone());
                out.push(t);
            }
        }
    }
    out
}

fn has_proper(mats: &[Matrix], d: usize, subs: &[Subspace], f: &FieldCtx) -> bool {
    subs.iter()
        .any(|s| s.dim() > 0 && s.dim() < d && mats.iter().all(|m| s.is_invariant(m, f)))
}

fn c8_invariant_subspaces() -> Check {
    let f = field(2);
    let all: Vec<Vec<Subspace>> = (0..=4).map(|d| subspaces(d, &f)).collect();
    let mut r = rng::rng(8);
    for t in 0..100u64 {
        let d = 1 + (t as usize % 4);
        let k = r.gen_range(1..=3);
        let mats: Vec<Matrix> = (0..k).map(|_| Matrix::random(d, d, &f, &mut r)).collect();
        let exists = has_proper(&mats, d, &all[d], &f);
        let found = common_invariant_subspace(&mats, d, t, &f);
        ensure(found.is_some() == exists, || {
            format!("set {t}: found {} but exists {exists}", found.is_some())
        })?;
        if let Some(v) = &found {
            ensure(mats.iter().all(|m| v.is_invariant(m, &f)), || {
                format!("set {t}: not invariant")
            })?;
        }
        let fl = atomic_flag(&mats, d, t, &f);
        let mut start = 0;
        for &b in &fl.blocks {
            let blocks: Vec<Matrix> = mats
                .iter()
                .map(|m| fl.t_inv.mul(m, &f).mul(&fl.t, &f))
                .collect();
            ensure(blocks.iter().all(|c| is_block_lower(c, &fl.blocks)), || {
                format!("set {t}: flag not block lower")
            })?;
            let diag: Vec<Matrix> = blocks.iter().map(|c| c.block(start, start, b, b)).collect();
            ensure(!has_proper(&diag, b, &all[b], &f), || {
                format!("set {t}: diagonal block reducible")
            })?;
            ensure(
                !matches!(invsub::search(&diag, b, 40, t, &f), Search::Found(_)),
                || format!("set {t}: re-test found a subspace"),
            )?;
            start += b;
        }
    }
    Ok(())
}

fn random_form(f: &FieldCtx, n: usize, r: &mut Rng) -> Vec<Fe> {
    loop {
        let c: Vec<Fe> = (0..=n).map(|_| f.random(r)).collect();
        if c[1..].iter().any(|x| !x.is_zero()) {
            return c;
        }
    }
}

fn c9_trivialize() -> Check {
    let mut r = rng::rng(9);
    for t in 0..100u64 {
        let f = field([2, 3, 5][t as usize % 3]);
        let n = 2;
        let d = r.gen_range(2..=3);
        // C = [ℓ | −I] and v = (h, ℓ₁h, …) before a random scalar change of basis.
        let h = Abp::from_formula(&random_formula(&f, n, r.gen_range(1..=7), &mut r));
        if h.is_zero() {
            continue;
        }
        let mut c = LinearMatrix::zeros(&f, d - 1, d, n);
        let mut col = vec![vec![h.clone()]];
        for i in 0..d - 1 {
            let form = random_form(&f, n, &mut r);
            c.set_entry(i, 0, &form);
            let mut minus = vec![Fe::ZERO; n + 1];
            minus[0] = f.neg(Fe::ONE);
            c.set_entry(i, i + 1, &minus);
            col.push(vec![Abp::form(&f, n, &form).product(&h)]);
        }
        let v = Chain::from_entries(&f, n, &col).map_err(|e| e.to_string())?;
        let mut tm = Matrix::random(d, d, &f, &mut r);
        while !tm.is_invertible(&f) {
            tm = Matrix::random(d, d, &f, &mut r);
        }
        let c = c.right_mul(&tm);
        let v = v.left_scalar(&tm.inverse(&f).unwrap());
        let cert = trivialize(&c, &v).map_err(|e| format!("instance {t}: {e}"))?;
        ensure(
            cert.check(&c, &v, 10, t).map_err(|e| e.to_string())?,
            || format!("instance {t}: certificate check"),
        )?;
    }
    Ok(())
}

fn random_monic_block(f: &FieldCtx, n: usize, size: usize, r: &mut Rng) -> LinearMatrix {
    loop {
        let coeffs: Vec<Matrix> = (0..=n).map(|_| Matrix::random(size, size, f, r)).collect();
        let l = LinearMatrix::new(f, coeffs).unwrap();
        if l.is_right_monic() && l.is_left_monic() && l.is_full_randomized(8, 0) {
            return l;
        }
    }
}

fn c10_descent() -> Check {
    let f2 = field(2);
    let diag = LinearMatrix::var(&f2, 2, 0).direct_sum(&LinearMatrix::var(&f2, 2, 1));
    let mut cases = vec![diag];
    let mut r = rng::rng(10);
    while cases.len() < 50 {
        let f = field([2, 3][cases.len() % 2]);
        let n = 2;
        let (s1, s2) = (r.gen_range(1..=2), r.gen_range(1..=2));
        let a = random_monic_block(&f, n, s1, &mut r);
        let b = random_monic_block(&f, n, s2, &mut r);
        let mut low = LinearMatrix::zeros(&f, s2, s1, n);
        for i in 0..s2 {
            for j in 0..s1 {
                low.set_entry(i, j, &random_form(&f, n, &mut r));
            }
        }
        let top = a.hstack(&LinearMatrix::zeros(&f, s1, s2, n));
        let l = top.vstack(&low.hstack(&b));
        let mut s = Matrix::random(s1 + s2, s1 + s2, &f, &mut r);
        while !s.is_invertible(&f) {
            s = Matrix::random(s1 + s2, s1 + s2, &f, &mut r);
        }
        cases.push(l.left_mul(&s).right_mul(&s.inverse(&f).unwrap()));
    }
    for (t, l) in cases.iter().enumerate() {
        let f = &l.ctx;
        let d = l.dim();
        let dil = l
            .find_invertible_dilation(8, t as u64)
            .map_err(|e| format!("case {t}: {e}"))?;
        let ell = dil.l;
        let (lp, _) = l.dilate(&dil.point).map_err(|e| e.to_string())?;
        let w_inv = dil.constant.inverse(f).unwrap();
        let dd = d * ell;
        let mats: Vec<Matrix> = lp.coeffs()[1..].iter().map(|a| w_inv.mul(a, f)).collect();
        let v = (0..4)
            .find_map(
                |k| match invsub::search(&mats, dd, 20 * dd, 100 * t as u64 + k, f) {
                    Search::Found(v) => Some(v),
                    _ => None,
                },
            )
            .ok_or_else(|| format!("case {t}: dilation has no invariant subspace"))?;
        let k = v.dim();
        let mut cols: Vec<Vec<Fe>> = v
            .complement_indices(f)
            .into_iter()
            .map(|i| Matrix::unit(dd, 1, i, 0).col(0))
            .collect();
        cols.extend(v.vectors());
        let tm = Matrix::from_rows(cols).transpose();
        let g = tm.inverse(f).unwrap().mul(&w_inv, f);
        let out = hkv_descent(l, ell, &g, &tm, dd - k, k).map_err(|e| format!("case {t}: {e}"))?;
        ensure(out.e1 > 0 && out.e2 > 0 && out.e1 + out.e2 == d, || {
            format!("case {t}: sizes")
        })?;
        ensure(
            out.p_ranks.0 >= out.p_ranks.1 && out.q_ranks.0 >= out.q_ranks.1,
            || format!("case {t}: rank inequality"),
        )?;
        let conj = l.left_mul(&out.u).right_mul(&out.v);
        ensure(
            conj.coeffs()
                .iter()
                .all(|m| m.block(0, out.e1, out.e1, out.e2).is_zero()),
            || format!("case {t}: block"),
        )?;
    }
    Ok(())
}

#[test]
fn acceptance_suite() {
    type Criterion = (&'static str, u64, fn() -> Check);
    let criteria: Vec<Criterion> = vec![
        ("running example reproduction", 5, c1_running_example),
        ("irreducibility fixtures", 30, c2_irreducible_fixtures),
        ("stable associates", 5, c3_stable_associates),
        ("roundtrip suite", 120, c4_roundtrip),
        ("oracle cross-check", 120, c5_oracle),
        ("linearization audit", 30, c6_higman),
        ("monicization audit", 30, c7_monicization),
        ("invariant-subspace oracle", 60, c8_invariant_subspaces),
        ("trivialization audit", 30, c9_trivialize),
        ("block descent", 30, c10_descent),
    ];
    let mut failed = Vec::new();
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let took = start.elapsed();
        let outcome = outcome.and_then(|_| {
            ensure(took <= Duration::from_secs(limit), || {
                format!("over the {limit} s limit")
            })
        });
        match &outcome {
            Ok(()) => println!(
                "criterion {:>2} PASS  {name} ({:.2} s, limit {limit} s)",
                i + 1,
                took.as_secs_f64()
            ),
            Err(msg) => {
                println!(
                    "criterion {:>2} FAIL  {name} ({:.2} s, limit {limit} s): {msg}",
                    i + 1,
                    took.as_secs_f64()
                );
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
