//! Random formulas over prime and extension fields through both routes.

use ncfactor::abp::Abp;
use ncfactor::error::Side;
use ncfactor::expr::random_formula;
use ncfactor::pipeline::{factor_polynomial, FactorOptions};
use ncfactor::{rng, FieldCtx};
use rand::Rng as _;

#[test]
fn every_field_and_route_round_trips() {
    let mut r = rng::rng(12345);
    let mut fails = 0;
    for spec in ["2", "3", "5", "101", "2^2", "3^2", "2^3", "7"] {
        let f = FieldCtx::from_spec(spec).unwrap();
        for i in 0..120u64 {
            let n = r.gen_range(1..=3);
            let mut e = random_formula(&f, n, r.gen_range(3..=25), &mut r);
            if i % 3 == 0 {
                let a = random_formula(&f, n, r.gen_range(3..=7), &mut r);
                let b = random_formula(&f, n, r.gen_range(3..=7), &mut r);
                e = a.mul(&b).sub(&b.mul(&a)).mul(&e);
            }
            if Abp::from_formula(&e).is_zero() {
                continue;
            }
            for route in [Side::Left, Side::Right] {
                let t = std::time::Instant::now();
                match factor_polynomial(
                    &e,
                    i,
                    &FactorOptions {
                        route,
                        ..Default::default()
                    },
                ) {
                    Ok(fa) if fa.verification.ok => {
                        if t.elapsed().as_secs_f64() > 5.0 {
                            fails += 1;
                            println!("slow: {spec} {e} {:?}", t.elapsed());
                        }
                    }
                    Ok(_) => {
                        fails += 1;
                        println!("verification failed: {spec} {route:?} {e}");
                    }
                    Err(err) => {
                        fails += 1;
                        println!("error: {spec} {route:?} {e}: {err}");
                    }
                }
            }
        }
    }
    assert_eq!(fails, 0);
}
