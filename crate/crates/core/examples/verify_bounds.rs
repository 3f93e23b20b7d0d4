//! The exact numeric checks behind the coin and FairChoice guarantees.

use abft_lab::analysis::{
    central_binomial_bound, fairchoice_bound, fairchoice_enumeration, verify_coin_bound, verify_coin_bound_at,
};
use num_bigint::BigInt;
use num_rational::BigRational;

fn main() {
    for n in [4, 5, 7] {
        for (a, b) in [(1, 10), (1, 4), (2, 5)] {
            let eps = BigRational::new(BigInt::from(a), BigInt::from(b));
            let c = verify_coin_bound(n, &eps, 128).unwrap();
            println!("coin n={n} eps={a}/{b} k={} tail={:.6} target={:.3} holds={}", c.k, c.tail, c.target, c.holds);
        }
    }
    let quarter = BigRational::new(BigInt::from(1), BigInt::from(4));
    for div in [2, 4, 8] {
        let c = verify_coin_bound_at(4, &quarter, 12268 / div);
        println!("coin n=4 eps=1/4 at k/{div}: slack {:+.4}", c.slack);
    }
    let cb = central_binomial_bound(2000, 128).unwrap();
    println!("central binomial: {} checked, {} violations", cb.checked, cb.violations.len());
    for m in [3, 4, 16, 64] {
        let f = fairchoice_bound(m, 128).unwrap();
        println!("fairchoice m={m}: closed form {:.6}, chain {:.6}", f.value, f.chain_value);
    }
    for m in 3..=5 {
        let e = fairchoice_enumeration(m).unwrap();
        println!("enumeration m={m}: {} majority sets, {} failures", e.sets, e.failures.len());
    }
}
