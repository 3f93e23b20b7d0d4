//! Exact binomial coefficients and Bin(k, 1/2) tail counts.

use num_bigint::BigUint;
use num_traits::{One, Zero};

fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let mut sieve = vec![true; n as usize + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2usize;
    while i * i <= n as usize {
        if sieve[i] {
            for j in (i * i..=n as usize).step_by(i) {
                sieve[j] = false;
            }
        }
        i += 1;
    }
    sieve.iter().enumerate().filter(|(_, p)| **p).map(|(i, _)| i as u64).collect()
}

fn legendre(n: u64, p: u64) -> u64 {
    let mut e = 0;
    let mut q = n;
    while q > 0 {
        q /= p;
        e += q;
    }
    e
}

fn product(mut xs: Vec<BigUint>) -> BigUint {
    if xs.is_empty() {
        return BigUint::one();
    }
    while xs.len() > 1 {
        let mut next = Vec::with_capacity(xs.len().div_ceil(2));
        let mut it = xs.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => a * b,
                None => a,
            });
        }
        xs = next;
    }
    xs.pop().unwrap()
}

/// `C(n, j)` from its prime factorisation, multiplied with a product tree.
pub fn binomial(n: u64, j: u64) -> BigUint {
    if j > n {
        return BigUint::zero();
    }
    let j = j.min(n - j);
    let factors = primes_up_to(n)
        .into_iter()
        .filter_map(|p| {
            let e = legendre(n, p) - legendre(j, p) - legendre(n - j, p);
            (e > 0).then(|| BigUint::from(p).pow(e as u32))
        })
        .collect();
    product(factors)
}

/// `sum_{x=a}^{b} C(k, x)`, walking the row with the ratio recurrence.
pub fn row_sum(k: u64, a: u64, b: u64) -> BigUint {
    if a > b || a > k {
        return BigUint::zero();
    }
    let b = b.min(k);
    let mut c = binomial(k, a);
    let mut sum = c.clone();
    for x in a..b {
        c = c * (k - x) / (x + 1);
        sum += &c;
    }
    sum
}

/// Number of outcomes of `k` fair flips with strictly more than `t` ones,
/// i.e. `2^k * Pr[X > t]`. Sums whichever side of the row is shorter.
pub fn upper_tail_count(k: u64, t: i64) -> BigUint {
    if t < 0 {
        return BigUint::one() << k;
    }
    let t = t as u64;
    if t >= k {
        return BigUint::zero();
    }
    let direct = k - t;
    if 2 * t >= k && 2 * t - k + 1 < direct {
        // Tail = (2^k - central window) / 2 by symmetry.
        let window = row_sum(k, k - t, t);
        ((BigUint::one() << k) - window) >> 1u32
    } else if direct <= t + 1 {
        row_sum(k, t + 1, k)
    } else {
        (BigUint::one() << k) - row_sum(k, 0, t)
    }
}

/// `2^k * Pr[X < t]`.
pub fn lower_tail_count(k: u64, t: i64) -> BigUint {
    if t <= 0 {
        return BigUint::zero();
    }
    // X < t  <=>  k - X > k - t.
    upper_tail_count(k, k as i64 - t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(n: u64, j: u64) -> BigUint {
        (0..j).fold(BigUint::one(), |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn coefficients_match_naive_product() {
        for n in 0..60 {
            for j in 0..=n {
                assert_eq!(binomial(n, j), naive(n, j), "C({n},{j})");
            }
        }
        assert_eq!(binomial(1000, 500), naive(1000, 500));
    }

    #[test]
    fn tail_routes_agree() {
        for k in 1..40u64 {
            for t in -1..=k as i64 + 1 {
                let want: BigUint = (0..=k).filter(|x| *x as i64 > t).map(|x| binomial(k, x)).sum();
                assert_eq!(upper_tail_count(k, t), want, "k={k} t={t}");
            }
        }
    }

    #[test]
    fn symmetry() {
        for k in [7u64, 40, 101] {
            for d in 0..10i64 {
                let mu2 = k as i64;
                // Pr[X > k/2 + d] = Pr[X < k/2 - d], using doubled thresholds.
                let up = upper_tail_count(k, (mu2 + 2 * d).div_euclid(2));
                let low = lower_tail_count(k, (mu2 - 2 * d + 1).div_euclid(2));
                assert_eq!(up, low, "k={k} d={d}");
            }
        }
    }
}
