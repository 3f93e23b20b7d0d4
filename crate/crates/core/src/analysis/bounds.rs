use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::binomial::{lower_tail_count, upper_tail_count};
use super::interval::{ratio_to_f64, Interval};
use super::{check_epsilon, ser_ratio, working_bits};
use crate::error::ParamError;
use crate::fair::{fair_choice_params, FairChoiceParams};

fn ratio(a: i64, b: i64) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

fn to_f64(r: &BigRational) -> f64 {
    ratio_to_f64(r.numer(), r.denom())
}

/// `count / 2^k` in lowest terms without a general gcd.
fn dyadic(count: BigUint, k: u64) -> BigRational {
    if count.is_zero() {
        return BigRational::zero();
    }
    let tz = count.trailing_zeros().unwrap_or(0).min(k);
    BigRational::new_raw(BigInt::from(count >> tz), BigInt::one() << (k - tz))
}

/// `4 * ceil((e / (ε π))^2 * n^4)`. The ceiling is decided on an enclosing
/// interval; precision doubles until the interval pins it down.
pub fn coin_k(epsilon: &BigRational, n: u64, precision_bits: u32) -> Result<u64, ParamError> {
    check_epsilon(epsilon)?;
    let mut bits = working_bits(precision_bits);
    loop {
        let e = Interval::e(bits);
        let denom = Interval::from_ratio(epsilon, bits).mul(&Interval::pi(bits));
        let q = e.div(&denom)?;
        let x = q.mul(&q).mul_int(&BigInt::from(n).pow(4));
        if let Some(c) = x.ceil_exact() {
            let k: BigInt = c * 4u32;
            return k.to_u64().ok_or_else(|| ParamError::Inconclusive { what: "k exceeds 64 bits".into(), bits });
        }
        if bits > 8192 {
            return Err(ParamError::Inconclusive { what: format!("ceiling of k for n={n}, ε={epsilon}"), bits });
        }
        bits *= 2;
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailQuery {
    pub n: u64,
    #[serde(serialize_with = "ser_ratio")]
    pub epsilon: BigRational,
    pub k: u64,
}

impl TailQuery {
    pub fn new(n: u64, epsilon: BigRational, k: u64) -> Self {
        TailQuery { n, epsilon, k }
    }

    pub fn mu(&self) -> BigRational {
        ratio(self.k as i64, 2)
    }

    /// `k/2 + n^2`.
    pub fn threshold(&self) -> BigRational {
        self.mu() + BigRational::from_integer(BigInt::from(self.n * self.n))
    }
}

/// `Pr[X > k/2 + n^2]` for `X ~ Bin(k, 1/2)`, exactly.
pub fn binomial_tail_exact(q: &TailQuery) -> BigRational {
    let t = q.threshold().floor().to_integer().to_i64().unwrap_or(i64::MAX);
    dyadic(upper_tail_count(q.k, t), q.k)
}

/// `Pr[X < k/2 - n^2]`, the mirror image of [`binomial_tail_exact`].
pub fn binomial_lower_tail_exact(q: &TailQuery) -> BigRational {
    let below = q.mu() - BigRational::from_integer(BigInt::from(q.n * q.n));
    let t = below.ceil().to_integer().to_i64().unwrap_or(i64::MIN);
    dyadic(lower_tail_count(q.k, t), q.k)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoinBound {
    pub n: u64,
    #[serde(serialize_with = "ser_ratio")]
    pub epsilon: BigRational,
    pub k: u64,
    /// Exact tail as a float, for display.
    pub tail: f64,
    pub target: f64,
    pub slack: f64,
    /// `tail >= 1/2 - ε`, decided exactly.
    pub holds: bool,
    /// `tail - (1/2 - ε) > 2^-40`, decided exactly.
    pub clears_margin: bool,
}

pub const SLACK_FLOOR_BITS: u32 = 40;

pub fn verify_coin_bound(n: u64, epsilon: &BigRational, precision_bits: u32) -> Result<CoinBound, ParamError> {
    let k = coin_k(epsilon, n, precision_bits)?;
    Ok(verify_coin_bound_at(n, epsilon, k))
}

/// The same check with an explicit `k`, used for negative controls.
pub fn verify_coin_bound_at(n: u64, epsilon: &BigRational, k: u64) -> CoinBound {
    let q = TailQuery::new(n, epsilon.clone(), k);
    let tail = binomial_tail_exact(&q);
    let target = ratio(1, 2) - epsilon;
    let slack = &tail - &target;
    let floor = BigRational::new(BigInt::one(), BigInt::one() << SLACK_FLOOR_BITS);
    CoinBound {
        n,
        epsilon: epsilon.clone(),
        k,
        tail: to_f64(&tail),
        target: to_f64(&target),
        slack: to_f64(&slack),
        holds: !slack.is_negative(),
        clears_margin: slack > floor,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CentralBinomialCheck {
    pub checked: u64,
    pub violations: Vec<u64>,
    /// Smallest `rhs^2 / lhs^2` seen.
    pub min_ratio: f64,
}

/// `C(2μ, μ) <= (e / 2π) * 2^(2μ + 1/2) / sqrt(μ)` for `μ` in `1..=max_mu`,
/// in the squared form `C^2 μ (2π)^2 <= e^2 2^(4μ+1)`.
pub fn central_binomial_bound(max_mu: u64, precision_bits: u32) -> Result<CentralBinomialCheck, ParamError> {
    let bits = working_bits(precision_bits);
    let two_pi_sq = {
        let tp = Interval::pi(bits).mul_int(&BigInt::from(2));
        tp.mul(&tp)
    };
    let e_sq = {
        let e = Interval::e(bits);
        e.mul(&e)
    };
    let mut c = BigInt::one();
    let mut out = CentralBinomialCheck { checked: 0, violations: Vec::new(), min_ratio: f64::INFINITY };
    for mu in 1..=max_mu {
        c = c * BigInt::from(2 * mu) * BigInt::from(2 * mu - 1) / BigInt::from(mu * mu);
        let scaled = BigRational::new(&c * &c * BigInt::from(mu), BigInt::one() << (4 * mu + 1));
        let lhs = Interval::from_ratio(&scaled, bits).mul(&two_pi_sq);
        match lhs.cmp_strict(&e_sq) {
            Some(Ordering::Less) => {}
            Some(_) => out.violations.push(mu),
            None => {
                return Err(ParamError::Inconclusive { what: format!("central binomial bound at μ={mu}"), bits })
            }
        }
        out.min_ratio = out.min_ratio.min(e_sq.mid_f64() / lhs.mid_f64());
        out.checked += 1;
    }
    Ok(out)
}

/// `(1/2 + 1/(4m) - 1/(4m^2)) * ((99/100) e^(-1/50))^(4/m)` as an interval.
pub fn fairchoice_closed_form(m: u64, precision_bits: u32) -> Result<Interval, ParamError> {
    if m < 3 {
        return Err(ParamError::ChoiceSize(m as usize));
    }
    let bits = working_bits(precision_bits);
    let m = m as i64;
    let front = Interval::from_ratio(&(ratio(1, 2) + ratio(1, 4 * m) - ratio(1, 4 * m * m)), bits);
    let ln_base = Interval::from_ratio(&ratio(99, 100), bits).ln()?.sub(&Interval::from_ratio(&ratio(1, 50), bits));
    let power = ln_base.mul(&Interval::from_ratio(&ratio(4, m), bits)).exp();
    Ok(front.mul(&power))
}

/// `(N - m)(1/2 + 1/(2m)) * (1/2 - ε)^l`, exactly.
pub fn fairchoice_chain(p: &FairChoiceParams) -> BigRational {
    let m = p.m as i64;
    let s = BigRational::from_integer(BigInt::from(p.big_n - p.m)) * (ratio(1, 2) + ratio(1, 2 * m));
    s * per_string_floor(p)
}

/// `(1/2 - ε)^l`.
fn per_string_floor(p: &FairChoiceParams) -> BigRational {
    let q = ratio(1, 2) - &p.epsilon;
    num_traits::pow(q, p.l as usize)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FairChoiceBound {
    pub m: u64,
    /// Lower end of the closed-form enclosure.
    #[serde(serialize_with = "ser_ratio")]
    pub lower_bound: BigRational,
    pub value: f64,
    pub exceeds_half: bool,
    #[serde(serialize_with = "ser_ratio")]
    pub chain: BigRational,
    pub chain_value: f64,
    /// The chain value dominates the closed form, as the derivation requires.
    pub chain_ge_closed_form: bool,
}

pub fn fairchoice_bound(m: u64, precision_bits: u32) -> Result<FairChoiceBound, ParamError> {
    let params = fair_choice_params(m)?;
    let closed = fairchoice_closed_form(m, precision_bits)?;
    let half = Interval::from_ratio(&ratio(1, 2), closed.precision());
    let exceeds_half = match closed.cmp_strict(&half) {
        Some(o) => o == Ordering::Greater,
        None => {
            return Err(ParamError::Inconclusive {
                what: format!("closed form vs 1/2 at m={m}"),
                bits: closed.precision(),
            })
        }
    };
    let chain = fairchoice_chain(&params);
    let chain_iv = Interval::from_ratio(&chain, closed.precision());
    let chain_ge_closed_form = match chain_iv.cmp_strict(&closed) {
        Some(o) => o == Ordering::Greater,
        None => {
            return Err(ParamError::Inconclusive { what: format!("chain vs closed form at m={m}"), bits: closed.precision() })
        }
    };
    Ok(FairChoiceBound {
        m,
        lower_bound: closed.lo(),
        value: closed.mid_f64(),
        exceeds_half,
        chain_value: to_f64(&chain),
        chain,
        chain_ge_closed_form,
    })
}

/// Closed-form values over `ms` and whether each step strictly decreases.
pub fn fairchoice_decreasing(ms: std::ops::RangeInclusive<u64>, precision_bits: u32) -> Result<Vec<(u64, f64, bool)>, ParamError> {
    let mut out = Vec::new();
    let mut prev: Option<Interval> = None;
    for m in ms {
        let v = fairchoice_closed_form(m, precision_bits)?;
        if let Some(p) = &prev {
            let dec = match v.cmp_strict(p) {
                Some(o) => o == Ordering::Less,
                None => return Err(ParamError::Inconclusive { what: format!("difference at m={m}"), bits: v.precision() }),
            };
            out.push((m, v.mid_f64() - p.mid_f64(), dec));
        }
        prev = Some(v);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnumerationCheck {
    pub m: u64,
    pub sets: u64,
    /// Majority sets (as bitmasks over `[0, m)`) whose bound is not above 1/2.
    pub failures: Vec<u64>,
    #[serde(serialize_with = "ser_ratio")]
    pub min_bound: BigRational,
}

/// For every `G ⊂ [0, m)` with `|G| > m/2`: `|{j < N : j mod m ∈ G}| * (1/2 - ε)^l > 1/2`.
pub fn fairchoice_enumeration(m: u64) -> Result<EnumerationCheck, ParamError> {
    let p = fair_choice_params(m)?;
    if m > 20 {
        return Err(ParamError::ChoiceSize(m as usize));
    }
    let floor = per_string_floor(&p);
    let half = ratio(1, 2);
    let mut out = EnumerationCheck { m, sets: 0, failures: Vec::new(), min_bound: BigRational::one() };
    for g in 0u64..(1 << m) {
        if 2 * g.count_ones() as u64 <= m {
            continue;
        }
        let size = (0..p.big_n).filter(|j| g >> (j % m) & 1 == 1).count();
        let bound = BigRational::from_integer(BigInt::from(size)) * &floor;
        if bound <= half {
            out.failures.push(g);
        }
        if bound < out.min_bound {
            out.min_bound = bound;
        }
        out.sets += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BITS: u32 = 128;

    fn eps(a: i64, b: i64) -> BigRational {
        ratio(a, b)
    }

    #[test]
    fn k_values() {
        assert_eq!(coin_k(&eps(1, 4), 4, BITS).unwrap(), 12268);
        assert_eq!(coin_k(&eps(1, 10), 4, BITS).unwrap(), 76664);
        assert_eq!(coin_k(&eps(2, 5), 4, BITS).unwrap(), 4792);
        assert_eq!(coin_k(&eps(1, 10), 5, BITS).unwrap(), 187168);
        assert_eq!(coin_k(&eps(1, 4), 5, BITS).unwrap(), 29948);
        assert_eq!(coin_k(&eps(2, 5), 5, BITS).unwrap(), 11700);
        assert_eq!(coin_k(&eps(1, 10), 7, BITS).unwrap(), 719024);
        assert_eq!(coin_k(&eps(1, 4), 7, BITS).unwrap(), 115044);
        assert_eq!(coin_k(&eps(2, 5), 7, BITS).unwrap(), 44940);
    }

    #[test]
    fn k_rejects_bad_epsilon() {
        assert!(matches!(coin_k(&eps(1, 2), 4, BITS), Err(ParamError::Epsilon(_))));
        assert!(matches!(coin_k(&eps(0, 1), 4, BITS), Err(ParamError::Epsilon(_))));
    }

    #[test]
    fn k_decreases_in_epsilon() {
        let ks: Vec<u64> = [1, 10, 20, 30, 40, 49].iter().map(|e| coin_k(&eps(*e, 100), 4, BITS).unwrap()).collect();
        assert!(ks.windows(2).all(|w| w[0] >= w[1]), "{ks:?}");
        assert!(ks.iter().all(|k| k % 4 == 0));
    }

    #[test]
    fn empty_tail() {
        let q = TailQuery::new(2, eps(1, 4), 4);
        assert!(binomial_tail_exact(&q).is_zero());
    }

    #[test]
    fn tail_at_small_n() {
        let b = verify_coin_bound(4, &eps(1, 4), BITS).unwrap();
        assert_eq!(b.k, 12268);
        assert!(b.holds && b.clears_margin);
        assert!((b.tail - 0.3828756428883709).abs() < 1e-12, "{}", b.tail);
        assert!((b.slack - 0.1328756428883709).abs() < 1e-12);
    }

    #[test]
    fn negative_control() {
        let k = coin_k(&eps(1, 4), 4, BITS).unwrap();
        let halved = verify_coin_bound_at(4, &eps(1, 4), k / 2);
        assert!(halved.holds, "halving alone leaves slack {}", halved.slack);
        let eighth = verify_coin_bound_at(4, &eps(1, 4), k / 8);
        assert_eq!(eighth.k, 1533);
        assert!(!eighth.holds);
        assert!((eighth.slack + 0.0431).abs() < 1e-3, "{}", eighth.slack);
    }

    #[test]
    fn tail_mirror() {
        for k in [100u64, 1001, 12268] {
            let q = TailQuery::new(4, eps(1, 4), k);
            assert_eq!(binomial_tail_exact(&q), binomial_lower_tail_exact(&q));
        }
    }

    #[test]
    fn central_binomial_small() {
        let c = central_binomial_bound(300, BITS).unwrap();
        assert_eq!(c.checked, 300);
        assert!(c.violations.is_empty());
    }

    #[test]
    fn closed_form_values() {
        let b = fairchoice_bound(3, BITS).unwrap();
        assert!((b.value - 0.5337360880227048).abs() < 1e-14, "{}", b.value);
        assert!(b.exceeds_half);
        assert!((b.chain_value - 0.5915668836066021).abs() < 1e-12, "{}", b.chain_value);
        assert!(b.chain_ge_closed_form);
        let b64 = fairchoice_bound(64, BITS).unwrap();
        assert!((b64.value - 0.502899808057373).abs() < 1e-14);
    }

    #[test]
    fn chain_at_four_is_exact() {
        let p = fair_choice_params(4).unwrap();
        let c = fairchoice_chain(&p);
        assert!((to_f64(&c) - 0.5400731568450394).abs() < 1e-15);
    }

    #[test]
    fn enumeration_small_m() {
        for m in 3..=5 {
            let e = fairchoice_enumeration(m).unwrap();
            assert!(e.failures.is_empty(), "m={m}");
            assert!(e.min_bound > ratio(1, 2));
        }
        assert_eq!(fairchoice_enumeration(3).unwrap().sets, 4);
        assert_eq!(fairchoice_enumeration(4).unwrap().sets, 5);
        assert_eq!(fairchoice_enumeration(5).unwrap().sets, 16);
    }
}
