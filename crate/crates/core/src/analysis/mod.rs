//! Exact and interval-checked evaluation of the coin and FairChoice bounds,
//! plus a small bias estimator for the statistical suites.

pub mod binomial;
mod bounds;
mod interval;
mod stats;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::ParamError;

pub use bounds::{
    binomial_lower_tail_exact, binomial_tail_exact, central_binomial_bound, coin_k, fairchoice_bound,
    fairchoice_chain, fairchoice_closed_form, fairchoice_decreasing, fairchoice_enumeration, verify_coin_bound,
    verify_coin_bound_at, CentralBinomialCheck, CoinBound, EnumerationCheck, FairChoiceBound, TailQuery,
    SLACK_FLOOR_BITS,
};
pub use interval::{ratio_to_f64, Interval};
pub use stats::{estimate_bias, BiasEstimate};

pub const DEFAULT_PRECISION_BITS: u32 = 128;
const GUARD_BITS: u32 = 64;

/// `ABFT_PRECISION_BITS`, or 128. Values below 64 are raised to 64.
pub fn precision_bits() -> u32 {
    std::env::var("ABFT_PRECISION_BITS")
        .ok()
        .and_then(|v| v.trim().parse::<u32>().ok())
        .unwrap_or(DEFAULT_PRECISION_BITS)
        .max(64)
}

pub(crate) fn working_bits(precision_bits: u32) -> u32 {
    precision_bits + GUARD_BITS
}

pub(crate) fn check_epsilon(e: &BigRational) -> Result<(), ParamError> {
    let half = BigRational::new(1.into(), 2.into());
    if !e.is_positive() || e.is_zero() || *e >= half {
        return Err(ParamError::Epsilon(e.to_string()));
    }
    Ok(())
}

/// Accepts `"a/b"`, an integer, or a decimal such as `"0.25"`.
pub fn parse_ratio(s: &str) -> Result<BigRational, ParamError> {
    let bad = || ParamError::Rational(s.to_string());
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a = a.trim().parse().map_err(|_| bad())?;
        let b: num_bigint::BigInt = b.trim().parse().map_err(|_| bad())?;
        if b.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(a, b));
    }
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.chars().any(|c| !c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: num_bigint::BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    Ok(BigRational::new(digits, num_bigint::BigInt::from(10u8).pow(frac.len() as u32)))
}

/// Parses a ratio and converts it for display-level arithmetic.
pub fn ratio_to_f64_str(s: &str) -> Result<f64, ParamError> {
    let r = parse_ratio(s)?;
    Ok(ratio_to_f64(r.numer(), r.denom()))
}

pub fn ser_ratio<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    r.to_string().serialize(s)
}

/// One line of the bounds report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub query: String,
    pub value: f64,
    pub bound: f64,
    pub holds: bool,
    pub slack: f64,
    pub precision_bits: u32,
}

impl BoundReport {
    pub fn coin(b: &CoinBound, precision_bits: u32) -> Self {
        BoundReport {
            query: format!("coin n={} epsilon={} k={}", b.n, b.epsilon, b.k),
            value: b.tail,
            bound: b.target,
            holds: b.holds && b.clears_margin,
            slack: b.slack,
            precision_bits,
        }
    }

    pub fn fairchoice(b: &FairChoiceBound, precision_bits: u32) -> Self {
        BoundReport {
            query: format!("fairchoice m={}", b.m),
            value: b.value,
            bound: 0.5,
            holds: b.exceeds_half,
            slack: b.value - 0.5,
            precision_bits,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_parse() {
        assert_eq!(parse_ratio("1/4").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_ratio("0.25").unwrap(), BigRational::new(1.into(), 4.into()));
        assert_eq!(parse_ratio("2").unwrap(), BigRational::from_integer(2.into()));
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("x").is_err());
        assert!(parse_ratio("0.2e").is_err());
    }

    #[test]
    fn epsilon_range() {
        assert!(check_epsilon(&parse_ratio("0.1").unwrap()).is_ok());
        assert!(check_epsilon(&parse_ratio("0.5").unwrap()).is_err());
        assert!(check_epsilon(&parse_ratio("-0.1").unwrap()).is_err());
    }
}
