use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use crate::analysis::{self, Interval};
use crate::error::ParamError;

/// Fractional bits kept in the FairChoice ε.
pub const EPSILON_BITS: u32 = 64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FairChoiceParams {
    pub m: u64,
    pub l: u32,
    /// `N = 2^l`.
    #[serde(rename = "N")]
    pub big_n: u64,
    /// A lower bound on `1 / (100 m log2 m)` with [`EPSILON_BITS`] fractional bits.
    #[serde(serialize_with = "analysis::ser_ratio")]
    pub epsilon: BigRational,
}

/// Smallest `l` with `2m^2 <= 2^l`; the bracket `2^l <= 4m^2` then holds too.
pub fn fair_choice_params(m: u64) -> Result<FairChoiceParams, ParamError> {
    if m < 3 {
        return Err(ParamError::ChoiceSize(m as usize));
    }
    let lower = 2 * m * m;
    let l = 64 - (lower - 1).leading_zeros();
    let big_n = 1u64 << l;
    debug_assert!(lower <= big_n && big_n <= 4 * m * m);
    Ok(FairChoiceParams { m, l, big_n, epsilon: epsilon_for(m)? })
}

fn epsilon_for(m: u64) -> Result<BigRational, ParamError> {
    let scale = BigInt::from(1u8) << EPSILON_BITS;
    if m.is_power_of_two() {
        let log = m.trailing_zeros() as u64;
        let exact = BigRational::new(BigInt::from(1), BigInt::from(100 * m * log));
        return Ok(BigRational::new((exact * BigRational::from_integer(scale.clone())).floor().to_integer(), scale));
    }
    let bits = analysis::precision_bits().max(EPSILON_BITS + 32);
    let log2m = Interval::from_u64(m, bits).ln()?.div(&Interval::ln2(bits))?;
    let denom = log2m.mul(&Interval::from_u64(100 * m, bits));
    let eps = Interval::from_u64(1, bits).div(&denom)?;
    Ok(BigRational::new(eps.floor_scaled(EPSILON_BITS), scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn bracket_examples() {
        let p = fair_choice_params(3).unwrap();
        assert_eq!((p.l, p.big_n), (5, 32));
        let eps = p.epsilon.to_f64().unwrap();
        assert!((eps - 0.002103099178571525).abs() < 1e-15, "{eps}");
        assert_eq!(fair_choice_params(4).unwrap().big_n, 32);
        assert_eq!(fair_choice_params(5).unwrap().l, 6);
        assert_eq!(fair_choice_params(2), Err(ParamError::ChoiceSize(2)));
    }

    #[test]
    fn bracket_holds_for_many_m() {
        for m in 3..2000u64 {
            let p = fair_choice_params(m).unwrap();
            assert!(2 * m * m <= p.big_n && p.big_n <= 4 * m * m, "m={m}");
            assert!(p.big_n / 2 < 2 * m * m, "not smallest at m={m}");
        }
    }
}
