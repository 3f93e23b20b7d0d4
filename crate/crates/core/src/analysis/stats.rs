use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::ser_ratio;
use crate::error::ParamError;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasEstimate {
    pub samples: u64,
    pub ones: u64,
    #[serde(serialize_with = "ser_ratio")]
    pub p_hat: BigRational,
    /// `sigma * sqrt(p(1-p)/N)`.
    pub half_width: f64,
}

impl BiasEstimate {
    pub fn p_hat_f64(&self) -> f64 {
        self.ones as f64 / self.samples as f64
    }

    pub fn contains(&self, p: f64) -> bool {
        (self.p_hat_f64() - p).abs() <= self.half_width
    }
}

pub fn estimate_bias(samples: &[bool], sigma: f64) -> Result<BiasEstimate, ParamError> {
    if samples.is_empty() {
        return Err(ParamError::Inconclusive { what: "empty sample".into(), bits: 0 });
    }
    let n = samples.len() as u64;
    let ones = samples.iter().filter(|b| **b).count() as u64;
    let p = ones as f64 / n as f64;
    Ok(BiasEstimate {
        samples: n,
        ones,
        p_hat: BigRational::new(BigInt::from(ones), BigInt::from(n)),
        half_width: sigma * (p * (1.0 - p) / n as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn degenerate_and_arithmetic() {
        let all = estimate_bias(&vec![true; 10_000], 3.0).unwrap();
        assert_eq!(all.p_hat, BigRational::from_integer(1.into()));
        assert_eq!(all.half_width, 0.0);
        let half: Vec<bool> = (0..400).map(|i| i % 2 == 0).collect();
        let e = estimate_bias(&half, 3.0).unwrap();
        assert!((e.half_width - 0.075).abs() < 1e-12);
        assert!(estimate_bias(&[], 3.0).is_err());
    }

    #[test]
    fn fair_generator_within_three_sigma() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let s: Vec<bool> = (0..10_000).map(|_| rng.gen()).collect();
        assert!(estimate_bias(&s, 3.0).unwrap().contains(0.5));
    }
}
