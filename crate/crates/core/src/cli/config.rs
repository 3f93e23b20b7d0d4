use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ConfigError;
use crate::scenario::Scenario;
use crate::sim::TraceMode;

/// Inclusive seed range written `A..B`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedRange {
    pub first: u64,
    pub last: u64,
}

impl SeedRange {
    pub fn iter(&self) -> std::ops::RangeInclusive<u64> {
        self.first..=self.last
    }

    pub fn len(&self) -> u64 {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl FromStr for SeedRange {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError::Other(format!("seed range must look like A..B, got {s:?}"));
        let (a, b) = s.split_once("..").ok_or_else(bad)?;
        let first: u64 = a.trim().parse().map_err(|_| bad())?;
        let last: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if last < first {
            return Err(ConfigError::Other(format!("empty seed range {s:?}")));
        }
        Ok(SeedRange { first, last })
    }
}

impl fmt::Display for SeedRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

impl Serialize for SeedRange {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SeedRange {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_coin_grid() -> Vec<(u64, String)> {
    let mut g = Vec::new();
    for n in [4, 5, 7] {
        for e in ["1/10", "1/4", "2/5"] {
            g.push((n, e.to_string()));
        }
    }
    g
}

fn default_m() -> Vec<u64> {
    (3..=64).collect()
}

fn default_mu() -> u64 {
    2000
}

fn default_enumeration() -> Vec<u64> {
    vec![3, 4, 5]
}

/// What `verify-bounds` checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsGrid {
    /// `(n, ε)` pairs for the coin tail bound.
    #[serde(default = "default_coin_grid")]
    pub coin: Vec<(u64, String)>,
    /// `m` values for the FairChoice closed form.
    #[serde(default = "default_m")]
    pub m: Vec<u64>,
    /// Largest `μ` in the central binomial check.
    #[serde(default = "default_mu")]
    pub binomial_mu: u64,
    /// `m` values for the exhaustive majority-set check.
    #[serde(default = "default_enumeration")]
    pub enumeration: Vec<u64>,
    /// Negative control: divide each coin `k` by this before checking.
    #[serde(default)]
    pub k_divisor: Option<u64>,
}

impl Default for BoundsGrid {
    fn default() -> Self {
        BoundsGrid {
            coin: default_coin_grid(),
            m: default_m(),
            binomial_mu: default_mu(),
            enumeration: default_enumeration(),
            k_divisor: None,
        }
    }
}

fn default_sigma() -> f64 {
    3.0
}

/// The `--config` file. Every field is optional; flags override it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub seeds: Option<SeedRange>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Trace handling for `simulate`; `collect` writes one JSONL file per run.
    #[serde(default)]
    pub trace: Option<TraceMode>,
    #[serde(default)]
    pub bounds: BoundsGrid,
    /// Confidence multiplier for `estimate-bias`.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { scenario: None, seeds: None, workers: None, trace: None, bounds: BoundsGrid::default(), sigma: 3.0 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Other(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| ConfigError::Other(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_ranges() {
        let r: SeedRange = "3..7".parse().unwrap();
        assert_eq!((r.first, r.last, r.len()), (3, 7, 5));
        assert_eq!("0..=9".parse::<SeedRange>().unwrap().len(), 10);
        assert!("9..3".parse::<SeedRange>().is_err());
        assert!("x".parse::<SeedRange>().is_err());
    }

    #[test]
    fn config_parses_with_defaults() {
        let c: RunConfig = serde_json::from_str(
            r#"{"scenario": {"protocol": "coin", "n": 4, "t": 1, "k_override": 8,
                 "adversary": {"corrupted": [{"party": 3, "behavior": {"kind": "silent"}}]}},
                "seeds": "0..49"}"#,
        )
        .unwrap();
        assert_eq!(c.seeds.unwrap().len(), 50);
        assert_eq!(c.bounds.coin.len(), 9);
        assert_eq!(c.bounds.m.len(), 62);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
