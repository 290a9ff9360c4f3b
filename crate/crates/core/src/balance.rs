//! Seeded class balancing of candidate lists.
//!
//! "Positive" means any label other than `NO_RELATION`. The target ratio is
//! negatives : positives.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::candidates::CandidateExample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BalanceStrategy {
    /// Duplicate positives until negatives/positives <= ratio (default 1).
    OverPos,
    /// Downsample the side above the ratio (default 1) without replacement.
    Balance,
    /// Duplicate negatives until negatives/positives >= ratio (default 2).
    OverNeg,
}

impl BalanceStrategy {
    pub fn default_ratio(self) -> Ratio {
        match self {
            BalanceStrategy::OverPos | BalanceStrategy::Balance => Ratio::ONE,
            BalanceStrategy::OverNeg => Ratio { num: 2, den: 1 },
        }
    }
}

impl FromStr for BalanceStrategy {
    type Err = BalanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "over_pos" => Ok(BalanceStrategy::OverPos),
            "balance" => Ok(BalanceStrategy::Balance),
            "over_neg" => Ok(BalanceStrategy::OverNeg),
            _ => Err(BalanceError::UnknownStrategy(s.into())),
        }
    }
}

/// A positive rational `num / den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub const ONE: Ratio = Ratio { num: 1, den: 1 };

    pub fn new(num: u64, den: u64) -> Result<Self, BalanceError> {
        if num == 0 || den == 0 {
            return Err(BalanceError::InvalidRatio(alloc::format!("{num}/{den}")));
        }
        Ok(Ratio { num, den })
    }

    /// `ceil(count * self)`
    fn scale_up(self, count: usize) -> usize {
        ceil_div(count as u128 * self.num as u128, self.den as u128)
    }

    /// `ceil(count / self)`
    fn scale_down(self, count: usize) -> usize {
        ceil_div(count as u128 * self.den as u128, self.num as u128)
    }
}

fn ceil_div(a: u128, b: u128) -> usize {
    a.div_ceil(b) as usize
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Accepts `3`, `3/2` or `1.5`.
impl FromStr for Ratio {
    type Err = BalanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || BalanceError::InvalidRatio(s.into());
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            return Ratio::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let frac_value: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|v| v.checked_add(frac_value)).ok_or_else(bad)?;
        let g = gcd(num, den);
        Ratio::new(num / g.max(1), den / g.max(1)).map_err(|_| bad())
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceSpec {
    pub strategy: BalanceStrategy,
    /// Target negatives : positives; `None` uses the strategy default.
    pub ratio: Option<Ratio>,
    pub seed: u64,
}

impl BalanceSpec {
    pub fn new(strategy: BalanceStrategy, seed: u64) -> Self {
        BalanceSpec { strategy, ratio: None, seed }
    }

    pub fn with_ratio(self, ratio: Ratio) -> Self {
        BalanceSpec { ratio: Some(ratio), ..self }
    }

    pub fn ratio(&self) -> Ratio {
        self.ratio.unwrap_or_else(|| self.strategy.default_ratio())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BalanceError {
    #[error("cannot oversample {0}: the class is empty")]
    EmptyClass(&'static str),
    #[error("invalid ratio `{0}`: expected a positive rational such as 2, 3/2 or 1.5")]
    InvalidRatio(String),
    #[error("unknown balance strategy `{0}`; accepted: over_pos, balance, over_neg")]
    UnknownStrategy(String),
}

/// Target (positives, negatives) counts for a strategy.
pub fn target_counts(pos: usize, neg: usize, spec: &BalanceSpec) -> Result<(usize, usize), BalanceError> {
    let r = spec.ratio();
    match spec.strategy {
        BalanceStrategy::OverPos => {
            if pos == 0 {
                return Err(BalanceError::EmptyClass("positives"));
            }
            Ok((pos.max(r.scale_down(neg)), neg))
        }
        BalanceStrategy::OverNeg => {
            if neg == 0 {
                return Err(BalanceError::EmptyClass("negatives"));
            }
            Ok((pos, neg.max(r.scale_up(pos))))
        }
        BalanceStrategy::Balance => {
            let wanted_neg = r.scale_up(pos);
            if neg > wanted_neg {
                Ok((pos, wanted_neg))
            } else {
                Ok((pos.min(r.scale_down(neg)), neg))
            }
        }
    }
}

/// Rebalances `examples` according to `spec`. Oversampling keeps every
/// original and adds uniformly drawn copies; `BALANCE` keeps a uniformly
/// drawn subset of the majority side. The result is shuffled. Identical
/// inputs and specs give identical outputs.
pub fn balance(examples: &[CandidateExample], spec: &BalanceSpec) -> Result<Vec<CandidateExample>, BalanceError> {
    let (positives, negatives): (Vec<usize>, Vec<usize>) = (0..examples.len()).partition(|&i| examples[i].is_positive());
    let (target_pos, target_neg) = target_counts(positives.len(), negatives.len(), spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut chosen: Vec<usize> = match spec.strategy {
        BalanceStrategy::OverPos | BalanceStrategy::OverNeg => {
            let (pool, extra) = if spec.strategy == BalanceStrategy::OverPos {
                (&positives, target_pos - positives.len())
            } else {
                (&negatives, target_neg - negatives.len())
            };
            let mut all: Vec<usize> = (0..examples.len()).collect();
            all.extend((0..extra).map(|_| pool[rng.gen_range(0..pool.len())]));
            all
        }
        BalanceStrategy::Balance => {
            let mut keep = |side: &[usize], target: usize| -> Vec<usize> {
                if target >= side.len() {
                    side.to_vec()
                } else {
                    let mut picked: Vec<usize> = index::sample(&mut rng, side.len(), target).into_iter().map(|i| side[i]).collect();
                    picked.sort_unstable();
                    picked
                }
            };
            let mut kept = keep(&positives, target_pos);
            kept.extend(keep(&negatives, target_neg));
            kept.sort_unstable();
            kept
        }
    };
    chosen.shuffle(&mut rng);
    Ok(chosen.into_iter().map(|i| examples[i].clone()).collect())
}
