//! Exact dyadic grid points `k / 2^level`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest supported grid level; keeps `k` and `2^level` inside `u64`.
pub const MAX_LEVEL: u32 = 62;

/// The point `numerator / 2^level` of the unit interval.
#[derive(Debug, Clone, Copy)]
pub struct DyadicIndex {
    numerator: u64,
    level: u32,
}

impl DyadicIndex {
    pub fn new(numerator: u64, level: u32) -> Result<Self> {
        if level > MAX_LEVEL || numerator > (1u64 << level) {
            return Err(Error::InvalidDyadic { numerator, level });
        }
        Ok(Self { numerator, level })
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Canonical form: odd numerator, or `0/2^0`.
    pub fn reduce(self) -> Self {
        if self.numerator == 0 {
            return Self {
                numerator: 0,
                level: 0,
            };
        }
        let shift = self.numerator.trailing_zeros().min(self.level);
        Self {
            numerator: self.numerator >> shift,
            level: self.level - shift,
        }
    }

    /// Re-express on a finer grid. Fails if `level` is coarser than the reduced form.
    pub fn at_level(self, level: u32) -> Result<Self> {
        let r = self.reduce();
        if level < r.level || level > MAX_LEVEL {
            return Err(Error::Invalid(format!(
                "{self} is not a point of the level-{level} grid"
            )));
        }
        Ok(Self {
            numerator: r.numerator << (level - r.level),
            level,
        })
    }

    pub fn to_f64(self) -> f64 {
        self.numerator as f64 / (1u64 << self.level) as f64
    }
}

impl PartialEq for DyadicIndex {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for DyadicIndex {}

impl Ord for DyadicIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        let level = self.level.max(other.level);
        let a = (self.numerator as u128) << (level - self.level);
        let b = (other.numerator as u128) << (level - other.level);
        a.cmp(&b)
    }
}

impl PartialOrd for DyadicIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for DyadicIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.level)
    }
}

/// Parses `k/2^L`.
impl FromStr for DyadicIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Invalid(format!("expected `k/2^L`, got `{s}`"));
        let (num, den) = s.trim().split_once('/').ok_or_else(bad)?;
        let level = den.trim().strip_prefix("2^").ok_or_else(bad)?;
        let numerator: u64 = num.trim().parse().map_err(|_| bad())?;
        let level: u32 = level.trim().parse().map_err(|_| bad())?;
        Self::new(numerator, level)
    }
}
