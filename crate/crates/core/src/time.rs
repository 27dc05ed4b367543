use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("simulation time must be finite and non-negative, got {0}")]
pub struct InvalidTime(pub f64);

/// A point on the simulation clock, in seconds.
///
/// Always finite and non-negative, which makes the total order below sound.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    pub fn new(secs: f64) -> Result<Self, InvalidTime> {
        if secs.is_finite() && secs >= 0.0 {
            // normalise -0.0 so equal times compare bit-identical
            Ok(SimTime(secs + 0.0))
        } else {
            Err(InvalidTime(secs))
        }
    }

    /// Panicking constructor for literals and values already known to be valid.
    pub fn from_secs(secs: f64) -> Self {
        Self::new(secs).expect("invalid simulation time")
    }

    pub fn as_secs(self) -> f64 {
        self.0
    }

    /// The instant `secs` seconds after `self`.
    pub fn after(self, secs: f64) -> Result<Self, InvalidTime> {
        Self::new(self.0 + secs)
    }

    /// Seconds elapsed since `earlier`; negative if `earlier` is in the future.
    pub fn since(self, earlier: SimTime) -> f64 {
        self.0 - earlier.0
    }
}

impl Eq for SimTime {}

impl PartialOrd for SimTime {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for SimTime {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}s", self.0)
    }
}
