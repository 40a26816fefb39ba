//! Simulated time. Everything is integer microseconds.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Sub};

use serde::{Deserialize, Serialize};

/// A point on the simulated timeline, in microseconds since the start of the run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Instant(pub u64);

/// A non-negative span of simulated time, in microseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Duration(pub u64);

impl Instant {
    pub const ZERO: Instant = Instant(0);

    pub const fn from_us(us: u64) -> Self {
        Instant(us)
    }

    pub const fn from_ms(ms: u64) -> Self {
        Instant(ms * 1000)
    }

    pub const fn as_us(self) -> u64 {
        self.0
    }

    /// Time elapsed since `earlier`; `None` if `earlier` is in the future.
    pub fn checked_since(self, earlier: Instant) -> Option<Duration> {
        self.0.checked_sub(earlier.0).map(Duration)
    }

    pub fn saturating_since(self, earlier: Instant) -> Duration {
        Duration(self.0.saturating_sub(earlier.0))
    }
}

impl Duration {
    pub const ZERO: Duration = Duration(0);

    pub const fn from_us(us: u64) -> Self {
        Duration(us)
    }

    pub const fn from_ms(ms: u64) -> Self {
        Duration(ms * 1000)
    }

    /// Rounds a millisecond quantity to the nearest microsecond. Negative and
    /// non-finite inputs clamp to zero.
    pub fn from_ms_f64(ms: f64) -> Self {
        if !ms.is_finite() || ms <= 0.0 {
            return Duration::ZERO;
        }
        Duration((ms * 1000.0).round() as u64)
    }

    pub const fn as_us(self) -> u64 {
        self.0
    }

    pub fn as_ms_f64(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl Add<Duration> for Instant {
    type Output = Instant;
    fn add(self, rhs: Duration) -> Instant {
        Instant(self.0 + rhs.0)
    }
}

impl AddAssign<Duration> for Instant {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 += rhs.0;
    }
}

impl Sub<Instant> for Instant {
    type Output = Duration;
    /// Panics in debug builds if `rhs` is later than `self`.
    fn sub(self, rhs: Instant) -> Duration {
        debug_assert!(self >= rhs, "negative duration: {self} - {rhs}");
        Duration(self.0.saturating_sub(rhs.0))
    }
}

impl Add for Duration {
    type Output = Duration;
    fn add(self, rhs: Duration) -> Duration {
        Duration(self.0 + rhs.0)
    }
}

impl AddAssign for Duration {
    fn add_assign(&mut self, rhs: Duration) {
        self.0 += rhs.0;
    }
}

impl Sub for Duration {
    type Output = Duration;
    fn sub(self, rhs: Duration) -> Duration {
        Duration(self.0.saturating_sub(rhs.0))
    }
}

impl Mul<u64> for Duration {
    type Output = Duration;
    fn mul(self, rhs: u64) -> Duration {
        Duration(self.0 * rhs)
    }
}

impl fmt::Display for Instant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}us", self.0)
    }
}

impl fmt::Display for Duration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}us", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ms_convert_exactly() {
        assert_eq!(Duration::from_ms(8), Duration(8000));
        assert_eq!(Duration::from_ms_f64(0.2), Duration(200));
        assert_eq!(Duration::from_ms_f64(-1.0), Duration::ZERO);
    }

    #[test]
    fn instant_arithmetic() {
        let t = Instant::from_ms(50) + Duration::from_ms(10);
        assert_eq!(t, Instant(60_000));
        assert_eq!(t - Instant::from_ms(55), Duration(5000));
        assert_eq!(Instant(3).checked_since(Instant(5)), None);
        assert_eq!(Instant(3).saturating_since(Instant(5)), Duration::ZERO);
    }
}
