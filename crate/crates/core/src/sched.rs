//! Scheduling policies: free-running publisher-subscriber threads (ILLIXR and
//! its period-tuned variant) and BOXR's contention-preventive render chains.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{Duration, Instant};

/// Task periods for one run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodConfig {
    pub t_cam: Duration,
    pub t_vio: Duration,
    pub t_imu: Duration,
    pub t_atw: Duration,
    /// SR thread period for the baselines. BOXR derives its own.
    pub t_sr: Duration,
}

impl PeriodConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_cam.is_zero() || self.t_imu.is_zero() || self.t_atw.is_zero() || self.t_sr.is_zero() {
            return Err(Error::Config("all task periods must be positive".into()));
        }
        if self.t_cam != self.t_vio {
            return Err(Error::Config(format!("T_CAM ({}) must equal T_VIO ({})", self.t_cam, self.t_vio)));
        }
        if self.t_cam <= self.t_atw {
            return Err(Error::Config(format!("T_CAM ({}) must exceed T_ATW ({})", self.t_cam, self.t_atw)));
        }
        // The default 8 ms ATW / 5 ms IMU pair rules out a stricter multiple.
        if self.t_atw < self.t_imu {
            return Err(Error::Config(format!("T_ATW ({}) must be at least T_IMU ({})", self.t_atw, self.t_imu)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyKind {
    Illixr,
    IllixrOp { sr_period: Duration, atw_period: Duration },
    BoxrS,
    Boxr,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Illixr => "illixr",
            PolicyKind::IllixrOp { .. } => "illixr-op",
            PolicyKind::BoxrS => "boxr-s",
            PolicyKind::Boxr => "boxr",
        }
    }

    pub fn is_boxr(&self) -> bool {
        matches!(self, PolicyKind::BoxrS | PolicyKind::Boxr)
    }

    /// Whether the MVIO and SFR controllers are attached.
    pub fn controllers(&self) -> bool {
        matches!(self, PolicyKind::Boxr)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::IllixrOp { sr_period, atw_period } => {
                write!(f, "illixr-op(sr={sr_period}, atw={atw_period})")
            }
            other => f.write_str(other.name()),
        }
    }
}

/// Parses the policy names used in config files. `illixr-op` parses with both
/// periods unset (zero); the caller fills them from config or auto-tuning.
impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "illixr" => Ok(PolicyKind::Illixr),
            "illixr-op" => Ok(PolicyKind::IllixrOp { sr_period: Duration::ZERO, atw_period: Duration::ZERO }),
            "boxr-s" => Ok(PolicyKind::BoxrS),
            "boxr" => Ok(PolicyKind::Boxr),
            other => Err(Error::Config(format!("unknown policy `{other}` (expected illixr, illixr-op, boxr-s, boxr)"))),
        }
    }
}

/// BOXR chain layout within one VIO period.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxrPeriods {
    pub m: u32,
    pub t_sr: Duration,
    pub t_vio: Duration,
    /// True when `t_sr` was raised to the chain lower bound.
    pub raised: bool,
}

impl BoxrPeriods {
    /// Release offset of chain `k` after a VIO finish. Chains beyond `m`
    /// (VIO overran) keep the same pattern into the following period.
    pub fn offset(&self, k: u64) -> Duration {
        let m = self.m as u64;
        Duration(k / m * self.t_vio.as_us() + k % m * self.t_sr.as_us())
    }

    /// Slot length of chain `k`; the last chain of a period absorbs the rounding remainder.
    pub fn slot(&self, k: u64) -> Duration {
        self.offset(k + 1) - self.offset(k)
    }
}

/// `m = ceil(T_VIO / T_ATW)`, `T_SR = floor(T_VIO / m)`. If that `T_SR` is below
/// `lower_bound` it is raised to the bound and `m = floor(T_VIO / T_SR)`.
pub fn compute_boxr_periods(t_vio: Duration, t_atw: Duration, lower_bound: Duration) -> Result<BoxrPeriods> {
    if t_vio.is_zero() || t_atw.is_zero() {
        return Err(Error::Config("T_VIO and T_ATW must be positive".into()));
    }
    if lower_bound > t_vio {
        return Err(Error::InfeasibleSchedule { lower_bound_us: lower_bound.as_us(), t_vio_us: t_vio.as_us() });
    }
    let m = t_vio.as_us().div_ceil(t_atw.as_us());
    let t_sr = t_vio.as_us() / m;
    if t_sr >= lower_bound.as_us() {
        return Ok(BoxrPeriods { m: m as u32, t_sr: Duration(t_sr), t_vio, raised: false });
    }
    let m = t_vio.as_us() / lower_bound.as_us();
    Ok(BoxrPeriods { m: m as u32, t_sr: lower_bound, t_vio, raised: true })
}

/// SR release instants of the `m` chains following a VIO finish.
pub fn schedule_boxr_chain(vio_finish: Instant, periods: &BoxrPeriods) -> Vec<Instant> {
    (0..periods.m as u64).map(|k| vio_finish + periods.offset(k)).collect()
}

/// Release `k` of a free-running baseline thread with the given period.
pub fn baseline_release(period: Duration, k: u64) -> Instant {
    Instant(k * period.as_us())
}

/// Release instants of a free-running thread in `[0, until)`.
pub fn schedule_baseline(period: Duration, until: Instant) -> Vec<Instant> {
    if period.is_zero() {
        return Vec::new();
    }
    (0..).map(|k| baseline_release(period, k)).take_while(|&t| t < until).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: u64) -> Duration {
        Duration::from_ms(v)
    }

    #[test]
    fn worked_example_sixty_sixteen() {
        let p = compute_boxr_periods(ms(60), ms(16), ms(9)).unwrap();
        assert_eq!((p.m, p.t_sr, p.raised), (4, ms(15), false));
        let rel = schedule_boxr_chain(Instant::from_ms(40), &p);
        assert_eq!(rel, vec![Instant::from_ms(40), Instant::from_ms(55), Instant::from_ms(70), Instant::from_ms(85)]);
    }

    #[test]
    fn fifty_eight_rounds_down_with_remainder_last() {
        let p = compute_boxr_periods(ms(50), ms(8), ms(7)).unwrap();
        assert_eq!((p.m, p.t_sr), (7, Duration(7142)));
        let total: u64 = (0..7).map(|k| p.slot(k).as_us()).sum();
        assert_eq!(total, 50_000);
        assert_eq!(p.slot(6), Duration(7142 + 50_000 - 7 * 7142));
    }

    #[test]
    fn lower_bound_raises_period_and_shrinks_m() {
        let p = compute_boxr_periods(ms(30), ms(3), Duration(9200)).unwrap();
        assert_eq!((p.t_sr, p.m, p.raised), (Duration(9200), 3, true));
    }

    #[test]
    fn infeasible_bound() {
        let e = compute_boxr_periods(ms(20), ms(8), ms(25)).unwrap_err();
        assert!(matches!(e, Error::InfeasibleSchedule { lower_bound_us: 25_000, t_vio_us: 20_000 }));
    }

    #[test]
    fn single_chain() {
        let p = compute_boxr_periods(ms(10), ms(16), ms(5)).unwrap();
        assert_eq!(p.m, 1);
        assert_eq!(schedule_boxr_chain(Instant::ZERO, &p), vec![Instant::ZERO]);
        assert_eq!(p.offset(1), ms(10));
    }

    #[test]
    fn overrun_continues_pattern() {
        let p = compute_boxr_periods(ms(60), ms(16), ms(9)).unwrap();
        assert_eq!(p.offset(4), ms(60));
        assert_eq!(p.offset(5), ms(75));
    }

    #[test]
    fn baseline_is_free_running() {
        assert_eq!(
            schedule_baseline(ms(8), Instant::from_ms(30)),
            vec![Instant::ZERO, Instant::from_ms(8), Instant::from_ms(16), Instant::from_ms(24)]
        );
    }

    #[test]
    fn period_validation() {
        let good = PeriodConfig { t_cam: ms(50), t_vio: ms(50), t_imu: ms(5), t_atw: ms(8), t_sr: ms(8) };
        good.validate().unwrap();
        assert!(PeriodConfig { t_vio: ms(40), ..good }.validate().is_err());
        assert!(PeriodConfig { t_atw: ms(4), t_imu: ms(5), ..good }.validate().is_err());
        assert!(PeriodConfig { t_atw: ms(60), ..good }.validate().is_err());
    }

    #[test]
    fn policy_names_round_trip() {
        for s in ["illixr", "illixr-op", "boxr-s", "boxr", "BOXR_S"] {
            let p: PolicyKind = s.parse().unwrap();
            assert_eq!(p.name(), s.to_ascii_lowercase().replace('_', "-"));
        }
        assert!("foo".parse::<PolicyKind>().is_err());
    }
}
