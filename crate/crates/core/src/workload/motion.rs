//! Synthetic head/body motion traces sampled at the IMU period.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::time::{Duration, Instant};

/// Speed classes used to categorise motion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionClass {
    No,
    Small,
    Medium,
    Large,
}

impl MotionClass {
    pub const ALL: [MotionClass; 4] = [MotionClass::No, MotionClass::Small, MotionClass::Medium, MotionClass::Large];

    /// Default occupancy mix, percent of time per class.
    pub const DEFAULT_MIX: [f64; 4] = [0.1062, 0.6675, 0.2030, 0.0233];

    pub fn classify(speed: f64) -> MotionClass {
        if speed < 0.1 {
            MotionClass::No
        } else if speed < 1.0 {
            MotionClass::Small
        } else if speed < 2.0 {
            MotionClass::Medium
        } else {
            MotionClass::Large
        }
    }

    /// Speed range `[lo, hi)` in m/s.
    pub fn range(self) -> (f64, f64) {
        match self {
            MotionClass::No => (0.0, 0.1),
            MotionClass::Small => (0.1, 1.0),
            MotionClass::Medium => (1.0, 2.0),
            MotionClass::Large => (2.0, f64::INFINITY),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            MotionClass::No => "no",
            MotionClass::Small => "small",
            MotionClass::Medium => "medium",
            MotionClass::Large => "large",
        }
    }

    /// Target speeds the generator draws from, kept clear of the class edges so
    /// heading changes do not leak time into a neighbouring class.
    fn target_range(self, large_max: f64) -> (f64, f64) {
        match self {
            MotionClass::No => (0.0, 0.08),
            MotionClass::Small => (0.15, 0.9),
            MotionClass::Medium => (1.1, 1.85),
            MotionClass::Large => (2.25, large_max.max(2.3)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionSample {
    pub t: Instant,
    /// Acceleration held constant until the next sample, m/s^2.
    pub accel: Vec3,
    pub vel: Vec3,
    /// Scalar speed `|vel|`, m/s.
    pub speed: f64,
    /// Scalar rotation rate, rad/s.
    pub rot: f64,
    pub pos: Vec3,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MotionTrace {
    pub period: Duration,
    pub samples: Vec<MotionSample>,
    /// Rotation rate per unit speed used when re-deriving `rot`.
    pub rot_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MotionParams {
    pub period_us: u64,
    /// rad/s of rotation per m/s of speed.
    pub rot_ratio: f64,
    pub large_max_speed: f64,
    pub accel_limit: f64,
    pub segment_min_ms: u64,
    pub segment_max_ms: u64,
    pub max_heading_change_deg: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            period_us: 5000,
            rot_ratio: 0.6,
            large_max_speed: 3.0,
            accel_limit: 15.0,
            segment_min_ms: 1000,
            segment_max_ms: 5000,
            max_heading_change_deg: 30.0,
        }
    }
}

/// Integrates piecewise-constant accelerations into a kinematically consistent trace.
pub(crate) fn integrate(
    period: Duration,
    accels: &[Vec3],
    start_vel: Vec3,
    start_pos: Vec3,
    rot_ratio: f64,
) -> Vec<MotionSample> {
    let dt = period.as_secs_f64();
    let mut out = Vec::with_capacity(accels.len());
    let (mut vel, mut pos) = (start_vel, start_pos);
    for (k, &a) in accels.iter().enumerate() {
        let speed = vel.norm();
        out.push(MotionSample { t: Instant(k as u64 * period.as_us()), accel: a, vel, speed, rot: rot_ratio * speed, pos });
        pos = pos + vel * dt + a * (0.5 * dt * dt);
        vel += a * dt;
    }
    out
}

impl MotionTrace {
    pub fn duration(&self) -> Duration {
        match self.samples.last() {
            Some(s) => Duration(s.t.as_us()),
            None => Duration::ZERO,
        }
    }

    pub fn end(&self) -> Instant {
        self.samples.last().map_or(Instant::ZERO, |s| s.t)
    }

    /// Index of the latest sample at or before `t` (zero-order hold).
    pub fn index_at(&self, t: Instant) -> usize {
        let idx = (t.as_us() / self.period.as_us()) as usize;
        idx.min(self.samples.len().saturating_sub(1))
    }

    pub fn at(&self, t: Instant) -> &MotionSample {
        &self.samples[self.index_at(t)]
    }

    /// Ground-truth position at an arbitrary instant, integrating the held acceleration.
    pub fn position_at(&self, t: Instant) -> Vec3 {
        let s = self.at(t);
        let dt = t.saturating_since(s.t).as_secs_f64();
        s.pos + s.vel * dt + s.accel * (0.5 * dt * dt)
    }

    pub fn class_at(&self, t: Instant) -> MotionClass {
        MotionClass::classify(self.at(t).speed)
    }

    /// Fraction of samples in each class.
    pub fn occupancy(&self) -> [f64; 4] {
        let mut counts = [0usize; 4];
        for s in &self.samples {
            counts[MotionClass::classify(s.speed).index()] += 1;
        }
        let n = self.samples.len().max(1) as f64;
        counts.map(|c| c as f64 / n)
    }

    pub fn max_speed(&self) -> f64 {
        self.samples.iter().map(|s| s.speed).fold(0.0, f64::max)
    }

    pub fn max_rot(&self) -> f64 {
        self.samples.iter().map(|s| s.rot).fold(0.0, f64::max)
    }

    fn accels(&self) -> Vec<Vec3> {
        self.samples.iter().map(|s| s.accel).collect()
    }
}

fn validate_mix(mix: &[f64; 4]) -> Result<()> {
    if mix.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(Error::Config(format!("class mix {mix:?} has negative entries")));
    }
    let sum: f64 = mix.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("class mix must sum to 1, got {sum}")));
    }
    Ok(())
}

/// Generates a motion trace whose dwell time per speed class follows `mix`.
pub fn generate_motion(duration_ms: i64, mix: [f64; 4], seed: u64, params: &MotionParams) -> Result<MotionTrace> {
    if duration_ms < 0 {
        return Err(Error::Config(format!("negative trace duration {duration_ms} ms")));
    }
    validate_mix(&mix)?;
    if params.period_us == 0 {
        return Err(Error::Config("IMU period must be positive".into()));
    }
    let period = Duration(params.period_us);
    let n_samples = (duration_ms as u64 * 1000 / params.period_us) as usize + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Split each class's total dwell time into segments, then shuffle.
    let total_steps = n_samples as f64;
    let seg_min = (params.segment_min_ms * 1000 / params.period_us).max(1) as f64;
    let seg_max = (params.segment_max_ms * 1000 / params.period_us).max(1) as f64;
    let mut segments: Vec<(MotionClass, usize)> = Vec::new();
    for class in MotionClass::ALL {
        let mut left = (mix[class.index()] * total_steps).round();
        while left > 0.0 {
            let mut len = rng.gen_range(seg_min..=seg_max.max(seg_min)).round();
            if left - len < seg_min / 2.0 {
                len = left;
            }
            len = len.min(left);
            segments.push((class, len as usize));
            left -= len;
        }
    }
    segments.shuffle(&mut rng);

    let dt = period.as_secs_f64();
    let max_turn = params.max_heading_change_deg.to_radians();
    let mut heading: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut accels = Vec::with_capacity(n_samples);
    let mut vel = Vec3::ZERO;
    for (class, len) in segments {
        let (lo, hi) = class.target_range(params.large_max_speed);
        let speed = rng.gen_range(lo..=hi);
        heading += rng.gen_range(-max_turn..=max_turn);
        let target = Vec3::new(heading.cos(), heading.sin(), 0.0) * speed;
        for _ in 0..len {
            if accels.len() == n_samples {
                break;
            }
            let dv = target - vel;
            let need = dv.norm() / dt;
            let a = if need <= params.accel_limit {
                dv * (1.0 / dt)
            } else {
                dv * (params.accel_limit / dv.norm())
            };
            accels.push(a);
            vel += a * dt;
        }
    }
    while accels.len() < n_samples {
        accels.push(Vec3::ZERO);
    }
    accels.truncate(n_samples);
    Ok(MotionTrace { period, samples: integrate(period, &accels, Vec3::ZERO, Vec3::ZERO, params.rot_ratio), rot_ratio: params.rot_ratio })
}

pub const SPIKE_RAMP_MS: u64 = 200;
pub const DEFAULT_SPIKE_ACCEL: f64 = 12.0;

/// Adds a sudden acceleration of `magnitude` m/s^2 for 200 ms (followed by an
/// equal deceleration back to the original velocity) starting at `at`. The
/// push points along the current heading, or straight down when stationary.
pub fn inject_motion_spike(trace: &MotionTrace, at: Instant, magnitude: f64) -> Result<MotionTrace> {
    if at > trace.end() {
        return Err(Error::Config(format!("spike at {at} lies beyond trace end {}", trace.end())));
    }
    if magnitude == 0.0 {
        return Ok(trace.clone());
    }
    let start = trace.index_at(at);
    let ramp = (SPIKE_RAMP_MS * 1000 / trace.period.as_us()).max(1) as usize;
    let dir = trace.samples[start].vel.normalized().unwrap_or(Vec3::new(0.0, 0.0, -1.0));
    let mut accels = trace.accels();
    for (i, a) in accels.iter_mut().enumerate().skip(start).take(2 * ramp) {
        let sign = if i - start < ramp { 1.0 } else { -1.0 };
        *a += dir * (sign * magnitude);
    }
    let s0 = trace.samples[0];
    Ok(MotionTrace {
        period: trace.period,
        samples: integrate(trace.period, &accels, s0.vel, s0.pos, trace.rot_ratio),
        rot_ratio: trace.rot_ratio,
    })
}

/// Injects `count` spikes, one at a random offset inside each of `count` equal slots.
pub fn inject_spikes_evenly(trace: &MotionTrace, count: usize, magnitude: f64, seed: u64) -> Result<MotionTrace> {
    if count == 0 {
        return Ok(trace.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005b_1ce5);
    let slot = trace.duration().as_us() / count as u64;
    let mut out = trace.clone();
    for k in 0..count as u64 {
        let jitter = if slot > 1 { rng.gen_range(0..slot / 2) } else { 0 };
        out = inject_motion_spike(&out, Instant(k * slot + jitter), magnitude)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_edges() {
        assert_eq!(MotionClass::classify(0.0), MotionClass::No);
        assert_eq!(MotionClass::classify(0.0999), MotionClass::No);
        assert_eq!(MotionClass::classify(0.1), MotionClass::Small);
        assert_eq!(MotionClass::classify(1.0), MotionClass::Medium);
        assert_eq!(MotionClass::classify(2.0), MotionClass::Large);
        assert_eq!(MotionClass::classify(50.0), MotionClass::Large);
    }

    #[test]
    fn default_mix_occupancy_within_two_percent() {
        let t = generate_motion(60_000, MotionClass::DEFAULT_MIX, 7, &MotionParams::default()).unwrap();
        let occ = t.occupancy();
        for (got, want) in occ.iter().zip(MotionClass::DEFAULT_MIX) {
            assert!((got - want).abs() <= 0.02, "occupancy {occ:?}");
        }
    }

    #[test]
    fn no_motion_mix_stays_slow() {
        let t = generate_motion(10_000, [1.0, 0.0, 0.0, 0.0], 1, &MotionParams::default()).unwrap();
        assert!(t.samples.iter().all(|s| s.speed < 0.1));
    }

    #[test]
    fn same_seed_same_trace() {
        let p = MotionParams::default();
        let a = generate_motion(5_000, MotionClass::DEFAULT_MIX, 3, &p).unwrap();
        let b = generate_motion(5_000, MotionClass::DEFAULT_MIX, 3, &p).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 1001);
    }

    #[test]
    fn bad_inputs_rejected() {
        let p = MotionParams::default();
        assert!(generate_motion(-1, MotionClass::DEFAULT_MIX, 0, &p).is_err());
        assert!(generate_motion(1000, [0.5, 0.4, 0.0, 0.0], 0, &p).is_err());
    }

    #[test]
    fn spike_reaches_large_class_within_ramp() {
        let p = MotionParams::default();
        let t = generate_motion(20_000, [0.0, 1.0, 0.0, 0.0], 11, &p).unwrap();
        let spiked = inject_motion_spike(&t, Instant::from_ms(10_000), DEFAULT_SPIKE_ACCEL).unwrap();
        let peak = spiked.at(Instant::from_ms(10_200)).speed;
        assert_eq!(MotionClass::classify(peak), MotionClass::Large, "peak {peak}");
        assert!(t.at(Instant::from_ms(9_995)).speed < 1.0);
    }

    #[test]
    fn zero_magnitude_spike_is_identity() {
        let t = generate_motion(2_000, MotionClass::DEFAULT_MIX, 2, &MotionParams::default()).unwrap();
        assert_eq!(inject_motion_spike(&t, Instant::from_ms(1000), 0.0).unwrap(), t);
    }

    #[test]
    fn two_spikes_stay_separate() {
        let t = generate_motion(5_000, [1.0, 0.0, 0.0, 0.0], 5, &MotionParams::default()).unwrap();
        let s = inject_motion_spike(&t, Instant::from_ms(1000), 12.0).unwrap();
        let s = inject_motion_spike(&s, Instant::from_ms(2000), 12.0).unwrap();
        assert!(s.at(Instant::from_ms(1200)).speed > 2.0);
        assert!(s.at(Instant::from_ms(1700)).speed < 0.1);
        assert!(s.at(Instant::from_ms(2200)).speed > 2.0);
    }

    #[test]
    fn spike_past_end_is_truncated() {
        let t = generate_motion(1_000, [1.0, 0.0, 0.0, 0.0], 5, &MotionParams::default()).unwrap();
        let s = inject_motion_spike(&t, Instant::from_ms(900), 12.0).unwrap();
        assert_eq!(s.samples.len(), t.samples.len());
        assert!(inject_motion_spike(&t, Instant::from_ms(2000), 12.0).is_err());
    }
}
