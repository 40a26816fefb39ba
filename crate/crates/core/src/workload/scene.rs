//! Scene traces: number and placement of objects in the viewport over time,
//! plus scene-swap bursts.

use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::time::{Duration, Instant};

/// Normalised viewport coordinate in `[0, 1]^2`.
pub type Point2 = [f64; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppPreset {
    Sponza,
    Materials,
    Gldemo,
    Platformer,
    Custom { objects: u32 },
}

impl AppPreset {
    pub const NAMED: [AppPreset; 4] = [AppPreset::Sponza, AppPreset::Materials, AppPreset::Gldemo, AppPreset::Platformer];

    pub fn base_objects(self) -> u32 {
        match self {
            AppPreset::Sponza => 32,
            AppPreset::Materials => 81,
            AppPreset::Gldemo => 7,
            AppPreset::Platformer => 3014,
            AppPreset::Custom { objects } => objects,
        }
    }

    /// Objects per millisecond of extra render time on the reference platform.
    pub fn render_k(self) -> f64 {
        match self {
            AppPreset::Platformer => 1000.0,
            _ => 250.0,
        }
    }

    pub fn name(self) -> String {
        match self {
            AppPreset::Sponza => "sponza".into(),
            AppPreset::Materials => "materials".into(),
            AppPreset::Gldemo => "gldemo".into(),
            AppPreset::Platformer => "platformer".into(),
            AppPreset::Custom { objects } => format!("custom:{objects}"),
        }
    }
}

impl FromStr for AppPreset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        match lower.as_str() {
            "sponza" => Ok(AppPreset::Sponza),
            "materials" => Ok(AppPreset::Materials),
            "gldemo" => Ok(AppPreset::Gldemo),
            "platformer" => Ok(AppPreset::Platformer),
            _ => {
                if let Some(n) = lower.strip_prefix("custom:") {
                    let objects = n.parse().map_err(|_| Error::UnknownPreset(s.to_string()))?;
                    Ok(AppPreset::Custom { objects })
                } else {
                    Err(Error::UnknownPreset(s.to_string()))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSample {
    pub t: Instant,
    pub centers: Vec<Point2>,
}

impl SceneSample {
    pub fn n(&self) -> usize {
        self.centers.len()
    }
}

/// A forced switch to a heavy scene for the next `frames` rendered frames.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSwap {
    pub at: Instant,
    pub frames: u32,
    pub centers: Vec<Point2>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneTrace {
    pub samples: Vec<SceneSample>,
    pub swaps: Vec<SceneSwap>,
}

pub const SCENE_STEP_MS: u64 = 250;
pub const DEFAULT_SWAP_OBJECTS: u32 = 2500;
pub const SWAP_FRAMES: u32 = 10;

impl SceneTrace {
    pub fn end(&self) -> Instant {
        self.samples.last().map_or(Instant::ZERO, |s| s.t)
    }

    /// The base scene in effect at `t` (zero-order hold).
    pub fn at(&self, t: Instant) -> &SceneSample {
        let idx = self.samples.partition_point(|s| s.t <= t);
        &self.samples[idx.saturating_sub(1)]
    }

    pub fn mean_objects(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.n() as f64).sum::<f64>() / self.samples.len() as f64
    }
}

fn clamp01(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

fn cluster(rng: &mut ChaCha8Rng, focus: Point2, spread: f64, n: usize) -> Vec<Point2> {
    (0..n)
        .map(|_| {
            [
                clamp01(focus[0] + rng.gen_range(-spread..=spread)),
                clamp01(focus[1] + rng.gen_range(-spread..=spread)),
            ]
        })
        .collect()
}

/// Base scene for `preset`, with a mean-reverting random walk on the visible
/// object count and slowly drifting object centres.
pub fn generate_scene(preset: AppPreset, duration_ms: u64, seed: u64) -> SceneTrace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce4e);
    let base = preset.base_objects() as i64;
    let amp = ((base as f64 * 0.15).round() as i64).max(if base > 0 { 1 } else { 0 });
    let step = (amp / 4).max(1);
    let focus = [rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)];
    let mut centers = cluster(&mut rng, focus, 0.25, base as usize);
    let mut n = base;
    let mut samples = Vec::new();
    let steps = duration_ms / SCENE_STEP_MS + 1;
    for k in 0..steps {
        samples.push(SceneSample { t: Instant::from_ms(k * SCENE_STEP_MS), centers: centers.clone() });
        if amp == 0 {
            continue;
        }
        // Mean reversion: drift back toward the base count more often than away.
        let toward = if n > base { -step } else { step };
        let r: f64 = rng.gen();
        let delta = if r < 0.45 {
            toward
        } else if r < 0.75 {
            -toward
        } else {
            0
        };
        n = (n + delta).clamp(base - amp, base + amp).max(0);
        while (centers.len() as i64) < n {
            let extra = cluster(&mut rng, focus, 0.25, 1);
            centers.extend(extra);
        }
        centers.truncate(n as usize);
        for c in centers.iter_mut() {
            c[0] = clamp01(c[0] + rng.gen_range(-0.01..=0.01));
            c[1] = clamp01(c[1] + rng.gen_range(-0.01..=0.01));
        }
    }
    SceneTrace { samples, swaps: Vec::new() }
}

/// Forces a switch to a scene of `objects` objects (floored, never fewer than
/// the base scene) for the next ten rendered frames after `at`. A second swap
/// at the same instant coalesces with the first.
pub fn inject_scene_swap(trace: &SceneTrace, at: Instant, objects: u32, seed: u64) -> Result<SceneTrace> {
    if at > trace.end() {
        return Err(Error::Config(format!("scene swap at {at} lies beyond trace end {}", trace.end())));
    }
    let mut out = trace.clone();
    if out.swaps.iter().any(|s| s.at == at) {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ at.as_us());
    let focus = [rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8)];
    let centers = cluster(&mut rng, focus, 0.3, objects as usize);
    let pos = out.swaps.partition_point(|s| s.at < at);
    out.swaps.insert(pos, SceneSwap { at, frames: SWAP_FRAMES, centers });
    Ok(out)
}

/// Injects `count` swaps, one at a random offset inside each of `count` equal slots.
pub fn inject_swaps_evenly(trace: &SceneTrace, count: usize, objects: u32, seed: u64) -> Result<SceneTrace> {
    if count == 0 {
        return Ok(trace.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x05ab);
    let slot = Duration(trace.end().as_us() / count as u64);
    let mut out = trace.clone();
    for k in 0..count as u64 {
        let jitter = if slot.as_us() > 1 { rng.gen_range(0..slot.as_us() / 2) } else { 0 };
        out = inject_scene_swap(&out, Instant(k * slot.as_us() + jitter), objects, seed)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_means_track_base_counts() {
        for (preset, base) in [(AppPreset::Gldemo, 7.0), (AppPreset::Platformer, 3014.0), (AppPreset::Sponza, 32.0)] {
            let s = generate_scene(preset, 60_000, 9);
            let mean = s.mean_objects();
            assert!((mean - base).abs() <= 0.1 * base + 0.5, "{preset:?} mean {mean}");
            assert!(s.samples.iter().all(|x| x.centers.iter().all(|c| (0.0..=1.0).contains(&c[0]))));
        }
    }

    #[test]
    fn empty_custom_scene() {
        let s = generate_scene(AppPreset::Custom { objects: 0 }, 1000, 1);
        assert!(s.samples.iter().all(|x| x.n() == 0));
    }

    #[test]
    fn unknown_preset_rejected() {
        assert!("quake".parse::<AppPreset>().is_err());
        assert_eq!("Gldemo".parse::<AppPreset>().unwrap(), AppPreset::Gldemo);
        assert_eq!("custom:12".parse::<AppPreset>().unwrap(), AppPreset::Custom { objects: 12 });
    }

    #[test]
    fn swaps_coalesce_and_stay_sorted() {
        let s = generate_scene(AppPreset::Gldemo, 10_000, 1);
        let s = inject_scene_swap(&s, Instant::from_ms(5000), 2500, 1).unwrap();
        let s = inject_scene_swap(&s, Instant::from_ms(5000), 2500, 1).unwrap();
        let s = inject_scene_swap(&s, Instant::from_ms(2000), 2500, 1).unwrap();
        assert_eq!(s.swaps.len(), 2);
        assert!(s.swaps[0].at < s.swaps[1].at);
        assert_eq!(s.swaps[1].centers.len(), 2500);
        assert!(inject_scene_swap(&s, Instant::from_ms(20_000), 2500, 1).is_err());
    }

    #[test]
    fn sixty_swaps_per_minute_is_one_per_second() {
        let s = generate_scene(AppPreset::Gldemo, 60_000, 1);
        let s = inject_swaps_evenly(&s, 60, 2500, 3).unwrap();
        assert_eq!(s.swaps.len(), 60);
        for (k, w) in s.swaps.iter().enumerate() {
            assert_eq!(w.at.as_us() / 1_000_000, k as u64);
        }
    }
}
