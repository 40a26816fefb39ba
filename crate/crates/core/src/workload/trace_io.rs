//! Line-oriented CSV import/export for motion and scene traces.
//!
//! Motion: header `t_us,ax,ay,az,v,w,px,py,pz`, one row per IMU sample.
//! Scene: header `t_us,n,centers...`; each row lists `n` centre pairs as
//! `x0,y0,x1,y1,...`. Swap bursts are rows starting with `swap`:
//! `swap,t_us,frames,n,x0,y0,...`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::time::{Duration, Instant};

use super::motion::{MotionSample, MotionTrace};
use super::scene::{SceneSample, SceneSwap, SceneTrace};

pub const MOTION_HEADER: &str = "t_us,ax,ay,az,v,w,px,py,pz";
pub const SCENE_HEADER: &str = "t_us,n,centers...";

pub fn motion_to_csv(trace: &MotionTrace) -> String {
    let mut out = String::with_capacity(trace.samples.len() * 80);
    out.push_str(MOTION_HEADER);
    out.push('\n');
    for s in &trace.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.t.as_us(),
            s.accel.x,
            s.accel.y,
            s.accel.z,
            s.speed,
            s.rot,
            s.pos.x,
            s.pos.y,
            s.pos.z
        );
    }
    out
}

fn field<T: std::str::FromStr>(cols: &[&str], i: usize, line: usize) -> Result<T> {
    cols.get(i)
        .ok_or_else(|| Error::TraceFormat { line, msg: format!("missing column {i}") })?
        .trim()
        .parse()
        .map_err(|_| Error::TraceFormat { line, msg: format!("cannot parse column {i}: `{}`", cols[i]) })
}

/// Parses a motion CSV. Velocity vectors are reconstructed from consecutive
/// positions under the piecewise-constant-acceleration assumption.
pub fn motion_from_csv(text: &str) -> Result<MotionTrace> {
    let mut rows: Vec<(u64, Vec3, f64, f64, Vec3)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') || raw.starts_with("t_us") {
            continue;
        }
        let cols: Vec<&str> = raw.split(',').collect();
        if cols.len() != 9 {
            return Err(Error::TraceFormat { line, msg: format!("expected 9 columns, got {}", cols.len()) });
        }
        let t: u64 = field(&cols, 0, line)?;
        let a = Vec3::new(field(&cols, 1, line)?, field(&cols, 2, line)?, field(&cols, 3, line)?);
        let v: f64 = field(&cols, 4, line)?;
        let w: f64 = field(&cols, 5, line)?;
        let p = Vec3::new(field(&cols, 6, line)?, field(&cols, 7, line)?, field(&cols, 8, line)?);
        rows.push((t, a, v, w, p));
    }
    if rows.len() < 2 {
        return Err(Error::TraceFormat { line: 0, msg: "motion trace needs at least two samples".into() });
    }
    if rows[0].0 != 0 {
        return Err(Error::TraceFormat { line: 2, msg: "first sample must be at t_us=0".into() });
    }
    let period = rows[1].0 - rows[0].0;
    if period == 0 {
        return Err(Error::TraceFormat { line: 3, msg: "zero sample spacing".into() });
    }
    for (k, r) in rows.iter().enumerate() {
        if r.0 != k as u64 * period {
            return Err(Error::TraceFormat { line: k + 2, msg: format!("sample spacing must be exactly {period} us") });
        }
    }
    let dt = period as f64 / 1e6;
    let n = rows.len();
    let mut vels = vec![Vec3::ZERO; n];
    for k in 0..n - 1 {
        vels[k] = (rows[k + 1].4 - rows[k].4) * (1.0 / dt) - rows[k].1 * (0.5 * dt);
    }
    vels[n - 1] = vels[n - 2] + rows[n - 2].1 * dt;
    let samples: Vec<MotionSample> = rows
        .iter()
        .zip(vels)
        .map(|(&(t, accel, speed, rot, pos), vel)| MotionSample { t: Instant(t), accel, vel, speed, rot, pos })
        .collect();
    let (num, den) = samples
        .iter()
        .filter(|s| s.speed > 1e-6)
        .fold((0.0, 0.0), |(a, b), s| (a + s.rot, b + s.speed));
    let rot_ratio = if den > 0.0 { num / den } else { 0.0 };
    Ok(MotionTrace { period: Duration(period), samples, rot_ratio })
}

fn push_centers(out: &mut String, centers: &[[f64; 2]]) {
    for c in centers {
        let _ = write!(out, ",{},{}", c[0], c[1]);
    }
}

pub fn scene_to_csv(trace: &SceneTrace) -> String {
    let mut out = String::new();
    out.push_str(SCENE_HEADER);
    out.push('\n');
    for s in &trace.samples {
        let _ = write!(out, "{},{}", s.t.as_us(), s.n());
        push_centers(&mut out, &s.centers);
        out.push('\n');
    }
    for w in &trace.swaps {
        let _ = write!(out, "swap,{},{},{}", w.at.as_us(), w.frames, w.centers.len());
        push_centers(&mut out, &w.centers);
        out.push('\n');
    }
    out
}

fn parse_centers(cols: &[&str], from: usize, n: usize, line: usize) -> Result<Vec<[f64; 2]>> {
    if cols.len() != from + 2 * n {
        return Err(Error::TraceFormat { line, msg: format!("expected {n} centre pairs, got {} values", cols.len() - from) });
    }
    (0..n)
        .map(|i| {
            let x: f64 = field(cols, from + 2 * i, line)?;
            let y: f64 = field(cols, from + 2 * i + 1, line)?;
            if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
                return Err(Error::TraceFormat { line, msg: format!("centre ({x}, {y}) outside the viewport") });
            }
            Ok([x, y])
        })
        .collect()
}

pub fn scene_from_csv(text: &str) -> Result<SceneTrace> {
    let mut samples: Vec<SceneSample> = Vec::new();
    let mut swaps = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') || raw.starts_with("t_us") {
            continue;
        }
        let cols: Vec<&str> = raw.split(',').collect();
        if cols[0] == "swap" {
            let at: u64 = field(&cols, 1, line)?;
            let frames: u32 = field(&cols, 2, line)?;
            let n: usize = field(&cols, 3, line)?;
            swaps.push(SceneSwap { at: Instant(at), frames, centers: parse_centers(&cols, 4, n, line)? });
        } else {
            let t: u64 = field(&cols, 0, line)?;
            let n: usize = field(&cols, 1, line)?;
            if let Some(prev) = samples.last() {
                if Instant(t) <= prev.t {
                    return Err(Error::TraceFormat { line, msg: "scene timestamps must increase".into() });
                }
            }
            samples.push(SceneSample { t: Instant(t), centers: parse_centers(&cols, 2, n, line)? });
        }
    }
    if samples.is_empty() {
        return Err(Error::TraceFormat { line: 0, msg: "scene trace has no samples".into() });
    }
    if samples[0].t != Instant::ZERO {
        return Err(Error::TraceFormat { line: 2, msg: "first scene sample must be at t_us=0".into() });
    }
    swaps.sort_by_key(|s: &SceneSwap| s.at);
    Ok(SceneTrace { samples, swaps })
}
