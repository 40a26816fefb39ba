//! Motion-driven VIO control: before each VIO job the controller turns the
//! current speed and rotation into a motion score, picks an image crop
//! fraction and pyramid level, and afterwards bounds the pose it produced.

use serde::{Deserialize, Serialize};

use crate::geom::Vec3;
use crate::time::Duration;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MvioProfile {
    pub b_vio: Duration,
    pub v_b: f64,
    pub w_b: f64,
    pub s_max: f64,
    pub e_req: f64,
    pub l_min: u32,
    pub l_max: u32,
    /// Smallest crop fraction whose error at `l_min` stays within `e_req`.
    pub p_min: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MvioDecision {
    pub s: f64,
    pub p: f64,
    pub l: u32,
    /// Image-plane direction of the acceleration, zero when there is none.
    pub crop_direction: [f64; 2],
}

pub fn motion_score(v: f64, w: f64, profile: &MvioProfile) -> f64 {
    (v - profile.v_b) / profile.v_b + (w - profile.w_b) / profile.w_b
}

pub fn crop_fraction(s: f64, profile: &MvioProfile) -> f64 {
    if s <= 0.0 {
        return 1.0;
    }
    profile.p_min.max(profile.p_min.powf(s / profile.s_max))
}

/// `(0, S_max]` is cut into `l_max - l_min + 1` equal segments. The lowest
/// segment keeps `l_max`; each higher one drops a level. Anything above
/// `S_max` lands on `l_min`.
pub fn pyramid_level(s: f64, profile: &MvioProfile) -> u32 {
    if s <= 0.0 {
        return profile.l_max;
    }
    let segments = profile.l_max - profile.l_min + 1;
    let width = profile.s_max / segments as f64;
    let i = ((s / width).ceil() as u64).clamp(1, segments as u64) as u32;
    profile.l_max - (i - 1)
}

/// Retained part of the image in normalised coordinates `[0, 1]^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CropRegion {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl CropRegion {
    pub const FULL: CropRegion = CropRegion { x0: 0.0, y0: 0.0, x1: 1.0, y1: 1.0 };

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }
}

/// Projects the acceleration onto the image plane (x right, y up). Returns
/// zero for a (near) zero projection.
pub fn image_direction(accel: Vec3) -> [f64; 2] {
    let n = accel.x.hypot(accel.y);
    if n < 1e-9 {
        [0.0, 0.0]
    } else {
        [accel.x / n, accel.y / n]
    }
}

/// Keeps an area fraction `p` of the image. The removed band faces the
/// dominant axis of the motion direction, since new features enter from
/// that side. Without a direction a centred square is kept.
pub fn crop_image(p: f64, accel: Vec3) -> CropRegion {
    if p >= 1.0 {
        return CropRegion::FULL;
    }
    let [dx, dy] = image_direction(accel);
    if dx == 0.0 && dy == 0.0 {
        let side = p.sqrt();
        let m = (1.0 - side) / 2.0;
        return CropRegion { x0: m, y0: m, x1: m + side, y1: m + side };
    }
    if dx.abs() >= dy.abs() {
        if dx > 0.0 {
            CropRegion { x0: 0.0, y0: 0.0, x1: p, y1: 1.0 }
        } else {
            CropRegion { x0: 1.0 - p, y0: 0.0, x1: 1.0, y1: 1.0 }
        }
    } else if dy > 0.0 {
        CropRegion { x0: 0.0, y0: 0.0, x1: 1.0, y1: p }
    } else {
        CropRegion { x0: 0.0, y0: 1.0 - p, x1: 1.0, y1: 1.0 }
    }
}

/// Largest distance the body can have moved from `prev` during a VIO job of
/// `t_vio_s` seconds: `|v + a*t| * t`.
pub fn max_displacement(vel: Vec3, accel: Vec3, t_vio_s: f64) -> f64 {
    (vel + accel * t_vio_s).norm() * t_vio_s
}

/// Pulls `pose` back onto the sphere of radius `r` around `prev` if it lies
/// outside. The result never exceeds `r` from `prev`.
pub fn clamp_to_radius(pose: Vec3, prev: Vec3, r: f64) -> Vec3 {
    let diff = pose - prev;
    let d = diff.norm();
    if d <= r {
        return pose;
    }
    let mut f = r / d;
    loop {
        let cand = prev + diff * f;
        if cand.distance(prev) <= r {
            return cand;
        }
        f *= 1.0 - f64::EPSILON;
    }
}

/// Bounds a fresh VIO pose by the maximum displacement from the previous raw pose.
pub fn error_bound(pose: Vec3, prev: Option<Vec3>, vel: Vec3, accel: Vec3, t_vio: Duration) -> Vec3 {
    match prev {
        None => pose,
        Some(prev) => clamp_to_radius(pose, prev, max_displacement(vel, accel, t_vio.as_secs_f64())),
    }
}

pub fn decide(v: f64, w: f64, accel: Vec3, profile: &MvioProfile) -> MvioDecision {
    let s = motion_score(v, w, profile);
    if s <= 0.0 {
        return MvioDecision { s, p: 1.0, l: profile.l_max, crop_direction: image_direction(accel) };
    }
    MvioDecision {
        s,
        p: crop_fraction(s, profile),
        l: pyramid_level(s, profile),
        crop_direction: image_direction(accel),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof() -> MvioProfile {
        MvioProfile {
            b_vio: Duration::from_ms(40),
            v_b: 0.5,
            w_b: 0.3,
            s_max: 8.0,
            e_req: 0.1,
            l_min: 1,
            l_max: 4,
            p_min: 0.25,
        }
    }

    #[test]
    fn score_anchors() {
        let p = prof();
        assert_eq!(motion_score(0.5, 0.3, &p), 0.0);
        assert!((motion_score(1.0, 0.3, &p) - 1.0).abs() < 1e-12);
        assert!((motion_score(0.25, 0.15, &p) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn crop_anchors() {
        let p = prof();
        assert_eq!(crop_fraction(p.s_max, &p), p.p_min);
        assert!((crop_fraction(p.s_max / 2.0, &p) - 0.5).abs() < 1e-12);
        assert!(crop_fraction(1e-9, &p) > 1.0 - 1e-9);
        assert_eq!(crop_fraction(-1.0, &p), 1.0);
        assert_eq!(crop_fraction(3.0 * p.s_max, &p), p.p_min);
    }

    #[test]
    fn level_segments() {
        let p = prof();
        let w = p.s_max / 4.0;
        assert_eq!(pyramid_level(p.s_max / 8.0, &p), 4);
        assert_eq!(pyramid_level(w, &p), 4);
        assert_eq!(pyramid_level(w * 1.0001, &p), 3);
        assert_eq!(pyramid_level(2.0 * w, &p), 3);
        assert_eq!(pyramid_level(2.5 * w, &p), 2);
        assert_eq!(pyramid_level(p.s_max, &p), 1);
        assert_eq!(pyramid_level(2.0 * p.s_max, &p), 1);
    }

    #[test]
    fn crop_geometry() {
        assert_eq!(crop_image(1.0, Vec3::new(1.0, 0.0, 0.0)), CropRegion::FULL);
        let c = crop_image(0.5, Vec3::new(3.0, 0.0, 0.0));
        assert_eq!(c, CropRegion { x0: 0.0, y0: 0.0, x1: 0.5, y1: 1.0 });
        let c = crop_image(0.64, Vec3::ZERO);
        assert!((c.x1 - c.x0 - 0.8).abs() < 1e-12 && (c.x0 - 0.1).abs() < 1e-12);
        assert!((c.area() - 0.64).abs() < 1e-12);
        let c = crop_image(0.7, Vec3::new(0.1, -2.0, 0.0));
        assert!((c.area() - 0.7).abs() < 1e-12 && c.y1 == 1.0);
    }

    #[test]
    fn bounding_examples() {
        let prev = Some(Vec3::ZERO);
        let inside = Vec3::new(0.01, 0.0, 0.0);
        assert_eq!(error_bound(inside, prev, Vec3::new(1.0, 0.0, 0.0), Vec3::ZERO, Duration::from_ms(40)), inside);
        assert_eq!(clamp_to_radius(Vec3::new(2.0, 0.0, 0.0), Vec3::ZERO, 1.0), Vec3::new(1.0, 0.0, 0.0));
        let snapped = error_bound(Vec3::new(0.3, 0.1, 0.0), prev, Vec3::ZERO, Vec3::ZERO, Duration::from_ms(40));
        assert_eq!(snapped, Vec3::ZERO);
        let first = Vec3::new(5.0, 5.0, 5.0);
        assert_eq!(error_bound(first, None, Vec3::ZERO, Vec3::ZERO, Duration::from_ms(40)), first);
    }

    #[test]
    fn decisions() {
        let p = prof();
        let d = decide(0.0, 0.0, Vec3::ZERO, &p);
        assert_eq!((d.p, d.l), (1.0, 4));
        // S = 6 + 2 = S_max
        let d = decide(0.5 * 7.0, 0.3 * 3.0, Vec3::ZERO, &p);
        assert!((d.s - 8.0).abs() < 1e-12);
        assert_eq!((d.p, d.l), (p.p_min, 1));
        let d = decide(0.5 * 1.000_001, 0.3, Vec3::ZERO, &p);
        assert!(d.p < 1.0 && d.p > 0.999 && d.l == 4);
    }
}
