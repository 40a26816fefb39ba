//! Scene-dependent foveated rendering. Picks the foveation factor gamma from
//! the visible object count, splits the viewport into inner / middle / outer
//! zones, and centres the inner zone on the mean of the object centres.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::time::Duration;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZoneFormula {
    /// Inner box of side `sqrt(gamma)`, middle box of side `sqrt(gamma) + offset`.
    #[default]
    Consistent,
    /// Area formulas taken verbatim: inner `gamma`, middle `(gamma + offset)^2 - gamma`.
    Literal,
}

impl FromStr for ZoneFormula {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "consistent" => Ok(ZoneFormula::Consistent),
            "literal" => Ok(ZoneFormula::Literal),
            _ => Err(Error::Config(format!("unknown zone_formula `{s}` (expected consistent or literal)"))),
        }
    }
}

impl fmt::Display for ZoneFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ZoneFormula::Consistent => "consistent",
            ZoneFormula::Literal => "literal",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfrProfile {
    pub b_srr: Duration,
    /// Objects per millisecond of render time.
    pub k: f64,
    /// Normalised quality slope. Used both in the gamma formula and the quality model.
    pub m: f64,
    /// Full-resolution render time at `n_b` objects, ms.
    pub c_ms: f64,
    pub n_b: f64,
    pub r_max: Option<f64>,
    pub offset: f64,
    pub gamma_floor: f64,
    pub zone_formula: ZoneFormula,
}

impl SfrProfile {
    pub fn b_srr_ms(&self) -> f64 {
        self.b_srr.as_ms_f64()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Zones {
    pub inner: f64,
    pub middle: f64,
    pub outer: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfrDecision {
    pub gamma: f64,
    pub alpha: f64,
    pub budget_unmet: bool,
    pub zones: Zones,
    pub centroid: [f64; 2],
    /// Inner zone `[x0, y0, x1, y1]`, kept inside the viewport.
    pub inner_box: [f64; 4],
}

/// Foveation factor for quality weight `alpha` and `n` visible objects, clamped to `[gamma_floor, 1]`.
pub fn gamma(alpha: f64, n: f64, p: &SfrProfile) -> f64 {
    let g = 1.0 - (1.0 - alpha) * p.m / alpha - (n - p.n_b) / (alpha * p.k * p.c_ms);
    g.clamp(p.gamma_floor, 1.0)
}

/// Result of the alpha search: `(gamma, alpha, budget_unmet)`.
///
/// Alpha is stepped in integer tenths so that reaching zero is exact.
pub fn optimize(n: f64, p: &SfrProfile) -> (f64, f64, bool) {
    if n <= p.n_b {
        return (1.0, 1.0, false);
    }
    let budget = p.b_srr_ms();
    let mut tenths = 10u32;
    let mut g = gamma(1.0, n, p);
    while p.c_ms * g > budget {
        tenths -= 1;
        if tenths == 0 {
            return (g, 0.0, true);
        }
        g = gamma(tenths as f64 / 10.0, n, p);
    }
    (g, tenths as f64 / 10.0, false)
}

pub fn zones(gamma: f64, offset: f64, formula: ZoneFormula) -> Zones {
    let inner = gamma.clamp(0.0, 1.0);
    let middle = match formula {
        ZoneFormula::Consistent => {
            let side = (inner.sqrt() + offset).min(1.0);
            side * side - inner
        }
        ZoneFormula::Literal => (inner + offset) * (inner + offset) - inner,
    };
    let middle = middle.clamp(0.0, 1.0 - inner);
    Zones { inner, middle, outer: (1.0 - inner - middle).max(0.0) }
}

pub fn centroid(centers: &[[f64; 2]]) -> [f64; 2] {
    if centers.is_empty() {
        return [0.5, 0.5];
    }
    let n = centers.len() as f64;
    let (sx, sy) = centers.iter().fold((0.0, 0.0), |(x, y), c| (x + c[0], y + c[1]));
    [sx / n, sy / n]
}

/// Places a square inner zone of area `gamma` at `center`, shifting it back
/// inside the viewport rather than shrinking it. `r_max` caps the half-diagonal.
pub fn inner_box(gamma: f64, center: [f64; 2], r_max: Option<f64>) -> [f64; 4] {
    let mut side = gamma.clamp(0.0, 1.0).sqrt();
    if let Some(r) = r_max {
        side = side.min(r * std::f64::consts::SQRT_2);
    }
    let half = side / 2.0;
    let place = |c: f64| (c - half).clamp(0.0, 1.0 - side);
    let (x0, y0) = (place(center[0]), place(center[1]));
    [x0, y0, x0 + side, y0 + side]
}

pub fn quality(gamma: f64, p: &SfrProfile) -> f64 {
    (1.0 - p.m * (1.0 - gamma)).clamp(0.0, 1.0)
}

/// Full per-frame SFR decision.
pub fn decide(centers: &[[f64; 2]], n: f64, p: &SfrProfile) -> SfrDecision {
    let (g, alpha, budget_unmet) = optimize(n, p);
    let c = centroid(centers);
    SfrDecision {
        gamma: g,
        alpha,
        budget_unmet,
        zones: zones(g, p.offset, p.zone_formula),
        centroid: c,
        inner_box: inner_box(g, c, p.r_max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof() -> SfrProfile {
        SfrProfile {
            b_srr: Duration::from_ms(5),
            k: 250.0,
            m: 0.25,
            c_ms: 5.0,
            n_b: 7.0,
            r_max: None,
            offset: 0.1,
            gamma_floor: 0.05,
            zone_formula: ZoneFormula::Consistent,
        }
    }

    #[test]
    fn gamma_anchors() {
        let p = prof();
        assert_eq!(gamma(1.0, p.n_b, &p), 1.0);
        assert!((gamma(1.0, p.n_b + p.k * p.c_ms / 2.0, &p) - 0.5).abs() < 1e-12);
        let q = SfrProfile { m: 1.0, ..prof() };
        assert_eq!(gamma(0.5, q.n_b, &q), q.gamma_floor);
    }

    #[test]
    fn no_foveation_at_or_below_base() {
        assert_eq!(optimize(3.0, &prof()), (1.0, 1.0, false));
        assert_eq!(optimize(7.0, &prof()), (1.0, 1.0, false));
    }

    #[test]
    fn loop_skipped_when_calibrated_budget() {
        let (g, a, unmet) = optimize(500.0, &prof());
        assert_eq!((a, unmet), (1.0, false));
        assert!(g < 1.0);
    }

    #[test]
    fn tight_budget_walks_alpha_down() {
        let p = SfrProfile { b_srr: Duration::from_ms(2), ..prof() };
        let (g, a, unmet) = optimize(500.0, &p);
        assert!(!unmet && a < 1.0 && a > 0.0);
        assert!(p.c_ms * g <= 2.0);
        let p = SfrProfile { b_srr: Duration(100), ..prof() };
        let (_, a, unmet) = optimize(500.0, &p);
        assert_eq!((a, unmet), (0.0, true));
    }

    #[test]
    fn zone_examples() {
        let z = zones(1.0, 0.1, ZoneFormula::Consistent);
        assert_eq!((z.inner, z.middle, z.outer), (1.0, 0.0, 0.0));
        let z = zones(0.25, 0.1, ZoneFormula::Literal);
        assert_eq!((z.inner, z.middle), (0.25, 0.0));
        assert!((z.outer - 0.75).abs() < 1e-12);
        let z = zones(0.81, 0.0, ZoneFormula::Consistent);
        assert!(z.middle.abs() < 1e-12 && (z.outer - 0.19).abs() < 1e-12);
        let z = zones(0.25, 0.1, ZoneFormula::Consistent);
        assert!((z.middle - (0.36 - 0.25)).abs() < 1e-12);
        assert!((z.inner + z.middle + z.outer - 1.0).abs() < 1e-9);
    }

    #[test]
    fn centroid_examples() {
        assert_eq!(centroid(&[[0.3, 0.7]]), [0.3, 0.7]);
        assert_eq!(centroid(&[[0.0, 0.0], [1.0, 1.0]]), [0.5, 0.5]);
        assert_eq!(centroid(&[]), [0.5, 0.5]);
    }

    #[test]
    fn inner_box_shifts_inward() {
        let b = inner_box(0.25, [0.95, 0.05], None);
        assert_eq!(b, [0.5, 0.0, 1.0, 0.5]);
        let b = inner_box(1.0, [0.5, 0.5], Some(0.25));
        assert!((b[2] - b[0] - 0.25 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn quality_line() {
        let p = SfrProfile { m: 0.1, ..prof() };
        assert_eq!(quality(1.0, &p), 1.0);
        assert!((quality(0.5, &p) - 0.95).abs() < 1e-12);
        assert!((quality(0.0, &p) - 0.9).abs() < 1e-12);
    }
}
