//! Platform profiling. Runs calibration sweeps against the ground-truth cost,
//! error and quality models and condenses them into the constants the
//! schedulers and controllers rely on.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mvio::MvioProfile;
use crate::sfr::{SfrProfile, ZoneFormula};
use crate::time::Duration;
use crate::workload::{CostErrorModel, MotionTrace};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Platform {
    Pc,
    Xavier,
    Nano,
    /// Arbitrary slowdown relative to `Pc`.
    Custom(f64),
}

impl Platform {
    pub const NAMED: [Platform; 3] = [Platform::Pc, Platform::Xavier, Platform::Nano];

    pub fn scale(self) -> f64 {
        match self {
            Platform::Pc => 1.0,
            Platform::Xavier => 2.1,
            Platform::Nano => 2.8,
            Platform::Custom(s) => s,
        }
    }
}

impl fmt::Display for Platform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Platform::Pc => f.write_str("pc"),
            Platform::Xavier => f.write_str("xavier"),
            Platform::Nano => f.write_str("nano"),
            Platform::Custom(_) => f.write_str("custom"),
        }
    }
}

impl FromStr for Platform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pc" => Ok(Platform::Pc),
            "xavier" => Ok(Platform::Xavier),
            "nano" => Ok(Platform::Nano),
            "custom" => Ok(Platform::Custom(1.0)),
            _ => Err(Error::UnknownPreset(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlatformProfile {
    pub platform: String,
    pub app: String,
    pub t_vio: Duration,
    pub t_imui: Duration,
    pub t_sr: Duration,
    pub t_srr: Duration,
    pub t_atw: Duration,
    pub t_atwr: Duration,
    pub v_b: f64,
    pub w_b: f64,
    pub s_max: f64,
    pub e_req: f64,
    pub p_min: f64,
    pub l_min: u32,
    pub l_max: u32,
    /// Objects per ms of render time.
    pub k: f64,
    /// Normalised quality slope.
    pub m: f64,
    pub c_ms: f64,
    pub n_b: f64,
}

impl PlatformProfile {
    /// Shortest BOXR chain slot: `t_IMUi + t_SRR + t_ATW + t_ATWR`.
    pub fn chain_lower_bound(&self) -> Duration {
        self.t_imui + self.t_srr + self.t_atw + self.t_atwr
    }

    pub fn mvio(&self, budget_override: Option<Duration>) -> MvioProfile {
        MvioProfile {
            b_vio: budget_override.unwrap_or(self.t_vio),
            v_b: self.v_b,
            w_b: self.w_b,
            s_max: self.s_max,
            e_req: self.e_req,
            l_min: self.l_min,
            l_max: self.l_max,
            p_min: self.p_min,
        }
    }

    pub fn sfr(
        &self,
        budget_override: Option<Duration>,
        offset: f64,
        gamma_floor: f64,
        zone_formula: ZoneFormula,
        r_max: Option<f64>,
    ) -> SfrProfile {
        SfrProfile {
            b_srr: budget_override.unwrap_or(self.t_srr),
            k: self.k,
            m: self.m,
            c_ms: self.c_ms,
            n_b: self.n_b,
            r_max,
            offset,
            gamma_floor,
            zone_formula,
        }
    }
}

fn grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    (0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect()
}

fn check_monotone(name: &str, xs: &[f64], ys: &[f64], increasing: bool) -> Result<()> {
    for i in 1..ys.len() {
        let ok = if increasing { ys[i] >= ys[i - 1] } else { ys[i] <= ys[i - 1] };
        if !ok || !ys[i].is_finite() {
            return Err(Error::Calibration(format!(
                "{name} sweep is not monotone {}: f({}) = {} then f({}) = {}",
                if increasing { "increasing" } else { "decreasing" },
                xs[i - 1],
                ys[i - 1],
                xs[i],
                ys[i]
            )));
        }
    }
    Ok(())
}

/// Solves `f(x) = target` over a sampled, monotone sweep by linear
/// interpolation between the bracketing samples.
fn invert(xs: &[f64], ys: &[f64], target: f64) -> Option<f64> {
    xs.windows(2).zip(ys.windows(2)).find_map(|(x, y)| {
        let (lo, hi) = if y[0] <= y[1] { (y[0], y[1]) } else { (y[1], y[0]) };
        if target < lo || target > hi {
            return None;
        }
        if y[1] == y[0] {
            return Some(x[0]);
        }
        Some(x[0] + (target - y[0]) * (x[1] - x[0]) / (y[1] - y[0]))
    })
}

/// Least-squares slope and intercept.
fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Profiles `model` for an application whose nominal scene has `base_objects`
/// objects. `calibration` supplies the maximum observed motion for `S_max`.
pub fn profile(
    model: &CostErrorModel,
    platform: &str,
    app: &str,
    base_objects: f64,
    e_req: f64,
    calibration: &MotionTrace,
) -> Result<PlatformProfile> {
    let vio = &model.vio;
    let (l_min, l_max) = (vio.l_min, vio.l_max);
    if l_min > l_max || l_min == 0 {
        return Err(Error::Calibration(format!("pyramid levels [{l_min}, {l_max}] are invalid")));
    }

    // Reference VIO time at the reference motion, full image, top level.
    let t_vio_ms = vio.time_ms(vio.v_ref, vio.w_ref, 1.0, l_max)?;

    // Speed and rotation at which the reference time is met.
    let vs = grid(0.0, 4.0 * vio.v_ref.max(0.1), 400);
    let tv: Vec<f64> = vs.iter().map(|&v| vio.time_ms(v, vio.w_ref, 1.0, l_max)).collect::<Result<_>>()?;
    check_monotone("VIO time vs speed", &vs, &tv, true)?;
    let v_b = invert(&vs, &tv, t_vio_ms).ok_or_else(|| Error::Calibration("reference speed not bracketed".into()))?;
    let ws = grid(0.0, 4.0 * vio.w_ref.max(0.1), 400);
    let tw: Vec<f64> = ws.iter().map(|&w| vio.time_ms(v_b, w, 1.0, l_max)).collect::<Result<_>>()?;
    check_monotone("VIO time vs rotation", &ws, &tw, true)?;
    let w_b = invert(&ws, &tw, t_vio_ms).ok_or_else(|| Error::Calibration("reference rotation not bracketed".into()))?;
    if !(v_b > 0.0 && w_b > 0.0) {
        return Err(Error::Calibration(format!("reference motion must be positive (v_B={v_b}, w_B={w_b})")));
    }

    // Error-to-crop mapping at l_min, inverted at e_req. Samples run from p=1
    // down, so error must be non-decreasing along the sweep.
    let ps: Vec<f64> = (0..=99).map(|i| 1.0 - i as f64 * 0.01).collect();
    let es: Vec<f64> = ps.iter().map(|&p| model.error_m(p, l_min)).collect();
    check_monotone("VIO error vs crop", &ps, &es, true)?;
    if es[0] > e_req {
        return Err(Error::Calibration(format!(
            "error {:.4} m at full image and l_min already exceeds e_req {e_req} m",
            es[0]
        )));
    }
    let p_min = match invert(&ps, &es, e_req) {
        // The chord over a convex curve sits above it, so the interpolated p
        // is never below the true inverse. Fall back to the bracketing sample
        // if rounding says otherwise.
        Some(p) if model.error_m(p, l_min) <= e_req => p,
        Some(p) => ps.iter().rev().copied().find(|&q| q >= p && model.error_m(q, l_min) <= e_req).unwrap_or(1.0),
        None => *ps.last().unwrap_or(&1.0),
    };

    // Render time against object count at full resolution.
    let r = &model.render;
    let span = 4.0 * r.k.abs().max(1.0) * r.c_ms.abs().max(0.1);
    let ns = grid(base_objects, base_objects + span, 40);
    let rn: Vec<f64> = ns.iter().map(|&n| r.time_ms(n, 1.0)).collect::<Result<_>>()?;
    check_monotone("render time vs objects", &ns, &rn, true)?;
    let (slope_n, _) = linear_fit(&ns, &rn);
    if slope_n <= 0.0 {
        return Err(Error::Calibration("render time does not grow with object count".into()));
    }
    let k = 1.0 / slope_n;
    let t_srr_ms = r.time_ms(base_objects, 1.0)?;
    let n_b = invert(&ns, &rn, t_srr_ms).unwrap_or(base_objects);

    // Render time and quality against the foveation factor.
    let gs = grid(0.0, 1.0, 20);
    let rg: Vec<f64> = gs.iter().map(|&g| r.time_ms(n_b, g)).collect::<Result<_>>()?;
    check_monotone("render time vs gamma", &gs, &rg, true)?;
    let (c_ms, _) = linear_fit(&gs, &rg);
    let qg: Vec<f64> = gs.iter().map(|&g| model.quality.quality(g)).collect();
    check_monotone("quality vs gamma", &gs, &qg, true)?;
    let (m, _) = linear_fit(&gs, &qg);

    let s_max = (calibration.max_speed() - v_b) / v_b + (calibration.max_rot() - w_b) / w_b;
    if s_max <= 0.0 || s_max.is_nan() {
        return Err(Error::Calibration("calibration trace never exceeds the reference motion".into()));
    }

    Ok(PlatformProfile {
        platform: platform.to_string(),
        app: app.to_string(),
        t_vio: Duration::from_ms_f64(t_vio_ms),
        t_imui: Duration::from_ms_f64(model.t_imui_ms),
        t_sr: Duration::from_ms_f64(model.t_sr_ms),
        t_srr: Duration::from_ms_f64(t_srr_ms),
        t_atw: Duration::from_ms_f64(model.t_atw_ms),
        t_atwr: Duration::from_ms_f64(model.t_atwr_ms),
        v_b,
        w_b,
        s_max,
        e_req,
        p_min,
        l_min,
        l_max,
        k,
        m,
        c_ms,
        n_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{generate_motion, MotionClass, MotionParams};

    fn calib() -> MotionTrace {
        generate_motion(60_000, MotionClass::DEFAULT_MIX, 11, &MotionParams::default()).unwrap()
    }

    #[test]
    fn pc_defaults_recovered() {
        let m = CostErrorModel::default();
        let p = profile(&m, "pc", "gldemo", 7.0, 0.1, &calib()).unwrap();
        assert_eq!(p.t_vio, Duration::from_ms(40));
        assert!((p.v_b - 0.5).abs() < 1e-9 && (p.w_b - 0.3).abs() < 1e-9);
        assert!((p.k - 250.0).abs() < 1e-6);
        assert!((p.c_ms - 5.0).abs() < 1e-9);
        assert!((p.n_b - 7.0).abs() < 1e-9);
        assert!((p.m - 0.25).abs() < 1e-12);
        assert!(p.p_min > 0.51 && p.p_min < 0.53);
        assert!(m.error_m(p.p_min, p.l_min) <= 0.1);
        assert!(p.s_max > 8.0 && p.s_max <= 10.0 + 1e-9);
        assert_eq!(p.chain_lower_bound(), Duration(8700));
    }

    #[test]
    fn scaled_platform() {
        let m = CostErrorModel::default().scaled(2.1);
        let p = profile(&m, "xavier", "gldemo", 7.0, 0.1, &calib()).unwrap();
        assert_eq!(p.t_vio, Duration::from_ms(84));
        assert!((p.k - 250.0 / 2.1).abs() < 1e-6);
    }

    #[test]
    fn non_monotone_model_rejected() {
        let mut m = CostErrorModel::default();
        m.error.kappa_p = -3.0;
        m.error.e0 = 0.05;
        let e = profile(&m, "pc", "gldemo", 7.0, 0.1, &calib()).unwrap_err();
        assert!(matches!(e, Error::Calibration(_)), "{e}");
        let mut m = CostErrorModel::default();
        m.render.k = -100.0;
        assert!(matches!(profile(&m, "pc", "gldemo", 7.0, 0.1, &calib()), Err(Error::Calibration(_))));
    }

    #[test]
    fn unreachable_tolerance_rejected() {
        let m = CostErrorModel::default();
        assert!(matches!(profile(&m, "pc", "gldemo", 7.0, 0.01, &calib()), Err(Error::Calibration(_))));
    }

    #[test]
    fn platform_names() {
        assert_eq!("nano".parse::<Platform>().unwrap().scale(), 2.8);
        assert!("cray".parse::<Platform>().is_err());
    }
}
