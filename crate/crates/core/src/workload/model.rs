//! Parametric ground-truth models for task execution time, VIO position error,
//! and rendering quality. All times are milliseconds (f64) until converted to
//! [`Duration`] at the edge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pipeline::TaskKind;
use crate::time::Duration;

/// VIO execution time:
/// `t = t_ref * (c0 + cv*v + cw*w)/(c0 + cv*v_ref + cw*w_ref) * p^eta * (h0 + h1*l)/(h0 + h1*l_max)`.
///
/// Normalised so that the reference motion at full image and top pyramid level
/// costs exactly `t_ref_ms`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VioCostModel {
    pub t_ref_ms: f64,
    pub v_ref: f64,
    pub w_ref: f64,
    pub c0: f64,
    pub cv: f64,
    pub cw: f64,
    pub eta: f64,
    pub h0: f64,
    pub h1: f64,
    pub l_min: u32,
    pub l_max: u32,
}

impl Default for VioCostModel {
    fn default() -> Self {
        Self {
            t_ref_ms: 40.0,
            v_ref: 0.5,
            w_ref: 0.3,
            c0: 1.0,
            cv: 0.3,
            cw: 1.0 / 3.0,
            eta: 2.0,
            h0: 1.0,
            h1: 0.25,
            l_min: 1,
            l_max: 4,
        }
    }
}

impl VioCostModel {
    fn motion_factor(&self, v: f64, w: f64) -> f64 {
        (self.c0 + self.cv * v + self.cw * w) / (self.c0 + self.cv * self.v_ref + self.cw * self.w_ref)
    }

    fn level_factor(&self, l: u32) -> f64 {
        (self.h0 + self.h1 * l as f64) / (self.h0 + self.h1 * self.l_max as f64)
    }

    pub fn check_knobs(&self, p: f64, l: u32) -> Result<()> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::OutOfRange(format!("crop fraction p={p} outside (0, 1]")));
        }
        if l < self.l_min || l > self.l_max {
            return Err(Error::OutOfRange(format!(
                "pyramid level {l} outside [{}, {}]",
                self.l_min, self.l_max
            )));
        }
        Ok(())
    }

    pub fn time_ms(&self, v: f64, w: f64, p: f64, l: u32) -> Result<f64> {
        self.check_knobs(p, l)?;
        Ok(self.t_ref_ms * self.motion_factor(v, w) * p.powf(self.eta) * self.level_factor(l))
    }
}

/// VIO position error: `e(p, l) = e0 * exp(kappa_p * (1 - p)) + kappa_l * (l_max - l)`, metres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ErrorModel {
    pub e0: f64,
    pub kappa_p: f64,
    pub kappa_l: f64,
}

impl Default for ErrorModel {
    fn default() -> Self {
        Self { e0: 0.02, kappa_p: 3.0, kappa_l: 0.005 }
    }
}

impl ErrorModel {
    pub fn error_m(&self, p: f64, l: u32, l_max: u32) -> f64 {
        self.e0 * (self.kappa_p * (1.0 - p)).exp() + self.kappa_l * (l_max as f64 - l as f64)
    }
}

/// Scene render (SRR) time: `R(n, gamma) = gamma * (c + (n - n_b) / k)`.
///
/// `k` is objects per millisecond. The bracket is floored at 10% of `c` so
/// that near-empty scenes still cost something.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderModel {
    pub c_ms: f64,
    pub n_b: f64,
    pub k: f64,
}

impl Default for RenderModel {
    fn default() -> Self {
        Self { c_ms: 5.0, n_b: 7.0, k: 250.0 }
    }
}

impl RenderModel {
    pub fn time_ms(&self, n: f64, gamma: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::OutOfRange(format!("gamma={gamma} outside [0, 1]")));
        }
        let full = (self.c_ms + (n - self.n_b) / self.k).max(0.1 * self.c_ms);
        Ok(gamma * full)
    }
}

/// Frame quality: `q(gamma) = q_max - slope * (1 - gamma)`, clamped to [0, 1].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityModel {
    pub q_max: f64,
    pub slope: f64,
}

impl Default for QualityModel {
    fn default() -> Self {
        Self { q_max: 1.0, slope: 0.25 }
    }
}

impl QualityModel {
    pub fn quality(&self, gamma: f64) -> f64 {
        (self.q_max - self.slope * (1.0 - gamma)).clamp(0.0, 1.0)
    }
}

/// Inputs a task's cost depends on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CostContext {
    Vio { v: f64, w: f64, p: f64, l: u32 },
    Render { n: f64, gamma: f64 },
    Fixed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostErrorModel {
    pub vio: VioCostModel,
    pub error: ErrorModel,
    pub render: RenderModel,
    pub quality: QualityModel,
    pub t_imui_ms: f64,
    pub t_sr_ms: f64,
    pub t_atw_ms: f64,
    pub t_atwr_ms: f64,
}

impl Default for CostErrorModel {
    fn default() -> Self {
        Self {
            vio: VioCostModel::default(),
            error: ErrorModel::default(),
            render: RenderModel::default(),
            quality: QualityModel::default(),
            t_imui_ms: 0.2,
            t_sr_ms: 0.5,
            t_atw_ms: 1.5,
            t_atwr_ms: 2.0,
        }
    }
}

impl CostErrorModel {
    /// Multiplies every execution time by `factor` (a slower platform).
    pub fn scaled(mut self, factor: f64) -> Self {
        self.vio.t_ref_ms *= factor;
        self.render.c_ms *= factor;
        self.render.k /= factor;
        self.t_imui_ms *= factor;
        self.t_sr_ms *= factor;
        self.t_atw_ms *= factor;
        self.t_atwr_ms *= factor;
        self
    }

    pub fn cost_ms(&self, task: TaskKind, ctx: CostContext) -> Result<f64> {
        match (task, ctx) {
            (TaskKind::Vio, CostContext::Vio { v, w, p, l }) => self.vio.time_ms(v, w, p, l),
            (TaskKind::Srr, CostContext::Render { n, gamma }) => self.render.time_ms(n, gamma),
            (TaskKind::Imui, _) => Ok(self.t_imui_ms),
            (TaskKind::Sr, _) => Ok(self.t_sr_ms),
            (TaskKind::Atw, _) => Ok(self.t_atw_ms),
            (TaskKind::Atwr, _) => Ok(self.t_atwr_ms),
            (task, ctx) => Err(Error::OutOfRange(format!("{task:?} cannot be costed with {ctx:?}"))),
        }
    }

    pub fn evaluate_cost(&self, task: TaskKind, ctx: CostContext) -> Result<Duration> {
        self.cost_ms(task, ctx).map(Duration::from_ms_f64)
    }

    pub fn error_m(&self, p: f64, l: u32) -> f64 {
        self.error.error_m(p, l, self.vio.l_max)
    }
}
