//! TOML experiment configuration. Every field has a default, so an empty file
//! is a valid config and `ExperimentConfig::default()` prints the full schema.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profile::Platform;
use crate::sched::{PeriodConfig, PolicyKind};
use crate::sfr::ZoneFormula;
use crate::time::Duration;
use crate::workload::{AppPreset, CostErrorModel, MotionClass};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Name used in reports. Empty means `<policy>-<platform>-<app>`.
    pub label: String,
    /// illixr | illixr-op | boxr-s | boxr
    pub policy: String,
    /// pc | xavier | nano | custom
    pub platform: String,
    /// Slowdown relative to pc, only read when `platform = "custom"`.
    pub platform_scale: f64,
    /// sponza | materials | gldemo | platformer | custom:<objects>
    pub app: String,
    pub seed: u64,
    pub duration_ms: u64,
    pub warmup_ms: u64,
    pub target_fps: f64,
    /// Overrides the frame period derived from `target_fps` when non-zero.
    pub frame_period_us: u64,
    pub output_dir: String,
    pub events_log: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            label: String::new(),
            policy: "boxr".into(),
            platform: "pc".into(),
            platform_scale: 1.0,
            app: "gldemo".into(),
            seed: 7,
            duration_ms: 60_000,
            warmup_ms: 500,
            target_fps: 90.0,
            frame_period_us: 0,
            output_dir: "out".into(),
            events_log: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeriodSection {
    pub cam_us: u64,
    pub imu_us: u64,
    /// Baseline SR period; 0 means the frame period.
    pub sr_period_us: u64,
    /// Baseline ATW period; 0 means the frame period.
    pub atw_period_us: u64,
    /// Grid-search the illixr-op periods instead of reading them.
    pub auto_tune: bool,
    /// Simulated time each auto-tuning candidate runs for (capped at the run duration).
    pub tune_window_ms: u64,
}

impl Default for PeriodSection {
    fn default() -> Self {
        Self { cam_us: 50_000, imu_us: 5_000, sr_period_us: 0, atw_period_us: 0, auto_tune: false, tune_window_ms: 20_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceSection {
    /// Motion CSV to replay instead of generating one. Empty means generate.
    pub motion_file: String,
    /// Scene CSV to replay instead of generating one. Empty means generate.
    pub scene_file: String,
    /// Occupancy of the No / Small / Medium / Large motion classes.
    pub mix: [f64; 4],
    /// Seed of the trace the profiler reads the maximum motion from.
    pub calibration_seed: u64,
}

impl Default for TraceSection {
    fn default() -> Self {
        Self {
            motion_file: String::new(),
            scene_file: String::new(),
            mix: MotionClass::DEFAULT_MIX,
            calibration_seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BurstSection {
    pub scene_swaps_per_min: f64,
    pub swap_objects: u32,
    pub motion_spikes_per_min: f64,
    /// Peak acceleration of a motion spike, m/s^2.
    pub spike_accel: f64,
}

impl Default for BurstSection {
    fn default() -> Self {
        Self { scene_swaps_per_min: 0.0, swap_objects: 2500, motion_spikes_per_min: 0.0, spike_accel: 12.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MvioSection {
    pub e_req_m: f64,
    /// VIO time budget; 0 means the profiled t_VIO.
    pub budget_override_us: u64,
}

impl Default for MvioSection {
    fn default() -> Self {
        Self { e_req_m: 0.1, budget_override_us: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SfrSection {
    pub offset: f64,
    pub gamma_floor: f64,
    pub zone_formula: ZoneFormula,
    /// Inner-zone half-diagonal cap; 0 means no cap.
    pub r_max: f64,
    /// SRR time budget; 0 means the profiled t_SRR.
    pub budget_override_us: u64,
}

impl Default for SfrSection {
    fn default() -> Self {
        Self { offset: 0.1, gamma_floor: 0.05, zone_formula: ZoneFormula::Consistent, r_max: 0.0, budget_override_us: 0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub periods: PeriodSection,
    pub trace: TraceSection,
    pub bursts: BurstSection,
    pub mvio: MvioSection,
    pub sfr: SfrSection,
    /// Cost, error and quality model on the pc platform. The app preset sets
    /// `render.n_b` and `render.k`; the platform scale is applied on top.
    pub model: CostErrorModel,
}

fn nonzero(us: u64) -> Option<Duration> {
    (us > 0).then_some(Duration(us))
}

impl ExperimentConfig {
    pub const PRESETS: [&'static str; 2] = ["default", "illixr-120"];

    /// Named starting points. `illixr-120` is the stock ILLIXR setup with SR
    /// and ATW both at 8 ms.
    pub fn preset(name: &str) -> Result<Self> {
        let mut c = Self::default();
        match name {
            "default" => {}
            "illixr-120" => {
                c.run.policy = "illixr".into();
                c.run.frame_period_us = 8000;
            }
            other => return Err(Error::UnknownPreset(other.to_string())),
        }
        Ok(c)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }

    pub fn platform(&self) -> Result<Platform> {
        match self.run.platform.parse::<Platform>() {
            Ok(Platform::Custom(_)) => Ok(Platform::Custom(self.run.platform_scale)),
            other => other.map_err(|_| Error::Config(format!("unknown platform `{}`", self.run.platform))),
        }
    }

    pub fn app(&self) -> Result<AppPreset> {
        self.run.app.parse().map_err(|_| Error::Config(format!("unknown app preset `{}`", self.run.app)))
    }

    /// The policy with illixr-op periods filled from the config. Auto-tuned
    /// runs get their periods from the harness.
    pub fn policy(&self) -> Result<PolicyKind> {
        let policy: PolicyKind = self.run.policy.parse()?;
        if let PolicyKind::IllixrOp { .. } = policy {
            return Ok(PolicyKind::IllixrOp { sr_period: self.sr_period(), atw_period: self.atw_period() });
        }
        Ok(policy)
    }

    pub fn frame_period(&self) -> Duration {
        match nonzero(self.run.frame_period_us) {
            Some(d) => d,
            None => Duration((1e6 / self.run.target_fps).round() as u64),
        }
    }

    pub fn sr_period(&self) -> Duration {
        nonzero(self.periods.sr_period_us).unwrap_or_else(|| self.frame_period())
    }

    pub fn atw_period(&self) -> Duration {
        nonzero(self.periods.atw_period_us).unwrap_or_else(|| self.frame_period())
    }

    /// Periods for the chosen policy. ATW always runs at the frame period
    /// under BOXR; the baselines may override both threads.
    pub fn periods(&self) -> Result<PeriodConfig> {
        let policy = self.policy()?;
        let (t_sr, t_atw) = match policy {
            PolicyKind::IllixrOp { sr_period, atw_period } => (sr_period, atw_period),
            PolicyKind::Illixr => (self.sr_period(), self.atw_period()),
            PolicyKind::BoxrS | PolicyKind::Boxr => (self.frame_period(), self.frame_period()),
        };
        let cam = Duration(self.periods.cam_us);
        Ok(PeriodConfig { t_cam: cam, t_vio: cam, t_imu: Duration(self.periods.imu_us), t_atw, t_sr })
    }

    pub fn label(&self) -> String {
        if self.run.label.is_empty() {
            format!("{}-{}-{}", self.run.policy, self.run.platform, self.run.app)
        } else {
            self.run.label.clone()
        }
    }

    /// Ground-truth model for this platform and app.
    pub fn model(&self) -> Result<CostErrorModel> {
        let app = self.app()?;
        let mut m = self.model.clone();
        m.render.n_b = app.base_objects() as f64;
        m.render.k = app.render_k();
        Ok(m.scaled(self.platform()?.scale()))
    }

    pub fn mvio_budget(&self) -> Option<Duration> {
        nonzero(self.mvio.budget_override_us)
    }

    pub fn sfr_budget(&self) -> Option<Duration> {
        nonzero(self.sfr.budget_override_us)
    }

    pub fn r_max(&self) -> Option<f64> {
        (self.sfr.r_max > 0.0).then_some(self.sfr.r_max)
    }

    pub fn validate(&self) -> Result<()> {
        let policy = self.policy()?;
        self.app()?;
        let platform = self.platform()?;
        if platform.scale() <= 0.0 || platform.scale().is_nan() {
            return Err(Error::Config("platform_scale must be positive".into()));
        }
        if (self.run.target_fps <= 0.0 || self.run.target_fps.is_nan()) && self.run.frame_period_us == 0 {
            return Err(Error::Config("target_fps must be positive".into()));
        }
        let sum: f64 = self.trace.mix.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.trace.mix.iter().any(|&x| x < 0.0) {
            return Err(Error::Config(format!("motion mix must be non-negative and sum to 1 (got {sum})")));
        }
        if let PolicyKind::IllixrOp { .. } = policy {
            if !self.periods.auto_tune && (self.periods.sr_period_us == 0 || self.periods.atw_period_us == 0) {
                return Err(Error::Config("illixr-op needs sr_period_us and atw_period_us, or auto_tune = true".into()));
            }
        }
        if self.bursts.scene_swaps_per_min < 0.0 || self.bursts.motion_spikes_per_min < 0.0 {
            return Err(Error::Config("burst rates must be non-negative".into()));
        }
        if self.mvio.e_req_m <= 0.0 || self.mvio.e_req_m.is_nan() {
            return Err(Error::Config("e_req_m must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.sfr.gamma_floor) || self.sfr.offset < 0.0 {
            return Err(Error::Config("gamma_floor must lie in [0, 1] and offset must be non-negative".into()));
        }
        for (name, path) in [("motion_file", &self.trace.motion_file), ("scene_file", &self.trace.scene_file)] {
            if !path.is_empty() && !Path::new(path).exists() {
                return Err(Error::Config(format!("{name} `{path}` does not exist")));
            }
        }
        self.periods()?.validate()
    }
}
