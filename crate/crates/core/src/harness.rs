//! Experiment harness: turns a config into traces, a platform profile and a
//! simulation, and reads/writes the run artifacts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::metrics::{self, Comparison, RunSummary};
use crate::pipeline::FrameRecord;
use crate::profile::{self, PlatformProfile};
use crate::sched::{PeriodConfig, PolicyKind};
use crate::sim::{self, SimInput, SimOutput};
use crate::time::{Duration, Instant};
use crate::workload::motion::inject_spikes_evenly;
use crate::workload::scene::inject_swaps_evenly;
use crate::workload::trace_io::{motion_from_csv, scene_from_csv};
use crate::workload::{generate_motion, generate_scene, CostErrorModel, MotionClass, MotionParams, MotionTrace, SceneTrace};

/// Traces run this far past the configured duration so late jobs still find samples.
const TRACE_MARGIN_MS: u64 = 1000;
const CALIBRATION_MS: i64 = 60_000;

/// Upper end of the illixr-op auto-tuning grid, in ms. The grid starts at
/// the IMU period, the shortest period the config accepts.
pub const TUNE_MAX_MS: u64 = 32;

/// Everything a run needs besides the policy knobs.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub model: CostErrorModel,
    pub profile: PlatformProfile,
    pub motion: MotionTrace,
    pub scene: SceneTrace,
}

fn per_minute(rate: f64, duration_ms: u64) -> usize {
    (rate * duration_ms as f64 / 60_000.0).round() as usize
}

pub fn profile_for(config: &ExperimentConfig) -> Result<(CostErrorModel, PlatformProfile)> {
    let model = config.model()?;
    let calib = generate_motion(CALIBRATION_MS, MotionClass::DEFAULT_MIX, config.trace.calibration_seed, &MotionParams::default())?;
    let app = config.app()?;
    let p = profile::profile(
        &model,
        &config.platform()?.to_string(),
        &app.name(),
        app.base_objects() as f64,
        config.mvio.e_req_m,
        &calib,
    )?;
    Ok((model, p))
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let (model, profile) = profile_for(config)?;
    let seed = config.run.seed;
    let span = config.run.duration_ms + TRACE_MARGIN_MS;
    let mut motion = if config.trace.motion_file.is_empty() {
        generate_motion(span as i64, config.trace.mix, seed, &MotionParams::default())?
    } else {
        let path = Path::new(&config.trace.motion_file);
        motion_from_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?
    };
    let spikes = per_minute(config.bursts.motion_spikes_per_min, config.run.duration_ms);
    if spikes > 0 {
        motion = inject_spikes_evenly(&motion, spikes, config.bursts.spike_accel, seed.wrapping_add(3))?;
    }
    let mut scene = if config.trace.scene_file.is_empty() {
        generate_scene(config.app()?, span, seed.wrapping_add(1))
    } else {
        let path = Path::new(&config.trace.scene_file);
        scene_from_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?
    };
    let swaps = per_minute(config.bursts.scene_swaps_per_min, config.run.duration_ms);
    if swaps > 0 {
        scene = inject_swaps_evenly(&scene, swaps, config.bursts.swap_objects, seed.wrapping_add(2))?;
    }
    Ok(Prepared { model, profile, motion, scene })
}

/// Result of one run.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    /// Config with auto-tuned periods written back, so re-running it reproduces the run.
    pub config: ExperimentConfig,
    pub policy: PolicyKind,
    pub profile: PlatformProfile,
    pub summary: RunSummary,
    pub output: SimOutput,
}

fn simulate_with(config: &ExperimentConfig, prep: &Prepared, policy: PolicyKind, periods: PeriodConfig) -> Result<SimOutput> {
    let input = SimInput {
        policy,
        periods,
        model: &prep.model,
        profile: &prep.profile,
        mvio: prep.profile.mvio(config.mvio_budget()),
        sfr: prep.profile.sfr(config.sfr_budget(), config.sfr.offset, config.sfr.gamma_floor, config.sfr.zone_formula, config.r_max()),
        motion: &prep.motion,
        scene: &prep.scene,
        duration: Duration::from_ms(config.run.duration_ms),
        warmup: Duration::from_ms(config.run.warmup_ms),
        seed: config.run.seed,
        record_events: config.run.events_log,
    };
    sim::simulate(&input)
}

fn summarize(config: &ExperimentConfig, policy: &PolicyKind, out: &SimOutput) -> RunSummary {
    let duration = Duration::from_ms(config.run.duration_ms);
    let warmup = Duration::from_ms(config.run.warmup_ms);
    let ctx = out.context(&config.label(), policy, config.run.seed, duration, warmup);
    metrics::summarize(&out.frames, ctx)
}

/// Picks the illixr-op `(sr, atw)` periods minimising mean M2D + mean C2D
/// over a 1 ms grid. Ties go to the smaller SR period, then the smaller ATW.
pub fn auto_tune(config: &ExperimentConfig, prep: &Prepared) -> Result<(Duration, Duration)> {
    let mut base = config.clone();
    base.run.events_log = false;
    base.run.duration_ms = base.run.duration_ms.min(base.periods.tune_window_ms);
    let lo = base.periods.imu_us.div_ceil(1000).max(1);
    let grid = lo..=TUNE_MAX_MS.max(lo);
    let candidates: Vec<(u64, u64)> =
        grid.clone().flat_map(|sr| grid.clone().map(move |atw| (sr, atw))).collect();
    let scored: Vec<Result<(f64, u64, u64)>> = candidates
        .par_iter()
        .map(|&(sr, atw)| {
            let policy = PolicyKind::IllixrOp { sr_period: Duration::from_ms(sr), atw_period: Duration::from_ms(atw) };
            let mut c = base.clone();
            c.periods.sr_period_us = sr * 1000;
            c.periods.atw_period_us = atw * 1000;
            let periods = PeriodConfig { t_sr: Duration::from_ms(sr), t_atw: Duration::from_ms(atw), ..c.periods()? };
            let out = simulate_with(&c, prep, policy, periods)?;
            let s = summarize(&c, &policy, &out);
            let score = if s.empty { f64::INFINITY } else { s.m2d_mean_ms() + s.c2d_mean_ms() };
            Ok((score, sr, atw))
        })
        .collect();
    let mut best: Option<(f64, u64, u64)> = None;
    for r in scored {
        let cand = r?;
        if best.is_none_or(|b| cand.0 < b.0) {
            best = Some(cand);
        }
    }
    let (_, sr, atw) = best.expect("tuning grid is non-empty");
    Ok((Duration::from_ms(sr), Duration::from_ms(atw)))
}

/// Runs one configured experiment in memory.
pub fn run(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let prep = prepare(config)?;
    run_prepared(config, &prep)
}

pub fn run_prepared(config: &ExperimentConfig, prep: &Prepared) -> Result<RunArtifacts> {
    let mut config = config.clone();
    let mut policy = config.policy()?;
    if let PolicyKind::IllixrOp { .. } = policy {
        if config.periods.auto_tune {
            let (sr, atw) = auto_tune(&config, prep)?;
            config.periods.auto_tune = false;
            config.periods.sr_period_us = sr.as_us();
            config.periods.atw_period_us = atw.as_us();
            policy = config.policy()?;
        }
    }
    let out = simulate_with(&config, prep, policy, config.periods()?)?;
    let summary = summarize(&config, &policy, &out);
    Ok(RunArtifacts { config, policy, profile: prep.profile.clone(), summary, output: out })
}

// ---- artifacts ----

pub const FRAMES_HEADER: &str =
    "frame_id,output_us,imu_ts_us,cam_ts_us,m2d_us,c2d_us,quality,p,l,gamma,alpha,budget_unmet,motion_class";

pub fn frames_csv(frames: &[FrameRecord]) -> String {
    let mut s = String::with_capacity(64 * (frames.len() + 1));
    s.push_str(FRAMES_HEADER);
    s.push('\n');
    for f in frames {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f.frame_id,
            f.output_ts.as_us(),
            f.imu_ts.as_us(),
            f.cam_ts.as_us(),
            f.m2d().as_us(),
            f.c2d().as_us(),
            f.quality,
            f.p,
            f.l,
            f.gamma,
            f.alpha,
            u8::from(f.budget_unmet),
            f.motion_class.name()
        );
    }
    s
}

/// Parses a frames.csv back into records. The motion score is not persisted
/// and comes back as zero.
pub fn frames_from_csv(text: &str) -> Result<Vec<FrameRecord>> {
    let bad = |line: usize, msg: &str| Error::TraceFormat { line, msg: msg.to_string() };
    let mut out = Vec::new();
    for (i, row) in text.lines().enumerate().skip(1) {
        let line = i + 1;
        if row.trim().is_empty() {
            continue;
        }
        let c: Vec<&str> = row.split(',').collect();
        if c.len() != 13 {
            return Err(bad(line, "expected 13 columns"));
        }
        let u = |k: usize| c[k].parse::<u64>().map_err(|_| bad(line, "bad integer"));
        let f = |k: usize| c[k].parse::<f64>().map_err(|_| bad(line, "bad number"));
        let class = MotionClass::ALL
            .into_iter()
            .find(|m| m.name() == c[12])
            .ok_or_else(|| bad(line, "unknown motion class"))?;
        out.push(FrameRecord {
            frame_id: u(0)?,
            output_ts: Instant(u(1)?),
            imu_ts: Instant(u(2)?),
            cam_ts: Instant(u(3)?),
            quality: f(6)?,
            p: f(7)?,
            l: u(8)? as u32,
            s: 0.0,
            gamma: f(9)?,
            alpha: f(10)?,
            budget_unmet: u(11)? != 0,
            motion_class: class,
        });
    }
    Ok(out)
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn summary_json(summary: &RunSummary) -> String {
    serde_json::to_string_pretty(summary).expect("summary is serialisable") + "\n"
}

/// Writes frames.csv, summary.json, config.toml, profile.json and, when
/// enabled, events.log into `dir`. Returns the written paths.
pub fn write_artifacts(dir: &Path, art: &RunArtifacts) -> Result<Vec<PathBuf>> {
    let mut files = vec![
        (dir.join("frames.csv"), frames_csv(&art.output.frames)),
        (dir.join("summary.json"), summary_json(&art.summary)),
        (dir.join("config.toml"), art.config.to_toml()),
        (dir.join("profile.json"), serde_json::to_string_pretty(&art.profile).expect("profile is serialisable") + "\n"),
    ];
    if art.config.run.events_log {
        files.push((dir.join("events.log"), sim::event_log_text(&art.output.events)));
    }
    for (path, text) in &files {
        write_atomic(path, text.as_bytes())?;
    }
    Ok(files.into_iter().map(|(p, _)| p).collect())
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json { path: path.to_path_buf(), msg: e.to_string() })
}

// ---- sweeps ----

pub const SWEEP_AXES: [&str; 5] = ["sr_period", "atw_period", "policy", "scene_swaps_per_min", "motion_spikes_per_min"];

/// Applies one sweep value to a copy of `config`. Period values are in ms.
pub fn apply_axis(config: &ExperimentConfig, axis: &str, value: &str) -> Result<ExperimentConfig> {
    let mut c = config.clone();
    let num = || value.parse::<f64>().map_err(|_| Error::Config(format!("sweep value `{value}` is not a number")));
    match axis {
        "sr_period" => c.periods.sr_period_us = (num()? * 1000.0).round() as u64,
        "atw_period" => c.periods.atw_period_us = (num()? * 1000.0).round() as u64,
        "policy" => {
            value.parse::<PolicyKind>()?;
            c.run.policy = value.to_string();
        }
        "scene_swaps_per_min" => c.bursts.scene_swaps_per_min = num()?,
        "motion_spikes_per_min" => c.bursts.motion_spikes_per_min = num()?,
        other => {
            return Err(Error::Config(format!("unknown sweep axis `{other}` (expected one of {})", SWEEP_AXES.join(", "))))
        }
    }
    c.run.label = format!("{}={value}", axis);
    c.validate()?;
    Ok(c)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub axis: String,
    pub values: Vec<String>,
    pub summaries: Vec<RunSummary>,
    pub comparison: Comparison,
}

/// Runs one experiment per value (in parallel). All members share the trace
/// seed; the first value is the comparison baseline.
pub fn sweep(config: &ExperimentConfig, axis: &str, values: &[String]) -> Result<(SweepResult, Vec<RunArtifacts>)> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let configs: Vec<ExperimentConfig> = values.iter().map(|v| apply_axis(config, axis, v)).collect::<Result<_>>()?;
    let arts: Vec<RunArtifacts> = configs.par_iter().map(run).collect::<Result<_>>()?;
    let summaries: Vec<RunSummary> = arts.iter().map(|a| a.summary.clone()).collect();
    let comparison = metrics::compare(&summaries, 0);
    Ok((SweepResult { axis: axis.to_string(), values: values.to_vec(), summaries, comparison }, arts))
}

/// One entry per run directory that could not be read.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportError {
    pub dir: String,
    pub error: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub comparison: Option<Comparison>,
    pub errors: Vec<ReportError>,
}

/// Compares the `summary.json` files of several run directories; the first
/// readable one is the baseline.
pub fn report(dirs: &[PathBuf]) -> Report {
    let mut summaries = Vec::new();
    let mut errors = Vec::new();
    for d in dirs {
        match read_summary(&d.join("summary.json")) {
            Ok(s) => summaries.push(s),
            Err(e) => errors.push(ReportError { dir: d.display().to_string(), error: e.to_string() }),
        }
    }
    let comparison = (!summaries.is_empty()).then(|| metrics::compare(&summaries, 0));
    Report { comparison, errors }
}
