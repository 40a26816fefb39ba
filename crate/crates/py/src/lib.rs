//! Python bindings: configs, single runs, sweeps, profiles, and the BOXR
//! period arithmetic, MVIO controller and SFR optimiser as free functions.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use xrlat::config::ExperimentConfig;
use xrlat::geom::Vec3;
use xrlat::harness::{self, RunArtifacts};
use xrlat::metrics::RunSummary;
use xrlat::profile::PlatformProfile;
use xrlat::sched;
use xrlat::{Duration, Error};

create_exception!(xrlat_py, XrlatError, PyException);
create_exception!(xrlat_py, ConfigError, XrlatError);
create_exception!(xrlat_py, InfeasibleScheduleError, XrlatError);
create_exception!(xrlat_py, ArtifactError, XrlatError);

fn to_py(e: Error) -> PyErr {
    let msg = e.to_string();
    match e {
        Error::InfeasibleSchedule { .. } => InfeasibleScheduleError::new_err(msg),
        Error::Io { .. } | Error::Json { .. } => ArtifactError::new_err(msg),
        _ => ConfigError::new_err(msg),
    }
}

/// Experiment configuration. Sections mirror the TOML file.
#[pyclass(name = "Config", module = "xrlat_py")]
#[derive(Clone)]
struct PyConfig {
    inner: ExperimentConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (preset = "default"))]
    fn new(preset: &str) -> PyResult<Self> {
        Ok(Self { inner: ExperimentConfig::preset(preset).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self { inner: ExperimentConfig::from_toml_str(text).map_err(to_py)? })
    }

    #[staticmethod]
    fn presets() -> Vec<&'static str> {
        ExperimentConfig::PRESETS.to_vec()
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    /// Label used in reports; derived from policy/platform/app when unset.
    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }
    #[setter]
    fn set_label(&mut self, v: String) {
        self.inner.run.label = v;
    }

    #[getter]
    fn policy(&self) -> String {
        self.inner.run.policy.clone()
    }
    #[setter]
    fn set_policy(&mut self, v: String) {
        self.inner.run.policy = v;
    }

    #[getter]
    fn platform(&self) -> String {
        self.inner.run.platform.clone()
    }
    #[setter]
    fn set_platform(&mut self, v: String) {
        self.inner.run.platform = v;
    }

    #[getter]
    fn app(&self) -> String {
        self.inner.run.app.clone()
    }
    #[setter]
    fn set_app(&mut self, v: String) {
        self.inner.run.app = v;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.run.seed
    }
    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.run.seed = v;
    }

    #[getter]
    fn duration_ms(&self) -> u64 {
        self.inner.run.duration_ms
    }
    #[setter]
    fn set_duration_ms(&mut self, v: u64) {
        self.inner.run.duration_ms = v;
    }

    #[getter]
    fn events_log(&self) -> bool {
        self.inner.run.events_log
    }
    #[setter]
    fn set_events_log(&mut self, v: bool) {
        self.inner.run.events_log = v;
    }

    #[getter]
    fn scene_swaps_per_min(&self) -> f64 {
        self.inner.bursts.scene_swaps_per_min
    }
    #[setter]
    fn set_scene_swaps_per_min(&mut self, v: f64) {
        self.inner.bursts.scene_swaps_per_min = v;
    }

    #[getter]
    fn motion_spikes_per_min(&self) -> f64 {
        self.inner.bursts.motion_spikes_per_min
    }
    #[setter]
    fn set_motion_spikes_per_min(&mut self, v: f64) {
        self.inner.bursts.motion_spikes_per_min = v;
    }

    #[getter]
    fn auto_tune(&self) -> bool {
        self.inner.periods.auto_tune
    }
    #[setter]
    fn set_auto_tune(&mut self, v: bool) {
        self.inner.periods.auto_tune = v;
    }

    fn __repr__(&self) -> String {
        format!("Config(label={:?}, seed={}, duration_ms={})", self.inner.label(), self.inner.run.seed, self.inner.run.duration_ms)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "None".to_string(), |x| format!("{x:.3}"))
}

#[pyclass(name = "Summary", module = "xrlat_py", frozen)]
#[derive(Clone)]
struct PySummary {
    inner: RunSummary,
}

#[pymethods]
impl PySummary {
    #[getter]
    fn label(&self) -> String {
        self.inner.context.label.clone()
    }
    #[getter]
    fn empty(&self) -> bool {
        self.inner.empty
    }
    #[getter]
    fn frames(&self) -> u64 {
        self.inner.frames
    }
    #[getter]
    fn fps(&self) -> f64 {
        self.inner.fps
    }
    #[getter]
    fn m2d_mean_ms(&self) -> Option<f64> {
        self.inner.m2d.as_ref().map(|s| s.mean_ms())
    }
    #[getter]
    fn m2d_std_ms(&self) -> Option<f64> {
        self.inner.m2d.as_ref().map(|s| s.std_ms())
    }
    #[getter]
    fn c2d_mean_ms(&self) -> Option<f64> {
        self.inner.c2d.as_ref().map(|s| s.mean_ms())
    }
    #[getter]
    fn c2d_std_ms(&self) -> Option<f64> {
        self.inner.c2d.as_ref().map(|s| s.std_ms())
    }
    #[getter]
    fn dropped_imu_pct(&self) -> f64 {
        self.inner.context.dropped_imu_pct
    }
    #[getter]
    fn mean_quality(&self) -> Option<f64> {
        self.inner.mean_quality
    }

    fn to_json(&self) -> String {
        harness::summary_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Summary(label={:?}, frames={}, fps={:.2}, m2d_mean_ms={}, c2d_mean_ms={})",
            self.label(),
            self.inner.frames,
            self.inner.fps,
            opt(self.m2d_mean_ms()),
            opt(self.c2d_mean_ms())
        )
    }
}

/// Output of one simulation.
#[pyclass(name = "RunResult", module = "xrlat_py", frozen)]
struct PyRunResult {
    inner: RunArtifacts,
}

#[pymethods]
impl PyRunResult {
    #[getter]
    fn summary(&self) -> PySummary {
        PySummary { inner: self.inner.summary.clone() }
    }

    /// Effective config, with auto-tuned periods filled in.
    #[getter]
    fn config(&self) -> PyConfig {
        PyConfig { inner: self.inner.config.clone() }
    }

    #[getter]
    fn profile(&self) -> PyProfile {
        PyProfile { inner: self.inner.profile.clone() }
    }

    fn frames_csv(&self) -> String {
        harness::frames_csv(&self.inner.output.frames)
    }

    fn events_log(&self) -> String {
        xrlat::sim::event_log_text(&self.inner.output.events)
    }

    /// Writes the run artifacts into `dir` and returns the written paths.
    fn write(&self, dir: PathBuf) -> PyResult<Vec<PathBuf>> {
        harness::write_artifacts(&dir, &self.inner).map_err(to_py)
    }
}

/// Calibrated platform profile.
#[pyclass(name = "Profile", module = "xrlat_py", frozen)]
struct PyProfile {
    inner: PlatformProfile,
}

#[pymethods]
impl PyProfile {
    #[getter]
    fn t_vio_us(&self) -> u64 {
        self.inner.t_vio.0
    }
    #[getter]
    fn chain_lower_bound_us(&self) -> u64 {
        self.inner.chain_lower_bound().0
    }
    #[getter]
    fn s_max(&self) -> f64 {
        self.inner.s_max
    }
    #[getter]
    fn p_min(&self) -> f64 {
        self.inner.p_min
    }
    #[getter]
    fn n_b(&self) -> f64 {
        self.inner.n_b
    }
    #[getter]
    fn k(&self) -> f64 {
        self.inner.k
    }

    /// MVIO decision `(s, p, l)` for speed `v`, rotation `w` and acceleration `accel`.
    #[pyo3(signature = (v, w, accel = (0.0, 0.0, 0.0)))]
    fn mvio_decide(&self, v: f64, w: f64, accel: (f64, f64, f64)) -> (f64, f64, u32) {
        let d = xrlat::mvio::decide(v, w, Vec3::new(accel.0, accel.1, accel.2), &self.inner.mvio(None));
        (d.s, d.p, d.l)
    }

    /// SFR optimiser result `(gamma, alpha, budget_unmet)` for `n` visible objects.
    fn sfr_optimize(&self, n: f64) -> (f64, f64, bool) {
        let sfr = self.inner.sfr(None, 0.1, 0.05, Default::default(), None);
        xrlat::sfr::optimize(n, &sfr)
    }

    fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.inner).expect("profile is serialisable")
    }
}

#[pyfunction]
fn run(config: &PyConfig) -> PyResult<PyRunResult> {
    Ok(PyRunResult { inner: harness::run(&config.inner).map_err(to_py)? })
}

#[pyfunction]
fn profile(config: &PyConfig) -> PyResult<PyProfile> {
    let (_, p) = harness::profile_for(&config.inner).map_err(to_py)?;
    Ok(PyProfile { inner: p })
}

/// Runs one experiment per value of `axis` and returns their summaries plus the comparison table.
#[pyfunction]
fn sweep(config: &PyConfig, axis: &str, values: Vec<String>) -> PyResult<(Vec<PySummary>, String)> {
    let (result, _) = harness::sweep(&config.inner, axis, &values).map_err(to_py)?;
    let table = result.comparison.to_text();
    Ok((result.summaries.into_iter().map(|inner| PySummary { inner }).collect(), table))
}

/// Comparison table over the `summary.json` files in `dirs`. Raises if any is unreadable.
#[pyfunction]
fn report(dirs: Vec<PathBuf>) -> PyResult<String> {
    let r = harness::report(&dirs);
    if let Some(e) = r.errors.first() {
        return Err(ArtifactError::new_err(format!("{}: {}", e.dir, e.error)));
    }
    Ok(r.comparison.map(|c| c.to_text()).unwrap_or_default())
}

/// `(m, t_sr_us, raised)` for the BOXR chain schedule.
#[pyfunction]
#[pyo3(signature = (t_vio_us, t_atw_us, lower_bound_us = 0))]
fn compute_boxr_periods(t_vio_us: u64, t_atw_us: u64, lower_bound_us: u64) -> PyResult<(u32, u64, bool)> {
    let p = sched::compute_boxr_periods(Duration(t_vio_us), Duration(t_atw_us), Duration(lower_bound_us)).map_err(to_py)?;
    Ok((p.m, p.t_sr.0, p.raised))
}

/// SR release offsets (µs) of one chain group started at `vio_finish_us`.
#[pyfunction]
#[pyo3(signature = (vio_finish_us, t_vio_us, t_atw_us, lower_bound_us = 0))]
fn boxr_releases(vio_finish_us: u64, t_vio_us: u64, t_atw_us: u64, lower_bound_us: u64) -> PyResult<Vec<u64>> {
    let p = sched::compute_boxr_periods(Duration(t_vio_us), Duration(t_atw_us), Duration(lower_bound_us)).map_err(to_py)?;
    Ok(sched::schedule_boxr_chain(xrlat::Instant(vio_finish_us), &p).into_iter().map(|t| t.0).collect())
}

#[pyfunction]
fn centroid(centers: Vec<(f64, f64)>) -> (f64, f64) {
    let pts: Vec<[f64; 2]> = centers.into_iter().map(|(x, y)| [x, y]).collect();
    let c = xrlat::sfr::centroid(&pts);
    (c[0], c[1])
}

#[pymodule]
fn xrlat_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PySummary>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyProfile>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(profile, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(report, m)?)?;
    m.add_function(wrap_pyfunction!(compute_boxr_periods, m)?)?;
    m.add_function(wrap_pyfunction!(boxr_releases, m)?)?;
    m.add_function(wrap_pyfunction!(centroid, m)?)?;
    let py = m.py();
    m.add("XrlatError", py.get_type::<XrlatError>())?;
    m.add("ConfigError", py.get_type::<ConfigError>())?;
    m.add("InfeasibleScheduleError", py.get_type::<InfeasibleScheduleError>())?;
    m.add("ArtifactError", py.get_type::<ArtifactError>())?;
    Ok(())
}
