use proptest::prelude::*;
use xrlat::config::ExperimentConfig;
use xrlat::engine::ResourceKind;
use xrlat::harness::{self, frames_csv, frames_from_csv, summary_json};
use xrlat::metrics;
use xrlat::pipeline::TaskKind;

fn config(policy: &str, platform: &str, app: &str, seed: u64, duration_ms: u64) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.run.policy = policy.into();
    c.run.platform = platform.into();
    c.run.app = app.into();
    c.run.seed = seed;
    c.run.duration_ms = duration_ms;
    c
}

fn policies() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["illixr", "boxr-s", "boxr"])
}

fn platforms() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["pc", "xavier", "nano"])
}

fn apps() -> impl Strategy<Value = &'static str> {
    prop::sample::select(vec!["sponza", "materials", "gldemo", "platformer"])
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn gpu_stream_is_never_shared(policy in policies(), platform in platforms(), app in apps(), seed in 0u64..1000) {
        let art = harness::run(&config(policy, platform, app, seed, 4_000)).unwrap();
        let mut gpu: Vec<_> = art.output.jobs.iter().filter(|j| matches!(j.task.resource(), ResourceKind::GpuStream)).collect();
        gpu.sort_by_key(|j| (j.start, j.job_id));
        for w in gpu.windows(2) {
            prop_assert!(w[1].start >= w[0].finish, "{:?} overlaps {:?}", w[1], w[0]);
        }
    }

    #[test]
    fn frames_are_causal(policy in policies(), platform in platforms(), seed in 0u64..1000) {
        let art = harness::run(&config(policy, platform, "gldemo", seed, 4_000)).unwrap();
        for f in &art.output.frames {
            prop_assert!(f.cam_ts <= f.imu_ts);
            prop_assert!(f.imu_ts < f.output_ts);
            prop_assert!((0.0..=1.0).contains(&f.quality));
            prop_assert!(f.p > 0.0 && f.p <= 1.0);
        }
        for w in art.output.frames.windows(2) {
            prop_assert!(w[0].output_ts <= w[1].output_ts);
            prop_assert!(w[0].frame_id < w[1].frame_id);
        }
    }

    #[test]
    fn runs_are_reproducible(policy in policies(), seed in 0u64..1000) {
        let c = config(policy, "pc", "sponza", seed, 3_000);
        let a = harness::run(&c).unwrap();
        let b = harness::run(&ExperimentConfig::from_toml_str(&a.config.to_toml()).unwrap()).unwrap();
        prop_assert_eq!(frames_csv(&a.output.frames), frames_csv(&b.output.frames));
        prop_assert_eq!(summary_json(&a.summary), summary_json(&b.summary));
    }
}

#[test]
fn summary_recomputes_bit_exactly_from_frames_csv() {
    for policy in ["illixr", "boxr"] {
        let art = harness::run(&config(policy, "xavier", "materials", 3, 10_000)).unwrap();
        let parsed = frames_from_csv(&frames_csv(&art.output.frames)).unwrap();
        let again = metrics::summarize(&parsed, art.summary.context.clone());
        assert_eq!(summary_json(&again), summary_json(&art.summary), "{policy}");
    }
}

#[test]
fn event_log_is_time_ordered_and_has_header() {
    let mut c = config("illixr", "pc", "gldemo", 1, 2_000);
    c.run.events_log = true;
    let art = harness::run(&c).unwrap();
    let text = xrlat::sim::event_log_text(&art.output.events);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("time_us\t"));
    let mut last = 0u64;
    let mut n = 0;
    for line in lines {
        let t: u64 = line.split('\t').next().unwrap().parse().unwrap();
        assert!(t >= last, "{line}");
        last = t;
        n += 1;
    }
    assert!(n > 100);
    assert!(art.output.jobs.iter().any(|j| j.task == TaskKind::Atwr));
}

#[test]
fn zero_duration_is_an_empty_run() {
    let art = harness::run(&config("boxr", "pc", "gldemo", 7, 0)).unwrap();
    assert!(art.summary.empty);
    assert_eq!(art.summary.frames, 0);
}

#[test]
fn saved_artifacts_reload() {
    let dir = tempfile::tempdir().unwrap();
    let art = harness::run(&config("boxr-s", "nano", "platformer", 5, 3_000)).unwrap();
    let written = harness::write_artifacts(dir.path(), &art).unwrap();
    assert!(written.iter().all(|p| p.is_file()));
    let back = harness::read_summary(&dir.path().join("summary.json")).unwrap();
    assert_eq!(summary_json(&back), summary_json(&art.summary));
    let report = harness::report(&[dir.path().to_path_buf(), dir.path().join("missing")]);
    assert_eq!(report.errors.len(), 1);
    assert_eq!(report.comparison.unwrap().rows.len(), 1);
}

#[test]
fn default_sixty_second_run_is_fast() {
    let t = std::time::Instant::now();
    let art = harness::run(&ExperimentConfig::default()).unwrap();
    let elapsed = t.elapsed();
    assert!(art.summary.frames > 5_000);
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
}
