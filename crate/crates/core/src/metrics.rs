//! Run-level statistics over output frames and the job log, and comparison
//! of several runs against a baseline.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::pipeline::FrameRecord;
use crate::time::{Duration, Instant};
use crate::workload::MotionClass;

pub const M2D_REQUIREMENT: Duration = Duration::from_ms(20);
pub const C2D_REQUIREMENT: Duration = Duration::from_ms(80);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyStats {
    pub mean_us: f64,
    /// Population standard deviation.
    pub std_us: f64,
    pub min_us: u64,
    pub max_us: u64,
    pub p50_us: u64,
    pub p95_us: u64,
    pub p99_us: u64,
}

impl LatencyStats {
    pub fn from_values(values: &[u64]) -> Option<LatencyStats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        Some(LatencyStats {
            mean_us: mean,
            std_us: var.sqrt(),
            min_us: sorted[0],
            max_us: sorted[sorted.len() - 1],
            p50_us: nearest_rank(&sorted, 50.0),
            p95_us: nearest_rank(&sorted, 95.0),
            p99_us: nearest_rank(&sorted, 99.0),
        })
    }

    pub fn mean_ms(&self) -> f64 {
        self.mean_us / 1000.0
    }

    pub fn std_ms(&self) -> f64 {
        self.std_us / 1000.0
    }
}

/// Nearest-rank percentile of an ascending, non-empty slice.
pub fn nearest_rank(sorted: &[u64], pct: f64) -> u64 {
    let rank = ((pct / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassBreakdown {
    pub class: MotionClass,
    pub frames: u64,
    pub m2d_mean_us: Option<f64>,
    pub c2d_mean_us: Option<f64>,
}

/// Quantities that come from the job log or pose stream rather than the frames.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunContext {
    pub label: String,
    pub policy: String,
    pub seed: u64,
    pub duration_us: u64,
    pub warmup_us: u64,
    pub dropped_imu_pct: f64,
    pub mean_pos_error_m: f64,
    pub max_pos_error_m: f64,
    /// Total time ATWR jobs spent queued behind an SRR on the GPU.
    pub contention_block_us: u64,
    pub contention_frames: u64,
    pub vio_jobs: u64,
    pub vio_budget_violations: u64,
    pub camera_drops: u64,
    pub sfr_budget_unmet: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// True when no frame survived the warm-up filter.
    pub empty: bool,
    pub frames: u64,
    pub m2d: Option<LatencyStats>,
    pub c2d: Option<LatencyStats>,
    pub fps: f64,
    pub m2d_miss_pct: f64,
    pub c2d_miss_pct: f64,
    pub mean_quality: Option<f64>,
    pub min_quality: Option<f64>,
    pub per_class: Vec<ClassBreakdown>,
    #[serde(flatten)]
    pub context: RunContext,
}

impl RunSummary {
    pub fn m2d_mean_ms(&self) -> f64 {
        self.m2d.map_or(0.0, |s| s.mean_ms())
    }

    pub fn c2d_mean_ms(&self) -> f64 {
        self.c2d.map_or(0.0, |s| s.mean_ms())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0u64), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn pct(part: u64, whole: u64) -> f64 {
    if whole == 0 {
        0.0
    } else {
        part as f64 * 100.0 / whole as f64
    }
}

/// Frames whose output lands at or after the warm-up cut-off.
pub fn after_warmup(frames: &[FrameRecord], warmup: Duration) -> Vec<FrameRecord> {
    frames.iter().filter(|f| f.output_ts >= Instant::ZERO + warmup).copied().collect()
}

/// Summarises `frames` (all frames of a run, warm-up included) under `ctx`.
pub fn summarize(frames: &[FrameRecord], ctx: RunContext) -> RunSummary {
    let kept = after_warmup(frames, Duration(ctx.warmup_us));
    let m2d: Vec<u64> = kept.iter().map(|f| f.m2d().as_us()).collect();
    let c2d: Vec<u64> = kept.iter().map(|f| f.c2d().as_us()).collect();
    let span = Duration(ctx.duration_us.saturating_sub(ctx.warmup_us));
    let fps = if span.is_zero() { 0.0 } else { kept.len() as f64 / span.as_secs_f64() };
    let per_class = MotionClass::ALL
        .iter()
        .map(|&class| {
            let of: Vec<&FrameRecord> = kept.iter().filter(|f| f.motion_class == class).collect();
            ClassBreakdown {
                class,
                frames: of.len() as u64,
                m2d_mean_us: mean(of.iter().map(|f| f.m2d().as_us() as f64)),
                c2d_mean_us: mean(of.iter().map(|f| f.c2d().as_us() as f64)),
            }
        })
        .collect();
    RunSummary {
        empty: kept.is_empty(),
        frames: kept.len() as u64,
        m2d: LatencyStats::from_values(&m2d),
        c2d: LatencyStats::from_values(&c2d),
        fps,
        m2d_miss_pct: pct(m2d.iter().filter(|&&v| v > M2D_REQUIREMENT.as_us()).count() as u64, m2d.len() as u64),
        c2d_miss_pct: pct(c2d.iter().filter(|&&v| v > C2D_REQUIREMENT.as_us()).count() as u64, c2d.len() as u64),
        mean_quality: mean(kept.iter().map(|f| f.quality)),
        min_quality: kept.iter().map(|f| f.quality).reduce(f64::min),
        per_class,
        context: ctx,
    }
}

/// Percentage of published fused poses that no SR or ATW job consumed.
pub fn dropped_imu(published: u64, consumed: u64) -> f64 {
    pct(published.saturating_sub(consumed), published)
}

/// Metrics shown in comparisons, in column order. Lower is better for all
/// but `fps` and `mean_quality`.
pub const COMPARED_METRICS: [&str; 9] = [
    "m2d_mean_ms",
    "m2d_std_ms",
    "c2d_mean_ms",
    "c2d_std_ms",
    "fps",
    "dropped_imu_pct",
    "m2d_miss_pct",
    "c2d_miss_pct",
    "mean_quality",
];

pub fn metric_value(s: &RunSummary, metric: &str) -> Option<f64> {
    Some(match metric {
        "m2d_mean_ms" => s.m2d?.mean_ms(),
        "m2d_std_ms" => s.m2d?.std_ms(),
        "c2d_mean_ms" => s.c2d?.mean_ms(),
        "c2d_std_ms" => s.c2d?.std_ms(),
        "fps" => s.fps,
        "dropped_imu_pct" => s.context.dropped_imu_pct,
        "m2d_miss_pct" => s.m2d_miss_pct,
        "c2d_miss_pct" => s.c2d_miss_pct,
        "mean_quality" => s.mean_quality?,
        _ => return None,
    })
}

/// Relative change of `candidate` against `base`, in percent. Negative means
/// the candidate is lower.
pub fn delta_pct(base: f64, candidate: f64) -> Option<f64> {
    if base == 0.0 {
        return (candidate == 0.0).then_some(0.0);
    }
    Some((candidate - base) / base * 100.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCell {
    pub value: Option<f64>,
    pub delta_pct: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub label: String,
    pub cells: Vec<ComparisonCell>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub metrics: Vec<String>,
    pub rows: Vec<ComparisonRow>,
    /// Set when the runs do not share a seed and duration.
    pub mismatched_runs: bool,
}

/// Compares every run against `runs[baseline]`. With a single run no deltas are produced.
pub fn compare(runs: &[RunSummary], baseline: usize) -> Comparison {
    let base = &runs[baseline];
    let with_deltas = runs.len() > 1;
    let rows = runs
        .iter()
        .map(|r| ComparisonRow {
            label: r.context.label.clone(),
            cells: COMPARED_METRICS
                .iter()
                .map(|m| {
                    let value = metric_value(r, m);
                    let delta_pct = match (with_deltas, metric_value(base, m), value) {
                        (true, Some(b), Some(v)) => delta_pct(b, v),
                        _ => None,
                    };
                    ComparisonCell { value, delta_pct }
                })
                .collect(),
        })
        .collect();
    Comparison {
        baseline: base.context.label.clone(),
        metrics: COMPARED_METRICS.iter().map(|s| s.to_string()).collect(),
        rows,
        mismatched_runs: runs
            .iter()
            .any(|r| r.context.seed != base.context.seed || r.context.duration_us != base.context.duration_us),
    }
}

impl Comparison {
    /// Aligned plain-text table. Each metric column is followed by its delta
    /// column when more than one run is compared.
    pub fn to_text(&self) -> String {
        let with_deltas = self.rows.len() > 1;
        let mut header = vec!["run".to_string()];
        for m in &self.metrics {
            header.push(m.clone());
            if with_deltas {
                header.push("delta%".into());
            }
        }
        let mut table = vec![header];
        for row in &self.rows {
            let mut line = vec![row.label.clone()];
            for c in &row.cells {
                line.push(c.value.map_or("-".into(), |v| format!("{v:.3}")));
                if with_deltas {
                    line.push(c.delta_pct.map_or("-".into(), |d| format!("{d:+.1}")));
                }
            }
            table.push(line);
        }
        let widths: Vec<usize> =
            (0..table[0].len()).map(|i| table.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for line in &table {
            let cells: Vec<String> = line
                .iter()
                .enumerate()
                .map(|(i, c)| if i == 0 { format!("{c:<w$}", w = widths[i]) } else { format!("{c:>w$}", w = widths[i]) })
                .collect();
            let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        }
        if self.mismatched_runs {
            out.push_str("warning: runs differ in seed or duration\n");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(id: u64, out_ms: u64, m2d_ms: u64, c2d_ms: u64) -> FrameRecord {
        FrameRecord {
            frame_id: id,
            output_ts: Instant::from_ms(out_ms),
            imu_ts: Instant::from_ms(out_ms - m2d_ms),
            cam_ts: Instant::from_ms(out_ms - c2d_ms),
            quality: 1.0,
            p: 1.0,
            l: 4,
            s: 0.0,
            gamma: 1.0,
            alpha: 1.0,
            budget_unmet: false,
            motion_class: MotionClass::Small,
        }
    }

    fn ctx(duration_ms: u64) -> RunContext {
        RunContext { label: "r".into(), duration_us: duration_ms * 1000, ..Default::default() }
    }

    #[test]
    fn two_frame_mean_and_miss() {
        let s = summarize(&[frame(0, 100, 10, 50), frame(1, 200, 30, 90)], ctx(1000));
        let m = s.m2d.unwrap();
        assert_eq!(m.mean_us, 20_000.0);
        assert_eq!(s.m2d_miss_pct, 50.0);
        assert_eq!(s.c2d_miss_pct, 50.0);
        assert_eq!(m.std_us, 10_000.0);
    }

    #[test]
    fn constant_series_has_zero_std() {
        let frames: Vec<_> = (0..10).map(|i| frame(i, 100 + i * 10, 12, 40)).collect();
        assert_eq!(summarize(&frames, ctx(1000)).m2d.unwrap().std_us, 0.0);
    }

    #[test]
    fn fps_over_span() {
        let frames: Vec<_> = (0..90).map(|i| frame(i, 100 + i * 10, 5, 40)).collect();
        assert_eq!(summarize(&frames, ctx(1000)).fps, 90.0);
    }

    #[test]
    fn empty_marker_and_class_sums() {
        let s = summarize(&[], ctx(0));
        assert!(s.empty && s.m2d.is_none() && s.fps == 0.0);
        let frames: Vec<_> = (0..7).map(|i| frame(i, 100 + i * 10, 5, 40)).collect();
        let s = summarize(&frames, ctx(1000));
        assert_eq!(s.per_class.iter().map(|c| c.frames).sum::<u64>(), s.frames);
    }

    #[test]
    fn warmup_is_excluded() {
        let c = RunContext { warmup_us: 500_000, ..ctx(1000) };
        let s = summarize(&[frame(0, 100, 5, 40), frame(1, 600, 7, 40)], c);
        assert_eq!(s.frames, 1);
        assert_eq!(s.m2d.unwrap().min_us, 7000);
    }

    #[test]
    fn percentiles_nearest_rank() {
        let v: Vec<u64> = (1..=100).collect();
        assert_eq!((nearest_rank(&v, 50.0), nearest_rank(&v, 95.0), nearest_rank(&v, 99.0)), (50, 95, 99));
        assert_eq!(nearest_rank(&[7], 99.0), 7);
    }

    #[test]
    fn dropped_imu_edges() {
        assert_eq!(dropped_imu(0, 0), 0.0);
        assert_eq!(dropped_imu(10, 10), 0.0);
        assert_eq!(dropped_imu(8, 3), 62.5);
    }

    #[test]
    fn deltas() {
        assert!((delta_pct(20.0, 14.0).unwrap() + 30.0).abs() < 1e-9);
        assert!((delta_pct(42.0, 60.0).unwrap() - 42.857).abs() < 1e-3);
        assert_eq!(delta_pct(0.0, 0.0), Some(0.0));
        assert_eq!(delta_pct(0.0, 1.0), None);
    }

    #[test]
    fn comparison_tables() {
        let a = summarize(&[frame(0, 100, 20, 50)], RunContext { label: "base".into(), ..ctx(1000) });
        let b = summarize(&[frame(0, 100, 14, 50)], RunContext { label: "cand".into(), ..ctx(1000) });
        let c = compare(&[a.clone(), b], 0);
        assert!(!c.mismatched_runs);
        assert!((c.rows[1].cells[0].delta_pct.unwrap() + 30.0).abs() < 1e-9);
        assert!(c.to_text().contains("delta%"));
        let single = compare(std::slice::from_ref(&a), 0);
        assert!(single.rows[0].cells.iter().all(|c| c.delta_pct.is_none()));
        assert!(!single.to_text().contains("delta%"));
        let same = compare(&[a.clone(), a], 0);
        assert!(same.rows[1].cells.iter().all(|c| c.delta_pct.is_none_or(|d| d == 0.0)));
    }
}
