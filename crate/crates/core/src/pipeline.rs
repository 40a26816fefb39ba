//! The six XR tasks, the records they produce, and the pure pose arithmetic
//! used by VIO and IMUi jobs.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::engine::ResourceKind;
use crate::geom::Vec3;
use crate::time::{Duration, Instant};
use crate::workload::MotionClass;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskKind {
    Vio,
    Imui,
    Sr,
    Srr,
    Atw,
    Atwr,
}

impl TaskKind {
    pub const ALL: [TaskKind; 6] =
        [TaskKind::Vio, TaskKind::Imui, TaskKind::Sr, TaskKind::Srr, TaskKind::Atw, TaskKind::Atwr];

    /// SRR and ATWR share the single GPU stream; everything else runs on its own CPU worker.
    pub fn resource(self) -> ResourceKind {
        match self {
            TaskKind::Srr | TaskKind::Atwr => ResourceKind::GpuStream,
            _ => ResourceKind::Cpu,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Vio => "VIO",
            TaskKind::Imui => "IMUi",
            TaskKind::Sr => "SR",
            TaskKind::Srr => "SRR",
            TaskKind::Atw => "ATW",
            TaskKind::Atwr => "ATWR",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoseKind {
    Raw,
    Fused,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoseSample {
    pub position: Vec3,
    /// Newest inertia sample folded into this pose.
    pub imu_ts: Instant,
    /// Capture time of the camera frame the underlying raw pose came from.
    pub cam_ts: Instant,
    pub kind: PoseKind,
}

/// One displayed frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_id: u64,
    pub output_ts: Instant,
    pub imu_ts: Instant,
    pub cam_ts: Instant,
    pub quality: f64,
    pub p: f64,
    pub l: u32,
    pub s: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub budget_unmet: bool,
    pub motion_class: MotionClass,
}

impl FrameRecord {
    pub fn m2d(&self) -> Duration {
        self.output_ts - self.imu_ts
    }

    pub fn c2d(&self) -> Duration {
        self.output_ts - self.cam_ts
    }
}

/// One execution of a task on a resource.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: u64,
    pub task: TaskKind,
    pub release: Instant,
    pub start: Instant,
    pub finish: Instant,
    pub imu_ts: Option<Instant>,
    pub cam_ts: Option<Instant>,
    /// GPU job this one queued behind, if any.
    pub blocked_by: Option<(TaskKind, u64)>,
    /// Render chain the job belongs to (BOXR chains, or the SR/ATW thread iteration).
    pub chain: Option<u64>,
    /// Whether the job ran within its profiled budget.
    pub within_budget: bool,
}

impl JobRecord {
    pub fn wait(&self) -> Duration {
        self.start - self.release
    }
}

/// Uniform direction on the unit sphere.
pub fn random_unit_vector<R: Rng>(rng: &mut R) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(r * phi.cos(), r * phi.sin(), z)
}

/// Raw VIO estimate: ground truth at the capture instant plus an error of
/// magnitude `error_m` along `direction`.
pub fn vio_pose(truth: Vec3, error_m: f64, direction: Vec3, cam_ts: Instant) -> PoseSample {
    PoseSample { position: truth + direction * error_m, imu_ts: cam_ts, cam_ts, kind: PoseKind::Raw }
}

/// Extrapolates a raw pose forward to the inertia sample at `imu_ts`
/// using the velocity and acceleration known at the raw pose's capture time.
pub fn imui_extrapolate(raw: &PoseSample, vel: Vec3, accel: Vec3, imu_ts: Instant) -> PoseSample {
    let dt = imu_ts.saturating_since(raw.cam_ts).as_secs_f64();
    PoseSample {
        position: raw.position + vel * dt + accel * (0.5 * dt * dt),
        imu_ts: imu_ts.max(raw.cam_ts),
        cam_ts: raw.cam_ts,
        kind: PoseKind::Fused,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn raw_at(x: f64, cam_ts: Instant) -> PoseSample {
        PoseSample { position: Vec3::new(x, 0.0, 0.0), imu_ts: cam_ts, cam_ts, kind: PoseKind::Raw }
    }

    #[test]
    fn resources() {
        assert_eq!(TaskKind::Srr.resource(), ResourceKind::GpuStream);
        assert_eq!(TaskKind::Atwr.resource(), ResourceKind::GpuStream);
        for t in [TaskKind::Vio, TaskKind::Imui, TaskKind::Sr, TaskKind::Atw] {
            assert_eq!(t.resource(), ResourceKind::Cpu);
        }
    }

    #[test]
    fn zero_extrapolation_is_identity() {
        let raw = raw_at(1.0, Instant::from_ms(40));
        let f = imui_extrapolate(&raw, Vec3::new(0.5, 0.0, 0.0), Vec3::ZERO, Instant::from_ms(40));
        assert_eq!(f.position, raw.position);
        assert_eq!(f.kind, PoseKind::Fused);
    }

    #[test]
    fn constant_velocity_extrapolation() {
        let raw = raw_at(1.0, Instant::ZERO);
        let f = imui_extrapolate(&raw, Vec3::new(0.5, 0.0, 0.0), Vec3::ZERO, Instant::from_ms(20));
        assert!((f.position.x - 1.01).abs() < 1e-12);
        assert_eq!(f.cam_ts, Instant::ZERO);
    }

    #[test]
    fn inertia_timestamp_passes_through() {
        let raw = raw_at(0.0, Instant::ZERO);
        let f = imui_extrapolate(&raw, Vec3::ZERO, Vec3::ZERO, Instant::from_ms(55));
        assert_eq!(f.imu_ts, Instant::from_ms(55));
    }

    #[test]
    fn frame_latencies() {
        let f = FrameRecord {
            frame_id: 0,
            output_ts: Instant::from_ms(75),
            imu_ts: Instant::from_ms(64),
            cam_ts: Instant::ZERO,
            quality: 1.0,
            p: 1.0,
            l: 4,
            s: 0.0,
            gamma: 1.0,
            alpha: 1.0,
            budget_unmet: false,
            motion_class: MotionClass::No,
        };
        assert_eq!(f.m2d(), Duration::from_ms(11));
        assert_eq!(f.c2d(), Duration::from_ms(75));
    }

    #[test]
    fn unit_vectors_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            assert!((random_unit_vector(&mut rng).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn vio_pose_offsets_truth() {
        let p = vio_pose(Vec3::new(1.0, 2.0, 3.0), 0.1, Vec3::new(0.0, 0.0, 1.0), Instant::from_ms(50));
        assert!((p.position.z - 3.1).abs() < 1e-12);
        assert_eq!((p.cam_ts, p.kind), (Instant::from_ms(50), PoseKind::Raw));
    }
}
