//! The event-driven simulation of one run: sensors, the six tasks under the
//! selected policy, and the records the metrics are computed from.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{CpuPool, EventAction, EventHandle, EventQueue, GpuStream, ResourceKind, Tier, Topic};
use crate::error::Result;
use crate::geom::Vec3;
use crate::metrics::{self, RunContext};
use crate::mvio::{self, MvioProfile};
use crate::pipeline::{imui_extrapolate, random_unit_vector, FrameRecord, JobRecord, PoseKind, PoseSample, TaskKind};
use crate::profile::PlatformProfile;
use crate::sched::{compute_boxr_periods, BoxrPeriods, PeriodConfig, PolicyKind};
use crate::sfr::{self, SfrProfile};
use crate::time::{Duration, Instant};
use crate::workload::{CostErrorModel, MotionTrace, SceneTrace};

/// Slack on the VIO budget before a job counts as over budget.
pub const VIO_BUDGET_SLACK: f64 = 0.05;
/// Slack on the SRR budget before a job counts as over budget.
pub const SRR_BUDGET_SLACK: f64 = 0.10;

const ERROR_RNG_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

pub struct SimInput<'a> {
    pub policy: PolicyKind,
    pub periods: PeriodConfig,
    /// Ground truth the jobs actually cost.
    pub model: &'a CostErrorModel,
    pub profile: &'a PlatformProfile,
    pub mvio: MvioProfile,
    pub sfr: SfrProfile,
    pub motion: &'a MotionTrace,
    pub scene: &'a SceneTrace,
    pub duration: Duration,
    pub warmup: Duration,
    pub seed: u64,
    pub record_events: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SimStats {
    pub fused_published: u64,
    pub fused_consumed: u64,
    pub vio_jobs: u64,
    /// VIO jobs with `S <= S_max` (only counted with controllers attached).
    pub vio_budget_checked: u64,
    pub vio_budget_violations: u64,
    /// Largest modelled error at a decided `(p, l)`.
    pub max_decided_error_m: f64,
    pub error_tolerance_violations: u64,
    pub camera_drops: u64,
    pub sfr_decisions: u64,
    pub sfr_budget_unmet: u64,
    /// Distance of every published raw pose from ground truth, m.
    pub pos_errors: Vec<f64>,
    pub boxr_periods: Option<BoxrPeriods>,
}

#[derive(Clone, Debug, Default)]
pub struct SimOutput {
    pub frames: Vec<FrameRecord>,
    pub jobs: Vec<JobRecord>,
    /// Tab-separated event lines, when requested.
    pub events: Vec<String>,
    pub stats: SimStats,
}

impl SimOutput {
    /// ATWR jobs that waited on the GPU behind an SRR: `(count, total wait)`.
    pub fn atwr_blocking(&self) -> (u64, Duration) {
        self.jobs
            .iter()
            .filter(|j| j.task == TaskKind::Atwr && matches!(j.blocked_by, Some((TaskKind::Srr, _))) && j.wait() > Duration::ZERO)
            .fold((0, Duration::ZERO), |(n, d), j| (n + 1, d + j.wait()))
    }

    pub fn context(&self, label: &str, policy: &PolicyKind, seed: u64, duration: Duration, warmup: Duration) -> RunContext {
        let (blocked, block_time) = self.atwr_blocking();
        let n = self.stats.pos_errors.len();
        RunContext {
            label: label.to_string(),
            policy: policy.to_string(),
            seed,
            duration_us: duration.as_us(),
            warmup_us: warmup.as_us(),
            dropped_imu_pct: metrics::dropped_imu(self.stats.fused_published, self.stats.fused_consumed),
            mean_pos_error_m: if n == 0 { 0.0 } else { self.stats.pos_errors.iter().sum::<f64>() / n as f64 },
            max_pos_error_m: self.stats.pos_errors.iter().copied().fold(0.0, f64::max),
            contention_block_us: block_time.as_us(),
            contention_frames: blocked,
            vio_jobs: self.stats.vio_jobs,
            vio_budget_violations: self.stats.vio_budget_violations,
            camera_drops: self.stats.camera_drops,
            sfr_budget_unmet: self.stats.sfr_budget_unmet,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct RawMsg {
    pose: PoseSample,
    p: f64,
    l: u32,
    s: f64,
}

#[derive(Clone, Copy, Debug)]
struct FusedMsg {
    pose: PoseSample,
    seq: u64,
    p: f64,
    l: u32,
    s: f64,
}

#[derive(Clone, Copy, Debug)]
struct Frame2d {
    cam_ts: Instant,
    quality: f64,
    gamma: f64,
    alpha: f64,
    budget_unmet: bool,
    p: f64,
    l: u32,
    s: f64,
}

/// Which step follows an IMUi job.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ImuiNext {
    Publish,
    ChainSr,
    ChainAtw,
}

#[derive(Clone, Debug)]
enum Ev {
    Cam(u64),
    Imu(u64),
    VioDone { job: u64, raw: RawMsg },
    ImuiDone { job: u64, imu_ts: Instant, raw: RawMsg, next: ImuiNext, chain: Option<u64> },
    SrRelease(u64),
    SrDone { job: u64, fused: FusedMsg, chain: u64 },
    SrrDone { job: u64, frame: Frame2d, chain: u64 },
    AtwRelease(u64),
    AtwDone { job: u64, fused: FusedMsg, frame: Frame2d, chain: u64 },
    AtwrDone { job: u64, imu_ts: Instant, frame: Frame2d },
    ChainRelease(u64),
}

impl EventAction for Ev {
    fn tier(&self) -> Tier {
        match self {
            Ev::Cam(_) | Ev::Imu(_) => Tier::Sensor,
            _ => Tier::Job,
        }
    }
}

struct ActiveSwap {
    remaining: u32,
    centers: Vec<[f64; 2]>,
}

struct Sim<'a> {
    inp: &'a SimInput<'a>,
    end: Instant,
    q: EventQueue<Ev>,
    cpu: CpuPool,
    gpu: GpuStream<(TaskKind, u64)>,
    raw: Topic<RawMsg>,
    fused: Topic<FusedMsg>,
    frame2d: Topic<Frame2d>,
    rng: ChaCha8Rng,
    next_job: u64,
    next_frame: u64,
    out: SimOutput,
    consumed: Vec<bool>,
    vio_busy: bool,
    vio_pending: Option<Instant>,
    prev_raw: Option<Vec3>,
    sr_busy: bool,
    atw_busy: bool,
    boxr: Option<BoxrPeriods>,
    chain_anchor: Instant,
    chain_release: Option<EventHandle>,
    chain_busy: bool,
    chain_deferred: bool,
    next_chain: u64,
    swap_idx: usize,
    swap: Option<ActiveSwap>,
}

/// Runs one simulation to completion.
pub fn simulate(inp: &SimInput<'_>) -> Result<SimOutput> {
    inp.periods.validate()?;
    let boxr = if inp.policy.is_boxr() {
        Some(compute_boxr_periods(inp.periods.t_vio, inp.periods.t_atw, inp.profile.chain_lower_bound())?)
    } else {
        None
    };
    let mut sim = Sim {
        inp,
        end: Instant::ZERO + inp.duration,
        q: EventQueue::new(),
        cpu: CpuPool,
        gpu: GpuStream::new(),
        raw: Topic::new("raw_pose"),
        fused: Topic::new("fused_pose"),
        frame2d: Topic::new("frame_2d"),
        rng: ChaCha8Rng::seed_from_u64(inp.seed ^ ERROR_RNG_SALT),
        next_job: 0,
        next_frame: 0,
        out: SimOutput::default(),
        consumed: Vec::new(),
        vio_busy: false,
        vio_pending: None,
        prev_raw: None,
        sr_busy: false,
        atw_busy: false,
        boxr,
        chain_anchor: Instant::ZERO,
        chain_release: None,
        chain_busy: false,
        chain_deferred: false,
        next_chain: 0,
        swap_idx: 0,
        swap: None,
    };
    sim.out.stats.boxr_periods = boxr;
    sim.run()?;
    Ok(sim.out)
}

impl<'a> Sim<'a> {
    fn run(&mut self) -> Result<()> {
        if self.inp.duration.is_zero() {
            return Ok(());
        }
        self.q.schedule(Instant::ZERO, Ev::Cam(0))?;
        if !self.inp.policy.is_boxr() {
            self.q.schedule(Instant::ZERO, Ev::Imu(0))?;
            self.q.schedule(Instant::ZERO, Ev::SrRelease(0))?;
            self.q.schedule(Instant::ZERO, Ev::AtwRelease(0))?;
        }
        while let Some(t) = self.q.peek_time() {
            if t > self.end {
                break;
            }
            let (now, ev) = self.q.pop().expect("peeked event");
            self.handle(now, ev)?;
        }
        Ok(())
    }

    fn log(&mut self, now: Instant, kind: &str, task: &str, job: Option<u64>, resource: &str, detail: impl FnOnce() -> String) {
        if self.inp.record_events {
            let job = job.map_or("-".to_string(), |j| j.to_string());
            self.out.events.push(format!("{}\t{kind}\t{task}\t{job}\t{resource}\t{}", now.as_us(), detail()));
        }
    }

    fn resource_name(task: TaskKind) -> &'static str {
        match task.resource() {
            ResourceKind::Cpu => "cpu",
            ResourceKind::GpuStream => "gpu",
        }
    }

    /// Starts a job at `now` and records it. Returns `(job_id, finish)`.
    #[allow(clippy::too_many_arguments)]
    fn start_job(
        &mut self,
        now: Instant,
        task: TaskKind,
        exec: Duration,
        imu_ts: Option<Instant>,
        cam_ts: Option<Instant>,
        chain: Option<u64>,
        within_budget: bool,
    ) -> (u64, Instant) {
        let id = self.next_job;
        self.next_job += 1;
        let grant = match task.resource() {
            ResourceKind::Cpu => self.cpu.acquire(now, exec),
            ResourceKind::GpuStream => self.gpu.acquire((task, id), now, exec),
        };
        self.out.jobs.push(JobRecord {
            job_id: id,
            task,
            release: now,
            start: grant.start,
            finish: grant.finish,
            imu_ts,
            cam_ts,
            blocked_by: grant.blocked_by,
            chain,
            within_budget,
        });
        let kind = if grant.start > now { "queue" } else { "start" };
        self.log(now, kind, task.name(), Some(id), Self::resource_name(task), || {
            let mut d = format!("start={} finish={}", grant.start.as_us(), grant.finish.as_us());
            if let Some((bt, bid)) = grant.blocked_by {
                let _ = write!(d, " wait_us={} blocked_by={}#{}", grant.wait().as_us(), bt.name(), bid);
            }
            d
        });
        (id, grant.finish)
    }

    fn finish_log(&mut self, now: Instant, task: TaskKind, job: u64, detail: impl FnOnce() -> String) {
        self.log(now, "finish", task.name(), Some(job), Self::resource_name(task), detail);
    }

    fn schedule_if_before_end(&mut self, at: Instant, ev: Ev) -> Result<Option<EventHandle>> {
        if at > self.end {
            return Ok(None);
        }
        self.q.schedule(at, ev).map(Some)
    }

    fn handle(&mut self, now: Instant, ev: Ev) -> Result<()> {
        match ev {
            Ev::Cam(k) => self.on_cam(now, k),
            Ev::Imu(k) => self.on_imu(now, k),
            Ev::VioDone { job, raw } => self.on_vio_done(now, job, raw),
            Ev::ImuiDone { job, imu_ts, raw, next, chain } => self.on_imui_done(now, job, imu_ts, raw, next, chain),
            Ev::SrRelease(k) => self.on_sr_release(now, k),
            Ev::SrDone { job, fused, chain } => self.on_sr_done(now, job, fused, chain),
            Ev::SrrDone { job, frame, chain } => self.on_srr_done(now, job, frame, chain),
            Ev::AtwRelease(k) => self.on_atw_release(now, k),
            Ev::AtwDone { job, fused, frame, chain } => self.on_atw_done(now, job, fused, frame, chain),
            Ev::AtwrDone { job, imu_ts, frame } => self.on_atwr_done(now, job, imu_ts, frame),
            Ev::ChainRelease(k) => self.on_chain_release(now, k),
        }
    }

    // ---- camera and VIO ----

    fn on_cam(&mut self, now: Instant, k: u64) -> Result<()> {
        self.log(now, "sensor", "CAM", None, "-", || format!("frame={k}"));
        self.schedule_if_before_end(now + self.inp.periods.t_cam, Ev::Cam(k + 1))?;
        if !self.vio_busy {
            self.start_vio(now, now)?;
        } else {
            if let Some(old) = self.vio_pending.replace(now) {
                self.out.stats.camera_drops += 1;
                self.log(now, "drop", "CAM", None, "-", || format!("superseded cam_ts={}", old.as_us()));
            }
        }
        Ok(())
    }

    fn start_vio(&mut self, now: Instant, cam_ts: Instant) -> Result<()> {
        let inp = self.inp;
        let sample = *inp.motion.at(cam_ts);
        let controllers = inp.policy.controllers();
        let d = if controllers {
            mvio::decide(sample.speed, sample.rot, sample.accel, &inp.mvio)
        } else {
            mvio::MvioDecision {
                s: mvio::motion_score(sample.speed, sample.rot, &inp.mvio),
                p: 1.0,
                l: inp.model.vio.l_max,
                crop_direction: mvio::image_direction(sample.accel),
            }
        };
        let exec_ms = inp.model.vio.time_ms(sample.speed, sample.rot, d.p, d.l)?;
        let exec = Duration::from_ms_f64(exec_ms);
        let budget_ms = inp.mvio.b_vio.as_ms_f64() * (1.0 + VIO_BUDGET_SLACK);
        let within = exec_ms <= budget_ms;
        let stats = &mut self.out.stats;
        stats.vio_jobs += 1;
        let modelled_error = inp.model.error_m(d.p, d.l);
        if controllers {
            stats.max_decided_error_m = stats.max_decided_error_m.max(modelled_error);
            if modelled_error > inp.mvio.e_req {
                stats.error_tolerance_violations += 1;
            }
            if d.s <= inp.mvio.s_max {
                stats.vio_budget_checked += 1;
                if !within {
                    stats.vio_budget_violations += 1;
                }
            }
        }
        let dir = random_unit_vector(&mut self.rng);
        let mut pos = sample.pos + dir * modelled_error;
        if controllers {
            pos = mvio::error_bound(pos, self.prev_raw, sample.vel, sample.accel, exec);
        }
        self.out.stats.pos_errors.push(pos.distance(sample.pos));
        let raw = RawMsg {
            pose: PoseSample { position: pos, imu_ts: cam_ts, cam_ts, kind: PoseKind::Raw },
            p: d.p,
            l: d.l,
            s: d.s,
        };
        self.vio_busy = true;
        let (job, finish) = self.start_job(now, TaskKind::Vio, exec, None, Some(cam_ts), None, within);
        self.log(now, "decide", "VIO", Some(job), "cpu", || format!("S={:.4} p={:.4} l={}", d.s, d.p, d.l));
        self.schedule_if_before_end(finish, Ev::VioDone { job, raw })?;
        Ok(())
    }

    fn on_vio_done(&mut self, now: Instant, job: u64, raw: RawMsg) -> Result<()> {
        self.finish_log(now, TaskKind::Vio, job, || format!("cam_ts={}", raw.pose.cam_ts.as_us()));
        self.raw.publish(now, raw)?;
        self.prev_raw = Some(raw.pose.position);
        self.vio_busy = false;
        if let Some(cam_ts) = self.vio_pending.take() {
            self.start_vio(now, cam_ts)?;
        }
        if self.boxr.is_some() {
            // Rebuild the chain schedule from this VIO finish.
            if let Some(h) = self.chain_release.take() {
                self.q.cancel(h);
            }
            self.chain_deferred = false;
            self.chain_anchor = now;
            self.chain_release = self.schedule_if_before_end(now, Ev::ChainRelease(0))?;
        }
        Ok(())
    }

    // ---- IMU integration ----

    fn on_imu(&mut self, now: Instant, k: u64) -> Result<()> {
        self.schedule_if_before_end(now + self.inp.periods.t_imu, Ev::Imu(k + 1))?;
        let Some(raw) = self.raw.read_latest().map(|p| p.payload) else {
            return Ok(());
        };
        self.start_imui(now, now, raw, ImuiNext::Publish, None)
    }

    fn start_imui(&mut self, now: Instant, imu_ts: Instant, raw: RawMsg, next: ImuiNext, chain: Option<u64>) -> Result<()> {
        let exec = Duration::from_ms_f64(self.inp.model.t_imui_ms);
        let (job, finish) = self.start_job(now, TaskKind::Imui, exec, Some(imu_ts), Some(raw.pose.cam_ts), chain, true);
        self.schedule_if_before_end(finish, Ev::ImuiDone { job, imu_ts, raw, next, chain })?;
        Ok(())
    }

    fn on_imui_done(&mut self, now: Instant, job: u64, imu_ts: Instant, raw: RawMsg, next: ImuiNext, chain: Option<u64>) -> Result<()> {
        let k = self.inp.motion.at(raw.pose.cam_ts);
        let pose = imui_extrapolate(&raw.pose, k.vel, k.accel, imu_ts);
        let seq = self.out.stats.fused_published;
        let msg = FusedMsg { pose, seq, p: raw.p, l: raw.l, s: raw.s };
        self.fused.publish(now, msg)?;
        self.out.stats.fused_published += 1;
        self.consumed.push(false);
        self.finish_log(now, TaskKind::Imui, job, || format!("imu_ts={} cam_ts={}", imu_ts.as_us(), pose.cam_ts.as_us()));
        let chain = chain.unwrap_or(0);
        match next {
            ImuiNext::Publish => Ok(()),
            ImuiNext::ChainSr => {
                self.consume(&msg);
                self.start_sr(now, msg, chain)
            }
            ImuiNext::ChainAtw => {
                self.consume(&msg);
                let frame = self.frame2d.read_latest().expect("chain rendered a frame").payload;
                self.start_atw(now, msg, frame, chain)
            }
        }
    }

    fn consume(&mut self, msg: &FusedMsg) {
        let slot = &mut self.consumed[msg.seq as usize];
        if !*slot {
            *slot = true;
            self.out.stats.fused_consumed += 1;
        }
    }

    // ---- SR / SRR ----

    fn on_sr_release(&mut self, now: Instant, k: u64) -> Result<()> {
        self.schedule_if_before_end(now + self.inp.periods.t_sr, Ev::SrRelease(k + 1))?;
        if self.sr_busy {
            self.log(now, "skip", "SR", None, "cpu", || format!("release={k} previous render still running"));
            return Ok(());
        }
        let Some(fused) = self.fused.read_latest().map(|p| p.payload) else {
            return Ok(());
        };
        self.consume(&fused);
        self.sr_busy = true;
        self.start_sr(now, fused, k)
    }

    fn start_sr(&mut self, now: Instant, fused: FusedMsg, chain: u64) -> Result<()> {
        let exec = Duration::from_ms_f64(self.inp.model.t_sr_ms);
        let (job, finish) =
            self.start_job(now, TaskKind::Sr, exec, Some(fused.pose.imu_ts), Some(fused.pose.cam_ts), Some(chain), true);
        self.schedule_if_before_end(finish, Ev::SrDone { job, fused, chain })?;
        Ok(())
    }

    /// Visible objects at `now`, with any pending scene swap applied as a floor.
    fn scene_objects(&mut self, now: Instant) -> (f64, Vec<[f64; 2]>) {
        let scene = self.inp.scene;
        let base = scene.at(now);
        while self.swap_idx < scene.swaps.len() && scene.swaps[self.swap_idx].at <= now {
            let s = &scene.swaps[self.swap_idx];
            self.swap = Some(ActiveSwap { remaining: s.frames, centers: s.centers.clone() });
            self.swap_idx += 1;
        }
        if let Some(active) = &mut self.swap {
            let out = if active.centers.len() >= base.n() {
                (active.centers.len() as f64, active.centers.clone())
            } else {
                (base.n() as f64, base.centers.clone())
            };
            active.remaining = active.remaining.saturating_sub(1);
            if active.remaining == 0 {
                self.swap = None;
            }
            return out;
        }
        (base.n() as f64, base.centers.clone())
    }

    fn on_sr_done(&mut self, now: Instant, job: u64, fused: FusedMsg, chain: u64) -> Result<()> {
        self.finish_log(now, TaskKind::Sr, job, String::new);
        let inp = self.inp;
        let (n, centers) = self.scene_objects(now);
        let (gamma, alpha, unmet) = if inp.policy.controllers() {
            let d = sfr::decide(&centers, n, &inp.sfr);
            self.out.stats.sfr_decisions += 1;
            if d.budget_unmet {
                self.out.stats.sfr_budget_unmet += 1;
            }
            (d.gamma, d.alpha, d.budget_unmet)
        } else {
            (1.0, 1.0, false)
        };
        let exec_ms = inp.model.render.time_ms(n, gamma)?;
        let within = exec_ms <= inp.sfr.b_srr.as_ms_f64() * (1.0 + SRR_BUDGET_SLACK);
        let frame = Frame2d {
            cam_ts: fused.pose.cam_ts,
            quality: inp.model.quality.quality(gamma),
            gamma,
            alpha,
            budget_unmet: unmet,
            p: fused.p,
            l: fused.l,
            s: fused.s,
        };
        let (job, finish) = self.start_job(
            now,
            TaskKind::Srr,
            Duration::from_ms_f64(exec_ms),
            Some(fused.pose.imu_ts),
            Some(fused.pose.cam_ts),
            Some(chain),
            within,
        );
        self.log(now, "decide", "SRR", Some(job), "gpu", || format!("n={n} gamma={gamma:.4} alpha={alpha:.1}"));
        self.schedule_if_before_end(finish, Ev::SrrDone { job, frame, chain })?;
        Ok(())
    }

    fn on_srr_done(&mut self, now: Instant, job: u64, frame: Frame2d, chain: u64) -> Result<()> {
        self.finish_log(now, TaskKind::Srr, job, || format!("cam_ts={}", frame.cam_ts.as_us()));
        self.frame2d.publish(now, frame)?;
        if self.boxr.is_some() {
            let raw = self.raw.read_latest().expect("chains start after a raw pose").payload;
            let imu_ts = self.latest_imu_sample(now);
            self.start_imui(now, imu_ts, raw, ImuiNext::ChainAtw, Some(chain))
        } else {
            self.sr_busy = false;
            Ok(())
        }
    }

    // ---- ATW / ATWR ----

    fn on_atw_release(&mut self, now: Instant, k: u64) -> Result<()> {
        self.schedule_if_before_end(now + self.inp.periods.t_atw, Ev::AtwRelease(k + 1))?;
        if self.atw_busy {
            self.log(now, "skip", "ATW", None, "cpu", || format!("release={k} previous reprojection still running"));
            return Ok(());
        }
        let (Some(frame), Some(fused)) =
            (self.frame2d.read_latest().map(|p| p.payload), self.fused.read_latest().map(|p| p.payload))
        else {
            return Ok(());
        };
        self.consume(&fused);
        self.atw_busy = true;
        self.start_atw(now, fused, frame, k)
    }

    fn start_atw(&mut self, now: Instant, fused: FusedMsg, frame: Frame2d, chain: u64) -> Result<()> {
        let exec = Duration::from_ms_f64(self.inp.model.t_atw_ms);
        let (job, finish) =
            self.start_job(now, TaskKind::Atw, exec, Some(fused.pose.imu_ts), Some(frame.cam_ts), Some(chain), true);
        self.schedule_if_before_end(finish, Ev::AtwDone { job, fused, frame, chain })?;
        Ok(())
    }

    fn on_atw_done(&mut self, now: Instant, job: u64, fused: FusedMsg, frame: Frame2d, chain: u64) -> Result<()> {
        self.finish_log(now, TaskKind::Atw, job, String::new);
        let exec = Duration::from_ms_f64(self.inp.model.t_atwr_ms);
        let (job, finish) =
            self.start_job(now, TaskKind::Atwr, exec, Some(fused.pose.imu_ts), Some(frame.cam_ts), Some(chain), true);
        self.schedule_if_before_end(finish, Ev::AtwrDone { job, imu_ts: fused.pose.imu_ts, frame })?;
        if self.boxr.is_some() {
            self.chain_busy = false;
            if self.chain_deferred {
                self.chain_deferred = false;
                self.start_chain(now)?;
            }
        }
        Ok(())
    }

    fn on_atwr_done(&mut self, now: Instant, job: u64, imu_ts: Instant, frame: Frame2d) -> Result<()> {
        let frame_id = self.next_frame;
        self.finish_log(now, TaskKind::Atwr, job, || {
            format!("frame={frame_id} imu_ts={} cam_ts={}", imu_ts.as_us(), frame.cam_ts.as_us())
        });
        self.out.frames.push(FrameRecord {
            frame_id,
            output_ts: now,
            imu_ts,
            cam_ts: frame.cam_ts,
            quality: frame.quality,
            p: frame.p,
            l: frame.l,
            s: frame.s,
            gamma: frame.gamma,
            alpha: frame.alpha,
            budget_unmet: frame.budget_unmet,
            motion_class: self.inp.motion.class_at(frame.cam_ts),
        });
        self.next_frame += 1;
        if self.boxr.is_none() {
            self.atw_busy = false;
        }
        Ok(())
    }

    // ---- BOXR chains ----

    fn latest_imu_sample(&self, now: Instant) -> Instant {
        let p = self.inp.periods.t_imu.as_us();
        Instant(now.as_us() / p * p)
    }

    fn on_chain_release(&mut self, now: Instant, k: u64) -> Result<()> {
        let periods = self.boxr.expect("chain releases only under BOXR");
        self.chain_release = self.schedule_if_before_end(self.chain_anchor + periods.offset(k + 1), Ev::ChainRelease(k + 1))?;
        self.log(now, "release", "SR", None, "cpu", || format!("chain_slot={k}"));
        if self.chain_busy {
            self.chain_deferred = true;
            return Ok(());
        }
        self.start_chain(now)
    }

    fn start_chain(&mut self, now: Instant) -> Result<()> {
        let raw = self.raw.read_latest().expect("chains start after a raw pose").payload;
        let chain = self.next_chain;
        self.next_chain += 1;
        self.chain_busy = true;
        let imu_ts = self.latest_imu_sample(now);
        self.start_imui(now, imu_ts, raw, ImuiNext::ChainSr, Some(chain))
    }
}

/// Renders event lines as the tab-separated event log.
pub fn event_log_text(events: &[String]) -> String {
    let mut s = String::from("time_us\tkind\ttask\tjob_id\tresource\tdetail\n");
    for e in events {
        s.push_str(e);
        s.push('\n');
    }
    s
}
