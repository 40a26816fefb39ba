//! Finite-difference and randomized checks on the workload models and the
//! MVIO error bound.

use proptest::prelude::*;
use xrlat::geom::Vec3;
use xrlat::mvio::{self, MvioProfile};
use xrlat::pipeline::TaskKind;
use xrlat::workload::{generate_motion, CostContext, CostErrorModel, MotionClass, MotionParams};
use xrlat::Duration;

fn vio_ms(m: &CostErrorModel, v: f64, w: f64, p: f64, l: u32) -> f64 {
    m.cost_ms(TaskKind::Vio, CostContext::Vio { v, w, p, l }).unwrap()
}

#[test]
fn vio_cost_increases_with_every_knob() {
    let m = CostErrorModel::default();
    let h = 1e-3;
    for &v in &[0.0, 0.3, 1.0, 2.5] {
        for &w in &[0.0, 0.5, 2.0] {
            for l in m.vio.l_min..=m.vio.l_max {
                for &p in &[0.3, 0.5, 0.8, 0.999] {
                    let t = vio_ms(&m, v, w, p, l);
                    assert!(vio_ms(&m, v + h, w, p, l) > t);
                    assert!(vio_ms(&m, v, w + h, p, l) > t);
                    assert!(vio_ms(&m, v, w, p + h.min(1.0 - p), l) > t);
                    if l < m.vio.l_max {
                        assert!(vio_ms(&m, v, w, p, l + 1) > t);
                    }
                }
            }
        }
    }
}

#[test]
fn error_decreases_with_crop_and_level() {
    let m = CostErrorModel::default();
    let h = 1e-3;
    for l in m.vio.l_min..=m.vio.l_max {
        let mut p = 0.05;
        while p < 0.999 {
            assert!(m.error_m(p + h, l) < m.error_m(p, l), "p={p} l={l}");
            if l < m.vio.l_max {
                assert!(m.error_m(p, l + 1) < m.error_m(p, l));
            }
            p += 0.01;
        }
    }
}

#[test]
fn render_cost_grows_with_objects_and_gamma() {
    let m = CostErrorModel::default();
    let r = |n: f64, g: f64| m.cost_ms(TaskKind::Srr, CostContext::Render { n, gamma: g }).unwrap();
    let n_b = m.render.n_b;
    for &n in &[n_b, n_b + 100.0, n_b + 1000.0, 10.0 * n_b + 5000.0] {
        for &g in &[0.1, 0.5, 0.9] {
            assert!(r(n + 1.0, g) > r(n, g));
            assert!(r(n, g + 0.01) > r(n, g));
        }
    }
    assert!(m.quality.quality(0.5) < m.quality.quality(0.6));
}

#[test]
fn platform_scaling_multiplies_times() {
    let base = CostErrorModel::default();
    let slow = base.clone().scaled(2.1);
    let a = vio_ms(&base, 0.4, 0.3, 0.7, 2);
    let b = vio_ms(&slow, 0.4, 0.3, 0.7, 2);
    assert!((b / a - 2.1).abs() < 1e-12);
}

#[test]
fn motion_trace_is_kinematically_consistent() {
    let tr = generate_motion(20_000, MotionClass::DEFAULT_MIX, 11, &MotionParams::default()).unwrap();
    let dt = tr.period.as_secs_f64();
    for w in tr.samples.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let vel = a.vel + a.accel * dt;
        let pos = a.pos + a.vel * dt + a.accel * (0.5 * dt * dt);
        assert!((b.vel - vel).norm() < 1e-9, "velocity jump at {:?}", b.t);
        assert!((b.pos - pos).norm() < 1e-9, "position jump at {:?}", b.t);
        assert!((b.speed - b.vel.norm()).abs() < 1e-9);
    }
}

fn profile() -> MvioProfile {
    MvioProfile {
        b_vio: Duration::from_ms(40),
        v_b: 0.1,
        w_b: 0.1,
        s_max: 10.0,
        e_req: 0.1,
        l_min: 1,
        l_max: 4,
        p_min: 0.25,
    }
}

#[test]
fn controller_anchor_points() {
    let pr = profile();
    assert_eq!(mvio::motion_score(pr.v_b, pr.w_b, &pr), 0.0);
    assert_eq!(mvio::crop_fraction(pr.s_max, &pr), pr.p_min);
    assert!((mvio::crop_fraction(1e-12, &pr) - 1.0).abs() < 1e-9);
    assert!((mvio::crop_fraction(pr.s_max / 2.0, &pr) - 0.5).abs() < 1e-12);
}

fn vec3() -> impl Strategy<Value = Vec3> {
    (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100_000, ..ProptestConfig::default() })]

    #[test]
    fn corrected_pose_stays_within_radius(
        pose in vec3(),
        prev in vec3(),
        vel in vec3(),
        accel in vec3(),
        t_us in 1_000u64..120_000,
    ) {
        let t = Duration(t_us);
        let r = mvio::max_displacement(vel, accel, t.as_secs_f64());
        let out = mvio::error_bound(pose, Some(prev), vel, accel, t);
        prop_assert!((out - prev).norm() <= r, "distance {} > r {}", (out - prev).norm(), r);
        if (pose - prev).norm() <= r {
            prop_assert_eq!(out, pose);
        }
    }
}
