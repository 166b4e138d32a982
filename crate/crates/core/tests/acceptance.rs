//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion reports a PASS/FAIL line even when an earlier one fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::Instant;

use nalgebra::Vector2;
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use planar_eof::camera::{relative_motion_blur, CameraModel};
use planar_eof::config::Scenario;
use planar_eof::eval::evaluate;
use planar_eof::events::{AccumulationConfig, Event};
use planar_eof::flow::pyramid::Plane;
use planar_eof::flow::{compute_flow, FlowParams};
use planar_eof::pipeline::{run_pipeline, FrameResult, OutlierInjection, PipelineConfig, RunSummary, STAGES};
use planar_eof::rigid::{
    estimate_rigid, objective, rotation, to_camera_velocity, AxisMapping, Correspondence, MotionQuality,
    RigidMotion2D,
};
use planar_eof::scenarios;
use planar_eof::synth::{generate_events, synth_imu, Texture, Trajectory};
use planar_eof::vehicle::{write_velocity_csv, ImuIndex, OmegaSource, VelocityEstimate};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// Every pipeline run made by this harness, for the accounting criterion.
static ACCOUNTING: Mutex<Vec<(String, usize, usize, usize)>> = Mutex::new(Vec::new());

fn run(label: &str, cfg: &PipelineConfig, imu: Option<ImuIndex>, events: &[Event]) -> (Vec<FrameResult>, RunSummary) {
    let (rows, summary) = run_pipeline(cfg, imu, events).expect("pipeline run");
    ACCOUNTING.lock().unwrap().push((
        label.to_string(),
        summary.frames_in(),
        summary.frames_valid,
        summary.frames_invalid,
    ));
    assert_eq!(rows.len(), summary.frames_in());
    (rows, summary)
}

fn estimates(rows: &[FrameResult]) -> Vec<VelocityEstimate> {
    rows.iter().map(|r| r.estimate).collect()
}

fn simulate(sc: &Scenario) -> (Vec<Event>, Vec<VelocityEstimate>) {
    generate_events(&sc.sim, &sc.trajectory, sc.gt_rate_hz).expect("scenario simulates")
}

fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n).sqrt())
}

fn blur_anchors() -> Outcome {
    let cam = |z: f64| CameraModel::from_fov(640, 480, 60f64.to_radians(), z);
    let highway = relative_motion_blur(170e-6, 40.0, &cam(0.6)).unwrap();
    let disk = relative_motion_blur(0.87e-3, 5.65, &cam(0.3)).unwrap();
    let px = disk * 640.0;
    outcome(
        (0.0095..=0.0100).contains(&highway) && (0.0138..=0.0145).contains(&disk) && (px - 9.1).abs() <= 0.1,
        format!("170 us @ 40 m/s: {highway:.5}; 0.87 ms @ 5.65 m/s: {disk:.5} = {px:.2} px of 640"),
    )
}

fn pixel_speed_anchor() -> Outcome {
    let cam = CameraModel::from_focal(640, 480, 554.26, 0.6);
    let motion = RigidMotion2D {
        theta: 0.0,
        t: Vector2::new(185.0, 0.0),
        n_points: 2,
        mean_residual: 0.0,
    };
    let cv = to_camera_velocity(&motion, &cam, 5e-3, &AxisMapping::default(), 0.0, MotionQuality::default());
    let v = cv.v_c.norm();
    outcome((v - 40.0).abs() <= 0.1, format!("185 px / 5 ms -> {v:.3} m/s"))
}

fn spinning_disk() -> Outcome {
    let sc = scenarios::spinning_disk();
    let truth = sc.trajectory.at(0.0).omega;
    let (events, _) = simulate(&sc);
    let (rows, s) = run("disk", &sc.run.pipeline, None, &events);
    let w: Vec<f64> = rows.iter().filter(|r| r.estimate.valid).map(|r| r.estimate.omega).collect();
    if w.is_empty() {
        return outcome(false, "no valid frames".into());
    }
    let (m, sd) = mean_std(&w);
    let rel = (m - truth).abs() / truth;
    outcome(
        rel < 0.01,
        format!(
            "mean omega {m:.3} rad/s (sd {sd:.3}) vs {truth:.2}, error {:.2} %, {}/{} frames valid",
            rel * 100.0,
            s.frames_valid,
            s.frames_in()
        ),
    )
}

fn scaled_platform() -> Outcome {
    let sc = scenarios::scaled_platform();
    let (events, gt) = simulate(&sc);
    let tol = sc.run.tolerance_s();
    let base = &sc.run.pipeline;

    let (rows, _) = run("platform flow", base, None, &events);
    let flow = evaluate(&estimates(&rows), &gt, tol).expect("overlap");

    let mut imu_cfg = base.clone();
    imu_cfg.omega_source = OmegaSource::Imu;
    let imu = ImuIndex::new(synth_imu(&sc.trajectory, sc.imu_rate_hz, sc.sim.duration, 0.0).unwrap()).unwrap();
    let (rows, _) = run("platform imu", &imu_cfg, Some(imu), &events);
    let with_imu = evaluate(&estimates(&rows), &gt, tol).expect("overlap");

    let mut biased_cfg = base.clone();
    biased_cfg.omega_bias = 0.2;
    let (rows, _) = run("platform biased", &biased_cfg, None, &events);
    let biased = evaluate(&estimates(&rows), &gt, tol).expect("overlap");

    outcome(
        flow.e_percent < 3.0 && with_imu.v_lat.rmse < biased.v_lat.rmse,
        format!(
            "v_lon RMSE {:.4} m/s = {:.2} % of mean speed ({} frames, {} invalid); v_lat RMSE imu {:.4} vs biased flow {:.4} m/s",
            flow.v_lon.rmse, flow.e_percent, flow.frames, flow.frames_invalid, with_imu.v_lat.rmse, biased.v_lat.rmse
        ),
    )
}

fn ransac_robustness() -> Outcome {
    let sc = scenarios::highway();
    let truth = 32.0;
    let (events, _) = simulate(&sc);
    let mut cfg = sc.run.pipeline.clone();
    cfg.outliers = Some(OutlierInjection {
        fraction: 0.2,
        magnitude: 50.0,
    });
    let stats = |cfg: &PipelineConfig, label: &str| {
        let (rows, s) = run(label, cfg, None, &events);
        let v: Vec<f64> = rows.iter().filter(|r| r.estimate.valid).map(|r| r.estimate.v_lon).collect();
        let (m, sd) = mean_std(&v);
        (m, sd, s)
    };
    let (m_r, sd_r, s_r) = stats(&cfg, "highway ransac");
    cfg.ransac.enabled = false;
    let (m_n, sd_n, _) = stats(&cfg, "highway plain");
    let err_r = (m_r - truth).abs() / truth;
    outcome(
        sd_r <= sd_n / 3.0 && err_r <= 0.01,
        format!(
            "with RANSAC mean {m_r:.3} m/s ({:.2} %), sd {sd_r:.3}; without mean {m_n:.3} ({:.2} %), sd {sd_n:.3}; ratio {:.2}; {}/{} valid",
            err_r * 100.0,
            (m_n - truth).abs() / truth * 100.0,
            sd_n / sd_r,
            s_r.frames_valid,
            s_r.frames_in()
        ),
    )
}

/// Best objective over a theta grid, with the optimal translation for each
/// theta in closed form.
fn grid_objective(pairs: &[Correspondence]) -> f64 {
    let n = pairs.len() as f64;
    let mp = pairs.iter().map(|c| c.p).sum::<Vector2<f64>>() / n;
    let mq = pairs.iter().map(|c| c.q).sum::<Vector2<f64>>() / n;
    let steps = (2.0 * PI / 1e-3).ceil() as usize;
    (0..steps)
        .map(|k| {
            let th = -PI + k as f64 * 1e-3;
            let t = mq - rotation(th) * mp;
            objective(th, &t, pairs)
        })
        .fold(f64::INFINITY, f64::min)
}

fn rigid_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = f64::NEG_INFINITY;
    let mut failures = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=100);
        let theta = rng.random_range(-PI..PI);
        let t = Vector2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0));
        let noise = Normal::new(0.0, rng.random_range(0.0..=0.5)).unwrap();
        let pairs: Vec<_> = (0..n)
            .map(|_| {
                let p = Vector2::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
                let q = rotation(theta) * p + t + Vector2::new(noise.sample(&mut rng), noise.sample(&mut rng));
                Correspondence::new(p, q)
            })
            .collect();
        let m = estimate_rigid(&pairs).expect("well-spread points");
        let gap = objective(m.theta, &m.t, &pairs) - grid_objective(&pairs);
        worst = worst.max(gap);
        if gap > 1e-9 {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("200 instances, {failures} above grid optimum; max (fit - grid) = {worst:.3e}"),
    )
}

fn noise_plane(w: usize, h: usize, dx: f64, dy: f64) -> Plane {
    let tex = Texture::Noise { seed: 3, cutoff: 0.125 };
    Plane::from_fn(w, h, |x, y| tex.intensity(x as f64 + 0.5 + dx, y as f64 + 0.5 + dy) as f32)
}

fn flow_oracle() -> Outcome {
    let (w, h, margin) = (96, 96, 16);
    let params = FlowParams::default();
    let base = noise_plane(w, h, 0.0, 0.0);
    let mut worst: f64 = 0.0;
    for s in [1.0, 2.0, 3.0, 5.0] {
        for (dx, dy) in [(s, 0.0), (0.0, s), (s, -s)] {
            // content at x moves to x - d
            let next = noise_plane(w, h, dx, dy);
            let f = compute_flow(&base, &next, &params, 1.0).unwrap();
            let (u, v) = f.mean_interior(margin).unwrap_or((f64::NAN, f64::NAN));
            let e = (u + dx).abs().max((v + dy).abs());
            worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
        }
    }
    let still = compute_flow(&base, &base, &params, 1.0).unwrap();
    let n = still.valid_count().max(1) as f64;
    let zero = (0..still.u.len())
        .filter(|&i| still.valid[i])
        .map(|i| (still.u[i] as f64).hypot(still.v[i] as f64))
        .sum::<f64>()
        / n;
    let flat = Plane::from_fn(w, h, |_, _| 0.5);
    let uniform_valid = compute_flow(&flat, &flat, &params, 1.0).unwrap().valid_count();
    outcome(
        worst < 0.2 && zero < 0.05 && uniform_valid == 0,
        format!("worst mean shift error {worst:.2e} px; identical frames {zero:.2e} px; uniform frames {uniform_valid} valid"),
    )
}

fn axle_transfer_exactness() -> Outcome {
    use planar_eof::vehicle::Extrinsics;
    let mut runner = TestRunner::new(PropConfig {
        cases: 2000,
        ..PropConfig::default()
    });
    let strategy = (
        -5.0f64..5.0,
        -5.0f64..5.0,
        -50.0f64..50.0,
        -50.0f64..50.0,
        -10.0f64..10.0,
        0.5f64..10.0,
    );
    let result = runner.run(&strategy, |(cx, cy, vx, vy, w, dw)| {
        let v = Vector2::new(vx, vy);
        let on_axis = Extrinsics::new(cx, 0.0);
        prop_assert_eq!(on_axis.transfer(v, w).x, on_axis.transfer(v, w + dw).x);
        let ext = Extrinsics::new(cx, cy);
        prop_assert_eq!(ext.transfer(v, 0.0), v);
        let slope = (ext.transfer(v, w + dw) - ext.transfer(v, w)) / dw;
        prop_assert!((slope - Vector2::new(-cy, cx)).norm() <= 1e-12, "slope {:?}", slope);
        Ok(())
    });
    match result {
        Ok(()) => outcome(true, "2000 random cases: lon invariance, omega = 0 identity, slope (-CA_y, CA_x)".into()),
        Err(e) => outcome(false, format!("{e}")),
    }
}

fn velocity_csv(rows: &[FrameResult]) -> Vec<u8> {
    let mut out = Vec::new();
    write_velocity_csv(&mut out, &estimates(rows)).unwrap();
    out
}

fn determinism_and_accounting() -> Outcome {
    let mut sc = scenarios::constant_speed();
    sc.sim.duration = 0.5;
    sc.run.pipeline.span_us = Some((0, 500_000));
    sc.reseed(77);
    let (ev_a, _) = simulate(&sc);
    let (ev_b, _) = simulate(&sc);
    let (rows_a, _) = run("rerun a", &sc.run.pipeline, None, &ev_a);
    let (rows_b, _) = run("rerun b", &sc.run.pipeline, None, &ev_b);
    let identical = ev_a == ev_b && velocity_csv(&rows_a) == velocity_csv(&rows_b);

    // zero-event input is fully accounted for, too
    run("empty", &sc.run.pipeline, None, &[]);

    let acc = ACCOUNTING.lock().unwrap();
    let unbalanced: Vec<_> = acc.iter().filter(|(_, i, v, n)| i != &(v + n)).map(|r| r.0.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gt: Vec<VelocityEstimate> = (0..500)
        .map(|k| {
            let mut e = VelocityEstimate::invalid(k as f64 * 0.01, OmegaSource::Flow);
            e.valid = true;
            e.v_lon = rng.random_range(0.5..2.5);
            e.v_lat = rng.random_range(-0.3..0.3);
            e.omega = rng.random_range(-1.0..1.0);
            e
        })
        .collect();
    let est: Vec<VelocityEstimate> = gt
        .iter()
        .map(|g| {
            let mut e = *g;
            e.v_lon += rng.random_range(-0.2..0.3);
            e.v_lat += rng.random_range(-0.1..0.1);
            e.omega += rng.random_range(-0.05..0.08);
            e
        })
        .collect();
    let r = evaluate(&est, &gt, 0.004).unwrap();
    let mut worst: f64 = 0.0;
    for (ch, stats) in [("v_lon", r.v_lon), ("v_lat", r.v_lat), ("omega", r.omega)] {
        let err: Vec<f64> = est
            .iter()
            .zip(&gt)
            .map(|(e, g)| match ch {
                "v_lon" => e.v_lon - g.v_lon,
                "v_lat" => e.v_lat - g.v_lat,
                _ => e.omega - g.omega,
            })
            .collect();
        let rmse = (err.iter().map(|e| e * e).sum::<f64>() / err.len() as f64).sqrt();
        let (_, sd) = mean_std(&err);
        worst = worst.max(((stats.rmse - rmse) / rmse).abs()).max(((stats.sigma - sd) / sd).abs());
    }
    outcome(
        identical && unbalanced.is_empty() && worst <= 1e-12,
        format!(
            "reruns identical: {identical}; {} runs, unbalanced: {unbalanced:?}; eval vs two-pass max rel. diff {worst:.1e}",
            acc.len()
        ),
    )
}

fn latency() -> Outcome {
    let cam = CameraModel::from_focal(346, 260, 100.0, 0.3);
    let window_us = 33_000;
    let frames = 31;
    let duration = frames as f64 * window_us as f64 * 1e-6;
    let traj = Trajectory::constant(duration, 1.5, 0.0, 0.3);
    let mut sim = planar_eof::synth::SimConfig::new(
        Texture::Noise { seed: 9, cutoff: 0.125 },
        cam.clone(),
        duration,
        window_us as f64 * 1e-6,
    );
    sim.seed = 1;
    let (events, _) = generate_events(&sim, &traj, 100.0).unwrap();
    let mut cfg = PipelineConfig::new(AccumulationConfig::new(window_us, 346, 260), cam);
    cfg.mapping = AxisMapping::vehicle_mounted();
    cfg.span_us = Some((0, (duration * 1e6) as u64));
    let started = Instant::now();
    let (_, s) = run("latency", &cfg, None, &events);
    let wall = started.elapsed().as_secs_f64() * 1e3;
    let total = s.timings.total_stats();
    let stages: Vec<String> = s
        .timings
        .stage_stats()
        .iter()
        .map(|(n, l)| format!("{n} {:.2}", l.mean_ms))
        .collect();
    debug_assert_eq!(stages.len(), STAGES.len());
    outcome(
        total.mean_ms < 200.0,
        format!(
            "346x260, {} pairs: mean {:.2} ms, sd {:.2}, p95 {:.2}; stages [{}] ms, overhead {:.3} ms; {} events in {wall:.0} ms",
            s.frames_in(),
            total.mean_ms,
            total.std_ms,
            total.p95_ms,
            stages.join(", "),
            s.timings.overhead_ms(),
            events.len()
        ),
    )
}

fn main() -> ExitCode {
    type Check = (usize, &'static str, fn() -> Outcome);
    // latency first, on an otherwise idle process
    let serial: [Check; 1] = [(10, "per-frame latency at 346x260", latency)];
    let parallel: [Check; 8] = [
        (1, "blur-budget anchors", blur_anchors),
        (2, "pixel-speed anchor", pixel_speed_anchor),
        (3, "spinning-disk yaw rate", spinning_disk),
        (4, "scaled-platform trajectory", scaled_platform),
        (5, "RANSAC robustness at 32 m/s", ransac_robustness),
        (6, "rigid fit optimality", rigid_optimality),
        (7, "flow oracle", flow_oracle),
        (8, "axle transfer exactness", axle_transfer_exactness),
    ];
    let last: Check = (9, "determinism and accounting", determinism_and_accounting);

    let timed = |c: &Check| {
        let t = Instant::now();
        let o = (c.2)();
        (c.0, c.1, o, t.elapsed().as_secs_f64())
    };
    let mut results: Vec<_> = serial.iter().map(timed).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = parallel.iter().map(|c| s.spawn(move || timed(c))).collect();
        results.extend(handles.into_iter().map(|h| h.join().expect("criterion panicked")));
    });
    results.push(timed(&last));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (n, name, o, secs) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("criterion {n:>2} {name}: {tag} ({secs:.1} s) {}", o.detail);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
