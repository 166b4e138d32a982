//! Built-in simulator scenarios.
//!
//! Each scenario pairs a simulated recording with the run configuration used
//! to process it. Camera geometry is chosen per scenario so that the ground
//! moves a few to a few tens of pixels per accumulation window at the
//! scenario's speeds.

use crate::camera::CameraModel;
use crate::config::{RunConfig, Scenario};
use crate::events::AccumulationConfig;
use crate::pipeline::PipelineConfig;
use crate::rigid::AxisMapping;
use crate::synth::{SimConfig, Texture, Trajectory, TrajectorySample};
use crate::vehicle::Extrinsics;

pub const NAMES: [&str; 4] = ["constant", "platform", "disk", "highway"];

pub fn by_name(name: &str) -> Option<Scenario> {
    match name {
        "constant" => Some(constant_speed()),
        "platform" => Some(scaled_platform()),
        "disk" => Some(spinning_disk()),
        "highway" => Some(highway()),
        _ => None,
    }
}

fn assemble(
    texture: Texture,
    cam: CameraModel,
    window_us: u64,
    duration: f64,
    trajectory: Trajectory,
    ext: Extrinsics,
) -> Scenario {
    let mut pipeline = PipelineConfig::new(AccumulationConfig::new(window_us, cam.width, cam.height), cam.clone());
    pipeline.mapping = AxisMapping::vehicle_mounted();
    pipeline.ext = ext;
    pipeline.span_us = Some((0, (duration * 1e6).round() as u64));
    let mut sim = SimConfig::new(texture, cam, duration, window_us as f64 * 1e-6);
    sim.ext = ext;
    Scenario {
        sim,
        trajectory,
        gt_rate_hz: 1000.0,
        imu_rate_hz: 200.0,
        imu_bias: 0.0,
        run: RunConfig::new(pipeline),
    }
}

/// Straight line at 1.5 m/s with 33 ms windows, 2 s.
pub fn constant_speed() -> Scenario {
    let cam = CameraModel::from_focal(160, 120, 60.0, 0.3);
    let duration = 2.0;
    let traj = Trajectory::constant(duration, 1.5, 0.0, 0.0);
    let mut sc = assemble(
        Texture::Noise { seed: 11, cutoff: 0.125 },
        cam,
        33_000,
        duration,
        traj,
        Extrinsics::default(),
    );
    sc.run.pipeline.margin = 4;
    sc
}

/// Small car on a test track: 0.5 to 2.5 m/s with two turns, camera 0.3 m
/// ahead of the rear axle. The rear axle does not slip sideways, so the
/// camera's lateral speed is `0.3 omega`.
pub fn scaled_platform() -> Scenario {
    let cam = CameraModel::from_focal(160, 120, 60.0, 0.3);
    let ext = Extrinsics::new(-0.3, 0.0);
    let profile = [
        (0.0, 1.0, 0.0),
        (1.0, 1.5, 0.0),
        (2.0, 2.5, 0.0),
        (2.5, 2.5, 0.7),
        (3.5, 2.0, 0.7),
        (4.0, 1.5, 0.0),
        (4.5, 1.0, -0.9),
        (5.5, 0.5, -0.9),
        (6.0, 0.8, 0.0),
        (7.0, 1.8, 0.0),
        (8.0, 1.6, 0.0),
    ];
    let samples = profile
        .iter()
        .map(|&(t, v, w)| TrajectorySample {
            t,
            v_lon: v,
            v_lat: -ext.ca.x * w,
            omega: w,
        })
        .collect();
    let traj = Trajectory::new(samples).expect("static profile is valid");
    let mut sc = assemble(
        Texture::Noise { seed: 5, cutoff: 0.125 },
        cam,
        33_000,
        8.0,
        traj,
        ext,
    );
    sc.run.pipeline.margin = 4;
    sc
}

/// Camera spinning at 360 RPM over a dot pattern, 1 ms windows.
pub fn spinning_disk() -> Scenario {
    let cam = CameraModel::from_focal(128, 128, 100.0, 0.3);
    let duration = 0.2;
    let omega = 37.70;
    let traj = Trajectory::constant(duration, 0.0, 0.0, omega);
    let mut sc = assemble(
        Texture::DotField {
            seed: 3,
            density: 0.01,
            radius: 3.0,
        },
        cam,
        1_000,
        duration,
        traj,
        Extrinsics::default(),
    );
    sc.run.pipeline.margin = 4;
    sc
}

/// Full-size car at 32 m/s, narrow 180 x 50 crop, 100 us windows.
pub fn highway() -> Scenario {
    let cam = CameraModel::from_focal(180, 50, 1000.0, 0.635);
    let duration = 0.1;
    let traj = Trajectory::constant(duration, 32.0, 0.0, 0.0);
    let mut sc = assemble(
        Texture::Noise { seed: 21, cutoff: 0.125 },
        cam,
        100,
        duration,
        traj,
        Extrinsics::default(),
    );
    sc.gt_rate_hz = 10_000.0;
    sc.imu_rate_hz = 10_000.0;
    sc.run.pipeline.stride = 2;
    sc.run.pipeline.margin = 2;
    sc
}
