//! Event-camera simulator over a textured ground plane.
//!
//! The camera pose is integrated from a body-frame velocity profile and the
//! plane is re-rendered every substep. Each pixel keeps the log intensity at
//! which it last fired; every crossing of the contrast threshold since then
//! emits one event, with its timestamp interpolated linearly inside the
//! substep. Background noise events arrive as a Poisson process.

pub mod texture;

use std::collections::VecDeque;

use nalgebra::Vector2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::camera::CameraModel;
use crate::events::{Event, Polarity};
use crate::flow::pyramid::Plane;
use crate::flow::FlowField;
use crate::rigid::MotionQuality;
use crate::vehicle::{Extrinsics, ImuSample, OmegaSource, VelocityEstimate};
pub use texture::{render_plane, Pose, Texture};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("invalid simulator configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),
    #[error("trajectory covers [{start}, {end}] s but {t} s was requested")]
    TrajectoryGap { t: f64, start: f64, end: f64 },
}

/// Camera-center velocity at one instant, in the body frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    /// Seconds.
    pub t: f64,
    pub v_lon: f64,
    pub v_lat: f64,
    pub omega: f64,
}

/// Piecewise-linear velocity profile.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(samples: Vec<TrajectorySample>) -> Result<Self, SynthError> {
        if samples.is_empty() {
            return Err(SynthError::InvalidTrajectory("no samples".into()));
        }
        for w in samples.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(SynthError::InvalidTrajectory(format!(
                    "time must increase strictly ({} then {})",
                    w[0].t, w[1].t
                )));
            }
        }
        if samples
            .iter()
            .any(|s| ![s.t, s.v_lon, s.v_lat, s.omega].iter().all(|v| v.is_finite()))
        {
            return Err(SynthError::InvalidTrajectory("non-finite value".into()));
        }
        Ok(Self { samples })
    }

    pub fn constant(duration: f64, v_lon: f64, v_lat: f64, omega: f64) -> Self {
        let s = |t| TrajectorySample { t, v_lon, v_lat, omega };
        Self {
            samples: vec![s(0.0), s(duration)],
        }
    }

    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn start(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn covers(&self, t0: f64, t1: f64) -> Result<(), SynthError> {
        const SLACK: f64 = 1e-9;
        for t in [t0, t1] {
            if t < self.start() - SLACK || t > self.end() + SLACK {
                return Err(SynthError::TrajectoryGap {
                    t,
                    start: self.start(),
                    end: self.end(),
                });
            }
        }
        Ok(())
    }

    /// Velocity at `t`, clamped into the covered interval.
    pub fn at(&self, t: f64) -> TrajectorySample {
        let s = &self.samples;
        let k = s.partition_point(|x| x.t <= t);
        if k == 0 {
            return TrajectorySample { t, ..s[0] };
        }
        if k == s.len() {
            return TrajectorySample { t, ..s[k - 1] };
        }
        let (a, b) = (s[k - 1], s[k]);
        let w = (t - a.t) / (b.t - a.t);
        let lerp = |p: f64, q: f64| p + w * (q - p);
        TrajectorySample {
            t,
            v_lon: lerp(a.v_lon, b.v_lon),
            v_lat: lerp(a.v_lat, b.v_lat),
            omega: lerp(a.omega, b.omega),
        }
    }

    /// The same path driven backwards: time runs from the end and every
    /// velocity changes sign.
    pub fn reversed(&self) -> Self {
        let end = self.end();
        let samples = self
            .samples
            .iter()
            .rev()
            .map(|s| TrajectorySample {
                t: end - s.t,
                v_lon: -s.v_lon,
                v_lat: -s.v_lat,
                omega: -s.omega,
            })
            .collect();
        Self { samples }
    }
}

fn pose_rate(traj: &Trajectory, pose: &Pose, t: f64) -> (f64, f64, f64) {
    let s = traj.at(t);
    let (sn, cs) = pose.yaw.sin_cos();
    (cs * s.v_lon - sn * s.v_lat, sn * s.v_lon + cs * s.v_lat, s.omega)
}

/// One fourth-order Runge-Kutta step of the planar pose.
pub fn step_pose(traj: &Trajectory, pose: &Pose, t: f64, h: f64) -> Pose {
    let add = |p: &Pose, d: (f64, f64, f64), k: f64| Pose {
        x: p.x + k * d.0,
        y: p.y + k * d.1,
        yaw: p.yaw + k * d.2,
    };
    let k1 = pose_rate(traj, pose, t);
    let k2 = pose_rate(traj, &add(pose, k1, 0.5 * h), t + 0.5 * h);
    let k3 = pose_rate(traj, &add(pose, k2, 0.5 * h), t + 0.5 * h);
    let k4 = pose_rate(traj, &add(pose, k3, h), t + h);
    Pose {
        x: pose.x + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        y: pose.y + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        yaw: pose.yaw + h / 6.0 * (k1.2 + 2.0 * k2.2 + 2.0 * k3.2 + k4.2),
    }
}

pub const DEFAULT_CONTRAST_THRESHOLD: f64 = 0.2;
pub const DEFAULT_NOISE_RATE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub texture: Texture,
    /// Log-intensity change per event.
    pub contrast_threshold: f64,
    /// Spurious events per pixel per second.
    pub noise_rate: f64,
    pub cam: CameraModel,
    pub ext: Extrinsics,
    /// Seconds.
    pub duration: f64,
    /// Rendering substep, seconds.
    pub time_step: f64,
    /// Seeds the noise process.
    pub seed: u64,
    pub start_pose: Pose,
}

impl SimConfig {
    /// Defaults for everything but the scene and camera; the substep is one
    /// eighth of `window_s`.
    pub fn new(texture: Texture, cam: CameraModel, duration: f64, window_s: f64) -> Self {
        Self {
            texture,
            contrast_threshold: DEFAULT_CONTRAST_THRESHOLD,
            noise_rate: DEFAULT_NOISE_RATE,
            cam,
            ext: Extrinsics::default(),
            duration,
            time_step: window_s / 8.0,
            seed: 0,
            start_pose: Pose::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if !(self.contrast_threshold > 0.0) {
            return bad("contrast threshold must be > 0".into());
        }
        if !(self.noise_rate >= 0.0) {
            return bad("noise rate must be >= 0".into());
        }
        if !(self.duration > 0.0 && self.time_step > 0.0) {
            return bad("duration and time step must be > 0".into());
        }
        self.cam.validate().or_else(|e| bad(e.to_string()))?;
        self.ext.validate().or_else(|e| bad(e.to_string()))?;
        self.texture.validate().or_else(bad)
    }

    fn steps(&self) -> usize {
        (self.duration / self.time_step - 1e-9).ceil().max(1.0) as usize
    }
}

/// Streaming event generator; yields time-ordered events.
pub struct EventSimulator<'a> {
    cfg: &'a SimConfig,
    traj: &'a Trajectory,
    pose: Pose,
    step: usize,
    n_steps: usize,
    prev: Plane,
    refs: Vec<f64>,
    buffer: VecDeque<Event>,
    scratch: Vec<(f64, Event)>,
    noise: Option<Poisson<f64>>,
    rng: ChaCha8Rng,
}

impl<'a> EventSimulator<'a> {
    pub fn new(cfg: &'a SimConfig, traj: &'a Trajectory) -> Result<Self, SynthError> {
        cfg.validate()?;
        traj.covers(0.0, cfg.duration)?;
        let prev = render_plane(&cfg.texture, &cfg.start_pose, &cfg.cam);
        let refs = prev.data.iter().map(|&v| v as f64).collect();
        let lambda = cfg.noise_rate * prev.data.len() as f64 * cfg.duration / cfg.steps() as f64;
        let noise = (lambda > 0.0)
            .then(|| Poisson::new(lambda).map_err(|e| SynthError::InvalidConfig(e.to_string())))
            .transpose()?;
        Ok(Self {
            cfg,
            traj,
            pose: cfg.start_pose,
            step: 0,
            n_steps: cfg.steps(),
            prev,
            refs,
            buffer: VecDeque::new(),
            scratch: Vec::new(),
            noise,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    /// Pose at the end of the last simulated substep.
    pub fn pose(&self) -> Pose {
        self.pose
    }

    fn time(&self, k: usize) -> f64 {
        (k as f64 * self.cfg.time_step).min(self.cfg.duration)
    }

    fn advance(&mut self) {
        let (t0, t1) = (self.time(self.step), self.time(self.step + 1));
        let h = t1 - t0;
        self.step += 1;
        self.pose = step_pose(self.traj, &self.pose, t0, h);
        let next = render_plane(&self.cfg.texture, &self.pose, &self.cfg.cam);

        let c = self.cfg.contrast_threshold;
        let w = next.width;
        self.scratch.clear();
        for (i, (&a, &b)) in self.prev.data.iter().zip(&next.data).enumerate() {
            let (a, b) = (a as f64, b as f64);
            let r = &mut self.refs[i];
            let (x, y) = ((i % w) as u16, (i / w) as u16);
            let emit = |level: f64, polarity| {
                let frac = ((level - a) / (b - a)).clamp(0.0, 1.0);
                (t0 + frac * h, Event::new(0, x, y, polarity))
            };
            while b - *r >= c {
                *r += c;
                let e = emit(*r, Polarity::Positive);
                self.scratch.push(e);
            }
            while *r - b >= c {
                *r -= c;
                let e = emit(*r, Polarity::Negative);
                self.scratch.push(e);
            }
        }
        if let Some(noise) = &self.noise {
            let n = noise.sample(&mut self.rng) as usize;
            let (width, height) = (next.width as u16, next.height as u16);
            for _ in 0..n {
                let t = t0 + self.rng.random::<f64>() * h;
                let x = self.rng.random_range(0..width);
                let y = self.rng.random_range(0..height);
                let p = if self.rng.random::<bool>() {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                };
                self.scratch.push((t, Event::new(0, x, y, p)));
            }
        }
        // stable: equal times keep row-major order
        self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.buffer.extend(self.scratch.iter().map(|&(t, mut e)| {
            e.t = (t * 1e6).round() as u64;
            e
        }));
        self.prev = next;
    }
}

impl Iterator for EventSimulator<'_> {
    type Item = Event;

    fn next(&mut self) -> Option<Event> {
        loop {
            if let Some(e) = self.buffer.pop_front() {
                return Some(e);
            }
            if self.step >= self.n_steps {
                return None;
            }
            self.advance();
        }
    }
}

/// Axle-frame ground truth at `rate_hz` over `[0, duration]`.
pub fn ground_truth(
    traj: &Trajectory,
    ext: &Extrinsics,
    rate_hz: f64,
    duration: f64,
) -> Result<Vec<VelocityEstimate>, SynthError> {
    if !(rate_hz > 0.0) {
        return Err(SynthError::InvalidConfig("ground-truth rate must be > 0".into()));
    }
    traj.covers(0.0, duration)?;
    let n = (duration * rate_hz + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|k| {
            let t = k as f64 / rate_hz;
            let s = traj.at(t);
            let v = ext.transfer(Vector2::new(s.v_lon, s.v_lat), s.omega);
            VelocityEstimate {
                t_mid: t,
                v_lon: v.x,
                v_lat: v.y,
                omega: s.omega,
                omega_source: OmegaSource::Flow,
                quality: MotionQuality::default(),
                valid: true,
            }
        })
        .collect())
}

/// Yaw-rate samples read straight off the trajectory, plus a constant bias.
pub fn synth_imu(traj: &Trajectory, rate_hz: f64, duration: f64, bias: f64) -> Result<Vec<ImuSample>, SynthError> {
    if !(rate_hz > 0.0) {
        return Err(SynthError::InvalidConfig("IMU rate must be > 0".into()));
    }
    traj.covers(0.0, duration)?;
    let n = (duration * rate_hz + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|k| {
            let t_us = (k as f64 * 1e6 / rate_hz).round() as u64;
            ImuSample {
                t: t_us,
                yaw_rate: traj.at(t_us as f64 * 1e-6).omega + bias,
            }
        })
        .collect())
}

/// Runs the simulator to completion and samples the ground truth.
pub fn generate_events(
    cfg: &SimConfig,
    traj: &Trajectory,
    gt_rate_hz: f64,
) -> Result<(Vec<Event>, Vec<VelocityEstimate>), SynthError> {
    let events = EventSimulator::new(cfg, traj)?.collect();
    let gt = ground_truth(traj, &cfg.ext, gt_rate_hz, cfg.duration)?;
    Ok((events, gt))
}

/// Replaces `round(fraction * valid)` randomly chosen valid vectors with
/// vectors of length `magnitude` in uniformly random directions.
pub fn inject_outliers(field: &FlowField, fraction: f64, magnitude: f64, seed: u64) -> FlowField {
    let mut out = field.clone();
    let valid: Vec<usize> = (0..field.valid.len()).filter(|&i| field.valid[i]).collect();
    let n = ((fraction.clamp(0.0, 1.0) * valid.len() as f64).round() as usize).min(valid.len());
    if n == 0 {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = index::sample(&mut rng, valid.len(), n).into_vec();
    chosen.sort_unstable();
    for k in chosen {
        let i = valid[k];
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        out.u[i] = (magnitude * phi.cos()) as f32;
        out.v[i] = (magnitude * phi.sin()) as f32;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(texture: Texture) -> SimConfig {
        let cam = CameraModel::from_focal(48, 40, 60.0, 0.3);
        let mut cfg = SimConfig::new(texture, cam, 0.05, 0.01);
        cfg.noise_rate = 0.0;
        cfg
    }

    fn noise() -> Texture {
        Texture::Noise { seed: 4, cutoff: 0.125 }
    }

    #[test]
    fn static_scene_is_silent() {
        let cfg = small_cfg(noise());
        let traj = Trajectory::constant(0.05, 0.0, 0.0, 0.0);
        assert_eq!(EventSimulator::new(&cfg, &traj).unwrap().count(), 0);
    }

    #[test]
    fn noise_only_events_are_ordered() {
        let mut cfg = small_cfg(noise());
        cfg.noise_rate = 50.0;
        let traj = Trajectory::constant(0.05, 0.0, 0.0, 0.0);
        let ev: Vec<_> = EventSimulator::new(&cfg, &traj).unwrap().collect();
        // expectation 48 * 40 * 50 * 0.05 = 4800
        assert!((4300..5300).contains(&ev.len()), "{}", ev.len());
        assert!(ev.windows(2).all(|w| w[0].t <= w[1].t));
    }

    #[test]
    fn moving_scene_emits_ordered_in_bounds_events() {
        let cfg = small_cfg(noise());
        let traj = Trajectory::constant(0.05, 0.5, 0.1, 0.5);
        let ev: Vec<_> = EventSimulator::new(&cfg, &traj).unwrap().collect();
        assert!(ev.len() > 1000);
        assert!(ev.windows(2).all(|w| w[0].t <= w[1].t));
        assert!(ev.iter().all(|e| e.x < 48 && e.y < 40 && e.t <= 50_000));
        let pos = ev.iter().filter(|e| e.polarity == Polarity::Positive).count();
        assert!(pos > 0 && pos < ev.len());
    }

    #[test]
    fn deterministic() {
        let mut cfg = small_cfg(noise());
        cfg.noise_rate = 5.0;
        let traj = Trajectory::constant(0.05, 0.4, 0.0, 0.2);
        let a: Vec<_> = EventSimulator::new(&cfg, &traj).unwrap().collect();
        let b: Vec<_> = EventSimulator::new(&cfg, &traj).unwrap().collect();
        assert_eq!(a, b);
    }

    #[test]
    fn gap_is_rejected() {
        let cfg = small_cfg(noise());
        let traj = Trajectory::constant(0.02, 1.0, 0.0, 0.0);
        assert!(matches!(
            EventSimulator::new(&cfg, &traj),
            Err(SynthError::TrajectoryGap { .. })
        ));
    }

    #[test]
    fn trajectory_validation_and_interpolation() {
        let s = |t, v| TrajectorySample { t, v_lon: v, v_lat: 0.0, omega: 0.0 };
        assert!(Trajectory::new(vec![s(0.0, 1.0), s(0.0, 2.0)]).is_err());
        assert!(Trajectory::new(vec![s(0.0, f64::NAN)]).is_err());
        let tr = Trajectory::new(vec![s(0.0, 1.0), s(1.0, 3.0)]).unwrap();
        assert!((tr.at(0.25).v_lon - 1.5).abs() < 1e-15);
        let rev = tr.reversed();
        assert_eq!(rev.at(0.0).v_lon, -3.0);
        assert_eq!(rev.at(1.0).v_lon, -1.0);
    }

    #[test]
    fn rk4_follows_a_circle() {
        // v = 1 m/s, omega = 1 rad/s: radius 1 m, after pi/2 s at (1, 1)
        let traj = Trajectory::constant(2.0, 1.0, 0.0, 1.0);
        let mut p = Pose::default();
        let h = std::f64::consts::FRAC_PI_2 / 200.0;
        for k in 0..200 {
            p = step_pose(&traj, &p, k as f64 * h, h);
        }
        assert!((p.x - 1.0).abs() < 1e-9 && (p.y - 1.0).abs() < 1e-9);
        assert!((p.yaw - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn ground_truth_uses_axle_transfer() {
        let traj = Trajectory::constant(1.0, 1.5, 0.1, 0.4);
        let ext = Extrinsics::new(0.25, -0.05);
        let gt = ground_truth(&traj, &ext, 100.0, 1.0).unwrap();
        assert_eq!(gt.len(), 101);
        for g in &gt {
            assert_eq!(g.v_lon, 1.5 + 0.4 * 0.05);
            assert_eq!(g.v_lat, 0.1 + 0.4 * 0.25);
            assert_eq!(g.omega, 0.4);
        }
    }

    #[test]
    fn imu_samples() {
        let traj = Trajectory::constant(0.1, 1.0, 0.0, 0.3);
        let imu = synth_imu(&traj, 1000.0, 0.1, 0.2).unwrap();
        assert_eq!(imu.len(), 101);
        assert_eq!(imu[10].t, 10_000);
        assert!((imu[10].yaw_rate - 0.5).abs() < 1e-15);
    }

    #[test]
    fn outlier_injection() {
        let field = FlowField::uniform(20, 10, 2.0, 0.0, 0.01);
        assert_eq!(inject_outliers(&field, 0.0, 50.0, 1), field);
        let all = inject_outliers(&field, 1.0, 50.0, 1);
        for i in 0..200 {
            let n = (all.u[i] as f64).hypot(all.v[i] as f64);
            assert!((n - 50.0).abs() < 1e-4);
        }
        let some = inject_outliers(&field, 0.2, 50.0, 1);
        let changed = (0..200).filter(|&i| some.u[i] != 2.0 || some.v[i] != 0.0).count();
        assert_eq!(changed, 40);
        assert_eq!(some, inject_outliers(&field, 0.2, 50.0, 1));
    }
}
