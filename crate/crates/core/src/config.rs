//! Flat `section.key = value` configuration files.
//!
//! One format serves both run configurations (what `estimate` needs) and
//! simulator scenarios (a run configuration plus `sim.*`, `texture.*` and
//! `trajectory.*` keys). Writing and re-reading a configuration is lossless:
//! floats are printed in their shortest round-trip form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::camera::CameraModel;
use crate::events::{AccumulationConfig, MergeMode};
use crate::flow::FlowParams;
use crate::pipeline::{OutlierInjection, PipelineConfig};
use crate::rigid::{AxisMapping, RansacParams, SignedAxis};
use crate::synth::{Pose, SimConfig, Texture, Trajectory, TrajectorySample};
use crate::vehicle::{Extrinsics, OmegaSource};

pub const SEED_ENV: &str = "EOFVEL_SEED";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("missing key '{0}'")]
    Missing(String),
    #[error("key '{key}': {msg}")]
    Invalid { key: String, msg: String },
    #[error("{0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Parsed key-value pairs; every lookup marks the key as used so leftovers
/// can be reported.
#[derive(Debug, Clone, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (usize, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: n + 1,
                    msg: format!("expected 'key = value', found '{line}'"),
                });
            };
            let k = k.trim();
            if k.is_empty() || !k.contains('.') {
                return Err(ConfigError::Syntax {
                    line: n + 1,
                    msg: format!("key '{k}' needs a 'section.' prefix"),
                });
            }
            if entries.insert(k.to_string(), (n + 1, v.trim().to_string())).is_some() {
                return Err(ConfigError::Syntax {
                    line: n + 1,
                    msg: format!("duplicate key '{k}'"),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(key.to_string(), (0, value.to_string()));
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None | Some("") => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|e: T::Err| ConfigError::Invalid {
                key: key.into(),
                msg: format!("cannot parse '{v}': {e}"),
            }),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)?.ok_or_else(|| ConfigError::Missing(key.into()))
    }

    fn check_known(&self, sections: &[&str], known: &[&str]) -> Result<(), ConfigError> {
        for k in self.entries.keys() {
            let section = k.split('.').next().unwrap_or("");
            if sections.contains(&section) && !known.contains(&k.as_str()) {
                return Err(ConfigError::UnknownKey(k.clone()));
            }
        }
        Ok(())
    }
}

fn invalid(key: &str, msg: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        msg: msg.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Paths {
    pub events: Option<PathBuf>,
    pub imu: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

/// Everything `estimate` and `evaluate` need.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub paths: Paths,
    pub pipeline: PipelineConfig,
    /// Ground-truth pairing tolerance, seconds; half the window if unset.
    pub eval_tolerance_s: Option<f64>,
}

const RUN_SECTIONS: &[&str] = &[
    "paths",
    "accumulation",
    "camera",
    "flow",
    "ransac",
    "vehicle",
    "mounting",
    "eval",
    "run",
    "experiment",
];

const RUN_KEYS: &[&str] = &[
    "paths.events",
    "paths.imu",
    "paths.ground_truth",
    "paths.output_dir",
    "accumulation.window_us",
    "accumulation.count_cap",
    "accumulation.merge",
    "accumulation.start_us",
    "accumulation.end_us",
    "camera.width",
    "camera.height",
    "camera.f_px",
    "camera.fov_alpha",
    "camera.cx",
    "camera.cy",
    "camera.height_z",
    "flow.pyramid_levels",
    "flow.pyramid_scale",
    "flow.window_size",
    "flow.iterations",
    "flow.poly_n",
    "flow.poly_sigma",
    "flow.stride",
    "flow.margin",
    "ransac.enabled",
    "ransac.iterations",
    "ransac.inlier_threshold",
    "ransac.min_inlier_fraction",
    "vehicle.ca_x",
    "vehicle.ca_y",
    "vehicle.omega_source",
    "mounting.image_x",
    "mounting.image_y",
    "mounting.scene_motion",
    "eval.tolerance_s",
    "run.seed",
    "experiment.outlier_fraction",
    "experiment.outlier_magnitude",
    "experiment.omega_bias",
];

fn parse_camera(kv: &KeyValues) -> Result<CameraModel, ConfigError> {
    let width: u16 = kv.require("camera.width")?;
    let height: u16 = kv.require("camera.height")?;
    let z: f64 = kv.require("camera.height_z")?;
    let mut cam = match (kv.get::<f64>("camera.f_px")?, kv.get::<f64>("camera.fov_alpha")?) {
        (Some(f), Some(a)) => CameraModel {
            fov_alpha: a,
            ..CameraModel::from_focal(width, height, f, z)
        },
        (Some(f), None) => CameraModel::from_focal(width, height, f, z),
        (None, Some(a)) => CameraModel::from_fov(width, height, a, z),
        (None, None) => return Err(ConfigError::Missing("camera.f_px or camera.fov_alpha".into())),
    };
    cam.cx = kv.or("camera.cx", cam.cx)?;
    cam.cy = kv.or("camera.cy", cam.cy)?;
    cam.validate().map_err(|e| invalid("camera", e))?;
    Ok(cam)
}

impl RunConfig {
    pub fn new(pipeline: PipelineConfig) -> Self {
        Self {
            paths: Paths::default(),
            pipeline,
            eval_tolerance_s: None,
        }
    }

    pub fn tolerance_s(&self) -> f64 {
        self.eval_tolerance_s
            .unwrap_or(0.5 * self.pipeline.accumulation.window_secs())
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self, ConfigError> {
        kv.check_known(RUN_SECTIONS, RUN_KEYS)?;
        let cam = parse_camera(kv)?;

        let merge = match kv.raw("accumulation.merge") {
            None | Some("") => MergeMode::Sum,
            Some(m) => MergeMode::parse(m).ok_or_else(|| invalid("accumulation.merge", format!("unknown mode '{m}'")))?,
        };
        let accumulation = AccumulationConfig {
            window_us: kv.require("accumulation.window_us")?,
            width: cam.width,
            height: cam.height,
            count_cap: kv.or("accumulation.count_cap", crate::events::DEFAULT_COUNT_CAP)?,
            merge,
        };
        let span_us = match (kv.get::<u64>("accumulation.start_us")?, kv.get::<u64>("accumulation.end_us")?) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => {
                return Err(ConfigError::Inconsistent(
                    "accumulation.start_us and accumulation.end_us go together".into(),
                ))
            }
        };

        let fd = FlowParams::default();
        let flow = FlowParams {
            pyramid_levels: kv.or("flow.pyramid_levels", fd.pyramid_levels)?,
            pyramid_scale: kv.or("flow.pyramid_scale", fd.pyramid_scale)?,
            window_size: kv.or("flow.window_size", fd.window_size)?,
            iterations: kv.or("flow.iterations", fd.iterations)?,
            poly_n: kv.or("flow.poly_n", fd.poly_n)?,
            poly_sigma: kv.or("flow.poly_sigma", fd.poly_sigma)?,
        };
        let rd = RansacParams::default();
        let ransac = RansacParams {
            iterations: kv.or("ransac.iterations", rd.iterations)?,
            inlier_threshold: kv.or("ransac.inlier_threshold", rd.inlier_threshold)?,
            min_inlier_fraction: kv.or("ransac.min_inlier_fraction", rd.min_inlier_fraction)?,
            enabled: kv.or("ransac.enabled", rd.enabled)?,
        };
        let md = AxisMapping::default();
        let mapping = AxisMapping {
            x: kv.or::<SignedAxis>("mounting.image_x", md.x)?,
            y: kv.or::<SignedAxis>("mounting.image_y", md.y)?,
            scene_motion: kv.or("mounting.scene_motion", md.scene_motion)?,
        };
        let outliers = match kv.get::<f64>("experiment.outlier_fraction")? {
            Some(fraction) if fraction > 0.0 => Some(OutlierInjection {
                fraction,
                magnitude: kv.require("experiment.outlier_magnitude")?,
            }),
            _ => None,
        };
        let d = PipelineConfig::new(accumulation.clone(), cam.clone());
        let pipeline = PipelineConfig {
            accumulation,
            span_us,
            flow,
            stride: kv.or("flow.stride", d.stride)?,
            margin: kv.or("flow.margin", d.margin)?,
            ransac,
            cam,
            ext: Extrinsics::new(kv.or("vehicle.ca_x", 0.0)?, kv.or("vehicle.ca_y", 0.0)?),
            mapping,
            omega_source: kv.or::<OmegaSource>("vehicle.omega_source", OmegaSource::Flow)?,
            seed: kv.or("run.seed", 0)?,
            outliers,
            omega_bias: kv.or("experiment.omega_bias", 0.0)?,
        };
        pipeline.validate().map_err(|e| ConfigError::Inconsistent(e.to_string()))?;

        let paths = Paths {
            events: kv.get("paths.events")?,
            imu: kv.get("paths.imu")?,
            ground_truth: kv.get("paths.ground_truth")?,
            output_dir: kv.get("paths.output_dir")?,
        };
        if pipeline.omega_source == OmegaSource::Imu && paths.imu.is_none() {
            return Err(ConfigError::Inconsistent("vehicle.omega_source = imu needs paths.imu".into()));
        }
        Ok(Self {
            paths,
            pipeline,
            eval_tolerance_s: kv.get("eval.tolerance_s")?,
        })
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        let p = &self.pipeline;
        let paths = [
            ("paths.events", &self.paths.events),
            ("paths.imu", &self.paths.imu),
            ("paths.ground_truth", &self.paths.ground_truth),
            ("paths.output_dir", &self.paths.output_dir),
        ];
        for (k, v) in paths {
            if let Some(v) = v {
                kv.set(k, v.display());
            }
        }
        kv.set("accumulation.window_us", p.accumulation.window_us);
        kv.set("accumulation.count_cap", p.accumulation.count_cap);
        kv.set("accumulation.merge", p.accumulation.merge.as_str());
        if let Some((a, b)) = p.span_us {
            kv.set("accumulation.start_us", a);
            kv.set("accumulation.end_us", b);
        }
        kv.set("camera.width", p.cam.width);
        kv.set("camera.height", p.cam.height);
        kv.set("camera.f_px", p.cam.f_px);
        kv.set("camera.fov_alpha", p.cam.fov_alpha);
        kv.set("camera.cx", p.cam.cx);
        kv.set("camera.cy", p.cam.cy);
        kv.set("camera.height_z", p.cam.height_z);
        kv.set("flow.pyramid_levels", p.flow.pyramid_levels);
        kv.set("flow.pyramid_scale", p.flow.pyramid_scale);
        kv.set("flow.window_size", p.flow.window_size);
        kv.set("flow.iterations", p.flow.iterations);
        kv.set("flow.poly_n", p.flow.poly_n);
        kv.set("flow.poly_sigma", p.flow.poly_sigma);
        kv.set("flow.stride", p.stride);
        kv.set("flow.margin", p.margin);
        kv.set("ransac.enabled", p.ransac.enabled);
        kv.set("ransac.iterations", p.ransac.iterations);
        kv.set("ransac.inlier_threshold", p.ransac.inlier_threshold);
        kv.set("ransac.min_inlier_fraction", p.ransac.min_inlier_fraction);
        kv.set("vehicle.ca_x", p.ext.ca.x);
        kv.set("vehicle.ca_y", p.ext.ca.y);
        kv.set("vehicle.omega_source", p.omega_source);
        kv.set("mounting.image_x", p.mapping.x);
        kv.set("mounting.image_y", p.mapping.y);
        kv.set("mounting.scene_motion", p.mapping.scene_motion);
        if let Some(t) = self.eval_tolerance_s {
            kv.set("eval.tolerance_s", t);
        }
        kv.set("run.seed", p.seed);
        if let Some(o) = p.outliers {
            kv.set("experiment.outlier_fraction", o.fraction);
            kv.set("experiment.outlier_magnitude", o.magnitude);
        }
        if p.omega_bias != 0.0 {
            kv.set("experiment.omega_bias", p.omega_bias);
        }
        kv
    }

    pub fn to_text(&self) -> String {
        render(&self.to_kv())
    }
}

impl FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_kv(&KeyValues::parse(s)?)
    }
}

/// Groups keys by section, in sorted order.
pub fn render(kv: &KeyValues) -> String {
    let mut out = String::new();
    let mut section = "";
    for (k, (_, v)) in &kv.entries {
        let s = k.split('.').next().unwrap_or("");
        if s != section {
            if !out.is_empty() {
                out.push('\n');
            }
            section = s;
        }
        let _ = writeln!(out, "{k} = {v}");
    }
    out
}

/// A simulated recording plus the configuration to process it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub sim: SimConfig,
    pub trajectory: Trajectory,
    pub gt_rate_hz: f64,
    pub imu_rate_hz: f64,
    pub imu_bias: f64,
    pub run: RunConfig,
}

const SIM_SECTIONS: &[&str] = &["sim", "texture", "trajectory"];
const SIM_KEYS: &[&str] = &[
    "sim.contrast_threshold",
    "sim.noise_rate",
    "sim.duration",
    "sim.time_step",
    "sim.seed",
    "sim.start_x",
    "sim.start_y",
    "sim.start_yaw",
    "sim.gt_rate_hz",
    "sim.imu_rate_hz",
    "sim.imu_bias",
    "texture.kind",
    "texture.seed",
    "texture.cutoff",
    "texture.period",
    "texture.density",
    "texture.radius",
    "trajectory.samples",
];

fn parse_trajectory(text: &str) -> Result<Trajectory, ConfigError> {
    let key = "trajectory.samples";
    let mut samples = Vec::new();
    for chunk in text.split(';').map(str::trim).filter(|c| !c.is_empty()) {
        let v: Vec<f64> = chunk
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| invalid(key, format!("bad number '{x}'"))))
            .collect::<Result<_, _>>()?;
        if v.len() != 4 {
            return Err(invalid(key, format!("'{chunk}' needs 't v_lon v_lat omega'")));
        }
        samples.push(TrajectorySample {
            t: v[0],
            v_lon: v[1],
            v_lat: v[2],
            omega: v[3],
        });
    }
    Trajectory::new(samples).map_err(|e| invalid(key, e))
}

fn trajectory_text(traj: &Trajectory) -> String {
    traj.samples()
        .iter()
        .map(|s| format!("{} {} {} {}", s.t, s.v_lon, s.v_lat, s.omega))
        .collect::<Vec<_>>()
        .join("; ")
}

impl Scenario {
    pub fn from_kv(kv: &KeyValues) -> Result<Self, ConfigError> {
        kv.check_known(SIM_SECTIONS, SIM_KEYS)?;
        let run = RunConfig::from_kv(kv)?;
        let texture = match kv.raw("texture.kind").unwrap_or("noise") {
            "noise" => Texture::Noise {
                seed: kv.or("texture.seed", 0)?,
                cutoff: kv.or("texture.cutoff", 0.125)?,
            },
            "checker" => Texture::Checker {
                period: kv.require("texture.period")?,
            },
            "dots" => Texture::DotField {
                seed: kv.or("texture.seed", 0)?,
                density: kv.require("texture.density")?,
                radius: kv.require("texture.radius")?,
            },
            other => return Err(invalid("texture.kind", format!("unknown texture '{other}'"))),
        };
        let duration: f64 = kv.require("sim.duration")?;
        let window = run.pipeline.accumulation.window_secs();
        let mut sim = SimConfig::new(texture, run.pipeline.cam.clone(), duration, window);
        sim.ext = run.pipeline.ext;
        sim.contrast_threshold = kv.or("sim.contrast_threshold", sim.contrast_threshold)?;
        sim.noise_rate = kv.or("sim.noise_rate", sim.noise_rate)?;
        sim.time_step = kv.or("sim.time_step", sim.time_step)?;
        sim.seed = kv.or("sim.seed", 0)?;
        sim.start_pose = Pose {
            x: kv.or("sim.start_x", 0.0)?,
            y: kv.or("sim.start_y", 0.0)?,
            yaw: kv.or("sim.start_yaw", 0.0)?,
        };
        sim.validate().map_err(|e| ConfigError::Inconsistent(e.to_string()))?;
        if sim.time_step > 0.5 * window {
            return Err(invalid("sim.time_step", "must not exceed half the accumulation window"));
        }
        let trajectory = match kv.raw("trajectory.samples") {
            Some(t) => parse_trajectory(t)?,
            None => return Err(ConfigError::Missing("trajectory.samples".into())),
        };
        trajectory
            .covers(0.0, duration)
            .map_err(|e| invalid("trajectory.samples", e))?;
        Ok(Self {
            sim,
            trajectory,
            gt_rate_hz: kv.or("sim.gt_rate_hz", 1000.0)?,
            imu_rate_hz: kv.or("sim.imu_rate_hz", 200.0)?,
            imu_bias: kv.or("sim.imu_bias", 0.0)?,
            run,
        })
    }

    pub fn to_kv(&self) -> KeyValues {
        let mut kv = self.run.to_kv();
        let s = &self.sim;
        match s.texture {
            Texture::Noise { seed, cutoff } => {
                kv.set("texture.kind", "noise");
                kv.set("texture.seed", seed);
                kv.set("texture.cutoff", cutoff);
            }
            Texture::Checker { period } => {
                kv.set("texture.kind", "checker");
                kv.set("texture.period", period);
            }
            Texture::DotField { seed, density, radius } => {
                kv.set("texture.kind", "dots");
                kv.set("texture.seed", seed);
                kv.set("texture.density", density);
                kv.set("texture.radius", radius);
            }
        }
        kv.set("sim.contrast_threshold", s.contrast_threshold);
        kv.set("sim.noise_rate", s.noise_rate);
        kv.set("sim.duration", s.duration);
        kv.set("sim.time_step", s.time_step);
        kv.set("sim.seed", s.seed);
        kv.set("sim.start_x", s.start_pose.x);
        kv.set("sim.start_y", s.start_pose.y);
        kv.set("sim.start_yaw", s.start_pose.yaw);
        kv.set("sim.gt_rate_hz", self.gt_rate_hz);
        kv.set("sim.imu_rate_hz", self.imu_rate_hz);
        kv.set("sim.imu_bias", self.imu_bias);
        kv.set("trajectory.samples", trajectory_text(&self.trajectory));
        kv
    }

    pub fn to_text(&self) -> String {
        render(&self.to_kv())
    }

    /// Overrides both the simulator and the RANSAC seed.
    pub fn reseed(&mut self, seed: u64) {
        self.sim.seed = seed;
        self.run.pipeline.seed = seed;
    }
}

impl FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::from_kv(&KeyValues::parse(s)?)
    }
}

/// Reads the seed override from the environment, if set.
pub fn seed_override() -> Result<Option<u64>, ConfigError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| invalid(SEED_ENV, format!("'{v}' is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}
