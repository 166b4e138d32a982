//! Frame-pair pipeline: events to rear-axle velocity.
//!
//! Frames are pulled from the accumulator one at a time; the flow engine keeps
//! the previous frame's pyramid, so at most two frames and one flow field are
//! alive at once. Every frame pair yields exactly one estimate; failures are
//! recorded with a reason code rather than dropped.

use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::Vector2;
use thiserror::Error;

use crate::camera::{CameraError, CameraModel};
use crate::events::{to_intensity, AccumulationConfig, Event, EventError, FrameStream};
use crate::flow::pyramid::Plane;
use crate::flow::{subsample_flow, FlowEngine, FlowError, FlowParams};
use crate::rigid::ransac::frame_seed;
use crate::rigid::{
    ransac_estimate, to_camera_velocity, AxisMapping, Correspondence, MotionError, MotionQuality, RansacParams,
};
use crate::synth::inject_outliers;
use crate::vehicle::{
    substitute_imu_yaw, transform_to_axle, Extrinsics, ImuIndex, OmegaSource, VehicleError, VelocityEstimate,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Events(#[from] EventError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error(transparent)]
    Vehicle(#[from] VehicleError),
    #[error("invalid pipeline configuration: {0}")]
    Config(String),
}

/// Synthetic corruption of the flow field, for robustness experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierInjection {
    pub fraction: f64,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub accumulation: AccumulationConfig,
    /// Explicit window anchor and end, microseconds; otherwise windows start
    /// at the first event and stop after the last one.
    pub span_us: Option<(u64, u64)>,
    pub flow: FlowParams,
    /// Grid spacing of the flow vectors handed to the motion solver.
    pub stride: usize,
    /// Flow vectors closer than this to the image border are skipped.
    pub margin: usize,
    pub ransac: RansacParams,
    pub cam: CameraModel,
    pub ext: Extrinsics,
    pub mapping: AxisMapping,
    pub omega_source: OmegaSource,
    pub seed: u64,
    pub outliers: Option<OutlierInjection>,
    /// Added to the flow-derived yaw rate before the axle transfer.
    pub omega_bias: f64,
}

impl PipelineConfig {
    pub fn new(accumulation: AccumulationConfig, cam: CameraModel) -> Self {
        Self {
            accumulation,
            span_us: None,
            flow: FlowParams::default(),
            stride: 4,
            margin: 0,
            ransac: RansacParams::default(),
            cam,
            ext: Extrinsics::default(),
            mapping: AxisMapping::default(),
            omega_source: OmegaSource::Flow,
            seed: 0,
            outliers: None,
            omega_bias: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.accumulation.validate()?;
        self.flow.validate()?;
        self.ransac.validate()?;
        self.cam.validate()?;
        self.ext.validate()?;
        self.mapping.validate().map_err(PipelineError::Config)?;
        if self.cam.width != self.accumulation.width || self.cam.height != self.accumulation.height {
            return Err(PipelineError::Config(format!(
                "camera is {}x{} but the sensor is {}x{}",
                self.cam.width, self.cam.height, self.accumulation.width, self.accumulation.height
            )));
        }
        if self.stride == 0 {
            return Err(PipelineError::Config("stride must be >= 1".into()));
        }
        if let Some((a, b)) = self.span_us {
            if b <= a {
                return Err(PipelineError::Config("span end must follow its start".into()));
            }
        }
        Ok(())
    }

    /// IMU readings further than this from an estimate are stale.
    pub fn imu_max_age_us(&self) -> f64 {
        2.0 * self.accumulation.window_us as f64
    }
}

/// Why a frame pair produced no usable estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvalidReason {
    /// No trackable texture: the flow field has no valid vectors.
    Textureless,
    /// Too few flow vectors for a rigid fit.
    InsufficientData,
    /// The flow vectors are geometrically degenerate.
    Degenerate,
    /// RANSAC found no sufficiently large consensus.
    WeakConsensus,
    /// No IMU reading close enough to the estimate time.
    ImuStale,
}

impl InvalidReason {
    pub fn as_str(self) -> &'static str {
        match self {
            InvalidReason::Textureless => "textureless",
            InvalidReason::InsufficientData => "insufficient_data",
            InvalidReason::Degenerate => "degenerate",
            InvalidReason::WeakConsensus => "weak_consensus",
            InvalidReason::ImuStale => "imu_stale",
        }
    }
}

impl fmt::Display for InvalidReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameResult {
    /// Index of the later frame of the pair.
    pub frame_index: usize,
    pub estimate: VelocityEstimate,
    pub reason: Option<InvalidReason>,
}

pub const STAGES: [&str; 6] = ["accumulate", "intensity", "flow", "subsample", "motion", "velocity"];

/// Wall-clock durations, one row per frame pair.
#[derive(Debug, Clone, Default)]
pub struct Timings {
    pub stages: Vec<[Duration; 6]>,
    pub total: Vec<Duration>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyStats {
    pub mean_ms: f64,
    pub std_ms: f64,
    pub p95_ms: f64,
}

impl LatencyStats {
    pub fn from_samples(ms: &[f64]) -> Self {
        if ms.is_empty() {
            return Self {
                mean_ms: 0.0,
                std_ms: 0.0,
                p95_ms: 0.0,
            };
        }
        let n = ms.len() as f64;
        let mean = ms.iter().sum::<f64>() / n;
        let var = ms.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let mut sorted = ms.to_vec();
        sorted.sort_by(f64::total_cmp);
        // nearest-rank percentile
        let rank = ((0.95 * n).ceil() as usize).clamp(1, sorted.len());
        Self {
            mean_ms: mean,
            std_ms: var.sqrt(),
            p95_ms: sorted[rank - 1],
        }
    }
}

impl Timings {
    fn ms(d: &Duration) -> f64 {
        d.as_secs_f64() * 1e3
    }

    pub fn stage_stats(&self) -> Vec<(&'static str, LatencyStats)> {
        STAGES
            .iter()
            .enumerate()
            .map(|(k, &name)| {
                let ms: Vec<f64> = self.stages.iter().map(|s| Self::ms(&s[k])).collect();
                (name, LatencyStats::from_samples(&ms))
            })
            .collect()
    }

    pub fn total_stats(&self) -> LatencyStats {
        let ms: Vec<f64> = self.total.iter().map(Self::ms).collect();
        LatencyStats::from_samples(&ms)
    }

    /// Mean end-to-end time not attributed to any stage.
    pub fn overhead_ms(&self) -> f64 {
        let staged: f64 = self.stage_stats().iter().map(|(_, s)| s.mean_ms).sum();
        self.total_stats().mean_ms - staged
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunSummary {
    pub frames_accumulated: usize,
    pub frames_valid: usize,
    pub frames_invalid: usize,
    pub timings: Timings,
}

impl RunSummary {
    /// Frame pairs processed; each produced one estimate.
    pub fn frames_in(&self) -> usize {
        self.frames_valid + self.frames_invalid
    }
}

pub struct Pipeline {
    cfg: PipelineConfig,
    imu: Option<ImuIndex>,
}

impl Pipeline {
    pub fn new(cfg: PipelineConfig, imu: Option<ImuIndex>) -> Result<Self, PipelineError> {
        cfg.validate()?;
        if cfg.omega_source == OmegaSource::Imu && imu.is_none() {
            return Err(PipelineError::Config("IMU yaw rate selected but no IMU data given".into()));
        }
        Ok(Self { cfg, imu })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    /// Runs over `events`, handing each estimate to `sink` in frame order.
    /// Stream-level problems (ordering, bounds, malformed input) abort the run.
    pub fn run<I, F>(&self, events: I, mut sink: F) -> Result<RunSummary, PipelineError>
    where
        I: IntoIterator<Item = Result<Event, EventError>>,
        F: FnMut(&FrameResult),
    {
        let cfg = &self.cfg;
        let mut frames = FrameStream::new(events.into_iter(), cfg.accumulation.clone())?;
        if let Some((a, b)) = cfg.span_us {
            frames = frames.with_span(a, b);
        }
        let mut engine = FlowEngine::new(cfg.flow.clone())?;
        let dt = cfg.accumulation.window_secs();
        let mut summary = RunSummary::default();

        loop {
            let started = Instant::now();
            let Some(frame) = frames.next().transpose()? else {
                break;
            };
            let mut lap = [Duration::ZERO; 6];
            let mut mark = started;
            let mut tick = |k: usize| {
                let now = Instant::now();
                lap[k] = now - mark;
                mark = now;
            };
            tick(0);

            let index = summary.frames_accumulated;
            summary.frames_accumulated += 1;
            let t_boundary = frame.t_start as f64 * 1e-6;
            let plane = Plane::from_gray(&to_intensity(&frame, cfg.accumulation.merge));
            tick(1);
            let field = engine.push(&plane, dt)?;
            tick(2);
            let Some(mut field) = field else { continue };

            if let Some(o) = cfg.outliers {
                field = inject_outliers(&field, o.fraction, o.magnitude, frame_seed(cfg.seed ^ 0x5eed, index as u64));
            }
            let pairs = if field.valid_count() == 0 {
                Vec::new()
            } else {
                self.centered_pairs(&field)
            };
            tick(3);

            let motion = if pairs.is_empty() {
                Err(InvalidReason::Textureless)
            } else {
                ransac_estimate(&pairs, &cfg.ransac, frame_seed(cfg.seed, index as u64)).map_err(|e| match e {
                    MotionError::InsufficientData(_) => InvalidReason::InsufficientData,
                    MotionError::Degenerate => InvalidReason::Degenerate,
                    MotionError::DegenerateConsensus { .. } => InvalidReason::WeakConsensus,
                    MotionError::InvalidParams(_) => unreachable!("parameters validated up front"),
                })
            };
            tick(4);

            let result = motion.and_then(|out| {
                let quality = MotionQuality {
                    n_inliers: out.n_inliers,
                    inlier_fraction: out.inlier_fraction(),
                    mean_residual: out.motion.mean_residual,
                };
                let mut cv = to_camera_velocity(&out.motion, &cfg.cam, dt, &cfg.mapping, t_boundary, quality);
                cv.omega += cfg.omega_bias;
                match (cfg.omega_source, &self.imu) {
                    (OmegaSource::Imu, Some(imu)) => {
                        substitute_imu_yaw(&cv, imu, &cfg.ext, cfg.imu_max_age_us()).map_err(|_| InvalidReason::ImuStale)
                    }
                    _ => Ok(transform_to_axle(&cv, &cfg.ext)),
                }
            });
            tick(5);

            let fr = match result {
                Ok(estimate) => {
                    summary.frames_valid += 1;
                    FrameResult {
                        frame_index: index,
                        estimate,
                        reason: None,
                    }
                }
                Err(reason) => {
                    summary.frames_invalid += 1;
                    FrameResult {
                        frame_index: index,
                        estimate: VelocityEstimate::invalid(t_boundary, cfg.omega_source),
                        reason: Some(reason),
                    }
                }
            };
            sink(&fr);
            summary.timings.stages.push(lap);
            summary.timings.total.push(started.elapsed());
        }
        Ok(summary)
    }

    /// Convenience wrapper collecting every estimate.
    pub fn run_collect<I>(&self, events: I) -> Result<(Vec<FrameResult>, RunSummary), PipelineError>
    where
        I: IntoIterator<Item = Result<Event, EventError>>,
    {
        let mut out = Vec::new();
        let summary = self.run(events, |r| out.push(*r))?;
        Ok((out, summary))
    }

    /// Flow vectors on the stride grid, shifted so the principal point is the
    /// origin; the fitted translation is then the optical axis's displacement.
    fn centered_pairs(&self, field: &crate::flow::FlowField) -> Vec<Correspondence> {
        let c = Vector2::new(self.cfg.cam.cx, self.cfg.cam.cy);
        let m = self.cfg.margin as f64;
        let (w, h) = (field.width as f64, field.height as f64);
        subsample_flow(field, self.cfg.stride)
            .into_iter()
            .filter(|p| p.p.x > m && p.p.y > m && p.p.x < w - m && p.p.y < h - m)
            .map(|p| Correspondence::new(p.p - c, p.q - c))
            .collect()
    }
}

/// Runs the pipeline over an in-memory event slice.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    imu: Option<ImuIndex>,
    events: &[Event],
) -> Result<(Vec<FrameResult>, RunSummary), PipelineError> {
    Pipeline::new(cfg.clone(), imu)?.run_collect(events.iter().copied().map(Ok))
}
