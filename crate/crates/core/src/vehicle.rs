//! Camera-center velocity to rear-axle velocity, optional IMU yaw rate, and
//! the CSV formats for IMU input and velocity output.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use nalgebra::Vector2;
use thiserror::Error;

use crate::rigid::{CameraVelocity, MotionQuality};

#[derive(Debug, Error)]
pub enum VehicleError {
    #[error("invalid extrinsics: {0}")]
    InvalidExtrinsics(String),
    #[error("IMU data stale at t = {t_us:.0} us: nearest sample {age_us:.0} us away (limit {limit_us:.0} us)")]
    Stale { t_us: f64, age_us: f64, limit_us: f64 },
    #[error("IMU stream is empty")]
    NoImu,
    #[error("IMU sample {index} at t = {t} us precedes t = {prev} us")]
    Unordered { index: usize, prev: u64, t: u64 },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Camera mounting on the vehicle: the vector from the camera center to the
/// rear-axle center, meters, x forward and y left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrinsics {
    pub ca: Vector2<f64>,
}

impl Default for Extrinsics {
    fn default() -> Self {
        Self { ca: Vector2::zeros() }
    }
}

impl Extrinsics {
    pub fn new(ca_x: f64, ca_y: f64) -> Self {
        Self {
            ca: Vector2::new(ca_x, ca_y),
        }
    }

    pub fn validate(&self) -> Result<(), VehicleError> {
        if !self.ca.iter().all(|c| c.is_finite()) || self.ca.norm() >= 10.0 {
            return Err(VehicleError::InvalidExtrinsics(format!(
                "CA = ({}, {}) must be finite and shorter than 10 m",
                self.ca.x, self.ca.y
            )));
        }
        Ok(())
    }

    /// Velocity of the axle point of a body moving with `v` (at the camera)
    /// and yaw rate `omega`: `v + omega x CA`.
    #[inline]
    pub fn transfer(&self, v: Vector2<f64>, omega: f64) -> Vector2<f64> {
        v + omega * Vector2::new(-self.ca.y, self.ca.x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmegaSource {
    Flow,
    Imu,
}

impl OmegaSource {
    pub fn as_str(self) -> &'static str {
        match self {
            OmegaSource::Flow => "flow",
            OmegaSource::Imu => "imu",
        }
    }
}

impl fmt::Display for OmegaSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OmegaSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "flow" => Ok(OmegaSource::Flow),
            "imu" => Ok(OmegaSource::Imu),
            other => Err(format!("unknown omega source '{other}'")),
        }
    }
}

/// Rear-axle velocity for one frame pair. When `valid` is false the numeric
/// fields carry no meaning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityEstimate {
    /// Seconds.
    pub t_mid: f64,
    pub v_lon: f64,
    pub v_lat: f64,
    pub omega: f64,
    pub omega_source: OmegaSource,
    pub quality: MotionQuality,
    pub valid: bool,
}

impl VelocityEstimate {
    pub fn invalid(t_mid: f64, omega_source: OmegaSource) -> Self {
        Self {
            t_mid,
            v_lon: 0.0,
            v_lat: 0.0,
            omega: 0.0,
            omega_source,
            quality: MotionQuality::default(),
            valid: false,
        }
    }
}

pub fn transform_to_axle(cv: &CameraVelocity, ext: &Extrinsics) -> VelocityEstimate {
    let v = ext.transfer(cv.v_c, cv.omega);
    VelocityEstimate {
        t_mid: cv.t_mid,
        v_lon: v.x,
        v_lat: v.y,
        omega: cv.omega,
        omega_source: OmegaSource::Flow,
        quality: cv.quality,
        valid: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuSample {
    /// Microseconds.
    pub t: u64,
    /// rad/s, counter-clockwise positive seen from above.
    pub yaw_rate: f64,
}

/// Time-sorted IMU samples with bracketing lookup.
#[derive(Debug, Clone, Default)]
pub struct ImuIndex {
    samples: Vec<ImuSample>,
}

impl ImuIndex {
    pub fn new(samples: Vec<ImuSample>) -> Result<Self, VehicleError> {
        let mut idx = Self::default();
        idx.samples.reserve(samples.len());
        for s in samples {
            idx.push(s)?;
        }
        Ok(idx)
    }

    pub fn push(&mut self, s: ImuSample) -> Result<(), VehicleError> {
        if let Some(last) = self.samples.last() {
            if s.t < last.t {
                return Err(VehicleError::Unordered {
                    index: self.samples.len(),
                    prev: last.t,
                    t: s.t,
                });
            }
        }
        self.samples.push(s);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[ImuSample] {
        &self.samples
    }

    /// Yaw rate at `t_us`, linearly interpolated between the bracketing
    /// samples (held constant past either end). Fails when the nearest sample
    /// is more than `max_age_us` away.
    pub fn yaw_rate_at(&self, t_us: f64, max_age_us: f64) -> Result<f64, VehicleError> {
        let s = &self.samples;
        if s.is_empty() {
            return Err(VehicleError::NoImu);
        }
        let k = s.partition_point(|x| (x.t as f64) <= t_us);
        let (rate, age) = if k == 0 {
            (s[0].yaw_rate, s[0].t as f64 - t_us)
        } else if k == s.len() {
            let last = s[k - 1];
            (last.yaw_rate, t_us - last.t as f64)
        } else {
            let (a, b) = (s[k - 1], s[k]);
            let span = (b.t - a.t) as f64;
            let w = (t_us - a.t as f64) / span;
            let age = (t_us - a.t as f64).min(b.t as f64 - t_us);
            (a.yaw_rate + w * (b.yaw_rate - a.yaw_rate), age)
        };
        if age > max_age_us {
            return Err(VehicleError::Stale {
                t_us,
                age_us: age,
                limit_us: max_age_us,
            });
        }
        Ok(rate)
    }
}

/// Like [`transform_to_axle`] but with the yaw rate taken from the IMU.
/// `max_age_us` is the staleness bound, normally twice the accumulation window.
pub fn substitute_imu_yaw(
    cv: &CameraVelocity,
    imu: &ImuIndex,
    ext: &Extrinsics,
    max_age_us: f64,
) -> Result<VelocityEstimate, VehicleError> {
    let omega = imu.yaw_rate_at(cv.t_mid * 1e6, max_age_us)?;
    let replaced = CameraVelocity { omega, ..*cv };
    Ok(VelocityEstimate {
        omega_source: OmegaSource::Imu,
        ..transform_to_axle(&replaced, ext)
    })
}

pub const IMU_CSV_HEADER: &str = "t_us,yaw_rate_rad_s";
pub const VELOCITY_CSV_HEADER: &str = "t_s,v_lon,v_lat,omega,omega_source,n_inliers,inlier_fraction,valid";

fn header_check(line: Option<std::io::Result<String>>, expected: &str) -> Result<(), VehicleError> {
    match line {
        Some(Ok(h)) if h.trim() == expected => Ok(()),
        Some(Ok(h)) => Err(VehicleError::Format {
            line: 1,
            msg: format!("expected header '{expected}', found '{}'", h.trim()),
        }),
        Some(Err(e)) => Err(e.into()),
        None => Err(VehicleError::Format {
            line: 1,
            msg: "empty file".into(),
        }),
    }
}

fn field<T: FromStr>(parts: &[&str], i: usize, line: usize, name: &str) -> Result<T, VehicleError> {
    parts
        .get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| VehicleError::Format {
            line,
            msg: format!("bad or missing field '{name}'"),
        })
}

pub fn read_imu_csv<R: BufRead>(reader: R) -> Result<ImuIndex, VehicleError> {
    let mut lines = reader.lines();
    header_check(lines.next(), IMU_CSV_HEADER)?;
    let mut idx = ImuIndex::default();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<_> = line.split(',').collect();
        let lineno = n + 2;
        if parts.len() != 2 {
            return Err(VehicleError::Format {
                line: lineno,
                msg: format!("expected 2 fields, found {}", parts.len()),
            });
        }
        let yaw_rate: f64 = field(&parts, 1, lineno, "yaw_rate_rad_s")?;
        if !yaw_rate.is_finite() {
            return Err(VehicleError::Format {
                line: lineno,
                msg: "non-finite yaw rate".into(),
            });
        }
        idx.push(ImuSample {
            t: field(&parts, 0, lineno, "t_us")?,
            yaw_rate,
        })?;
    }
    Ok(idx)
}

pub fn write_imu_csv<W: Write>(mut out: W, samples: &[ImuSample]) -> std::io::Result<()> {
    writeln!(out, "{IMU_CSV_HEADER}")?;
    for s in samples {
        writeln!(out, "{},{}", s.t, s.yaw_rate)?;
    }
    Ok(())
}

/// Writes one velocity row. Floats use the shortest representation that
/// parses back to the same value.
pub fn write_velocity_row<W: Write>(out: &mut W, e: &VelocityEstimate) -> std::io::Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{},{},{}",
        e.t_mid,
        e.v_lon,
        e.v_lat,
        e.omega,
        e.omega_source,
        e.quality.n_inliers,
        e.quality.inlier_fraction,
        e.valid as u8
    )
}

pub fn write_velocity_csv<W: Write>(mut out: W, rows: &[VelocityEstimate]) -> std::io::Result<()> {
    writeln!(out, "{VELOCITY_CSV_HEADER}")?;
    for r in rows {
        write_velocity_row(&mut out, r)?;
    }
    Ok(())
}

pub fn read_velocity_csv<R: BufRead>(reader: R) -> Result<Vec<VelocityEstimate>, VehicleError> {
    let mut lines = reader.lines();
    header_check(lines.next(), VELOCITY_CSV_HEADER)?;
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = n + 2;
        let p: Vec<_> = line.split(',').collect();
        if p.len() != 8 {
            return Err(VehicleError::Format {
                line: lineno,
                msg: format!("expected 8 fields, found {}", p.len()),
            });
        }
        let valid = match p[7].trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(VehicleError::Format {
                    line: lineno,
                    msg: format!("bad valid flag '{other}'"),
                })
            }
        };
        let omega_source = p[4].parse().map_err(|msg| VehicleError::Format { line: lineno, msg })?;
        rows.push(VelocityEstimate {
            t_mid: field(&p, 0, lineno, "t_s")?,
            v_lon: field(&p, 1, lineno, "v_lon")?,
            v_lat: field(&p, 2, lineno, "v_lat")?,
            omega: field(&p, 3, lineno, "omega")?,
            omega_source,
            quality: MotionQuality {
                n_inliers: field(&p, 5, lineno, "n_inliers")?,
                inlier_fraction: field(&p, 6, lineno, "inlier_fraction")?,
                mean_residual: 0.0,
            },
            valid,
        });
    }
    Ok(rows)
}
