//! Downward-facing pinhole camera over a ground plane, and the exposure /
//! accumulation motion-blur budget that follows from its geometry.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("invalid camera model: {0}")]
    Invalid(String),
    #[error("domain error: {0}")]
    Domain(String),
}

/// Pinhole camera looking straight down at the ground plane.
///
/// Pixel `(i, j)` has its center at `(i + 0.5, j + 0.5)`; the principal point
/// uses the same continuous coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    pub f_px: f64,
    pub cx: f64,
    pub cy: f64,
    /// Camera-to-ground distance in meters.
    pub height_z: f64,
    /// Horizontal field of view in radians.
    pub fov_alpha: f64,
    pub width: u16,
    pub height: u16,
}

impl CameraModel {
    /// Builds a centered camera whose focal length follows from the field of view.
    pub fn from_fov(width: u16, height: u16, fov_alpha: f64, height_z: f64) -> Self {
        let f_px = (width as f64 / 2.0) / (fov_alpha / 2.0).tan();
        Self {
            f_px,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            height_z,
            fov_alpha,
            width,
            height,
        }
    }

    /// Builds a centered camera from a focal length; the field of view is derived.
    pub fn from_focal(width: u16, height: u16, f_px: f64, height_z: f64) -> Self {
        let fov_alpha = 2.0 * ((width as f64 / 2.0) / f_px).atan();
        Self {
            f_px,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            height_z,
            fov_alpha,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        if !(self.f_px > 0.0 && self.f_px.is_finite()) {
            return Err(CameraError::Invalid("f_px must be positive".into()));
        }
        if !(self.height_z > 0.0 && self.height_z.is_finite()) {
            return Err(CameraError::Invalid("height_z must be positive".into()));
        }
        if !(self.fov_alpha > 0.0 && self.fov_alpha < std::f64::consts::PI) {
            return Err(CameraError::Invalid("fov_alpha must lie in (0, pi)".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(CameraError::Invalid("sensor size must be non-zero".into()));
        }
        let implied = (self.width as f64 / 2.0) / (self.fov_alpha / 2.0).tan();
        if ((implied - self.f_px) / self.f_px).abs() > 0.01 {
            return Err(CameraError::Invalid(format!(
                "f_px {} disagrees with field of view (implies {implied:.3})",
                self.f_px
            )));
        }
        Ok(())
    }

    /// Meters on the ground per pixel.
    pub fn meters_per_pixel(&self) -> f64 {
        self.height_z / self.f_px
    }
}

fn check_geometry(height_z: f64, fov_alpha: f64) -> Result<f64, CameraError> {
    if !(height_z > 0.0) {
        return Err(CameraError::Domain("camera height must be positive".into()));
    }
    if !(fov_alpha > 0.0 && fov_alpha < std::f64::consts::PI) {
        return Err(CameraError::Domain("field of view must lie in (0, pi)".into()));
    }
    Ok(height_z * 2.0 * (fov_alpha / 2.0).tan())
}

/// Fraction of the image width the ground moves during an exposure of
/// `t_exp` seconds at speed `v` m/s.
pub fn relative_motion_blur(t_exp: f64, v: f64, cam: &CameraModel) -> Result<f64, CameraError> {
    if !(t_exp >= 0.0) || !(v >= 0.0) {
        return Err(CameraError::Domain("exposure and speed must be non-negative".into()));
    }
    let ground_width = check_geometry(cam.height_z, cam.fov_alpha)?;
    Ok(t_exp * v / ground_width)
}

/// Longest exposure that keeps blur within budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExposureLimit {
    Seconds(f64),
    /// Stationary camera: any exposure satisfies the budget.
    Unbounded,
}

impl ExposureLimit {
    pub fn seconds(self) -> Option<f64> {
        match self {
            ExposureLimit::Seconds(s) => Some(s),
            ExposureLimit::Unbounded => None,
        }
    }
}

pub fn max_exposure_for_blur(
    blur_budget: f64,
    v: f64,
    cam: &CameraModel,
) -> Result<ExposureLimit, CameraError> {
    if !(blur_budget > 0.0) {
        return Err(CameraError::Domain("blur budget must be positive".into()));
    }
    if !(v >= 0.0) {
        return Err(CameraError::Domain("speed must be non-negative".into()));
    }
    let ground_width = check_geometry(cam.height_z, cam.fov_alpha)?;
    if v == 0.0 {
        return Ok(ExposureLimit::Unbounded);
    }
    Ok(ExposureLimit::Seconds(blur_budget * ground_width / v))
}
