//! Pixel-space rigid motion to metric camera-center velocity.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, Vector2};

use super::{rotation, RigidMotion2D};
use crate::camera::CameraModel;

/// One signed vehicle axis, the target of an image axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignedAxis {
    PosX,
    NegX,
    PosY,
    NegY,
}

impl SignedAxis {
    fn unit(self) -> Vector2<f64> {
        match self {
            SignedAxis::PosX => Vector2::new(1.0, 0.0),
            SignedAxis::NegX => Vector2::new(-1.0, 0.0),
            SignedAxis::PosY => Vector2::new(0.0, 1.0),
            SignedAxis::NegY => Vector2::new(0.0, -1.0),
        }
    }

    fn is_x(self) -> bool {
        matches!(self, SignedAxis::PosX | SignedAxis::NegX)
    }
}

impl fmt::Display for SignedAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignedAxis::PosX => "+x",
            SignedAxis::NegX => "-x",
            SignedAxis::PosY => "+y",
            SignedAxis::NegY => "-y",
        })
    }
}

impl FromStr for SignedAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+x" | "x" => Ok(SignedAxis::PosX),
            "-x" => Ok(SignedAxis::NegX),
            "+y" | "y" => Ok(SignedAxis::PosY),
            "-y" => Ok(SignedAxis::NegY),
            other => Err(format!("unknown axis '{other}', expected one of +x -x +y -y")),
        }
    }
}

/// How image axes relate to the vehicle frame.
///
/// `x` and `y` name the vehicle axis that image `+x` / `+y` point along; they
/// must form a signed permutation. `scene_motion` says what the image motion
/// measures: `false` means the observed texture itself moves under a fixed
/// camera (turntable, conveyor), so velocities take the sign of the flow;
/// `true` means the camera rides on the vehicle over static ground, so the
/// ground appears to move opposite to the vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxisMapping {
    pub x: SignedAxis,
    pub y: SignedAxis,
    pub scene_motion: bool,
}

impl Default for AxisMapping {
    fn default() -> Self {
        Self {
            x: SignedAxis::PosX,
            y: SignedAxis::PosY,
            scene_motion: false,
        }
    }
}

impl AxisMapping {
    /// Camera rigidly mounted on the vehicle with image axes along the vehicle axes.
    pub fn vehicle_mounted() -> Self {
        Self {
            scene_motion: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.x.is_x() == self.y.is_x() {
            return Err(format!("axis mapping {} / {} is not a permutation", self.x, self.y));
        }
        Ok(())
    }

    /// Matrix taking image-axis components to vehicle-axis components.
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::from_columns(&[self.x.unit(), self.y.unit()])
    }

    fn sign(&self) -> f64 {
        if self.scene_motion {
            -1.0
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotionQuality {
    pub n_inliers: usize,
    pub inlier_fraction: f64,
    pub mean_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraVelocity {
    /// m/s in the vehicle-aligned ground plane.
    pub v_c: Vector2<f64>,
    /// rad/s, positive when turning from vehicle `+x` towards `+y`.
    pub omega: f64,
    /// Seconds.
    pub t_mid: f64,
    pub quality: MotionQuality,
}

/// Converts a frame-pair motion into camera-center velocity.
///
/// The translation is expected for coordinates centered at the principal
/// point, so it is the image displacement of the optical axis. Pixels scale
/// to meters by `height_z / f_px`. Under rotation the translation measured
/// between the two frames is expressed in the later frame's axes; rotating it
/// back by half the angle gives the mean heading over the interval.
pub fn to_camera_velocity(
    motion: &RigidMotion2D,
    cam: &CameraModel,
    dt: f64,
    mapping: &AxisMapping,
    t_mid: f64,
    quality: MotionQuality,
) -> CameraVelocity {
    let a = mapping.matrix();
    let s = mapping.sign();
    let meters = cam.height_z / cam.f_px;
    let v_img = rotation(-0.5 * motion.theta) * motion.t * (meters / dt);
    CameraVelocity {
        v_c: a * v_img * s,
        omega: s * a.determinant() * motion.theta / dt,
        t_mid,
        quality,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn motion(theta: f64, tx: f64, ty: f64) -> RigidMotion2D {
        RigidMotion2D {
            theta,
            t: Vector2::new(tx, ty),
            n_points: 2,
            mean_residual: 0.0,
        }
    }

    fn cam() -> CameraModel {
        CameraModel::from_focal(640, 480, 554.26, 0.6)
    }

    #[test]
    fn highway_pixel_speed() {
        let cv = to_camera_velocity(&motion(0.0, 185.0, 0.0), &cam(), 0.005, &AxisMapping::default(), 0.0, MotionQuality::default());
        assert!((cv.v_c.norm() - 40.05).abs() < 0.01, "{}", cv.v_c.norm());
    }

    #[test]
    fn zero_motion() {
        let cv = to_camera_velocity(&motion(0.0, 0.0, 0.0), &cam(), 0.01, &AxisMapping::vehicle_mounted(), 0.0, MotionQuality::default());
        assert_eq!(cv.v_c, Vector2::zeros());
        assert_eq!(cv.omega, 0.0);
    }

    #[test]
    fn disk_angular_rate() {
        let cv = to_camera_velocity(&motion(0.03766, 0.0, 0.0), &cam(), 0.001, &AxisMapping::default(), 0.0, MotionQuality::default());
        assert!((cv.omega - 37.66).abs() < 1e-9);
        let rpm = cv.omega * 60.0 / (2.0 * std::f64::consts::PI);
        assert!((rpm - 359.6).abs() < 0.05);
    }

    #[test]
    fn mounted_camera_inverts_signs() {
        let m = motion(0.01, -10.0, 0.0);
        let fixed = to_camera_velocity(&m, &cam(), 0.01, &AxisMapping::default(), 0.0, MotionQuality::default());
        let mounted = to_camera_velocity(&m, &cam(), 0.01, &AxisMapping::vehicle_mounted(), 0.0, MotionQuality::default());
        assert_eq!(mounted.v_c, -fixed.v_c);
        assert_eq!(mounted.omega, -fixed.omega);
        assert!(mounted.v_c.x > 0.0);
    }

    #[test]
    fn permuted_axes() {
        // image +x is vehicle -y, image +y is vehicle +x: a proper rotation
        let mapping = AxisMapping {
            x: SignedAxis::NegY,
            y: SignedAxis::PosX,
            scene_motion: false,
        };
        mapping.validate().unwrap();
        let cv = to_camera_velocity(&motion(0.0, 6.0, 0.0), &cam(), 1.0, &mapping, 0.0, MotionQuality::default());
        let k = 0.6 / 554.26;
        assert!((cv.v_c - Vector2::new(0.0, -6.0 * k)).norm() < 1e-15);

        // a reflection flips the sense of rotation
        let mirrored = AxisMapping {
            x: SignedAxis::PosX,
            y: SignedAxis::NegY,
            scene_motion: false,
        };
        let cv = to_camera_velocity(&motion(0.2, 0.0, 0.0), &cam(), 1.0, &mirrored, 0.0, MotionQuality::default());
        assert!((cv.omega + 0.2).abs() < 1e-15);
    }

    #[test]
    fn half_angle_heading() {
        // constant body velocity (1, 0) px/s with rotation: the camera-frame
        // translation is the chord, rotated back by half the turn
        let theta: f64 = 0.3;
        let chord = rotation(0.5 * theta) * Vector2::new(1.0, 0.0);
        let c = CameraModel::from_focal(100, 100, 1.0, 1.0);
        let cv = to_camera_velocity(&motion(theta, chord.x, chord.y), &c, 1.0, &AxisMapping::default(), 0.0, MotionQuality::default());
        assert!((cv.v_c - Vector2::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn mapping_parse_and_validate() {
        assert_eq!("-y".parse::<SignedAxis>().unwrap(), SignedAxis::NegY);
        assert!("z".parse::<SignedAxis>().is_err());
        let bad = AxisMapping {
            x: SignedAxis::PosX,
            y: SignedAxis::NegX,
            scene_motion: false,
        };
        assert!(bad.validate().is_err());
    }
}
