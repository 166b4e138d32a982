//! Planar rigid registration of flow correspondences.
//!
//! [`estimate_rigid`] is the closed-form least-squares solution for a 2D
//! rotation and translation (centroids, cross-covariance, SVD, reflection
//! guard). [`ransac::ransac_estimate`] wraps it in a two-point consensus loop,
//! and [`velocity`] turns the pixel-space motion into a metric camera
//! velocity.

pub mod ransac;
pub mod svd2;
pub mod velocity;

use nalgebra::{Matrix2, Vector2};
use thiserror::Error;

pub use ransac::{ransac_estimate, RansacOutcome, RansacParams};
pub use velocity::{to_camera_velocity, AxisMapping, CameraVelocity, MotionQuality, SignedAxis};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("need at least 2 correspondences, got {0}")]
    InsufficientData(usize),
    #[error("degenerate point set: all source points coincide")]
    Degenerate,
    #[error("consensus too weak: inlier fraction {fraction:.3} below {required:.3}")]
    DegenerateConsensus { fraction: f64, required: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// One flow vector as a point pair: `p` in the earlier frame, `q` in the later.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub p: Vector2<f64>,
    pub q: Vector2<f64>,
}

impl Correspondence {
    pub fn new(p: Vector2<f64>, q: Vector2<f64>) -> Self {
        Self { p, q }
    }
}

/// Rotation by `theta` (counter-clockwise in image coordinates) followed by a
/// translation `t` in pixels: `q = R(theta) p + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidMotion2D {
    pub theta: f64,
    pub t: Vector2<f64>,
    pub n_points: usize,
    pub mean_residual: f64,
}

impl RigidMotion2D {
    pub fn rotation(&self) -> Matrix2<f64> {
        rotation(self.theta)
    }

    #[inline]
    pub fn apply(&self, p: &Vector2<f64>) -> Vector2<f64> {
        self.rotation() * p + self.t
    }
}

pub fn rotation(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Sum of squared registration errors of `(theta, t)` over `pairs`.
pub fn objective(theta: f64, t: &Vector2<f64>, pairs: &[Correspondence]) -> f64 {
    let r = rotation(theta);
    pairs.iter().map(|c| (r * c.p + t - c.q).norm_squared()).sum()
}

/// Least-squares rigid motion mapping every `p` onto its `q`.
pub fn estimate_rigid(pairs: &[Correspondence]) -> Result<RigidMotion2D, MotionError> {
    let n = pairs.len();
    if n < 2 {
        return Err(MotionError::InsufficientData(n));
    }
    let inv_n = 1.0 / n as f64;
    let p_bar = pairs.iter().fold(Vector2::zeros(), |a, c| a + c.p) * inv_n;
    let q_bar = pairs.iter().fold(Vector2::zeros(), |a, c| a + c.q) * inv_n;

    let mut h = Matrix2::zeros();
    let mut spread = 0.0;
    for c in pairs {
        let dp = c.p - p_bar;
        let dq = c.q - q_bar;
        h += dp * dq.transpose();
        spread += dp.norm_squared();
    }
    let scale = p_bar.norm_squared().max(1.0);
    if spread <= 1e-20 * scale * n as f64 {
        return Err(MotionError::Degenerate);
    }

    let svd = svd2::svd2(&h);
    let vu_t = svd.v * svd.u.transpose();
    let d = vu_t.determinant().signum();
    let r = svd.v * Matrix2::new(1.0, 0.0, 0.0, d) * svd.u.transpose();
    let theta = wrap_angle(r[(1, 0)].atan2(r[(0, 0)]));
    let r = rotation(theta);
    let t = q_bar - r * p_bar;

    let mean_residual = pairs.iter().map(|c| (r * c.p + t - c.q).norm()).sum::<f64>() * inv_n;
    Ok(RigidMotion2D {
        theta,
        t,
        n_points: n,
        mean_residual,
    })
}

/// Predicted end points `R p + t`.
pub fn reconstruct_flow(motion: &RigidMotion2D, points: &[Vector2<f64>]) -> Vec<Vector2<f64>> {
    let r = motion.rotation();
    points.iter().map(|p| r * p + motion.t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6};

    fn v(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    fn transformed(points: &[Vector2<f64>], theta: f64, t: Vector2<f64>) -> Vec<Correspondence> {
        let r = rotation(theta);
        points.iter().map(|&p| Correspondence::new(p, r * p + t)).collect()
    }

    /// Grid search over theta with the closed-form translation for each angle.
    fn brute_force(pairs: &[Correspondence], lo: f64, hi: f64, step: f64) -> (f64, Vector2<f64>, f64) {
        let n = pairs.len() as f64;
        let p_bar = pairs.iter().fold(Vector2::zeros(), |a, c| a + c.p) / n;
        let q_bar = pairs.iter().fold(Vector2::zeros(), |a, c| a + c.q) / n;
        let mut best = (0.0, Vector2::zeros(), f64::INFINITY);
        let steps = ((hi - lo) / step).round() as usize;
        for k in 0..=steps {
            let th = lo + k as f64 * step;
            let t = q_bar - rotation(th) * p_bar;
            let obj = objective(th, &t, pairs);
            if obj < best.2 {
                best = (th, t, obj);
            }
        }
        best
    }

    #[test]
    fn identity() {
        let pts = [v(1.0, 2.0), v(-3.0, 0.5), v(4.0, -1.0), v(0.0, 0.0), v(2.5, 2.5)];
        let m = estimate_rigid(&transformed(&pts, 0.0, Vector2::zeros())).unwrap();
        assert!(m.theta.abs() < 1e-12);
        assert!(m.t.norm() < 1e-12);
        assert!(m.mean_residual < 1e-12);
        assert_eq!(m.n_points, 5);
    }

    #[test]
    fn pure_translation() {
        let pts = [v(1.0, 2.0), v(-3.0, 0.5), v(4.0, -1.0)];
        let m = estimate_rigid(&transformed(&pts, 0.0, v(3.0, 4.0))).unwrap();
        assert!(m.theta.abs() < 1e-12);
        assert!((m.t - v(3.0, 4.0)).norm() < 1e-12);
    }

    #[test]
    fn exact_rotation_thirty_degrees() {
        let pts = [v(1.0, 0.0), v(0.0, 1.0), v(-1.0, 0.0)];
        let m = estimate_rigid(&transformed(&pts, FRAC_PI_6, Vector2::zeros())).unwrap();
        assert!((m.theta - FRAC_PI_6).abs() < 1e-9);
        assert!(m.t.norm() < 1e-9);
    }

    #[test]
    fn noisy_fit_beats_grid_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<_> = (0..50)
            .map(|_| v(rng.random_range(-80.0..80.0), rng.random_range(-60.0..60.0)))
            .collect();
        let mut pairs = transformed(&pts, 0.05, v(2.0, -1.0));
        for c in &mut pairs {
            // Box-Muller for sigma = 0.1
            let (a, b): (f64, f64) = (rng.random::<f64>().max(1e-12), rng.random());
            let r = (-2.0 * a.ln()).sqrt() * 0.1;
            c.q += v(r * (2.0 * std::f64::consts::PI * b).cos(), r * (2.0 * std::f64::consts::PI * b).sin());
        }
        let m = estimate_rigid(&pairs).unwrap();
        let (th, t, obj) = brute_force(&pairs, -0.2, 0.2, 1e-4);
        assert!(objective(m.theta, &m.t, &pairs) <= obj + 1e-9);
        assert!((m.theta - th).abs() <= 1e-4);
        assert!((m.t - t).norm() < 0.02);
        assert!((m.theta - 0.05).abs() < 2e-3);
    }

    #[test]
    fn errors() {
        assert_eq!(estimate_rigid(&[]), Err(MotionError::InsufficientData(0)));
        let one = [Correspondence::new(v(0.0, 0.0), v(1.0, 1.0))];
        assert_eq!(estimate_rigid(&one), Err(MotionError::InsufficientData(1)));
        let same = [
            Correspondence::new(v(2.0, 3.0), v(1.0, 1.0)),
            Correspondence::new(v(2.0, 3.0), v(4.0, 1.0)),
        ];
        assert_eq!(estimate_rigid(&same), Err(MotionError::Degenerate));
    }

    #[test]
    fn reconstruct_examples() {
        let m = RigidMotion2D {
            theta: 0.0,
            t: v(1.0, 1.0),
            n_points: 2,
            mean_residual: 0.0,
        };
        assert_eq!(reconstruct_flow(&m, &[v(0.0, 0.0)]), vec![v(1.0, 1.0)]);
        let m = RigidMotion2D {
            theta: FRAC_PI_2,
            t: Vector2::zeros(),
            n_points: 2,
            mean_residual: 0.0,
        };
        let q = reconstruct_flow(&m, &[v(1.0, 0.0)])[0];
        assert!((q - v(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn collinear_input_yields_proper_rotation() {
        // points on a line, targets mirrored across it: a reflection would fit better
        let pairs: Vec<_> = (0..6)
            .map(|i| {
                let x = i as f64;
                Correspondence::new(v(x, 0.0), v(x, if i % 2 == 0 { 0.3 } else { -0.3 }))
            })
            .collect();
        let m = estimate_rigid(&pairs).unwrap();
        assert!((m.rotation().determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn angle_range() {
        assert_eq!(wrap_angle(-std::f64::consts::PI), std::f64::consts::PI);
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        let pts = [v(1.0, 0.0), v(0.0, 1.0), v(-1.0, -1.0)];
        let m = estimate_rigid(&transformed(&pts, std::f64::consts::PI, Vector2::zeros())).unwrap();
        assert!(m.theta > 0.0 && (m.theta - std::f64::consts::PI).abs() < 1e-9);
    }

    fn arb_points() -> impl Strategy<Value = Vec<Vector2<f64>>> {
        prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40)
            .prop_map(|v| v.into_iter().map(|(x, y)| Vector2::new(x, y)).collect())
    }

    proptest! {
        #[test]
        fn round_trip_through_reconstruction(pts in arb_points(), theta in -3.0f64..3.0, tx in -50.0f64..50.0, ty in -50.0f64..50.0) {
            let spread: f64 = {
                let c = pts.iter().fold(Vector2::zeros(), |a, p| a + p) / pts.len() as f64;
                pts.iter().map(|p| (p - c).norm_squared()).sum()
            };
            prop_assume!(spread > 1.0);
            let truth = RigidMotion2D { theta, t: Vector2::new(tx, ty), n_points: pts.len(), mean_residual: 0.0 };
            let qs = reconstruct_flow(&truth, &pts);
            let pairs: Vec<_> = pts.iter().zip(&qs).map(|(&p, &q)| Correspondence::new(p, q)).collect();
            let m = estimate_rigid(&pairs).unwrap();
            prop_assert!(wrap_angle(m.theta - theta).abs() < 1e-9);
            prop_assert!((m.t - truth.t).norm() < 1e-7);
        }

        #[test]
        fn translation_equivariance(pts in arb_points(), theta in -0.5f64..0.5, off_x in -500.0f64..500.0, off_y in -500.0f64..500.0) {
            let pairs = transformed(&pts, theta, Vector2::new(1.0, -2.0));
            prop_assume!(estimate_rigid(&pairs).is_ok());
            let a = estimate_rigid(&pairs).unwrap();
            let off = Vector2::new(off_x, off_y);
            let shifted: Vec<_> = pairs.iter().map(|c| Correspondence::new(c.p + off, c.q + off)).collect();
            let b = estimate_rigid(&shifted).unwrap();
            prop_assert!((a.theta - b.theta).abs() < 1e-9);
            // t changes by (I - R) off, which vanishes only when theta does
            let expected = a.t + (Matrix2::identity() - rotation(a.theta)) * off;
            prop_assert!((b.t - expected).norm() < 1e-6);
        }

        #[test]
        fn always_proper_rotation(raw in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0), 2..20)) {
            let pairs: Vec<_> = raw.into_iter().map(|(a, b, c, d)| Correspondence::new(v(a, b), v(c, d))).collect();
            if let Ok(m) = estimate_rigid(&pairs) {
                prop_assert!((m.rotation().determinant() - 1.0).abs() < 1e-12);
                prop_assert!(m.theta > -std::f64::consts::PI && m.theta <= std::f64::consts::PI);
            }
        }
    }
}
