//! Browser bindings: exposure budget, flow between two rendered ground
//! patches, and a robust-vs-plain rigid fit on corrupted correspondences.

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wasm_bindgen::prelude::*;

use planar_eof::camera::{max_exposure_for_blur, CameraModel};
use planar_eof::flow::{compute_flow, subsample_flow, FlowParams};
use planar_eof::rigid::{
    estimate_rigid, ransac_estimate, rotation, to_camera_velocity, AxisMapping, Correspondence, MotionQuality,
    RansacParams, RigidMotion2D,
};
use planar_eof::synth::{render_plane, Pose, Texture};

/// Longest exposure in microseconds; `Infinity` when standing still and
/// `NaN` for impossible geometry.
#[wasm_bindgen]
pub fn max_exposure_us(speed: f64, budget: f64, z: f64, fov_deg: f64) -> f64 {
    let cam = CameraModel::from_fov(640, 480, fov_deg.to_radians(), z);
    match max_exposure_for_blur(budget, speed, &cam) {
        Ok(limit) => limit.seconds().map_or(f64::INFINITY, |s| s * 1e6),
        Err(_) => f64::NAN,
    }
}

/// `[v0, e0, v1, e1, ...]` for `n` speeds evenly spaced up to `v_max`.
#[wasm_bindgen]
pub fn blur_curve(budget: f64, z: f64, fov_deg: f64, v_max: f64, n: usize) -> Vec<f64> {
    (1..=n)
        .flat_map(|k| {
            let v = v_max * k as f64 / n as f64;
            [v, max_exposure_us(v, budget, z, fov_deg)]
        })
        .collect()
}

const DEMO_W: u16 = 96;
const DEMO_H: u16 = 72;
const DEMO_F: f64 = 60.0;
const DEMO_Z: f64 = 0.3;

#[wasm_bindgen]
pub struct FlowDemo {
    gray: Vec<u8>,
    arrows: Vec<f32>,
    mean_u: f64,
    mean_v: f64,
    valid_fraction: f64,
    est_dx: f64,
    est_dy: f64,
    est_yaw_deg: f64,
}

#[wasm_bindgen]
impl FlowDemo {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        DEMO_W as usize
    }
    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        DEMO_H as usize
    }
    /// First patch as 8-bit gray, row-major.
    pub fn gray(&self) -> Vec<u8> {
        self.gray.clone()
    }
    /// `[x, y, u, v, ...]` on an 8 px grid.
    pub fn arrows(&self) -> Vec<f32> {
        self.arrows.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn mean_u(&self) -> f64 {
        self.mean_u
    }
    #[wasm_bindgen(getter)]
    pub fn mean_v(&self) -> f64 {
        self.mean_v
    }
    #[wasm_bindgen(getter)]
    pub fn valid_fraction(&self) -> f64 {
        self.valid_fraction
    }
    /// Recovered camera displacement, metres and degrees.
    #[wasm_bindgen(getter)]
    pub fn est_dx(&self) -> f64 {
        self.est_dx
    }
    #[wasm_bindgen(getter)]
    pub fn est_dy(&self) -> f64 {
        self.est_dy
    }
    #[wasm_bindgen(getter)]
    pub fn est_yaw_deg(&self) -> f64 {
        self.est_yaw_deg
    }
}

/// Renders a noise patch before and after moving the camera by
/// `(dx_mm, dy_mm)` and `yaw_deg`, then recovers the motion from dense flow.
#[wasm_bindgen]
pub fn flow_demo(dx_mm: f64, dy_mm: f64, yaw_deg: f64, seed: u32) -> FlowDemo {
    let cam = CameraModel::from_focal(DEMO_W, DEMO_H, DEMO_F, DEMO_Z);
    let tex = Texture::Noise {
        seed: seed as u64,
        cutoff: 0.125,
    };
    let a = render_plane(&tex, &Pose::default(), &cam);
    let b = render_plane(
        &tex,
        &Pose {
            x: dx_mm * 1e-3,
            y: dy_mm * 1e-3,
            yaw: yaw_deg.to_radians(),
        },
        &cam,
    );
    let field = compute_flow(&a, &b, &FlowParams::default(), 1.0).expect("default parameters are valid");

    let (lo, hi) = a
        .data
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    let gray = a
        .data
        .iter()
        .map(|&v| ((v - lo) / (hi - lo).max(1e-6) * 255.0).round() as u8)
        .collect();
    let arrows = subsample_flow(&field, 8)
        .iter()
        .flat_map(|c| {
            let d = c.q - c.p;
            [c.p.x as f32, c.p.y as f32, d.x as f32, d.y as f32]
        })
        .collect();
    let (mean_u, mean_v) = field.mean_interior(4).unwrap_or((f64::NAN, f64::NAN));

    let c = Vector2::new(cam.cx, cam.cy);
    let pairs: Vec<Correspondence> = subsample_flow(&field, 4)
        .into_iter()
        .filter(|p| p.p.x > 4.0 && p.p.y > 4.0 && p.p.x < DEMO_W as f64 - 4.0 && p.p.y < DEMO_H as f64 - 4.0)
        .map(|p| Correspondence::new(p.p - c, p.q - c))
        .collect();
    let (est_dx, est_dy, est_yaw_deg) = match ransac_estimate(&pairs, &RansacParams::default(), seed as u64) {
        Ok(out) => {
            let cv = to_camera_velocity(
                &out.motion,
                &cam,
                1.0,
                &AxisMapping::vehicle_mounted(),
                0.0,
                MotionQuality::default(),
            );
            (cv.v_c.x * 1e3, cv.v_c.y * 1e3, cv.omega.to_degrees())
        }
        Err(_) => (f64::NAN, f64::NAN, f64::NAN),
    };
    FlowDemo {
        gray,
        arrows,
        mean_u,
        mean_v,
        valid_fraction: field.valid_fraction(),
        est_dx,
        est_dy,
        est_yaw_deg,
    }
}

#[wasm_bindgen]
pub struct RansacDemo {
    points: Vec<f64>,
    plain: [f64; 3],
    robust: [f64; 3],
    n_inliers: usize,
}

#[wasm_bindgen]
impl RansacDemo {
    /// `[px, py, qx, qy, is_outlier, ...]`.
    pub fn points(&self) -> Vec<f64> {
        self.points.clone()
    }
    /// Least-squares fit over every pair: `[theta_deg, tx, ty]`.
    pub fn plain(&self) -> Vec<f64> {
        self.plain.to_vec()
    }
    /// Consensus fit: `[theta_deg, tx, ty]`, NaN if no consensus.
    pub fn robust(&self) -> Vec<f64> {
        self.robust.to_vec()
    }
    #[wasm_bindgen(getter)]
    pub fn n_inliers(&self) -> usize {
        self.n_inliers
    }
}

fn summary(m: &RigidMotion2D) -> [f64; 3] {
    [m.theta.to_degrees(), m.t.x, m.t.y]
}

/// `n` points in a 200 px square moved by a known rigid motion, with
/// Gaussian noise and a fraction replaced by random vectors up to 50 px.
#[wasm_bindgen]
pub fn ransac_demo(
    n: usize,
    outlier_fraction: f64,
    theta_deg: f64,
    tx: f64,
    ty: f64,
    noise_px: f64,
    seed: u32,
) -> RansacDemo {
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let noise = Normal::new(0.0, noise_px.max(0.0)).expect("finite sigma");
    let r = rotation(theta_deg.to_radians());
    let t = Vector2::new(tx, ty);
    let n = n.max(2);
    let n_out = (outlier_fraction.clamp(0.0, 1.0) * n as f64).round() as usize;
    let mut pairs = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(5 * n);
    for k in 0..n {
        let p = Vector2::new(rng.random_range(-100.0..100.0), rng.random_range(-100.0..100.0));
        let outlier = k < n_out;
        let q = if outlier {
            let a = rng.random_range(0.0..std::f64::consts::TAU);
            p + rng.random_range(5.0..50.0) * Vector2::new(a.cos(), a.sin())
        } else {
            r * p + t + Vector2::new(noise.sample(&mut rng), noise.sample(&mut rng))
        };
        pairs.push(Correspondence::new(p, q));
        points.extend([p.x, p.y, q.x, q.y, f64::from(u8::from(outlier))]);
    }
    let plain = estimate_rigid(&pairs).map_or([f64::NAN; 3], |m| summary(&m));
    let (robust, n_inliers) = match ransac_estimate(&pairs, &RansacParams::default(), seed as u64) {
        Ok(out) => (summary(&out.motion), out.n_inliers),
        Err(_) => ([f64::NAN; 3], 0),
    };
    RansacDemo {
        points,
        plain,
        robust,
        n_inliers,
    }
}
