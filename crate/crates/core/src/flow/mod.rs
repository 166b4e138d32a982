//! Dense optical flow by polynomial expansion (Farneback), coarse to fine.
//!
//! Each frame is expanded into local quadratic models on every pyramid level.
//! For a pixel `x` with current displacement guess `d`, the two expansions
//! give `A = (A1(x) + A2(x + d)) / 2` and
//! `db = A d - (b2(x + d) - b1(x)) / 2`; the displacement solves
//! `A d = db` in the least-squares sense over a Gaussian window, i.e.
//! `(sum w A^T A) d = sum w A^T db`. Pixels whose 2x2 normal matrix is
//! numerically singular are flagged invalid.

pub mod debug;
pub mod poly;
pub mod pyramid;

use nalgebra::Vector2;
use thiserror::Error;

use crate::rigid::Correspondence;
use poly::{polynomial_expansion, ExpansionBasis, PolyExpansion};
use pyramid::{blur_planes, build_pyramid, gaussian_kernel, level_sizes, resize, Plane};

#[derive(Debug, Error, PartialEq)]
pub enum FlowError {
    #[error("frame size mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("invalid flow parameters: {0}")]
    InvalidParams(String),
    #[error("time delta must be positive, got {0}")]
    InvalidDt(f64),
}

/// Reciprocal-condition floor below which a pixel's normal matrix is treated
/// as singular.
pub const MIN_RCOND: f64 = 1e-6;
/// Absolute floor on the largest eigenvalue of the normal matrix; textureless
/// neighborhoods fall below it.
pub const MIN_EIGEN: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct FlowParams {
    pub pyramid_levels: usize,
    pub pyramid_scale: f64,
    /// Odd side length of the Gaussian averaging window.
    pub window_size: usize,
    pub iterations: usize,
    /// Half-width of the expansion neighborhood (`2 n + 1` taps).
    pub poly_n: usize,
    pub poly_sigma: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            pyramid_levels: 3,
            pyramid_scale: 0.5,
            window_size: 15,
            iterations: 3,
            poly_n: 5,
            poly_sigma: 1.1,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        let bad = |m: &str| Err(FlowError::InvalidParams(m.into()));
        if self.pyramid_levels < 1 {
            return bad("pyramid_levels must be >= 1");
        }
        if !(self.pyramid_scale > 0.0 && self.pyramid_scale < 1.0) {
            return bad("pyramid_scale must lie in (0, 1)");
        }
        if self.window_size < 3 || self.window_size % 2 == 0 {
            return bad("window_size must be odd and >= 3");
        }
        if self.iterations < 1 {
            return bad("iterations must be >= 1");
        }
        if self.poly_n < 1 || !(self.poly_sigma > 0.0) {
            return bad("poly_n and poly_sigma must be positive");
        }
        Ok(())
    }

    fn window_sigma(&self) -> f64 {
        0.3 * ((self.window_size as f64 - 1.0) * 0.5 - 1.0) + 0.8
    }
}

/// Dense per-pixel displacement from one frame to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub u: Vec<f32>,
    pub v: Vec<f32>,
    pub valid: Vec<bool>,
    /// Seconds between the two source frames.
    pub dt: f64,
}

impl FlowField {
    pub fn uniform(width: usize, height: usize, u: f32, v: f32, dt: f64) -> Self {
        let n = width * height;
        Self {
            width,
            height,
            u: vec![u; n],
            v: vec![v; n],
            valid: vec![true; n],
            dt,
        }
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn valid_fraction(&self) -> f64 {
        self.valid_count() as f64 / self.valid.len().max(1) as f64
    }

    /// Mean displacement over valid pixels inside a `margin`-pixel border.
    pub fn mean_interior(&self, margin: usize) -> Option<(f64, f64)> {
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
        for y in margin..self.height.saturating_sub(margin) {
            for x in margin..self.width.saturating_sub(margin) {
                let i = y * self.width + x;
                if self.valid[i] {
                    su += self.u[i] as f64;
                    sv += self.v[i] as f64;
                    n += 1;
                }
            }
        }
        (n > 0).then(|| (su / n as f64, sv / n as f64))
    }
}

/// Emits `(p, p + flow(p))` for every valid pixel on a `stride` grid, with `p`
/// at the pixel center `(i + 0.5, j + 0.5)`.
pub fn subsample_flow(field: &FlowField, stride: usize) -> Vec<Correspondence> {
    let stride = stride.max(1);
    let mut out = Vec::new();
    for y in (0..field.height).step_by(stride) {
        for x in (0..field.width).step_by(stride) {
            let i = y * field.width + x;
            if field.valid[i] {
                let p = Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
                let q = p + Vector2::new(field.u[i] as f64, field.v[i] as f64);
                out.push(Correspondence { p, q });
            }
        }
    }
    out
}

/// Pyramid of expansions for one frame.
#[derive(Debug, Clone)]
pub struct FramePyramid {
    levels: Vec<PolyExpansion>,
}

impl FramePyramid {
    pub fn width(&self) -> usize {
        self.levels[0].width
    }

    pub fn height(&self) -> usize {
        self.levels[0].height
    }
}

/// Flow estimator that keeps the previous frame's expansions, so a stream of
/// frames costs one expansion per frame.
#[derive(Debug, Clone)]
pub struct FlowEngine {
    params: FlowParams,
    basis: ExpansionBasis,
    window: Vec<f32>,
    previous: Option<FramePyramid>,
}

impl FlowEngine {
    pub fn new(params: FlowParams) -> Result<Self, FlowError> {
        params.validate()?;
        let basis = ExpansionBasis::new(params.poly_n, params.poly_sigma);
        let window = gaussian_kernel(params.window_size / 2, params.window_sigma());
        Ok(Self {
            params,
            basis,
            window,
            previous: None,
        })
    }

    pub fn params(&self) -> &FlowParams {
        &self.params
    }

    pub fn expand(&self, img: &Plane) -> FramePyramid {
        let min_side = 2 * self.params.poly_n + 1;
        let sizes = level_sizes(
            img.width,
            img.height,
            self.params.pyramid_levels,
            self.params.pyramid_scale,
            min_side,
        );
        let levels = build_pyramid(img, &sizes)
            .iter()
            .map(|p| polynomial_expansion(p, &self.basis))
            .collect();
        FramePyramid { levels }
    }

    /// Feeds the next frame; returns the flow from the previous frame, if any.
    pub fn push(&mut self, img: &Plane, dt: f64) -> Result<Option<FlowField>, FlowError> {
        let current = self.expand(img);
        let out = match &self.previous {
            Some(prev) => Some(self.flow_between(prev, &current, dt)?),
            None => None,
        };
        self.previous = Some(current);
        Ok(out)
    }

    pub fn reset(&mut self) {
        self.previous = None;
    }

    pub fn flow_between(&self, prev: &FramePyramid, next: &FramePyramid, dt: f64) -> Result<FlowField, FlowError> {
        if !(dt > 0.0) {
            return Err(FlowError::InvalidDt(dt));
        }
        if prev.width() != next.width() || prev.height() != next.height() {
            return Err(FlowError::DimensionMismatch(
                prev.width(),
                prev.height(),
                next.width(),
                next.height(),
            ));
        }
        let nlev = prev.levels.len().min(next.levels.len());
        let mut u = Plane::new(0, 0);
        let mut v = Plane::new(0, 0);
        let mut valid = Vec::new();
        for level in (0..nlev).rev() {
            let e1 = &prev.levels[level];
            let e2 = &next.levels[level];
            if level == nlev - 1 {
                u = Plane::new(e1.width, e1.height);
                v = Plane::new(e1.width, e1.height);
            } else {
                let sx = e1.width as f32 / u.width as f32;
                let sy = e1.height as f32 / u.height as f32;
                u = resize(&u, e1.width, e1.height);
                v = resize(&v, e1.width, e1.height);
                u.data.iter_mut().for_each(|a| *a *= sx);
                v.data.iter_mut().for_each(|a| *a *= sy);
            }
            for _ in 0..self.params.iterations {
                let mut m = update_matrices(e1, e2, &u, &v, self.basis.radius());
                {
                    let [g11, g12, g22, h1, h2] = &mut m;
                    blur_planes(&mut [g11, g12, g22, h1, h2], &self.window);
                }
                valid = solve_flow(&m, &mut u, &mut v);
            }
        }
        Ok(FlowField {
            width: u.width,
            height: u.height,
            u: u.data,
            v: v.data,
            valid,
            dt,
        })
    }
}

/// Dense flow from `prev` to `next`.
pub fn compute_flow(prev: &Plane, next: &Plane, params: &FlowParams, dt: f64) -> Result<FlowField, FlowError> {
    if prev.width != next.width || prev.height != next.height {
        return Err(FlowError::DimensionMismatch(prev.width, prev.height, next.width, next.height));
    }
    if !(dt > 0.0) {
        return Err(FlowError::InvalidDt(dt));
    }
    let engine = FlowEngine::new(params.clone())?;
    let a = engine.expand(prev);
    let b = engine.expand(next);
    engine.flow_between(&a, &b, dt)
}

fn border_weight(pos: usize, len: usize, radius: usize) -> f32 {
    let d = pos.min(len - 1 - pos);
    if d >= radius {
        1.0
    } else {
        (d + 1) as f32 / (radius + 1) as f32
    }
}

/// Per-pixel normal-equation terms `[G11, G12, G22, h1, h2]` with
/// `G = A^T A` and `h = A^T db`.
fn update_matrices(e1: &PolyExpansion, e2: &PolyExpansion, u: &Plane, v: &Plane, radius: usize) -> [Plane; 5] {
    let (w, h) = (e1.width, e1.height);
    let mut out = [
        Plane::new(w, h),
        Plane::new(w, h),
        Plane::new(w, h),
        Plane::new(w, h),
        Plane::new(w, h),
    ];
    let xmax = (w - 1) as f32;
    let ymax = (h - 1) as f32;
    for y in 0..h {
        let wy = border_weight(y, h, radius);
        for x in 0..w {
            let i = y * w + x;
            let (dx, dy) = (u.data[i], v.data[i]);
            let fx = x as f32 + dx;
            let fy = y as f32 + dy;
            if !(fx >= 0.0 && fy >= 0.0 && fx <= xmax && fy <= ymax) {
                continue;
            }
            // bilinear sample of the second expansion
            let x0 = fx.floor() as usize;
            let y0 = fy.floor() as usize;
            let x1 = (x0 + 1).min(w - 1);
            let y1 = (y0 + 1).min(h - 1);
            let ax = fx - x0 as f32;
            let ay = fy - y0 as f32;
            let (w00, w10, w01, w11) = ((1.0 - ax) * (1.0 - ay), ax * (1.0 - ay), (1.0 - ax) * ay, ax * ay);
            let (i00, i10, i01, i11) = (y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1);
            let s = |c: &[f32]| c[i00] * w00 + c[i10] * w10 + c[i01] * w01 + c[i11] * w11;

            let a11 = 0.5 * (e1.axx[i] + s(&e2.axx));
            let a22 = 0.5 * (e1.ayy[i] + s(&e2.ayy));
            let a12 = 0.5 * (e1.axy[i] + s(&e2.axy));
            let db1 = -0.5 * (s(&e2.bx) - e1.bx[i]) + a11 * dx + a12 * dy;
            let db2 = -0.5 * (s(&e2.by) - e1.by[i]) + a12 * dx + a22 * dy;

            let wt = wy * border_weight(x, w, radius);
            out[0].data[i] = wt * (a11 * a11 + a12 * a12);
            out[1].data[i] = wt * (a12 * (a11 + a22));
            out[2].data[i] = wt * (a12 * a12 + a22 * a22);
            out[3].data[i] = wt * (a11 * db1 + a12 * db2);
            out[4].data[i] = wt * (a12 * db1 + a22 * db2);
        }
    }
    out
}

/// Solves the 2x2 systems in place; returns the validity mask. Invalid pixels
/// keep their previous displacement.
fn solve_flow(m: &[Plane; 5], u: &mut Plane, v: &mut Plane) -> Vec<bool> {
    let n = u.data.len();
    let mut valid = vec![false; n];
    for i in 0..n {
        let g11 = m[0].data[i] as f64;
        let g12 = m[1].data[i] as f64;
        let g22 = m[2].data[i] as f64;
        let h1 = m[3].data[i] as f64;
        let h2 = m[4].data[i] as f64;
        let tr = g11 + g22;
        let disc = ((g11 - g22) * (g11 - g22) + 4.0 * g12 * g12).sqrt();
        let lmax = 0.5 * (tr + disc);
        let lmin = 0.5 * (tr - disc);
        if !(lmax > MIN_EIGEN) || lmin < MIN_RCOND * lmax {
            continue;
        }
        let det = g11 * g22 - g12 * g12;
        let du = (g22 * h1 - g12 * h2) / det;
        let dv = (g11 * h2 - g12 * h1) / det;
        if du.is_finite() && dv.is_finite() {
            u.data[i] = du as f32;
            v.data[i] = dv as f32;
            valid[i] = true;
        }
    }
    valid
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Smooth pseudo-random texture from a handful of sinusoids.
    fn texture(x: f32, y: f32) -> f32 {
        let mut s = 0.5;
        let comps = [
            (0.31, 0.17, 0.3, 0.13),
            (-0.23, 0.29, 1.7, 0.11),
            (0.41, -0.12, 2.9, 0.09),
            (0.07, 0.45, 0.6, 0.08),
            (0.52, 0.33, 4.1, 0.07),
        ];
        for (kx, ky, ph, a) in comps {
            s += a * (kx * x + ky * y + ph).sin();
        }
        s
    }

    #[test]
    fn identity_pair_gives_zero_flow() {
        let img = Plane::from_fn(64, 48, |x, y| texture(x as f32, y as f32));
        let f = compute_flow(&img, &img, &FlowParams::default(), 0.01).unwrap();
        let (mu, mv) = f.mean_interior(0).unwrap();
        assert!(mu.abs() < 1e-3 && mv.abs() < 1e-3);
        assert!(f.valid_fraction() > 0.9);
    }

    #[test]
    fn recovers_subpixel_shift() {
        let a = Plane::from_fn(64, 64, |x, y| texture(x as f32, y as f32));
        let b = Plane::from_fn(64, 64, |x, y| texture(x as f32 - 1.5, y as f32 + 0.75));
        let f = compute_flow(&a, &b, &FlowParams::default(), 0.01).unwrap();
        let (mu, mv) = f.mean_interior(12).unwrap();
        assert!((mu - 1.5).abs() < 0.1, "{mu}");
        assert!((mv + 0.75).abs() < 0.1, "{mv}");
    }

    #[test]
    fn uniform_frames_are_all_invalid() {
        let a = Plane::from_fn(40, 30, |_, _| 0.5);
        let f = compute_flow(&a, &a, &FlowParams::default(), 0.01).unwrap();
        assert_eq!(f.valid_count(), 0);
        let z = Plane::new(40, 30);
        let f = compute_flow(&z, &z, &FlowParams::default(), 0.01).unwrap();
        assert_eq!(f.valid_count(), 0);
    }

    #[test]
    fn contract_errors() {
        let a = Plane::new(10, 10);
        let b = Plane::new(12, 10);
        assert!(matches!(
            compute_flow(&a, &b, &FlowParams::default(), 0.01),
            Err(FlowError::DimensionMismatch(..))
        ));
        assert!(matches!(
            compute_flow(&a, &a, &FlowParams::default(), 0.0),
            Err(FlowError::InvalidDt(_))
        ));
        let p = FlowParams {
            window_size: 4,
            ..FlowParams::default()
        };
        assert!(p.validate().is_err());
        let p = FlowParams {
            pyramid_scale: 1.0,
            ..FlowParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn subsample_uniform_field() {
        let f = FlowField::uniform(4, 4, 1.0, 0.0, 0.01);
        let pairs = subsample_flow(&f, 2);
        assert_eq!(pairs.len(), 4);
        for c in &pairs {
            assert_eq!(c.q - c.p, Vector2::new(1.0, 0.0));
        }
        assert_eq!(pairs[0].p, Vector2::new(0.5, 0.5));
    }

    #[test]
    fn subsample_respects_mask_and_cardinality() {
        let mut f = FlowField::uniform(4, 4, 1.0, 0.0, 0.01);
        f.valid[2 * 4 + 2] = false;
        assert_eq!(subsample_flow(&f, 2).len(), 3);
        let f = FlowField::uniform(7, 5, 0.0, 0.0, 0.01);
        assert_eq!(subsample_flow(&f, 1).len(), 35);
        let mut f = FlowField::uniform(3, 3, 0.0, 0.0, 0.01);
        f.valid.iter_mut().for_each(|v| *v = false);
        assert!(subsample_flow(&f, 1).is_empty());
    }

    #[test]
    fn engine_matches_one_shot() {
        let a = Plane::from_fn(48, 40, |x, y| texture(x as f32, y as f32));
        let b = Plane::from_fn(48, 40, |x, y| texture(x as f32 - 1.0, y as f32));
        let mut engine = FlowEngine::new(FlowParams::default()).unwrap();
        assert!(engine.push(&a, 0.01).unwrap().is_none());
        let streamed = engine.push(&b, 0.01).unwrap().unwrap();
        let once = compute_flow(&a, &b, &FlowParams::default(), 0.01).unwrap();
        assert_eq!(streamed, once);
    }
}
