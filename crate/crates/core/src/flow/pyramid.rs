//! Float rasters, separable Gaussian filtering with clamped borders, bilinear
//! resampling and the Gaussian pyramid used for coarse-to-fine flow.

use crate::events::GrayImage;

/// Single-channel `f32` raster, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    /// Gray levels scaled to `[0, 1]`.
    pub fn from_gray(img: &GrayImage) -> Self {
        Self {
            width: img.width,
            height: img.height,
            data: img.data.iter().map(|&v| v as f32 / 255.0).collect(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Bilinear sample with clamped coordinates.
    #[inline]
    pub fn sample(&self, x: f32, y: f32) -> f32 {
        let xm = (self.width - 1) as f32;
        let ym = (self.height - 1) as f32;
        let x = x.clamp(0.0, xm);
        let y = y.clamp(0.0, ym);
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f32;
        let fy = y - y0 as f32;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bot = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bot * fy
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len().max(1) as f64
    }
}

/// Normalized Gaussian taps for offsets `-radius..=radius`.
pub fn gaussian_kernel(radius: usize, sigma: f64) -> Vec<f32> {
    let taps: Vec<f64> = (-(radius as i64)..=radius as i64)
        .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter().map(|&t| (t / sum) as f32).collect()
}

/// Separable convolution of several planes with the same symmetric kernel,
/// clamping at the borders.
pub fn blur_planes(planes: &mut [&mut Plane], kernel: &[f32]) {
    if planes.is_empty() {
        return;
    }
    let w = planes[0].width;
    let h = planes[0].height;
    let r = kernel.len() / 2;
    let mut tmp = vec![0.0f32; w * h];
    let mut row = vec![0.0f32; w + 2 * r];
    for plane in planes.iter_mut() {
        debug_assert_eq!((plane.width, plane.height), (w, h));
        // vertical pass into tmp
        for y in 0..h {
            let out = &mut tmp[y * w..(y + 1) * w];
            out.iter_mut().for_each(|v| *v = 0.0);
            for (k, &kv) in kernel.iter().enumerate() {
                let sy = (y as isize + k as isize - r as isize).clamp(0, h as isize - 1) as usize;
                let src = &plane.data[sy * w..(sy + 1) * w];
                for (o, &s) in out.iter_mut().zip(src) {
                    *o += kv * s;
                }
            }
        }
        // horizontal pass back into the plane
        for y in 0..h {
            let src = &tmp[y * w..(y + 1) * w];
            row[r..r + w].copy_from_slice(src);
            for i in 0..r {
                row[i] = src[0];
                row[r + w + i] = src[w - 1];
            }
            let out = &mut plane.data[y * w..(y + 1) * w];
            for (x, o) in out.iter_mut().enumerate() {
                let win = &row[x..x + kernel.len()];
                *o = win.iter().zip(kernel).map(|(a, b)| a * b).sum();
            }
        }
    }
}

pub fn gaussian_blur(src: &Plane, sigma: f64) -> Plane {
    let mut out = src.clone();
    if sigma <= 0.0 {
        return out;
    }
    let radius = ((sigma * 2.5).round() as usize).max(1);
    blur_planes(&mut [&mut out], &gaussian_kernel(radius, sigma));
    out
}

/// Bilinear resize with pixel-center alignment.
pub fn resize(src: &Plane, width: usize, height: usize) -> Plane {
    if width == src.width && height == src.height {
        return src.clone();
    }
    let sx = src.width as f32 / width as f32;
    let sy = src.height as f32 / height as f32;
    Plane::from_fn(width, height, |x, y| {
        src.sample((x as f32 + 0.5) * sx - 0.5, (y as f32 + 0.5) * sy - 0.5)
    })
}

/// Sizes of each pyramid level, finest first. Levels that would shrink below
/// `min_side` pixels are dropped.
pub fn level_sizes(width: usize, height: usize, levels: usize, scale: f64, min_side: usize) -> Vec<(usize, usize)> {
    let mut sizes = vec![(width, height)];
    for k in 1..levels {
        let s = scale.powi(k as i32);
        let w = (width as f64 * s).round() as usize;
        let h = (height as f64 * s).round() as usize;
        if w < min_side || h < min_side {
            break;
        }
        sizes.push((w, h));
    }
    sizes
}

/// Gaussian pyramid, finest level first. Each coarser level is smoothed from
/// the full-resolution image with `sigma = (1/s - 1) / 2` for total scale `s`,
/// then resampled.
pub fn build_pyramid(base: &Plane, sizes: &[(usize, usize)]) -> Vec<Plane> {
    sizes
        .iter()
        .map(|&(w, h)| {
            if w == base.width && h == base.height {
                return base.clone();
            }
            let s = w as f64 / base.width as f64;
            let sigma = (1.0 / s - 1.0) * 0.5;
            resize(&gaussian_blur(base, sigma), w, h)
        })
        .collect()
}
