//! Local quadratic signal model.
//!
//! Around every pixel the image is approximated, in the weighted
//! least-squares sense, by `f(x) ~ x^T A x + b^T x + c` where `x` is the
//! offset from the pixel (x to the right, y down) and the weights are a
//! separable Gaussian applicability over `-n..=n` in both directions. Because
//! the applicability is separable and symmetric the normal equations
//! decouple: `b` and the off-diagonal of `A` come from single moment ratios,
//! and `(c, A_xx, A_yy)` from one fixed 3x3 system.

use super::pyramid::Plane;

/// Per-pixel coefficients of the quadratic model. `axy` is the off-diagonal
/// entry of the symmetric matrix `A` (half the `xy` monomial coefficient).
#[derive(Debug, Clone)]
pub struct PolyExpansion {
    pub width: usize,
    pub height: usize,
    pub axx: Vec<f32>,
    pub ayy: Vec<f32>,
    pub axy: Vec<f32>,
    pub bx: Vec<f32>,
    pub by: Vec<f32>,
    pub c: Vec<f32>,
}

/// Precomputed applicability taps and the inverse Gram quantities.
#[derive(Debug, Clone)]
pub struct ExpansionBasis {
    n: usize,
    g: Vec<f64>,
    inv_b: f64,
    inv_axy: f64,
    inv3: [[f64; 3]; 3],
}

impl ExpansionBasis {
    pub fn new(n: usize, sigma: f64) -> Self {
        let g: Vec<f64> = (-(n as i64)..=n as i64)
            .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let moment = |p: i32| -> f64 {
            g.iter()
                .enumerate()
                .map(|(i, &w)| w * ((i as f64) - n as f64).powi(p))
                .sum()
        };
        let (m0, m2, m4) = (moment(0), moment(2), moment(4));
        let gram = [
            [m0 * m0, m0 * m2, m0 * m2],
            [m0 * m2, m0 * m4, m2 * m2],
            [m0 * m2, m2 * m2, m0 * m4],
        ];
        Self {
            n,
            g,
            inv_b: 1.0 / (m0 * m2),
            inv_axy: 1.0 / (m2 * m2),
            inv3: invert3(&gram),
        }
    }

    pub fn radius(&self) -> usize {
        self.n
    }
}

fn invert3(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let mut inv = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            let (r1, r2) = ((c + 1) % 3, (c + 2) % 3);
            let (c1, c2) = ((r + 1) % 3, (r + 2) % 3);
            inv[r][c] = (m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1]) / det;
        }
    }
    inv
}

/// Computes the quadratic coefficients at every pixel. Borders replicate the
/// nearest edge pixel.
pub fn polynomial_expansion(img: &Plane, basis: &ExpansionBasis) -> PolyExpansion {
    let (w, h) = (img.width, img.height);
    let n = basis.n as isize;
    let taps: Vec<(f32, f32, f32)> = basis
        .g
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let k = i as f64 - n as f64;
            (g as f32, (g * k) as f32, (g * k * k) as f32)
        })
        .collect();

    // vertical pass: weighted moments 0, 1, 2 in y
    let mut v0 = vec![0.0f32; w * h];
    let mut v1 = vec![0.0f32; w * h];
    let mut v2 = vec![0.0f32; w * h];
    for y in 0..h {
        let o = y * w;
        for (i, &(g0, g1, g2)) in taps.iter().enumerate() {
            let sy = (y as isize + i as isize - n).clamp(0, h as isize - 1) as usize;
            let src = &img.data[sy * w..(sy + 1) * w];
            for x in 0..w {
                let s = src[x];
                v0[o + x] += g0 * s;
                v1[o + x] += g1 * s;
                v2[o + x] += g2 * s;
            }
        }
    }

    let mut out = PolyExpansion {
        width: w,
        height: h,
        axx: vec![0.0; w * h],
        ayy: vec![0.0; w * h],
        axy: vec![0.0; w * h],
        bx: vec![0.0; w * h],
        by: vec![0.0; w * h],
        c: vec![0.0; w * h],
    };
    let inv = basis.inv3;
    let r = basis.n;
    let mut pad0 = vec![0.0f32; w + 2 * r];
    let mut pad1 = vec![0.0f32; w + 2 * r];
    let mut pad2 = vec![0.0f32; w + 2 * r];
    for y in 0..h {
        let o = y * w;
        for (pad, src) in [(&mut pad0, &v0), (&mut pad1, &v1), (&mut pad2, &v2)] {
            let row = &src[o..o + w];
            pad[r..r + w].copy_from_slice(row);
            for i in 0..r {
                pad[i] = row[0];
                pad[r + w + i] = row[w - 1];
            }
        }
        for x in 0..w {
            let (mut r1, mut rx, mut rxx, mut ry, mut ryy, mut rxy) = (0f32, 0f32, 0f32, 0f32, 0f32, 0f32);
            for (i, &(g0, g1, g2)) in taps.iter().enumerate() {
                let a0 = pad0[x + i];
                let a1 = pad1[x + i];
                let a2 = pad2[x + i];
                r1 += g0 * a0;
                rx += g1 * a0;
                rxx += g2 * a0;
                ry += g0 * a1;
                rxy += g1 * a1;
                ryy += g0 * a2;
            }
            let (r1, rxx, ryy) = (r1 as f64, rxx as f64, ryy as f64);
            out.c[o + x] = (inv[0][0] * r1 + inv[0][1] * rxx + inv[0][2] * ryy) as f32;
            out.axx[o + x] = (inv[1][0] * r1 + inv[1][1] * rxx + inv[1][2] * ryy) as f32;
            out.ayy[o + x] = (inv[2][0] * r1 + inv[2][1] * rxx + inv[2][2] * ryy) as f32;
            out.bx[o + x] = (rx as f64 * basis.inv_b) as f32;
            out.by[o + x] = (ry as f64 * basis.inv_b) as f32;
            out.axy[o + x] = (rxy as f64 * basis.inv_axy * 0.5) as f32;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    /// Independent dense weighted least-squares fit of the six monomials at one pixel.
    fn dense_fit(img: &Plane, px: usize, py: usize, n: usize, sigma: f64) -> [f64; 6] {
        let side = 2 * n + 1;
        let mut a = DMatrix::<f64>::zeros(side * side, 6);
        let mut b = DVector::<f64>::zeros(side * side);
        let mut row = 0;
        for dy in -(n as i64)..=n as i64 {
            for dx in -(n as i64)..=n as i64 {
                let w = (-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp().sqrt();
                let (x, y) = (dx as f64, dy as f64);
                let v = img.get((px as i64 + dx) as usize, (py as i64 + dy) as usize) as f64;
                for (c, m) in [1.0, x, y, x * x, y * y, x * y].iter().enumerate() {
                    a[(row, c)] = w * m;
                }
                b[row] = w * v;
                row += 1;
            }
        }
        let sol = a.svd(true, true).solve(&b, 1e-12).unwrap();
        // (c, bx, by, axx, ayy, axy_full)
        [sol[0], sol[1], sol[2], sol[3], sol[4], sol[5]]
    }

    const SAMPLES: [(usize, usize); 5] = [(10, 10), (15, 12), (20, 20), (12, 25), (25, 14)];

    #[test]
    fn constant_image() {
        let img = Plane::from_fn(32, 32, |_, _| 0.7);
        let e = polynomial_expansion(&img, &ExpansionBasis::new(5, 1.1));
        for &(x, y) in &SAMPLES {
            let i = y * 32 + x;
            assert!(e.axx[i].abs() < 1e-5 && e.ayy[i].abs() < 1e-5 && e.axy[i].abs() < 1e-5);
            assert!(e.bx[i].abs() < 1e-5 && e.by[i].abs() < 1e-5);
            assert!((e.c[i] - 0.7).abs() < 1e-5);
        }
    }

    #[test]
    fn linear_ramp_matches_dense_fit() {
        let img = Plane::from_fn(36, 36, |x, _| 3.0 * x as f32);
        let e = polynomial_expansion(&img, &ExpansionBasis::new(5, 1.1));
        for &(x, y) in &SAMPLES {
            let i = y * 36 + x;
            let fit = dense_fit(&img, x, y, 5, 1.1);
            assert!((fit[1] - 3.0).abs() < 1e-9);
            assert!((e.bx[i] as f64 - fit[1]).abs() < 1e-3, "{} vs {}", e.bx[i], fit[1]);
            assert!(e.by[i].abs() < 1e-4);
            assert!(e.axx[i].abs() < 1e-4 && e.ayy[i].abs() < 1e-4);
        }
    }

    #[test]
    fn quadratic_matches_dense_fit() {
        let img = Plane::from_fn(36, 36, |x, _| {
            let d = x as f32 - 18.0;
            d * d / 50.0
        });
        let e = polynomial_expansion(&img, &ExpansionBasis::new(5, 1.1));
        for &(x, y) in &SAMPLES {
            let i = y * 36 + x;
            let fit = dense_fit(&img, x, y, 5, 1.1);
            assert!(e.axx[i] > 0.0);
            assert!((e.axx[i] as f64 - fit[3]).abs() < 1e-4);
            assert!((e.bx[i] as f64 - fit[1]).abs() < 1e-4);
            assert!(e.axy[i].abs() < 1e-5 && e.ayy[i].abs() < 1e-5);
        }
    }

    #[test]
    fn mixed_texture_matches_dense_fit() {
        let img = Plane::from_fn(36, 36, |x, y| {
            let (x, y) = (x as f32, y as f32);
            (0.3 * x).sin() * (0.2 * y).cos() + 0.01 * x * y
        });
        let e = polynomial_expansion(&img, &ExpansionBasis::new(5, 1.1));
        for &(x, y) in &SAMPLES {
            let i = y * 36 + x;
            let fit = dense_fit(&img, x, y, 5, 1.1);
            let got = [e.c[i], e.bx[i], e.by[i], e.axx[i], e.ayy[i], 2.0 * e.axy[i]];
            for k in 0..6 {
                assert!((got[k] as f64 - fit[k]).abs() < 1e-4, "coef {k}: {} vs {}", got[k], fit[k]);
            }
        }
    }
}
