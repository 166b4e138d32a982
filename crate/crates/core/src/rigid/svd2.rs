//! Closed-form SVD of a real 2x2 matrix.
//!
//! Any 2x2 matrix splits into a similarity part `E I + H J` and an
//! anti-similarity part `F K + G L` (`J` the 90 degree rotation generator,
//! `K`, `L` the two reflection generators). With `Q = |(E, H)|` and
//! `R = |(F, G)|` the singular values are `Q + R` and `|Q - R|`, and the
//! singular vectors are rotations by the half sum / half difference of the
//! two parts' angles.

use nalgebra::{Matrix2, Vector2};

use super::rotation;

#[derive(Debug, Clone, Copy)]
pub struct Svd2 {
    pub u: Matrix2<f64>,
    /// Non-negative, descending.
    pub sigma: Vector2<f64>,
    pub v: Matrix2<f64>,
}

/// Returns `(U, sigma, V)` with `m = U diag(sigma) V^T`, `U` and `V` orthogonal.
pub fn svd2(m: &Matrix2<f64>) -> Svd2 {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let e = 0.5 * (a + d);
    let f = 0.5 * (a - d);
    let g = 0.5 * (c + b);
    let h = 0.5 * (c - b);
    let q = e.hypot(h);
    let r = f.hypot(g);
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    let phi = 0.5 * (a2 + a1);
    let theta = 0.5 * (a2 - a1);
    // m = R(phi) diag(q + r, q - r) R(theta)
    let u = rotation(phi);
    let mut v = rotation(theta).transpose();
    let s1 = q + r;
    let mut s2 = q - r;
    if s2 < 0.0 {
        s2 = -s2;
        v.set_column(1, &(-v.column(1)));
    }
    Svd2 {
        u,
        sigma: Vector2::new(s1, s2),
        v,
    }
}
