//! Procedural ground textures, evaluated in texture pixels (one texture
//! pixel is one image pixel at the nominal camera height).

use crate::flow::pyramid::Plane;

/// Darkest reflectance; keeps the log finite.
const FLOOR: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub enum Texture {
    /// Smoothly interpolated lattice noise. `cutoff` is the highest
    /// significant spatial frequency in cycles per pixel; lattice points sit
    /// half a period apart.
    Noise { seed: u64, cutoff: f64 },
    /// Axis-aligned checkerboard with squares of `period` pixels, edges on
    /// multiples of `period`.
    Checker { period: f64 },
    /// Bright soft-edged dots on a dark ground, one per jittered grid cell.
    /// `density` is dots per square pixel.
    DotField { seed: u64, density: f64, radius: f64 },
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn hash2(seed: u64, ix: i64, iy: i64) -> u64 {
    let a = mix64(seed ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    mix64(a ^ (iy as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

fn unit(h: u64) -> f64 {
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

impl Texture {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Texture::Noise { cutoff, .. } if !(cutoff > 0.0 && cutoff <= 0.5) => {
                Err(format!("noise cutoff {cutoff} must lie in (0, 0.5] cycles/px"))
            }
            Texture::Checker { period } if !(period > 0.0) => Err("checker period must be > 0".into()),
            Texture::DotField { density, radius, .. } => {
                if !(density > 0.0 && radius > 0.0) {
                    return Err("dot density and radius must be > 0".into());
                }
                if 2.0 * radius >= 1.0 / density.sqrt() {
                    return Err("dots must fit inside their grid cell (2 r < 1 / sqrt(density))".into());
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Reflectance in `[0.2, 1.0]` at texture coordinates `(x, y)`.
    pub fn intensity(&self, x: f64, y: f64) -> f64 {
        let v = match *self {
            Texture::Noise { seed, cutoff } => {
                let spacing = 0.5 / cutoff;
                let (gx, gy) = (x / spacing, y / spacing);
                let (ix, iy) = (gx.floor(), gy.floor());
                let (sx, sy) = (smoothstep(gx - ix), smoothstep(gy - iy));
                let (ix, iy) = (ix as i64, iy as i64);
                let h = |dx, dy| unit(hash2(seed, ix + dx, iy + dy));
                let top = h(0, 0) + sx * (h(1, 0) - h(0, 0));
                let bottom = h(0, 1) + sx * (h(1, 1) - h(0, 1));
                top + sy * (bottom - top)
            }
            Texture::Checker { period } => {
                let k = (x / period).floor() as i64 + (y / period).floor() as i64;
                if k.rem_euclid(2) == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Texture::DotField { seed, density, radius } => {
                let cell = 1.0 / density.sqrt();
                let (ix, iy) = ((x / cell).floor(), (y / cell).floor());
                let h = hash2(seed, ix as i64, iy as i64);
                let room = cell - 2.0 * radius;
                let ox = ix * cell + radius + room * unit(h);
                let oy = iy * cell + radius + room * unit(mix64(h));
                let d = (x - ox).hypot(y - oy);
                // about one pixel of soft edge
                smoothstep(((radius - d) + 0.5).clamp(0.0, 1.0))
            }
        };
        FLOOR + (1.0 - FLOOR) * v
    }
}

/// Camera pose over the plane: position in meters and heading in radians.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Renders the log reflectance seen by `cam` at `pose`.
///
/// Pixel centers `p` map to texture coordinates
/// `(f/z) (x, y) + c + R(yaw) (p - c)`, with `c` the principal point, so the
/// identity pose shows the texture with its origin at the image corner.
pub fn render_plane(texture: &Texture, pose: &Pose, cam: &crate::camera::CameraModel) -> Plane {
    let s = cam.f_px / cam.height_z;
    let (sn, cs) = pose.yaw.sin_cos();
    let (ox, oy) = (s * pose.x + cam.cx, s * pose.y + cam.cy);
    Plane::from_fn(cam.width as usize, cam.height as usize, |i, j| {
        let px = i as f64 + 0.5 - cam.cx;
        let py = j as f64 + 0.5 - cam.cy;
        let tx = ox + cs * px - sn * py;
        let ty = oy + sn * px + cs * py;
        texture.intensity(tx, ty).ln() as f32
    })
}
