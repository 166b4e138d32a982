//! Flow and rigid-motion behaviour on constructed inputs.

use nalgebra::Vector2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use planar_eof::flow::pyramid::Plane;
use planar_eof::flow::{compute_flow, subsample_flow, FlowField, FlowParams};
use planar_eof::rigid::{estimate_rigid, ransac_estimate, rotation, Correspondence, RansacParams, RigidMotion2D};
use planar_eof::synth::{inject_outliers, Texture};

fn noise(seed: u64) -> Texture {
    Texture::Noise { seed, cutoff: 0.125 }
}

fn render(tex: &Texture, w: usize, h: usize, warp: impl Fn(f64, f64) -> (f64, f64)) -> Plane {
    Plane::from_fn(w, h, |x, y| {
        let (u, v) = warp(x as f64 + 0.5, y as f64 + 0.5);
        tex.intensity(u, v) as f32
    })
}

#[test]
fn three_pixel_shift() {
    let tex = noise(8);
    let a = render(&tex, 96, 80, |x, y| (x, y));
    // next(x) = prev(x - 3): content moves right
    let b = render(&tex, 96, 80, |x, y| (x - 3.0, y));
    let f = compute_flow(&a, &b, &FlowParams::default(), 1.0).unwrap();
    let (u, v) = f.mean_interior(16).unwrap();
    assert!((u - 3.0).abs() < 0.2 && v.abs() < 0.2, "({u}, {v})");
}

#[test]
fn small_rotation_about_the_center() {
    let (w, h) = (96usize, 96usize);
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let th = 0.02;
    let tex = noise(4);
    let a = render(&tex, w, h, |x, y| (x, y));
    // next(x) = prev(R^-1 (x - c) + c)
    let inv = rotation(-th);
    let b = render(&tex, w, h, |x, y| {
        let p = inv * Vector2::new(x - cx, y - cy);
        (p.x + cx, p.y + cy)
    });
    let f = compute_flow(&a, &b, &FlowParams::default(), 1.0).unwrap();
    let margin = 16;
    let mut epe = 0.0;
    let mut n = 0;
    for y in margin..h - margin {
        for x in margin..w - margin {
            let i = y * w + x;
            if !f.valid[i] {
                continue;
            }
            // pixel centres sit at +0.5
            let p = Vector2::new(x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            let truth = rotation(th) * p - p;
            epe += (Vector2::new(f.u[i] as f64, f.v[i] as f64) - truth).norm();
            n += 1;
        }
    }
    let epe = epe / n as f64;
    assert!(n > 3000);
    assert!(epe < 0.3, "mean end-point error {epe}");
}

#[test]
fn flow_is_deterministic() {
    let tex = noise(2);
    let a = render(&tex, 64, 48, |x, y| (x, y));
    let b = render(&tex, 64, 48, |x, y| (x - 1.3, y + 0.7));
    let p = FlowParams::default();
    let f1 = compute_flow(&a, &b, &p, 0.01).unwrap();
    let f2 = compute_flow(&a, &b, &p, 0.01).unwrap();
    assert_eq!(f1, f2);
}

fn translation_error(m: &RigidMotion2D, t: Vector2<f64>) -> f64 {
    (m.t - t).norm()
}

/// A clean translational field with a little per-vector noise.
fn noisy_field(seed: u64, t: Vector2<f64>) -> FlowField {
    let mut f = FlowField::uniform(64, 48, t.x as f32, t.y as f32, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = Normal::new(0.0, 0.1).unwrap();
    for (u, v) in f.u.iter_mut().zip(f.v.iter_mut()) {
        *u += n.sample(&mut rng) as f32;
        *v += n.sample(&mut rng) as f32;
    }
    f
}

/// Grid pairs with the field centre as origin, as the pipeline feeds them.
fn centered(field: &FlowField) -> Vec<Correspondence> {
    let c = Vector2::new(field.width as f64 / 2.0, field.height as f64 / 2.0);
    subsample_flow(field, 4)
        .into_iter()
        .map(|p| Correspondence::new(p.p - c, p.q - c))
        .collect()
}

#[test]
fn outlier_injection_robustness() {
    // a single draw's error ratio is itself noisy, so compare mean errors
    // over many independent fields
    let t = Vector2::new(3.0, -1.0);
    let params = RansacParams::default();
    let (mut clean, mut robust, mut plain) = (0.0, 0.0, 0.0);
    for seed in 0..400 {
        let field = noisy_field(seed, t);
        clean += translation_error(&estimate_rigid(&centered(&field)).unwrap(), t);

        let hit = centered(&inject_outliers(&field, 0.2, 50.0, seed + 1000));
        robust += translation_error(&ransac_estimate(&hit, &params, seed).unwrap().motion, t);
        plain += translation_error(&estimate_rigid(&hit).unwrap(), t);
    }
    assert!(robust <= 1.2 * clean, "robust {robust} vs clean {clean}");
    assert!(plain >= 5.0 * clean, "plain {plain} vs clean {clean}");
}

fn gross_outlier_instance() -> impl Strategy<Value = (Vec<Correspondence>, Vec<bool>)> {
    (any::<u64>(), 20usize..80, 0.3f64..0.5, -0.3f64..0.3).prop_map(|(seed, n, frac, theta)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = Vector2::new(rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let noise = Normal::new(0.0, 0.1).unwrap();
        let n_out = ((n as f64) * frac).ceil() as usize;
        let mut pairs = Vec::new();
        let mut truth = Vec::new();
        for k in 0..n {
            let p = Vector2::new(rng.random_range(-80.0..80.0), rng.random_range(-60.0..60.0));
            let clean = rotation(theta) * p + t;
            let q = if k < n_out {
                // more than ten inlier thresholds away
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                clean + rng.random_range(6.0..60.0) * Vector2::new(a.cos(), a.sin())
            } else {
                clean + Vector2::new(noise.sample(&mut rng), noise.sample(&mut rng))
            };
            pairs.push(Correspondence::new(p, q));
            truth.push(k >= n_out);
        }
        (pairs, truth)
    })
}

fn residual_on(m: &RigidMotion2D, pairs: &[Correspondence], mask: &[bool]) -> f64 {
    let r: Vec<f64> = pairs
        .iter()
        .zip(mask)
        .filter(|(_, &keep)| keep)
        .map(|(c, _)| (m.apply(&c.p) - c.q).norm())
        .collect();
    r.iter().sum::<f64>() / r.len() as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn consensus_fit_dominates_on_true_inliers((pairs, truth) in gross_outlier_instance(), seed in any::<u64>()) {
        // enough draws that an all-inlier sample is all but certain
        let params = RansacParams { iterations: 64, min_inlier_fraction: 0.2, ..RansacParams::default() };
        let robust = ransac_estimate(&pairs, &params, seed).unwrap();
        let plain = estimate_rigid(&pairs).unwrap();
        prop_assert!(residual_on(&robust.motion, &pairs, &truth) <= residual_on(&plain, &pairs, &truth) + 1e-12);
    }

    #[test]
    fn fixed_seed_fixes_the_inlier_mask((pairs, _) in gross_outlier_instance(), seed in any::<u64>()) {
        let params = RansacParams { iterations: 64, min_inlier_fraction: 0.0, ..RansacParams::default() };
        let a = ransac_estimate(&pairs, &params, seed).unwrap();
        let b = ransac_estimate(&pairs, &params, seed).unwrap();
        prop_assert_eq!(a.inliers, b.inliers);
        prop_assert_eq!(a.motion, b.motion);
    }
}
