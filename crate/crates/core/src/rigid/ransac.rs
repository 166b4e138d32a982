//! Two-point consensus around the rigid least-squares fit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{estimate_rigid, Correspondence, MotionError, RigidMotion2D};

#[derive(Debug, Clone, PartialEq)]
pub struct RansacParams {
    pub iterations: usize,
    /// End-point error bound for an inlier, in pixels.
    pub inlier_threshold: f64,
    pub min_inlier_fraction: f64,
    pub enabled: bool,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 16,
            inlier_threshold: 0.5,
            min_inlier_fraction: 0.3,
            enabled: true,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<(), MotionError> {
        if self.iterations < 1 {
            return Err(MotionError::InvalidParams("iterations must be >= 1".into()));
        }
        if !(self.inlier_threshold > 0.0) {
            return Err(MotionError::InvalidParams("inlier threshold must be > 0".into()));
        }
        if !(0.0..=1.0).contains(&self.min_inlier_fraction) {
            return Err(MotionError::InvalidParams(
                "min_inlier_fraction must lie in [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacOutcome {
    pub motion: RigidMotion2D,
    pub inliers: Vec<bool>,
    pub n_inliers: usize,
}

impl RansacOutcome {
    pub fn inlier_fraction(&self) -> f64 {
        self.n_inliers as f64 / self.inliers.len().max(1) as f64
    }
}

/// Mixes a run-level seed with a frame index so every frame pair draws from
/// its own stream regardless of scheduling order.
pub fn frame_seed(global: u64, frame_index: u64) -> u64 {
    let mut z = global ^ frame_index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn all_inliers(pairs: &[Correspondence]) -> Result<RansacOutcome, MotionError> {
    let motion = estimate_rigid(pairs)?;
    Ok(RansacOutcome {
        motion,
        inliers: vec![true; pairs.len()],
        n_inliers: pairs.len(),
    })
}

/// Runs `iterations` rounds of: draw two distinct correspondences, fit them
/// exactly, count pairs whose end-point error is below the threshold. The
/// largest inlier set is refit with [`estimate_rigid`].
///
/// With `enabled == false` this is [`estimate_rigid`] over all pairs with a
/// full mask. Samples whose two source points coincide are redrawn without
/// consuming an iteration, up to `10 * iterations` redraws in total.
pub fn ransac_estimate(
    pairs: &[Correspondence],
    params: &RansacParams,
    seed: u64,
) -> Result<RansacOutcome, MotionError> {
    params.validate()?;
    let n = pairs.len();
    if n < 2 {
        return Err(MotionError::InsufficientData(n));
    }
    if !params.enabled {
        return all_inliers(pairs);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps2 = params.inlier_threshold * params.inlier_threshold;
    let mut best: Option<Vec<bool>> = None;
    let mut best_count = 0usize;
    let mut mask = vec![false; n];
    let mut retries = 0usize;
    let retry_cap = 10 * params.iterations;

    let mut done = 0;
    while done < params.iterations {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let sample = [pairs[i], pairs[j]];
        let model = match estimate_rigid(&sample) {
            Ok(m) => m,
            Err(MotionError::Degenerate) if retries < retry_cap => {
                retries += 1;
                continue;
            }
            Err(MotionError::Degenerate) => {
                done += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        done += 1;

        let r = model.rotation();
        let mut count = 0;
        for (m, c) in mask.iter_mut().zip(pairs) {
            *m = (r * c.p + model.t - c.q).norm_squared() < eps2;
            count += *m as usize;
        }
        if count > best_count {
            best_count = count;
            best = Some(mask.clone());
        }
    }

    let fraction = best_count as f64 / n as f64;
    let required = params.min_inlier_fraction;
    let Some(inliers) = best.filter(|_| best_count >= 2 && fraction >= required) else {
        return Err(MotionError::DegenerateConsensus { fraction, required });
    };
    let selected: Vec<_> = pairs
        .iter()
        .zip(&inliers)
        .filter_map(|(c, &keep)| keep.then_some(*c))
        .collect();
    let motion = estimate_rigid(&selected)?;
    Ok(RansacOutcome {
        motion,
        inliers,
        n_inliers: best_count,
    })
}
