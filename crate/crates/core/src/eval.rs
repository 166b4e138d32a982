//! Accuracy of an estimate stream against ground truth.

use std::fmt::Write as _;

use thiserror::Error;

use crate::pipeline::LatencyStats;
use crate::vehicle::VelocityEstimate;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("no estimates to evaluate")]
    NoEstimates,
    #[error("ground truth is empty")]
    NoGroundTruth,
    #[error("no valid estimate lies within {tolerance_s} s of a ground-truth sample")]
    NoOverlap { tolerance_s: f64 },
    #[error("tolerance must be positive")]
    BadTolerance,
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Running {
    n: usize,
    mean: f64,
    m2: f64,
    sq: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
        self.sq += x * x;
    }
}

/// Error statistics of one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStats {
    pub rmse: f64,
    /// Population standard deviation of the signed error.
    pub sigma: f64,
    pub mean_error: f64,
    pub n: usize,
}

impl ChannelStats {
    fn from_running(r: &Running) -> Self {
        let n = r.n.max(1) as f64;
        Self {
            rmse: (r.sq / n).sqrt(),
            sigma: (r.m2 / n).max(0.0).sqrt(),
            mean_error: r.mean,
            n: r.n,
        }
    }
}

pub const CHANNELS: [&str; 3] = ["v_lon", "v_lat", "omega"];

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub v_lon: ChannelStats,
    pub v_lat: ChannelStats,
    pub omega: ChannelStats,
    /// Longitudinal RMSE relative to the mean absolute true speed, percent.
    pub e_percent: f64,
    pub frames: usize,
    pub frames_invalid: usize,
    /// Valid estimates with no ground truth within tolerance.
    pub unpaired: usize,
    pub latency: Vec<(String, LatencyStats)>,
}

impl EvalReport {
    pub fn channel(&self, name: &str) -> Option<&ChannelStats> {
        match name {
            "v_lon" => Some(&self.v_lon),
            "v_lat" => Some(&self.v_lat),
            "omega" => Some(&self.omega),
            _ => None,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<8} {:>12} {:>12} {:>12} {:>8}", "channel", "rmse", "sigma", "mean_err", "n");
        for name in CHANNELS {
            let c = self.channel(name).unwrap();
            let _ = writeln!(
                s,
                "{name:<8} {:>12.6} {:>12.6} {:>12.6} {:>8}",
                c.rmse, c.sigma, c.mean_error, c.n
            );
        }
        let _ = writeln!(s, "E_lon_percent {:.4}", self.e_percent);
        let _ = writeln!(
            s,
            "frames {} valid {} invalid {} unpaired {}",
            self.frames,
            self.frames - self.frames_invalid,
            self.frames_invalid,
            self.unpaired
        );
        if !self.latency.is_empty() {
            let _ = writeln!(s, "{:<12} {:>10} {:>10} {:>10}", "stage", "mean_ms", "std_ms", "p95_ms");
            for (name, l) in &self.latency {
                let _ = writeln!(s, "{name:<12} {:>10.3} {:>10.3} {:>10.3}", l.mean_ms, l.std_ms, l.p95_ms);
            }
        }
        s
    }
}

/// Index into `times` (sorted ascending) nearest to `t`, if within `tol`.
pub fn nearest(times: &[f64], t: f64, tol: f64) -> Option<usize> {
    let k = times.partition_point(|&g| g < t);
    [k.checked_sub(1), (k < times.len()).then_some(k)]
        .into_iter()
        .flatten()
        .map(|i| (i, (times[i] - t).abs()))
        .filter(|&(_, d)| d <= tol)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Matched `(estimate, truth)` pairs and the count of unmatched valid estimates.
pub fn pair_with_truth<'a>(
    estimates: &'a [VelocityEstimate],
    gt: &'a [VelocityEstimate],
    tolerance_s: f64,
) -> (Vec<(&'a VelocityEstimate, &'a VelocityEstimate)>, usize) {
    let mut order: Vec<usize> = (0..gt.len()).collect();
    order.sort_by(|&a, &b| gt[a].t_mid.total_cmp(&gt[b].t_mid));
    let times: Vec<f64> = order.iter().map(|&i| gt[i].t_mid).collect();
    let mut pairs = Vec::new();
    let mut unpaired = 0;
    for e in estimates.iter().filter(|e| e.valid) {
        match nearest(&times, e.t_mid, tolerance_s) {
            Some(k) => pairs.push((e, &gt[order[k]])),
            None => unpaired += 1,
        }
    }
    (pairs, unpaired)
}

pub fn evaluate(
    estimates: &[VelocityEstimate],
    gt: &[VelocityEstimate],
    tolerance_s: f64,
) -> Result<EvalReport, EvalError> {
    if !(tolerance_s > 0.0) {
        return Err(EvalError::BadTolerance);
    }
    if estimates.is_empty() {
        return Err(EvalError::NoEstimates);
    }
    if gt.is_empty() {
        return Err(EvalError::NoGroundTruth);
    }
    let (pairs, unpaired) = pair_with_truth(estimates, gt, tolerance_s);
    if pairs.is_empty() {
        return Err(EvalError::NoOverlap { tolerance_s });
    }
    let mut r = [Running::default(); 3];
    let mut abs_truth = 0.0;
    for (e, g) in &pairs {
        r[0].push(e.v_lon - g.v_lon);
        r[1].push(e.v_lat - g.v_lat);
        r[2].push(e.omega - g.omega);
        abs_truth += g.v_lon.abs();
    }
    let v_lon = ChannelStats::from_running(&r[0]);
    let mean_abs = abs_truth / pairs.len() as f64;
    let e_percent = if mean_abs > 0.0 {
        v_lon.rmse / mean_abs * 100.0
    } else {
        f64::NAN
    };
    let frames_invalid = estimates.iter().filter(|e| !e.valid).count();
    Ok(EvalReport {
        v_lon,
        v_lat: ChannelStats::from_running(&r[1]),
        omega: ChannelStats::from_running(&r[2]),
        e_percent,
        frames: estimates.len(),
        frames_invalid,
        unpaired,
        latency: Vec::new(),
    })
}
