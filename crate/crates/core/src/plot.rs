//! SVG figures: estimate vs. ground truth, residual histograms and the
//! exposure-budget chart.
//!
//! Output is a pure function of the inputs; numbers are printed with fixed
//! precision so reruns are byte-identical.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use crate::camera::{max_exposure_for_blur, CameraError, CameraModel};
use crate::eval::{pair_with_truth, CHANNELS};
use crate::vehicle::VelocityEstimate;

const W: f64 = 720.0;
const H: f64 = 360.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Axis range padded by 5%, never degenerate.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= 1e-12 {
        let d = lo.abs().max(1.0) * 0.1;
        return (lo - d, hi + d);
    }
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn extent(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        H - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM)
    }
}

struct Svg {
    body: String,
}

impl Svg {
    fn new(title: &str) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(body, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
        let _ = writeln!(
            body,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            W / 2.0,
            escape(title)
        );
        Self { body }
    }

    fn axes(&mut self, f: &Frame, xlabel: &str, ylabel: &str) {
        let (x0, x1, y0, y1) = (LEFT, W - RIGHT, TOP, H - BOTTOM);
        let _ = writeln!(
            self.body,
            r#"<rect x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
            x1 - x0,
            y1 - y0
        );
        for k in 0..=4 {
            let fx = f.x.0 + (f.x.1 - f.x.0) * k as f64 / 4.0;
            let fy = f.y.0 + (f.y.1 - f.y.0) * k as f64 / 4.0;
            let _ = writeln!(
                self.body,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
                f.px(fx),
                y1 + 16.0,
                tick(fx)
            );
            let _ = writeln!(
                self.body,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
                x0 - 6.0,
                f.py(fy) + 4.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            self.body,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            H - 10.0,
            escape(xlabel)
        );
        let _ = writeln!(
            self.body,
            r#"<text transform="translate(16,{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
            (y0 + y1) / 2.0,
            escape(ylabel)
        );
    }

    fn polyline(&mut self, f: &Frame, pts: &[(f64, f64)], color: &str, dashed: bool) {
        if pts.is_empty() {
            return;
        }
        let mut d = String::new();
        for (x, y) in pts {
            let _ = write!(d, "{:.2},{:.2} ", f.px(*x), f.py(*y));
        }
        let dash = if dashed { r#" stroke-dasharray="5,3""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
            d.trim_end()
        );
    }

    fn dots(&mut self, f: &Frame, pts: &[(f64, f64)], color: &str) {
        for (x, y) in pts {
            let _ = writeln!(
                self.body,
                r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#,
                f.px(*x),
                f.py(*y)
            );
        }
    }

    fn legend(&mut self, entries: &[(&str, &str)]) {
        for (k, (label, color)) in entries.iter().enumerate() {
            let y = TOP + 14.0 + 16.0 * k as f64;
            let x = W - RIGHT - 150.0;
            let _ = writeln!(
                self.body,
                r#"<line x1="{x:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="{color}" stroke-width="2"/>"#,
                y - 4.0,
                x + 20.0,
                y - 4.0
            );
            let _ = writeln!(self.body, r#"<text x="{:.1}" y="{y:.1}">{}</text>"#, x + 26.0, escape(label));
        }
    }

    fn warning(&mut self, msg: &str) {
        let _ = writeln!(
            self.body,
            r##"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="#b00000" font-size="14">{}</text>"##,
            W / 2.0,
            H / 2.0,
            escape(msg)
        );
    }

    fn finish(mut self) -> String {
        self.body.push_str("</svg>\n");
        self.body
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn channel_value(e: &VelocityEstimate, ch: &str) -> f64 {
    match ch {
        "v_lon" => e.v_lon,
        "v_lat" => e.v_lat,
        _ => e.omega,
    }
}

fn unit(ch: &str) -> &'static str {
    if ch == "omega" {
        "rad/s"
    } else {
        "m/s"
    }
}

pub const NO_VALID_WARNING: &str = "no valid estimates: ground truth only";

/// Estimate (dots) over ground truth (line) for one channel.
pub fn timeseries_svg(estimates: &[VelocityEstimate], gt: &[VelocityEstimate], channel: &str) -> String {
    let gt_pts: Vec<(f64, f64)> = gt.iter().map(|g| (g.t_mid, channel_value(g, channel))).collect();
    let est_pts: Vec<(f64, f64)> = estimates
        .iter()
        .filter(|e| e.valid)
        .map(|e| (e.t_mid, channel_value(e, channel)))
        .collect();
    let all = || gt_pts.iter().chain(&est_pts);
    let (x0, x1) = extent(all().map(|p| p.0));
    let (y0, y1) = extent(all().map(|p| p.1));
    let f = Frame {
        x: padded(x0, x1),
        y: padded(y0, y1),
    };
    let mut svg = Svg::new(&format!("{channel}: estimate vs. ground truth"));
    svg.axes(&f, "t [s]", &format!("{channel} [{}]", unit(channel)));
    svg.polyline(&f, &gt_pts, PALETTE[0], false);
    svg.dots(&f, &est_pts, PALETTE[1]);
    svg.legend(&[("ground truth", PALETTE[0]), ("estimate", PALETTE[1])]);
    if est_pts.is_empty() {
        svg.warning(NO_VALID_WARNING);
    }
    svg.finish()
}

/// Histogram of signed residuals (estimate minus truth) for one channel.
pub fn residual_svg(residuals: &[f64], channel: &str) -> String {
    let mut svg = Svg::new(&format!("{channel}: residual histogram (n = {})", residuals.len()));
    if residuals.is_empty() {
        let f = Frame {
            x: (-1.0, 1.0),
            y: (0.0, 1.0),
        };
        svg.axes(&f, &format!("error [{}]", unit(channel)), "count");
        svg.warning("no paired estimates");
        return svg.finish();
    }
    let bins = ((residuals.len() as f64).sqrt().ceil() as usize).clamp(5, 40);
    let (lo, hi) = padded(extent(residuals.iter().copied()).0, extent(residuals.iter().copied()).1);
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for r in residuals {
        let k = (((r - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let peak = *counts.iter().max().unwrap_or(&1) as f64;
    let f = Frame {
        x: (lo, hi),
        y: (0.0, peak * 1.1),
    };
    svg.axes(&f, &format!("error [{}]", unit(channel)), "count");
    for (k, &c) in counts.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let a = lo + k as f64 * width;
        let (xa, xb) = (f.px(a), f.px(a + width));
        let (ya, yb) = (f.py(c as f64), f.py(0.0));
        let _ = writeln!(
            svg.body,
            r##"<rect x="{xa:.2}" y="{ya:.2}" width="{:.2}" height="{:.2}" fill="{}" stroke="#333"/>"##,
            xb - xa,
            yb - ya,
            PALETTE[2]
        );
    }
    svg.finish()
}

/// File names written by [`emit_plots`], in order.
pub fn plot_file_names() -> Vec<String> {
    let mut v: Vec<String> = CHANNELS.iter().map(|c| format!("timeseries_{c}.svg")).collect();
    v.extend(CHANNELS.iter().map(|c| format!("residuals_{c}.svg")));
    v
}

/// Writes the six figures into `out_dir` and returns their paths.
pub fn emit_plots(
    estimates: &[VelocityEstimate],
    gt: &[VelocityEstimate],
    tolerance_s: f64,
    out_dir: &Path,
) -> io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let (pairs, _) = pair_with_truth(estimates, gt, tolerance_s);
    let mut written = Vec::new();
    for ch in CHANNELS {
        let p = out_dir.join(format!("timeseries_{ch}.svg"));
        std::fs::write(&p, timeseries_svg(estimates, gt, ch))?;
        written.push(p);
    }
    for ch in CHANNELS {
        let res: Vec<f64> = pairs
            .iter()
            .map(|(e, g)| channel_value(e, ch) - channel_value(g, ch))
            .collect();
        let p = out_dir.join(format!("residuals_{ch}.svg"));
        std::fs::write(&p, residual_svg(&res, ch))?;
        written.push(p);
    }
    Ok(written)
}

/// Longest exposure per speed and blur budget. `None` marks a stationary
/// camera, for which any exposure is acceptable.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurTable {
    pub speeds: Vec<f64>,
    pub budgets: Vec<f64>,
    /// `exposure_s[i][j]` for speed `i` and budget `j`.
    pub exposure_s: Vec<Vec<Option<f64>>>,
}

pub fn blur_budget_table(speeds: &[f64], budgets: &[f64], cam: &CameraModel) -> Result<BlurTable, CameraError> {
    let exposure_s = speeds
        .iter()
        .map(|&v| {
            budgets
                .iter()
                .map(|&b| max_exposure_for_blur(b, v, cam).map(|e| e.seconds()))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BlurTable {
        speeds: speeds.to_vec(),
        budgets: budgets.to_vec(),
        exposure_s,
    })
}

impl BlurTable {
    /// `speed_mps,exposure_us@1%,...`; stationary rows read `inf`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("speed_mps");
        for b in &self.budgets {
            let _ = write!(s, ",exposure_us@{}%", b * 100.0);
        }
        s.push('\n');
        for (v, row) in self.speeds.iter().zip(&self.exposure_s) {
            let _ = write!(s, "{v}");
            for e in row {
                match e {
                    Some(e) => {
                        let _ = write!(s, ",{:.3}", e * 1e6);
                    }
                    None => s.push_str(",inf"),
                }
            }
            s.push('\n');
        }
        s
    }

    /// One curve per budget, exposure in microseconds on a log axis.
    pub fn to_svg(&self) -> String {
        let finite = || self.exposure_s.iter().flatten().flatten().map(|e| (e * 1e6).log10());
        let (y0, y1) = extent(finite());
        let (x0, x1) = extent(self.speeds.iter().copied());
        let f = Frame {
            x: padded(x0, x1),
            y: padded(y0, y1),
        };
        let mut svg = Svg::new("Longest exposure within blur budget");
        svg.axes(&f, "speed [m/s]", "log10 exposure [us]");
        let mut legend = Vec::new();
        let labels: Vec<String> = self.budgets.iter().map(|b| format!("{}% blur", b * 100.0)).collect();
        for (j, label) in labels.iter().enumerate() {
            let pts: Vec<(f64, f64)> = self
                .speeds
                .iter()
                .zip(&self.exposure_s)
                .filter_map(|(v, row)| row[j].map(|e| (*v, (e * 1e6).log10())))
                .collect();
            let color = PALETTE[j % PALETTE.len()];
            svg.polyline(&f, &pts, color, j >= PALETTE.len());
            legend.push((label.as_str(), color));
        }
        svg.legend(&legend);
        svg.finish()
    }
}
