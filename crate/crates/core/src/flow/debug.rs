//! Flow dumps for visual inspection: a per-pixel CSV and an SVG quiver plot.

use std::fmt::Write as _;
use std::io::{self, Write};

use super::FlowField;
use crate::events::GrayImage;

pub const CSV_HEADER: &str = "x,y,u,v,valid";

pub fn write_flow_csv<W: Write>(mut out: W, field: &FlowField) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for y in 0..field.height {
        for x in 0..field.width {
            let i = y * field.width + x;
            writeln!(out, "{x},{y},{},{},{}", field.u[i], field.v[i], field.valid[i] as u8)?;
        }
    }
    Ok(())
}

/// Renders arrows on a `stride` grid, optionally over the source frame.
/// Arrow lengths are multiplied by `gain`. Output is deterministic.
pub fn quiver_svg(field: &FlowField, background: Option<&GrayImage>, stride: usize, gain: f64) -> String {
    let stride = stride.max(1);
    let scale = (800.0 / field.width.max(1) as f64).clamp(1.0, 8.0);
    let (w, h) = (field.width as f64 * scale, field.height as f64 * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w:.0}" height="{h:.0}" fill="black"/>"#);
    if let Some(img) = background {
        // coarse blocks keep the file small
        let block = stride;
        for by in (0..img.height).step_by(block) {
            for bx in (0..img.width).step_by(block) {
                let (mut sum, mut n) = (0u32, 0u32);
                for y in by..(by + block).min(img.height) {
                    for x in bx..(bx + block).min(img.width) {
                        sum += img.get(x, y) as u32;
                        n += 1;
                    }
                }
                let g = sum / n.max(1);
                if g > 0 {
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="rgb({g},{g},{g})"/>"#,
                        bx as f64 * scale,
                        by as f64 * scale,
                        block as f64 * scale,
                        block as f64 * scale
                    );
                }
            }
        }
    }
    let _ = writeln!(s, r#"<g stroke="orange" stroke-width="1" fill="none">"#);
    for y in (stride / 2..field.height).step_by(stride) {
        for x in (stride / 2..field.width).step_by(stride) {
            let i = y * field.width + x;
            if !field.valid[i] {
                continue;
            }
            let x0 = (x as f64 + 0.5) * scale;
            let y0 = (y as f64 + 0.5) * scale;
            let dx = field.u[i] as f64 * gain * scale;
            let dy = field.v[i] as f64 * gain * scale;
            let (x1, y1) = (x0 + dx, y0 + dy);
            let len = dx.hypot(dy);
            let _ = write!(s, r#"<path d="M{x0:.1} {y0:.1}L{x1:.1} {y1:.1}"#);
            if len > 1e-6 {
                let head = (0.3 * len).min(4.0);
                let (ux, uy) = (dx / len, dy / len);
                for side in [-1.0, 1.0] {
                    let hx = x1 - head * (ux - side * 0.5 * uy);
                    let hy = y1 - head * (uy + side * 0.5 * ux);
                    let _ = write!(s, "M{x1:.1} {y1:.1}L{hx:.1} {hy:.1}");
                }
            }
            let _ = writeln!(s, r#""/>"#);
        }
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        let mut f = FlowField::uniform(3, 2, 1.5, -0.25, 0.01);
        f.valid[4] = false;
        let mut buf = Vec::new();
        write_flow_csv(&mut buf, &f).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 7);
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0,0,1.5,-0.25,1");
        assert_eq!(lines[5], "1,1,1.5,-0.25,0");
    }

    #[test]
    fn quiver_is_deterministic() {
        let f = FlowField::uniform(20, 10, 2.0, 1.0, 0.01);
        let img = GrayImage {
            width: 20,
            height: 10,
            data: (0..200).map(|i| (i % 256) as u8).collect(),
        };
        let a = quiver_svg(&f, Some(&img), 4, 1.0);
        assert_eq!(a, quiver_svg(&f, Some(&img), 4, 1.0));
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert_eq!(a.matches("<path").count(), 5 * 2);
    }
}
