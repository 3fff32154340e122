//! Minimal SVG line plots for curves, trajectories and fin strips.

use std::fmt::Write as _;

use crate::geometry::{bounding_box, Point};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

pub struct Series<'a> {
    pub name: &'a str,
    pub points: &'a [Point],
}

/// Axes box with min/max tick labels and one polyline per series.
/// `equal_axes` keeps one data unit the same length along x and y.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], equal_axes: bool) -> String {
    let all: Vec<Point> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let [mut lo, mut hi] = if all.is_empty() { [[0.0, 0.0], [1.0, 1.0]] } else { bounding_box(&all) };
    for k in 0..2 {
        if hi[k] - lo[k] < 1e-12 {
            lo[k] -= 0.5;
            hi[k] += 0.5;
        }
    }
    let (pw, ph) = (WIDTH - 2.0 * MARGIN, HEIGHT - 2.0 * MARGIN);
    let (mut sx, mut sy) = (pw / (hi[0] - lo[0]), ph / (hi[1] - lo[1]));
    if equal_axes {
        let s = sx.min(sy);
        sx = s;
        sy = s;
    }
    let map = |p: &Point| [MARGIN + (p[0] - lo[0]) * sx, HEIGHT - MARGIN - (p[1] - lo[1]) * sy];

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, escape(x_label));
    let _ = writeln!(
        out,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    let _ = writeln!(out, r#"<text x="{MARGIN}" y="{}" text-anchor="start">{:.4}</text>"#, HEIGHT - MARGIN + 16.0, lo[0]);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, WIDTH - MARGIN, HEIGHT - MARGIN + 16.0, hi[0]);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, MARGIN - 4.0, HEIGHT - MARGIN, lo[1]);
    let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="end">{:.4}</text>"#, MARGIN - 4.0, MARGIN + 10.0, hi[1]);
    if lo[1] < 0.0 && hi[1] > 0.0 {
        let y0 = map(&[lo[0], 0.0])[1];
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
            WIDTH - MARGIN
        );
    }
    for (k, s) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        if !s.points.is_empty() {
            let mut d = String::new();
            for (i, p) in s.points.iter().enumerate() {
                let q = map(p);
                let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { 'M' } else { 'L' }, q[0], q[1]);
            }
            let _ = writeln!(out, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, d.trim_end());
        }
        let ly = MARGIN + 16.0 + 16.0 * k as f64;
        let lx = WIDTH - MARGIN - 150.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx}" y1="{}" x2="{}" y2="{}" stroke="{color}" stroke-width="2"/><text x="{}" y="{ly}">{}</text>"#,
            ly - 4.0,
            lx + 20.0,
            ly - 4.0,
            lx + 26.0,
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plot_is_well_formed_and_escaped() {
        let pts = [[0.0, -1.0], [1.0, 2.0]];
        let svg = line_plot("a < b", "x", "y", &[Series { name: "s&t", points: &pts }], false);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a &lt; b") && svg.contains("s&amp;t"));
        assert!(svg.contains("stroke-dasharray"));
    }
}
