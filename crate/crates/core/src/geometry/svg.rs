use std::fmt::Write as _;
use std::path::Path;

use super::{bounding_box, Point, SnapStructureLayout};
use crate::error::{Error, Result};
use crate::io::write_atomic;

const MARGIN: f64 = 2.0;

fn path_data(pts: &[Point]) -> String {
    let mut s = String::new();
    for (i, p) in pts.iter().enumerate() {
        let cmd = if i == 0 { 'M' } else { 'L' };
        let _ = write!(s, "{cmd}{:.4},{:.4} ", p[0], -p[1]);
    }
    s.trim_end().to_string()
}

/// SVG document for a layout, one user unit per millimetre, y pointing up.
pub fn layout_svg(layout: &SnapStructureLayout) -> Result<String> {
    if layout.left_beam.len() < 2 || layout.right_beam.len() < 2 {
        return Err(Error::Specification("layout has an empty beam polyline".into()));
    }
    let t = layout.metabeam.cell.coil_thickness;
    let apex = &layout.apex_block;
    let mut all: Vec<Point> = layout.left_beam.clone();
    all.extend_from_slice(&layout.right_beam);
    all.extend_from_slice(&[apex.left_end, apex.right_end, apex.tip]);
    all.extend_from_slice(&apex.anchors);
    let [min, max] = bounding_box(&all);
    let pad = MARGIN + t;
    let (x0, y0) = (min[0] - pad, -max[1] - pad);
    let (w, h) = (max[0] - min[0] + 2.0 * pad, max[1] - min[1] + 2.0 * pad);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{x0:.4} {y0:.4} {w:.4} {h:.4}" width="{w:.4}mm" height="{h:.4}mm">"#
    );
    for (id, beam) in [("left-beam", &layout.left_beam), ("right-beam", &layout.right_beam)] {
        let _ = writeln!(
            s,
            r#"  <path id="{id}" d="{}" fill="none" stroke="black" stroke-width="{t:.4}" stroke-linejoin="round"/>"#,
            path_data(beam)
        );
    }
    let _ = writeln!(
        s,
        r#"  <path id="apex-block" d="{}" fill="none" stroke="dimgray" stroke-width="{:.4}"/>"#,
        path_data(&[apex.left_end, apex.right_end]),
        2.0 * t
    );
    for (k, a) in apex.anchors.iter().enumerate() {
        let _ = writeln!(
            s,
            r#"  <circle id="anchor-{k}" cx="{:.4}" cy="{:.4}" r="0.5" fill="royalblue"/>"#,
            a[0], -a[1]
        );
    }
    let _ = writeln!(
        s,
        r#"  <circle id="tip-marker" cx="{:.4}" cy="{:.4}" r="0.6" fill="crimson"/>"#,
        apex.tip[0], -apex.tip[1]
    );
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn export_layout_svg(layout: &SnapStructureLayout, path: &Path) -> Result<()> {
    let svg = layout_svg(layout)?;
    write_atomic(path, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_layout, MetabeamSpec, StructureSpec};

    fn view_box(svg: &str) -> [f64; 4] {
        let start = svg.find("viewBox=\"").unwrap() + 9;
        let end = start + svg[start..].find('"').unwrap();
        let v: Vec<f64> = svg[start..end].split(' ').map(|x| x.parse().unwrap()).collect();
        [v[0], v[1], v[2], v[3]]
    }

    #[test]
    fn view_box_has_margin_and_output_is_deterministic() {
        let layout = generate_layout(&MetabeamSpec::default(), &StructureSpec::default()).unwrap();
        let a = layout_svg(&layout).unwrap();
        let b = layout_svg(&layout.clone()).unwrap();
        assert_eq!(a, b);
        let vb = view_box(&a);
        let mut pts = layout.left_beam.clone();
        pts.extend_from_slice(&layout.right_beam);
        let [min, max] = bounding_box(&pts);
        assert!(min[0] - vb[0] >= 2.0);
        assert!(vb[0] + vb[2] - max[0] >= 2.0);
        assert!(-max[1] - vb[1] >= 2.0);
        assert!(vb[1] + vb[3] + min[1] >= 2.0);
    }

    #[test]
    fn empty_polyline_is_an_error() {
        let mut layout =
            generate_layout(&MetabeamSpec::default(), &StructureSpec::default()).unwrap();
        layout.left_beam.clear();
        assert!(layout_svg(&layout).is_err());
        let dir = std::env::temp_dir().join("spirosnap-empty-svg-test");
        let _ = std::fs::create_dir_all(&dir);
        let file = dir.join("empty.svg");
        let _ = std::fs::remove_file(&file);
        assert!(export_layout_svg(&layout, &file).is_err());
        assert!(!file.exists());
    }
}
