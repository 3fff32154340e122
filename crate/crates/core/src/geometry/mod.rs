//! Planar centerline geometry of the double-spiral snapping structure.
//!
//! A unit cell is an S-shaped pair of point-symmetric Archimedean arms fitted
//! into its bounding box. Cells are chained along the 8 mm side into a
//! metabeam, and two mirrored, inclined metabeams meet at a rigid apex block
//! that carries the tip marker and the off-center anchor points.

mod chain;
mod layout;
mod spiral;
mod svg;

pub use chain::{chain_cells, ChainedBeam, ConnectorPolicy, MetabeamSpec, Piece, PieceKind};
pub use layout::{assemble_structure, generate_layout, ApexBlock, SnapStructureLayout, StructureSpec};
pub use spiral::{
    archimedean_point, build_unit_cell, cell_pieces, solve_growth_rate, CellPieces, Handedness,
    SpiralParams, UnitCellSpec, DEFAULT_CLEARANCE,
};
pub use svg::{export_layout_svg, layout_svg};

pub(crate) use chain::chain_pieces;

pub type Point = [f64; 2];
pub type Polyline = Vec<Point>;

pub fn arc_length(pts: &[Point]) -> f64 {
    pts.windows(2)
        .map(|s| (s[1][0] - s[0][0]).hypot(s[1][1] - s[0][1]))
        .sum()
}

/// `[min, max]` corners; `[[inf, inf], [-inf, -inf]]` for an empty slice.
pub fn bounding_box(pts: &[Point]) -> [Point; 2] {
    let mut min = [f64::INFINITY; 2];
    let mut max = [f64::NEG_INFINITY; 2];
    for p in pts {
        for k in 0..2 {
            min[k] = min[k].min(p[k]);
            max[k] = max[k].max(p[k]);
        }
    }
    [min, max]
}

/// Resamples a polyline at `segments` equal arc-length steps.
pub fn resample_uniform(pts: &[Point], segments: usize) -> Polyline {
    let segments = segments.max(1);
    let mut cum = Vec::with_capacity(pts.len());
    let mut s = 0.0;
    cum.push(0.0);
    for w in pts.windows(2) {
        s += (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
        cum.push(s);
    }
    let total = s;
    let mut out = Vec::with_capacity(segments + 1);
    out.push(pts[0]);
    let mut j = 0;
    for k in 1..segments {
        let target = total * k as f64 / segments as f64;
        while j + 1 < cum.len() - 1 && cum[j + 1] < target {
            j += 1;
        }
        let span = cum[j + 1] - cum[j];
        let t = if span > 0.0 { (target - cum[j]) / span } else { 0.0 };
        out.push([
            pts[j][0] + t * (pts[j + 1][0] - pts[j][0]),
            pts[j][1] + t * (pts[j + 1][1] - pts[j][1]),
        ]);
    }
    out.push(*pts.last().unwrap());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resampling_keeps_end_points_and_spacing() {
        let pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 2.0]];
        let r = resample_uniform(&pts, 6);
        assert_eq!(r.len(), 7);
        assert_eq!(r[0], [0.0, 0.0]);
        assert_eq!(r[6], [1.0, 2.0]);
        assert!((r[3][0] - 1.0).abs() < 1e-12 && (r[3][1] - 0.5).abs() < 1e-12);
    }
}
