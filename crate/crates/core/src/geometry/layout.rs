use serde::{Deserialize, Serialize};

use super::chain::{chain_cells, MetabeamSpec};
use super::{Point, Polyline};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureSpec {
    /// Angle between each metabeam axis and the support line, degrees.
    pub inclination_angle: f64,
    /// Signed anchor positions along the apex crossline, mm from the centerline.
    pub anchor_offsets: Vec<f64>,
    /// Half the horizontal distance between the two beam ends at the apex.
    pub apex_half_width: f64,
    /// Out-of-plane extrusion; enters only through the section properties.
    pub depth: f64,
}

impl Default for StructureSpec {
    fn default() -> Self {
        Self {
            inclination_angle: 35.0,
            anchor_offsets: vec![-4.0, 4.0],
            apex_half_width: 6.0,
            depth: 10.0,
        }
    }
}

/// Rigid block joining the two upper beam ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApexBlock {
    pub left_end: Point,
    pub right_end: Point,
    /// Marker at the central tip; the fin attaches here.
    pub tip: Point,
    pub anchors: Vec<Point>,
}

impl ApexBlock {
    pub fn height(&self) -> f64 {
        self.tip[1]
    }
}

/// Planar layout of the mirrored structure. The vertical centerline is x = 0
/// and the supports sit on y = 0; both beam polylines run from their support
/// to the apex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapStructureLayout {
    pub metabeam: MetabeamSpec,
    pub structure: StructureSpec,
    pub apex_block: ApexBlock,
    pub left_beam: Polyline,
    pub right_beam: Polyline,
}

impl SnapStructureLayout {
    pub fn inclination_angle(&self) -> f64 {
        self.structure.inclination_angle
    }

    pub fn anchor_offsets(&self) -> &[f64] {
        &self.structure.anchor_offsets
    }

    pub fn depth(&self) -> f64 {
        self.structure.depth
    }

    pub fn left_support(&self) -> Point {
        self.left_beam[0]
    }

    pub fn right_support(&self) -> Point {
        self.right_beam[0]
    }

    pub fn span(&self) -> f64 {
        self.right_support()[0] - self.left_support()[0]
    }

    pub fn anchor(&self, offset: f64) -> Option<Point> {
        self.structure
            .anchor_offsets
            .iter()
            .position(|o| (o - offset).abs() < 1e-9)
            .map(|k| self.apex_block.anchors[k])
    }
}

/// Places `beam` (laid out along +x from its lower end) at `inclination_angle`
/// and mirrors it about x = 0, leaving `apex_half_width` between the two
/// upper ends.
pub fn assemble_structure(
    metabeam: &MetabeamSpec,
    beam: &Polyline,
    structure: &StructureSpec,
) -> Result<SnapStructureLayout> {
    if beam.len() < 2 {
        return Err(Error::Specification("beam polyline needs at least 2 points".into()));
    }
    let angle = structure.inclination_angle;
    if !(angle > 0.0 && angle < 90.0) {
        return Err(Error::Domain(format!("inclination angle {angle} outside (0, 90)")));
    }
    let w = structure.apex_half_width;
    if !(w >= 0.0) {
        return Err(Error::Domain(format!("apex half width {w} must be non-negative")));
    }
    if !(structure.depth > 0.0) {
        return Err(Error::Domain("depth must be positive".into()));
    }
    for &o in &structure.anchor_offsets {
        if !(o.abs() < w) {
            return Err(Error::Domain(format!(
                "anchor offset {o} mm outside the apex half width {w} mm"
            )));
        }
    }
    let (s, c) = angle.to_radians().sin_cos();
    let origin = beam[0];
    let rotated: Polyline = beam
        .iter()
        .map(|p| {
            let (dx, dy) = (p[0] - origin[0], p[1] - origin[1]);
            [c * dx - s * dy, s * dx + c * dy]
        })
        .collect();
    let top = *rotated.last().unwrap();
    let shift = [-w - top[0], -rotated[0][1]];
    let mut left: Polyline = rotated
        .iter()
        .map(|p| [p[0] + shift[0], p[1] + shift[1]])
        .collect();
    let n = left.len();
    let height = left[n - 1][1];
    left[n - 1] = [-w, height];
    let right: Polyline = left.iter().map(|p| [-p[0], p[1]]).collect();

    if beams_intersect(&left, &right, w == 0.0) {
        return Err(Error::GeometryInfeasible(
            "left and right metabeams intersect after rotation".into(),
        ));
    }

    let apex_block = ApexBlock {
        left_end: [-w, height],
        right_end: [w, height],
        tip: [0.0, height],
        anchors: structure
            .anchor_offsets
            .iter()
            .map(|&o| [o, height])
            .collect(),
    };
    Ok(SnapStructureLayout {
        metabeam: metabeam.clone(),
        structure: structure.clone(),
        apex_block,
        left_beam: left,
        right_beam: right,
    })
}

/// Full geometry pipeline: cell, metabeam chain, mirrored structure.
pub fn generate_layout(metabeam: &MetabeamSpec, structure: &StructureSpec) -> Result<SnapStructureLayout> {
    let beam = chain_cells(metabeam)?;
    assemble_structure(metabeam, &beam.polyline, structure)
}

fn seg_bbox(a: Point, b: Point) -> [f64; 4] {
    [a[0].min(b[0]), a[1].min(b[1]), a[0].max(b[0]), a[1].max(b[1])]
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

fn beams_intersect(left: &Polyline, right: &Polyline, shared_apex: bool) -> bool {
    let lb: Vec<[f64; 4]> = left.windows(2).map(|s| seg_bbox(s[0], s[1])).collect();
    let rb: Vec<[f64; 4]> = right.windows(2).map(|s| seg_bbox(s[0], s[1])).collect();
    // right polyline is a mirror image, so only segments near x = 0 can meet
    let reach = lb.iter().map(|b| b[2]).fold(f64::NEG_INFINITY, f64::max);
    for (i, a) in lb.iter().enumerate() {
        if a[2] < -reach {
            continue;
        }
        for (j, b) in rb.iter().enumerate() {
            if shared_apex && i == lb.len() - 1 && j == rb.len() - 1 {
                continue;
            }
            if a[2] < b[0] || b[2] < a[0] || a[3] < b[1] || b[3] < a[1] {
                continue;
            }
            if segments_cross(left[i], left[i + 1], right[j], right[j + 1]) {
                return true;
            }
        }
    }
    false
}
