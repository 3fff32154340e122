use std::f64::consts::{PI, TAU};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{Point, Polyline};
use crate::error::{Error, Result};

/// Centerline clearance added on top of the coil thickness when the default
/// growth rate is solved for.
pub const DEFAULT_CLEARANCE: f64 = 0.2;

/// Largest ratio between the two axis scale factors used to fit a cell into
/// its bounding box.
const MAX_ANISOTROPY: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Handedness {
    Clockwise,
    Counterclockwise,
}

/// Archimedean spiral r(θ) = a + bθ swept over [0, sweep_angle].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralParams {
    pub inner_radius_a: f64,
    pub growth_rate_b: f64,
    pub sweep_angle: f64,
    pub handedness: Handedness,
}

impl SpiralParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_radius_a >= 0.0) {
            return Err(Error::Domain(format!(
                "inner radius must be non-negative, got {}",
                self.inner_radius_a
            )));
        }
        if !(self.growth_rate_b > 0.0) {
            return Err(Error::Domain(format!(
                "growth rate must be positive, got {}",
                self.growth_rate_b
            )));
        }
        if !(self.sweep_angle > 0.0) {
            return Err(Error::Domain(format!(
                "sweep angle must be positive, got {}",
                self.sweep_angle
            )));
        }
        Ok(())
    }

    pub fn radius(&self, theta: f64) -> f64 {
        self.inner_radius_a + self.growth_rate_b * theta
    }
}

/// Point on the spiral at polar angle `theta`.
pub fn archimedean_point(params: &SpiralParams, theta: f64) -> Result<Point> {
    params.validate()?;
    if !(0.0..=params.sweep_angle).contains(&theta) {
        return Err(Error::Domain(format!(
            "theta {theta} outside sweep range [0, {}]",
            params.sweep_angle
        )));
    }
    Ok(spiral_point_unchecked(params, theta))
}

fn spiral_point_unchecked(params: &SpiralParams, theta: f64) -> Point {
    let r = params.radius(theta);
    let t = match params.handedness {
        Handedness::Counterclockwise => theta,
        Handedness::Clockwise => -theta,
    };
    [r * t.cos(), r * t.sin()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitCellSpec {
    /// Extent along the chain axis; the two ports sit on this axis.
    pub width: f64,
    pub height: f64,
    pub coil_thickness: f64,
    pub spiral: SpiralParams,
    pub samples_per_turn: usize,
}

impl Default for UnitCellSpec {
    fn default() -> Self {
        static DEFAULT: OnceLock<UnitCellSpec> = OnceLock::new();
        DEFAULT
            .get_or_init(|| {
                let mut spec = UnitCellSpec {
                    width: 8.0,
                    height: 10.0,
                    coil_thickness: 0.8,
                    spiral: SpiralParams {
                        inner_radius_a: 1.0,
                        growth_rate_b: 1.0,
                        sweep_angle: 3.0 * PI,
                        handedness: Handedness::Counterclockwise,
                    },
                    samples_per_turn: 64,
                };
                spec.spiral.growth_rate_b =
                    solve_growth_rate(&spec, spec.coil_thickness + DEFAULT_CLEARANCE)
                        .expect("default unit cell admits the target coil gap");
                spec
            })
            .clone()
    }
}

impl UnitCellSpec {
    pub fn validate(&self) -> Result<()> {
        self.spiral.validate()?;
        if !(self.width > 0.0 && self.height > 0.0) {
            return Err(Error::Domain(format!(
                "cell dimensions must be positive, got {} x {}",
                self.width, self.height
            )));
        }
        let limit = self.width.min(self.height) / 2.0;
        if !(self.coil_thickness > 0.0 && self.coil_thickness < limit) {
            return Err(Error::Domain(format!(
                "coil thickness {} must lie in (0, {limit})",
                self.coil_thickness
            )));
        }
        if self.samples_per_turn < 4 {
            return Err(Error::Domain("samples_per_turn must be at least 4".into()));
        }
        Ok(())
    }

    /// Every length field multiplied by `s`. The spiral parameters scale too,
    /// so the normalized shape is unchanged.
    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.width *= s;
        out.height *= s;
        out.coil_thickness *= s;
        out.spiral.inner_radius_a *= s;
        out.spiral.growth_rate_b *= s;
        out
    }
}

/// The three pieces of a double-spiral cell, already scaled into the cell box
/// and centered at the origin, ordered from the left port to the right port.
/// Consecutive pieces share their end points.
#[derive(Debug, Clone)]
pub struct CellPieces {
    pub inward: Polyline,
    /// Straight bridge through the center; `None` when the inner radius is 0.
    pub bridge: Option<Polyline>,
    pub outward: Polyline,
    /// Signed spiral parameter of each vertex of `inward` and `outward`
    /// (negative on the inward arm), used to tell coil passes apart.
    inward_tau: Vec<f64>,
    outward_tau: Vec<f64>,
}

impl CellPieces {
    pub fn concatenated(&self) -> Polyline {
        let mut pts = self.inward.clone();
        if let Some(bridge) = &self.bridge {
            pts.extend_from_slice(&bridge[1..]);
        }
        pts.extend_from_slice(&self.outward[1..]);
        pts
    }

    fn tagged_vertices(&self) -> (Polyline, Vec<f64>) {
        let mut pts = self.inward.clone();
        let mut tau = self.inward_tau.clone();
        if let Some(bridge) = &self.bridge {
            pts.extend_from_slice(&bridge[1..]);
            tau.extend(std::iter::repeat(0.0).take(bridge.len() - 1));
        }
        pts.extend_from_slice(&self.outward[1..]);
        tau.extend_from_slice(&self.outward_tau[1..]);
        (pts, tau)
    }

    /// Smallest centerline distance between two coil passes, i.e. between
    /// points whose spiral parameters differ by at least half a turn.
    pub fn min_coil_gap(&self) -> f64 {
        let (pts, tau) = self.tagged_vertices();
        let mut best = f64::INFINITY;
        for (i, p) in pts.iter().enumerate() {
            for j in 0..pts.len() - 1 {
                if (tau[i] - tau[j]).abs() < PI || (tau[i] - tau[j + 1]).abs() < PI {
                    continue;
                }
                best = best.min(point_segment_distance(*p, pts[j], pts[j + 1]));
            }
        }
        best
    }
}

pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let d = [ap[0] - t * ab[0], ap[1] - t * ab[1]];
    d[0].hypot(d[1])
}

/// Builds the scaled cell pieces with `samples_per_turn` vertices per turn.
pub fn cell_pieces(spec: &UnitCellSpec, samples_per_turn: usize) -> Result<CellPieces> {
    spec.validate()?;
    let sp = &spec.spiral;
    let sweep = sp.sweep_angle;
    let n = ((sweep / TAU) * samples_per_turn as f64).ceil().max(1.0) as usize;

    // outward arm, rotated so its outer end lies on the +x axis
    let end = spiral_point_unchecked(sp, sweep);
    let phi = end[1].atan2(end[0]);
    let (s, c) = (-phi).sin_cos();
    let mut thetas = Vec::with_capacity(n + 1);
    let mut arm: Polyline = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let theta = sweep * k as f64 / n as f64;
        let p = spiral_point_unchecked(sp, theta);
        thetas.push(theta);
        arm.push([c * p[0] - s * p[1], s * p[0] + c * p[1]]);
    }

    let max_x = arm.iter().map(|p| p[0].abs()).fold(0.0, f64::max);
    let max_y = arm.iter().map(|p| p[1].abs()).fold(0.0, f64::max);
    let sx = 0.5 * spec.width / max_x;
    let sy = if max_y > 0.0 {
        let raw = 0.5 * spec.height / max_y;
        raw.clamp(sx / MAX_ANISOTROPY, sx * MAX_ANISOTROPY)
    } else {
        sx
    };
    for p in arm.iter_mut() {
        p[0] *= sx;
        p[1] *= sy;
    }
    arm[n] = [0.5 * spec.width, 0.0];

    let mut inward: Polyline = arm.iter().rev().map(|p| [-p[0], -p[1]]).collect();
    let mut inward_tau: Vec<f64> = thetas.iter().rev().map(|t| -t).collect();
    let bridge = if sp.inner_radius_a > 0.0 {
        Some(vec![inward[n], arm[0]])
    } else {
        // both arms start at the origin
        inward[n] = [0.0, 0.0];
        inward_tau[n] = 0.0;
        None
    };
    let mut outward = arm;
    if bridge.is_none() {
        outward[0] = [0.0, 0.0];
    }
    Ok(CellPieces {
        inward,
        bridge,
        outward,
        inward_tau,
        outward_tau: thetas,
    })
}

/// S-shaped double-spiral centerline from the left port (−width/2, 0) to the
/// right port (width/2, 0), point-symmetric about the origin.
pub fn build_unit_cell(spec: &UnitCellSpec) -> Result<Polyline> {
    let pieces = cell_pieces(spec, spec.samples_per_turn)?;
    let gap = pieces.min_coil_gap();
    if gap < spec.coil_thickness {
        return Err(Error::GeometryInfeasible(format!(
            "coil gap {gap:.4} mm is smaller than the coil thickness {} mm",
            spec.coil_thickness
        )));
    }
    Ok(pieces.concatenated())
}

/// Growth rate b for which the minimum coil gap of the scaled cell equals
/// `target_gap`, holding the inner radius fixed.
pub fn solve_growth_rate(spec: &UnitCellSpec, target_gap: f64) -> Result<f64> {
    let a = spec.spiral.inner_radius_a;
    if a == 0.0 {
        // the normalized shape does not depend on b
        return Ok(spec.spiral.growth_rate_b);
    }
    let gap_at = |b: f64| -> Result<f64> {
        let mut s = spec.clone();
        s.spiral.growth_rate_b = b;
        Ok(cell_pieces(&s, s.samples_per_turn)?.min_coil_gap())
    };
    let (mut lo, mut hi) = ((a * 1e-3).ln(), (a * 1e3).ln());
    if gap_at(hi.exp())? < target_gap {
        return Err(Error::GeometryInfeasible(format!(
            "no growth rate reaches a coil gap of {target_gap} mm"
        )));
    }
    if gap_at(lo.exp())? >= target_gap {
        return Ok(lo.exp());
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if gap_at(mid.exp())? < target_gap {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::bounding_box;

    fn params(a: f64, b: f64, sweep: f64, handedness: Handedness) -> SpiralParams {
        SpiralParams {
            inner_radius_a: a,
            growth_rate_b: b,
            sweep_angle: sweep,
            handedness,
        }
    }

    #[test]
    fn spiral_origin_and_half_turn() {
        let p = archimedean_point(&params(0.0, 1.0, TAU, Handedness::Counterclockwise), 0.0)
            .unwrap();
        assert_eq!(p, [0.0, 0.0]);
        let q = archimedean_point(&params(2.0, 0.5, TAU, Handedness::Counterclockwise), PI)
            .unwrap();
        assert!((q[0] + 3.570_796_326_794_896_6).abs() < 1e-12);
        assert!(q[1].abs() < 1e-12);
    }

    #[test]
    fn handedness_mirrors_about_x_axis() {
        for k in 0..=16 {
            let theta = TAU * k as f64 / 16.0;
            let ccw = archimedean_point(&params(1.0, 1.0, TAU, Handedness::Counterclockwise), theta)
                .unwrap();
            let cw =
                archimedean_point(&params(1.0, 1.0, TAU, Handedness::Clockwise), theta).unwrap();
            assert_eq!(ccw[0], cw[0]);
            assert_eq!(ccw[1], -cw[1]);
        }
    }

    #[test]
    fn theta_outside_sweep_is_domain_error() {
        let p = params(1.0, 1.0, PI, Handedness::Counterclockwise);
        assert!(matches!(archimedean_point(&p, PI + 1e-9), Err(Error::Domain(_))));
        assert!(matches!(archimedean_point(&p, -1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn default_cell_fits_box_and_clears_coils() {
        let spec = UnitCellSpec::default();
        let cell = build_unit_cell(&spec).unwrap();
        let [min, max] = bounding_box(&cell);
        assert!((max[0] - min[0] - 8.0).abs() < 1e-6);
        assert!((max[1] - min[1] - 10.0).abs() < 1e-6);
        let gap = cell_pieces(&spec, spec.samples_per_turn).unwrap().min_coil_gap();
        assert!((gap - 1.0).abs() < 1e-6, "gap {gap}");
    }

    #[test]
    fn cell_is_point_symmetric() {
        let cell = build_unit_cell(&UnitCellSpec::default()).unwrap();
        let n = cell.len();
        for i in 0..n {
            assert!((cell[i][0] + cell[n - 1 - i][0]).abs() < 1e-9);
            assert!((cell[i][1] + cell[n - 1 - i][1]).abs() < 1e-9);
        }
    }

    #[test]
    fn vanishing_sweep_degenerates_to_straight_segment() {
        let mut spec = UnitCellSpec::default();
        spec.spiral.sweep_angle = 1e-9;
        let cell = build_unit_cell(&spec).unwrap();
        let [min, max] = bounding_box(&cell);
        assert!((max[0] - min[0] - spec.width).abs() < 1e-9);
        assert!(max[1] - min[1] < 1e-6);
        let len = crate::geometry::arc_length(&cell);
        assert!((len - spec.width).abs() < 1e-6);
    }

    #[test]
    fn tight_coils_are_rejected() {
        let mut spec = UnitCellSpec::default();
        spec.spiral.growth_rate_b *= 0.2;
        match build_unit_cell(&spec) {
            Err(Error::GeometryInfeasible(msg)) => assert!(msg.contains("coil gap")),
            other => panic!("expected infeasible geometry, got {other:?}"),
        }
    }

    #[test]
    fn invalid_cell_dimensions_are_rejected() {
        let mut spec = UnitCellSpec::default();
        spec.coil_thickness = 4.5;
        assert!(matches!(build_unit_cell(&spec), Err(Error::Domain(_))));
        spec.coil_thickness = 0.8;
        spec.width = 0.0;
        assert!(matches!(build_unit_cell(&spec), Err(Error::Domain(_))));
    }
}
