//! Observables derived from equilibrium paths: emulated loading-unloading
//! curves with jumps, critical force, energy bookkeeping, stability class
//! and tip-trajectory reciprocity.

use serde::{Deserialize, Serialize};

use crate::continuation::{EquilibriumPath, FreeEquilibrium};
use crate::error::{Error, Result};
use crate::geometry::{resample_uniform, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Loading,
    Unloading,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Loading => "loading",
            Phase::Unloading => "unloading",
        }
    }
}

/// Which quantity the emulated machine prescribes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlMode {
    /// Path control is a displacement and the reaction is the force.
    Displacement,
    /// Path control is a load factor and the reaction is minus the
    /// conjugate displacement.
    Load,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    /// Displacement coordinate, mm (the prescribed one in displacement mode).
    pub control: f64,
    pub force: f64,
    pub phase: Phase,
    /// Tracked node pose (x mm, y mm, θ rad).
    pub tip: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub control: f64,
    pub force_before: f64,
    pub force_after: f64,
    /// Displacement after the jump; equals `control` in displacement mode.
    pub control_after: f64,
    pub released_energy: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmulatedCurve {
    pub mode: ControlMode,
    pub stroke: f64,
    pub samples: Vec<CurveSample>,
    pub jumps: Vec<Jump>,
    /// The unloading phase ended at the start point of the path.
    pub closed: bool,
}

impl EmulatedCurve {
    pub fn phase(&self, phase: Phase) -> impl Iterator<Item = &CurveSample> {
        self.samples.iter().filter(move |s| s.phase == phase)
    }

    pub fn tip_trace(&self, phase: Phase) -> Vec<Point> {
        self.phase(phase).map(|s| [s.tip[0], s.tip[1]]).collect()
    }

    /// Trapezoidal ∫ force d(control) over one phase.
    pub fn work(&self, phase: Phase) -> f64 {
        let s: Vec<&CurveSample> = self.phase(phase).collect();
        s.windows(2)
            .map(|w| 0.5 * (w[0].force + w[1].force) * (w[1].control - w[0].control))
            .sum()
    }

    pub fn released(&self, phase: Phase) -> f64 {
        self.jumps
            .iter()
            .filter(|j| j.phase == phase)
            .fold(0.0, |a, j| a + j.released_energy)
    }

    pub fn peak_force(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, s| m.max(s.force.abs()))
    }

    /// Whether the force drops below zero by more than round-off
    /// (1e-6 of the peak force) during `phase`.
    pub fn has_negative_force(&self, phase: Phase) -> bool {
        let tol = 1e-6 * self.peak_force();
        self.phase(phase).any(|s| s.force < -tol)
    }
}

/// Path reduced to the emulation plane.
struct Plane {
    /// Prescribed coordinate.
    u: Vec<f64>,
    /// Response coordinate.
    w: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
    stable: Vec<bool>,
    tip: Vec<[f64; 3]>,
    /// Polyline integral of y dx from the first point.
    area: Vec<f64>,
}

impl Plane {
    fn new(path: &EquilibriumPath, mode: ControlMode) -> Self {
        let pts = &path.points;
        let (x, y): (Vec<f64>, Vec<f64>) = match mode {
            ControlMode::Displacement => pts.iter().map(|p| (p.control, p.reaction)).unzip(),
            ControlMode::Load => pts.iter().map(|p| (-p.reaction, p.control)).unzip(),
        };
        let (u, w) = match mode {
            ControlMode::Displacement => (x.clone(), y.clone()),
            ControlMode::Load => (y.clone(), x.clone()),
        };
        let mut area = vec![0.0; pts.len()];
        for k in 1..pts.len() {
            area[k] = area[k - 1] + 0.5 * (y[k - 1] + y[k]) * (x[k] - x[k - 1]);
        }
        Self {
            u,
            w,
            x,
            y,
            stable: pts.iter().map(|p| p.is_stable()).collect(),
            tip: pts.iter().map(|p| p.tip).collect(),
            area,
        }
    }

    fn len(&self) -> usize {
        self.u.len()
    }

    fn lerp(v: &[f64], s: f64) -> f64 {
        let a = (s.floor() as usize).min(v.len() - 1);
        let t = s - a as f64;
        if t == 0.0 {
            v[a]
        } else {
            v[a] + t * (v[a + 1] - v[a])
        }
    }

    /// Integral at fractional index `s`: exact for the piecewise-linear curve.
    fn area_at(&self, s: f64) -> f64 {
        let a = (s.floor() as usize).min(self.len() - 1);
        let t = s - a as f64;
        if t == 0.0 {
            return self.area[a];
        }
        let (x1, y1) = (Self::lerp(&self.x, s), Self::lerp(&self.y, s));
        self.area[a] + 0.5 * (self.y[a] + y1) * (x1 - self.x[a])
    }

    fn sample(&self, s: f64, phase: Phase) -> CurveSample {
        let t = |k: usize| Self::lerp(&self.tip.iter().map(|p| p[k]).collect::<Vec<_>>(), s);
        CurveSample {
            control: Self::lerp(&self.x, s),
            force: Self::lerp(&self.y, s),
            phase,
            tip: [t(0), t(1), t(2)],
        }
    }

    fn segment_stable(&self, a: usize) -> bool {
        self.stable[a] && self.stable[a + 1]
    }

    /// Energy released by a jump from `from` to `to` at equal `u`: the area
    /// enclosed by the path between them and the jump segment.
    fn released(&self, from: f64, to: f64) -> f64 {
        let (x0, y0) = (Self::lerp(&self.x, from), Self::lerp(&self.y, from));
        let (x1, y1) = (Self::lerp(&self.x, to), Self::lerp(&self.y, to));
        self.area_at(from) - self.area_at(to) + 0.5 * (y0 + y1) * (x1 - x0)
    }
}

/// Smallest control change treated as motion along a segment.
const SAME_CONTROL: f64 = 1e-12;

struct Walker<'a> {
    plane: &'a Plane,
    s: f64,
    dir: isize,
}

impl Walker<'_> {
    fn next_node(&self) -> Option<usize> {
        let n = self.plane.len() as isize;
        let j = if self.dir > 0 {
            self.s.floor() as isize + 1
        } else {
            self.s.ceil() as isize - 1
        };
        (0..n).contains(&j).then_some(j as usize)
    }
}

/// Runs one phase from fractional index `start` until the prescribed
/// coordinate reaches `target`. Returns the end index.
fn run_phase(
    plane: &Plane,
    start: f64,
    target: f64,
    phase: Phase,
    samples: &mut Vec<CurveSample>,
    jumps: &mut Vec<Jump>,
) -> std::result::Result<f64, f64> {
    let sdir = if target >= Plane::lerp(&plane.u, start) { 1.0 } else { -1.0 };
    let u_at = |s: f64| Plane::lerp(&plane.u, s);
    let orient = |a: usize| if (plane.u[a + 1] - plane.u[a]) * sdir > 0.0 { 1 } else { -1 };
    let advances = |a: usize, to: usize| (plane.u[to] - plane.u[a]) * sdir > 0.0;
    let dir = if start.fract() != 0.0 {
        orient(start.floor() as usize)
    } else {
        let i = start as usize;
        let fwd = i + 1 < plane.len() && advances(i, i + 1) && plane.segment_stable(i);
        let back = i > 0 && advances(i, i - 1) && plane.segment_stable(i - 1);
        if fwd || !back {
            1
        } else {
            -1
        }
    };
    let mut walker = Walker { plane, s: start, dir };
    samples.push(plane.sample(start, phase));
    let budget = 4 * plane.len() + 16;
    for _ in 0..budget {
        let s = walker.s;
        let u0 = u_at(s);
        if (target - u0) * sdir <= 0.0 {
            return Ok(s);
        }
        let Some(j) = walker.next_node() else {
            return Err(u0);
        };
        let seg = if walker.dir > 0 { j - 1 } else { j };
        let du = (plane.u[j] - u0) * sdir;
        if plane.segment_stable(seg) && du > -SAME_CONTROL {
            if (target - plane.u[j]) * sdir <= 0.0 && du > 0.0 {
                let t = (target - u0) / (plane.u[j] - u0);
                let end = s + t * (j as f64 - s);
                samples.push(plane.sample(end, phase));
                return Ok(end);
            }
            walker.s = j as f64;
            if du > SAME_CONTROL {
                samples.push(plane.sample(walker.s, phase));
            }
            continue;
        }
        // snap at constant prescribed coordinate
        let w0 = Plane::lerp(&plane.w, s);
        let mut best: Option<(f64, f64, f64)> = None; // (distance, s', released)
        for a in 0..plane.len() - 1 {
            let (ua, ub) = (plane.u[a], plane.u[a + 1]);
            if !plane.segment_stable(a) || (ub - ua).abs() <= SAME_CONTROL {
                continue;
            }
            if u0 < ua.min(ub) || u0 > ua.max(ub) {
                continue;
            }
            let cand = a as f64 + (u0 - ua) / (ub - ua);
            let released = plane.released(s, cand);
            let scale = plane.area.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
            if !(released > 1e-12 * scale) {
                continue;
            }
            // the landing segment must let the walk continue
            let ahead = if orient(a) > 0 { a + 1 } else { a };
            if (plane.u[ahead] - u0) * sdir <= 0.0 {
                continue;
            }
            let dist = (Plane::lerp(&plane.w, cand) - w0).abs();
            if best.map_or(true, |b| dist < b.0) {
                best = Some((dist, cand, released));
            }
        }
        let Some((_, cand, released)) = best else {
            return Err(u0);
        };
        let before = plane.sample(s, phase);
        let after = plane.sample(cand, phase);
        jumps.push(Jump {
            control: before.control,
            force_before: before.force,
            force_after: after.force,
            control_after: after.control,
            released_energy: released,
            phase,
        });
        samples.push(after);
        let a = (cand.floor() as usize).min(plane.len() - 2);
        walker.s = cand;
        walker.dir = orient(a);
    }
    Err(u_at(walker.s))
}

fn emulate(path: &EquilibriumPath, stroke: f64, mode: ControlMode) -> Result<EmulatedCurve> {
    if path.points.len() < 2 {
        return Err(Error::Specification("path needs at least two points".into()));
    }
    if !(stroke > 0.0) {
        return Err(Error::Domain(format!("stroke must be positive, got {stroke}")));
    }
    let plane = Plane::new(path, mode);
    let u_start = plane.u[0];
    let mut curve = EmulatedCurve {
        mode,
        stroke,
        samples: Vec::new(),
        jumps: Vec::new(),
        closed: false,
    };
    let end = match run_phase(&plane, 0.0, u_start + stroke, Phase::Loading, &mut curve.samples, &mut curve.jumps) {
        Ok(e) => e,
        Err(u) => return Err(Error::EmulationIncomplete { control: u, partial: Box::new(curve) }),
    };
    let fin = match run_phase(&plane, end, u_start, Phase::Unloading, &mut curve.samples, &mut curve.jumps) {
        Ok(e) => e,
        Err(u) => return Err(Error::EmulationIncomplete { control: u, partial: Box::new(curve) }),
    };
    let scale = plane.area.iter().fold(1e-12f64, |m, v| m.max(v.abs()));
    curve.closed = (plane.area_at(fin) - plane.area[0]).abs() <= 1e-9 * scale
        && (Plane::lerp(&plane.w, fin) - plane.w[0]).abs() <= 1e-6 * (1.0 + plane.w[0].abs());
    Ok(curve)
}

/// Loading from the path start to `stroke` and back under a prescribed
/// displacement, snapping at constant displacement wherever the followed
/// branch ends or loses stability.
pub fn emulate_displacement_control(path: &EquilibriumPath, stroke: f64) -> Result<EmulatedCurve> {
    emulate(path, stroke, ControlMode::Displacement)
}

/// Dual of [`emulate_displacement_control`] for a load-controlled path:
/// the load rises to `max_load` and back, snapping at constant load. The
/// curve is reported in the (displacement, force) plane.
pub fn emulate_load_control(path: &EquilibriumPath, max_load: f64) -> Result<EmulatedCurve> {
    emulate(path, max_load, ControlMode::Load)
}

/// First local force maximum over the loading phase, or the largest force
/// when there is none.
pub fn critical_force(curve: &EmulatedCurve) -> Result<f64> {
    let f: Vec<f64> = curve.phase(Phase::Loading).map(|s| s.force).collect();
    if f.is_empty() {
        return Err(Error::Specification("curve has no loading samples".into()));
    }
    for i in 1..f.len().saturating_sub(1) {
        if f[i] >= f[i - 1] && f[i] > f[i + 1] {
            return Ok(f[i]);
        }
    }
    Ok(f.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StabilityClass {
    Monostable,
    Bistable,
    Multistable,
}

pub fn classify_stability(free: &[FreeEquilibrium]) -> Result<StabilityClass> {
    if free.is_empty() {
        return Err(Error::Specification("no free equilibria; the rest state is missing".into()));
    }
    match free.iter().filter(|f| f.stable).count() {
        0 => Err(Error::Specification("no stable free equilibrium; the rest state must be stable".into())),
        1 => Ok(StabilityClass::Monostable),
        2 => Ok(StabilityClass::Bistable),
        _ => Ok(StabilityClass::Multistable),
    }
}

pub const MODEL_NOTE: &str = "elastic model: dissipation_ratio counts only energy released by snaps; \
material hysteresis is not modelled";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub work_in: f64,
    pub work_returned: f64,
    pub released_during_loading: f64,
    pub released_during_unloading: f64,
    pub trapped_at_second_state: f64,
    pub dissipation_ratio: f64,
    pub loading_release_fraction: f64,
    /// Work the structure does on the machine while the force is negative
    /// during loading, and while it is positive during unloading.
    pub returned_to_machine_during_loading: f64,
    pub returned_to_machine_during_unloading: f64,
    /// Share of the machine-side release that happens during loading.
    pub machine_release_loading_fraction: f64,
    pub model_note: String,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        0.0
    } else {
        (a / b).clamp(0.0, 1.0)
    }
}

pub fn energy_report(curve: &EmulatedCurve, free: &[FreeEquilibrium]) -> Result<EnergyReport> {
    if !curve.closed || curve.phase(Phase::Unloading).next().is_none() {
        return Err(Error::Specification("energy report needs a closed loading-unloading cycle".into()));
    }
    let work_in = curve.work(Phase::Loading);
    let work_returned = -curve.work(Phase::Unloading);
    let rl = curve.released(Phase::Loading);
    let ru = curve.released(Phase::Unloading);
    let trapped = free
        .iter()
        .skip(1)
        .find(|f| f.stable)
        .map_or(0.0, |f| f.strain_energy);
    // machine-side release: negative power segments of each phase
    let neg_work = |phase: Phase| -> f64 {
        let s: Vec<&CurveSample> = curve.phase(phase).collect();
        s.windows(2)
            .map(|w| {
                let p = 0.5 * (w[0].force + w[1].force) * (w[1].control - w[0].control);
                (-p).max(0.0)
            })
            .sum()
    };
    let ml = neg_work(Phase::Loading);
    let mu = neg_work(Phase::Unloading);
    Ok(EnergyReport {
        work_in,
        work_returned,
        released_during_loading: rl,
        released_during_unloading: ru,
        trapped_at_second_state: trapped,
        dissipation_ratio: if work_in > 0.0 { ((work_in - work_returned) / work_in).clamp(0.0, 1.0) } else { 0.0 },
        loading_release_fraction: ratio(rl, rl + ru),
        returned_to_machine_during_loading: ml,
        returned_to_machine_during_unloading: mu,
        machine_release_loading_fraction: ratio(ml, ml + mu),
        model_note: MODEL_NOTE.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reciprocity {
    Reciprocating,
    NonReciprocating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPair {
    pub loading_path: Vec<Point>,
    pub unloading_path: Vec<Point>,
    pub enclosed_area: f64,
    pub threshold: f64,
    pub reciprocity_class: Reciprocity,
}

/// Points per phase after arc-length resampling.
pub const TRAJECTORY_SAMPLES: usize = 256;

/// Default area threshold as a fraction of stroke².
pub const RECIPROCITY_FRACTION: f64 = 0.01;

/// Absolute shoelace area of a polygon (closed implicitly).
pub fn polygon_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for k in 0..n {
        let (a, b) = (pts[k], pts[(k + 1) % n]);
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s.abs()
}

fn dedup(pts: &[Point]) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(pts.len());
    for &p in pts {
        if out.last().map_or(true, |q| (q[0] - p[0]).hypot(q[1] - p[1]) > 0.0) {
            out.push(p);
        }
    }
    out
}

fn resample_trace(pts: &[Point]) -> Vec<Point> {
    let d = dedup(pts);
    if d.len() < 2 {
        return vec![pts[0]; TRAJECTORY_SAMPLES];
    }
    resample_uniform(&d, TRAJECTORY_SAMPLES - 1)
}

/// Compares the loading and unloading tip traces; the unloading trace runs
/// from the end of loading back to the start.
pub fn trajectory_pair(loading: &[Point], unloading: &[Point], threshold: f64) -> Result<TrajectoryPair> {
    if loading.len() < 2 || unloading.len() < 2 {
        return Err(Error::Specification("trajectory traces need at least two points".into()));
    }
    if !(threshold >= 0.0) {
        return Err(Error::Domain(format!("area threshold must be non-negative, got {threshold}")));
    }
    let l = resample_trace(loading);
    let u = resample_trace(unloading);
    let mut poly = l.clone();
    poly.extend_from_slice(&u);
    let area = polygon_area(&poly);
    Ok(TrajectoryPair {
        loading_path: l,
        unloading_path: u,
        enclosed_area: area,
        threshold,
        reciprocity_class: if area > threshold { Reciprocity::NonReciprocating } else { Reciprocity::Reciprocating },
    })
}

/// [`trajectory_pair`] on the tip traces of an emulated cycle with the
/// default threshold of 1% of stroke².
pub fn curve_trajectory(curve: &EmulatedCurve) -> Result<TrajectoryPair> {
    trajectory_pair(
        &curve.tip_trace(Phase::Loading),
        &curve.tip_trace(Phase::Unloading),
        RECIPROCITY_FRACTION * curve.stroke * curve.stroke,
    )
}

/// Largest distance from a point of either trace to the other trace.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    let d = |p: Point, set: &[Point]| {
        set.windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    };
    let ab = a.iter().map(|&p| d(p, b)).fold(0.0, f64::max);
    let ba = b.iter().map(|&p| d(p, a)).fold(0.0, f64::max);
    ab.max(ba)
}

fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuation::PathPoint;

    fn path(pts: &[(f64, f64, bool)]) -> EquilibriumPath {
        let mut e = 0.0;
        let mut points: Vec<PathPoint> = Vec::new();
        for (k, &(c, f, st)) in pts.iter().enumerate() {
            if k > 0 {
                let (c0, f0, _) = pts[k - 1];
                e += 0.5 * (f0 + f) * (c - c0);
            }
            points.push(PathPoint {
                arc_coordinate: k as f64,
                control: c,
                reaction: f,
                negative_eigs: usize::from(!st),
                free_negative_eigs: usize::from(!st),
                strain_energy: e,
                tip: [c, 0.1 * f, 0.0],
                q: Vec::new(),
            });
        }
        EquilibriumPath {
            points,
            folds: Vec::new(),
            bifurcations: Vec::new(),
            tracked_node: 0,
            target: pts.last().unwrap().0,
            complete: true,
            truncated: false,
        }
    }

    #[test]
    fn monotone_path_is_retraced() {
        let p = path(&[(0.0, 0.0, true), (1.0, 1.0, true), (2.0, 1.5, true), (3.0, 1.7, true)]);
        let c = emulate_displacement_control(&p, 3.0).unwrap();
        assert!(c.jumps.is_empty());
        let load: Vec<(f64, f64)> = c.phase(Phase::Loading).map(|s| (s.control, s.force)).collect();
        let unload: Vec<(f64, f64)> = c.phase(Phase::Unloading).map(|s| (s.control, s.force)).collect();
        let expect: Vec<(f64, f64)> = p.points.iter().map(|q| (q.control, q.reaction)).collect();
        assert_eq!(load, expect);
        let mut rev = expect.clone();
        rev.reverse();
        assert_eq!(unload, rev);
        let r = energy_report(&c, &[]).unwrap();
        assert!(r.dissipation_ratio < 1e-12);
        assert_eq!(critical_force(&c).unwrap(), 1.7);
    }

    #[test]
    fn snap_back_jumps_in_both_phases() {
        // stable up to c = 3, unstable back to c = 1, stable again onwards
        let p = path(&[
            (0.0, 0.0, true),
            (1.5, 2.0, true),
            (3.0, 3.0, true),
            (2.0, 1.0, false),
            (1.0, -1.0, true),
            (2.0, 0.2, true),
            (4.0, 1.0, true),
        ]);
        let c = emulate_displacement_control(&p, 4.0).unwrap();
        assert_eq!(c.jumps.len(), 2);
        let (jl, ju) = (c.jumps[0], c.jumps[1]);
        assert_eq!(jl.phase, Phase::Loading);
        assert_eq!(jl.control, 3.0);
        assert_eq!(ju.phase, Phase::Unloading);
        assert_eq!(ju.control, 1.0);
        assert!(jl.released_energy > 0.0 && ju.released_energy > 0.0);
        let r = energy_report(&c, &[]).unwrap();
        let hyst = r.work_in - r.work_returned;
        assert!((hyst - (jl.released_energy + ju.released_energy)).abs() < 1e-12 * r.work_in);
        assert!(r.loading_release_fraction > 0.0 && r.loading_release_fraction < 1.0);
        // the loading curve never decreases in control
        let l: Vec<f64> = c.phase(Phase::Loading).map(|s| s.control).collect();
        assert!(l.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn missing_landing_is_reported() {
        let p = path(&[(0.0, 0.0, true), (2.0, 2.0, true), (1.0, 0.0, false)]);
        match emulate_displacement_control(&p, 2.5) {
            Err(Error::EmulationIncomplete { control, partial }) => {
                assert_eq!(control, 2.0);
                assert!(!partial.samples.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unit_square_area() {
        let sq = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!((polygon_area(&sq) - 1.0).abs() < 1e-15);
        let t = trajectory_pair(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0]], &[[1.0, 1.0], [0.0, 1.0], [0.0, 0.0]], 0.5).unwrap();
        // resampling cuts the corners by less than one spacing
        assert!((t.enclosed_area - 1.0).abs() < 1e-2);
        assert_eq!(t.reciprocity_class, Reciprocity::NonReciprocating);
    }

    #[test]
    fn identical_traces_are_reciprocating() {
        let a = [[0.0, 0.0], [1.0, 2.0], [3.0, 2.5]];
        let b = [[3.0, 2.5], [1.0, 2.0], [0.0, 0.0]];
        let t = trajectory_pair(&a, &b, 1e-9).unwrap();
        assert!(t.enclosed_area < 1e-12);
        assert_eq!(t.reciprocity_class, Reciprocity::Reciprocating);
        assert!(trajectory_pair(&a[..1], &b, 1.0).is_err());
    }

    #[test]
    fn stability_classes() {
        let fe = |stable| FreeEquilibrium {
            control: 0.0,
            reaction: 0.0,
            strain_energy: 0.0,
            arc_coordinate: 0.0,
            stable,
            free_negative_eigs: usize::from(!stable),
            tip: [0.0; 3],
            q: Vec::new(),
        };
        assert!(classify_stability(&[]).is_err());
        assert_eq!(classify_stability(&[fe(true)]).unwrap(), StabilityClass::Monostable);
        assert_eq!(classify_stability(&[fe(true), fe(false), fe(true)]).unwrap(), StabilityClass::Bistable);
        assert_eq!(classify_stability(&[fe(true), fe(true), fe(true)]).unwrap(), StabilityClass::Multistable);
    }

    #[test]
    fn critical_force_takes_first_peak() {
        let p = path(&[(0.0, 0.0, true), (1.0, 2.0, true), (2.0, 1.0, true), (3.0, 5.0, true)]);
        let c = emulate_displacement_control(&p, 3.0).unwrap();
        assert_eq!(critical_force(&c).unwrap(), 2.0);
    }
}
