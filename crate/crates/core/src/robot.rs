//! Quasi-steady swimmer: two mirrored snapping structures on a rigid body,
//! each carrying a rigid fin at its tip, driven by a periodic tendon pull.
//!
//! Structure frame: x along the body axis, y pointing away from the body;
//! the tendon pulls the tip towards the body. Robot frame: X = heading · x
//! is the swim axis.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::analysis::{emulate_displacement_control, EmulatedCurve, Phase};
use crate::continuation::arc_length_trace;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::io::{fmt_f64, Csv};
use crate::scenario::{resolve_builtin, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RobotMode {
    /// Tendon through the hole on the fixed side.
    Fix,
    /// Tendon through the hole on the pinned side.
    Pin,
}

impl RobotMode {
    pub fn scenario_label(self) -> &'static str {
        match self {
            RobotMode::Fix => "fixed-pinned(fix)",
            RobotMode::Pin => "fixed-pinned(pin)",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RobotMode::Fix => "fix",
            RobotMode::Pin => "pin",
        }
    }
}

impl std::str::FromStr for RobotMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fix" => Ok(RobotMode::Fix),
            "pin" => Ok(RobotMode::Pin),
            _ => Err(Error::Specification(format!("mode must be fix or pin, got '{s}'"))),
        }
    }
}

/// Units: mm, s, N, tonne.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobotSpec {
    pub body_length: f64,
    pub body_drag_coeff: f64,
    pub body_frontal_area: f64,
    pub body_mass: f64,
    pub fin_depth: f64,
    /// Carried for completeness; the fin is rigid.
    pub fin_thickness: f64,
    /// Radial fin length from the tip; `None` uses the apex height.
    pub fin_length: Option<f64>,
    pub fin_segments: usize,
    pub fluid_density: f64,
    pub normal_drag_coeff: f64,
    pub cycle_time: f64,
    pub pull_displacement: f64,
    pub pull_fraction: f64,
    /// Time over which a snap is completed, s.
    pub snap_duration: f64,
    pub steps_per_cycle: usize,
    pub mode: RobotMode,
    pub cycles: usize,
    /// Start against a wall that blocks backward motion during cycle 1.
    pub wall: bool,
    /// +1 when the robot swims towards +x of the structure frame.
    pub heading: f64,
}

impl Default for RobotSpec {
    fn default() -> Self {
        Self {
            body_length: 200.0,
            body_drag_coeff: 0.8,
            body_frontal_area: PI * 15.0 * 15.0,
            body_mass: 1.4e-4,
            fin_depth: 10.0,
            fin_thickness: 0.8,
            fin_length: None,
            fin_segments: 20,
            fluid_density: 1e-9,
            normal_drag_coeff: 1.1,
            cycle_time: 0.4,
            pull_displacement: 46.0,
            pull_fraction: 0.5,
            snap_duration: 0.01,
            steps_per_cycle: 2000,
            mode: RobotMode::Fix,
            cycles: 5,
            wall: true,
            heading: 1.0,
        }
    }
}

impl RobotSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("body_length", self.body_length),
            ("body_drag_coeff", self.body_drag_coeff),
            ("body_frontal_area", self.body_frontal_area),
            ("body_mass", self.body_mass),
            ("fin_depth", self.fin_depth),
            ("fin_thickness", self.fin_thickness),
            ("fluid_density", self.fluid_density),
            ("normal_drag_coeff", self.normal_drag_coeff),
            ("cycle_time", self.cycle_time),
            ("pull_displacement", self.pull_displacement),
            ("snap_duration", self.snap_duration),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(l) = self.fin_length {
            if !(l > 0.0) {
                return Err(Error::Domain(format!("fin_length must be positive, got {l}")));
            }
        }
        if !(self.pull_fraction > 0.0 && self.pull_fraction < 1.0) {
            return Err(Error::Domain(format!("pull_fraction must lie in (0, 1), got {}", self.pull_fraction)));
        }
        if self.steps_per_cycle < 2000 {
            return Err(Error::Domain(format!("steps_per_cycle must be at least 2000, got {}", self.steps_per_cycle)));
        }
        if self.fin_segments == 0 || self.cycles == 0 {
            return Err(Error::Domain("fin_segments and cycles must be positive".into()));
        }
        if self.heading.abs() != 1.0 {
            return Err(Error::Domain(format!("heading must be +1 or -1, got {}", self.heading)));
        }
        let dt = self.cycle_time / self.steps_per_cycle as f64;
        let t_pull = self.pull_fraction * self.cycle_time;
        if self.snap_duration < dt || self.snap_duration > t_pull.min(self.cycle_time - t_pull) {
            return Err(Error::Domain(format!(
                "snap_duration {} s must lie between one step ({dt} s) and the shorter phase",
                self.snap_duration
            )));
        }
        Ok(())
    }
}

/// Tip pose (x, y, θ) through one cycle, piecewise linear in time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinKinematics {
    pub cycle_time: f64,
    pub fin_length: f64,
    pub keyframes: Vec<(f64, [f64; 3])>,
}

/// Fin centerline at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinShape {
    pub time: f64,
    pub tip: [f64; 3],
    pub centerline: Vec<Point>,
}

impl FinKinematics {
    /// Maps the pull program through an emulated displacement-controlled
    /// curve whose stroke is the pull displacement.
    pub fn from_curve(curve: &EmulatedCurve, spec: &RobotSpec, fin_length: f64) -> Result<Self> {
        spec.validate()?;
        let c_max = spec.pull_displacement;
        if (curve.stroke - c_max).abs() > 1e-9 * c_max {
            return Err(Error::Specification(format!(
                "curve stroke {} mm differs from the pull displacement {c_max} mm",
                curve.stroke
            )));
        }
        if !curve.closed {
            return Err(Error::Specification("fin cycle needs a closed loading curve".into()));
        }
        let t_pull = spec.pull_fraction * spec.cycle_time;
        let t_end = spec.cycle_time;
        let c0 = curve.samples.first().map(|s| s.control).unwrap_or(0.0);
        let load: Vec<(f64, [f64; 3])> = curve
            .phase(Phase::Loading)
            .map(|s| (t_pull * ((s.control - c0) / c_max).clamp(0.0, 1.0), s.tip))
            .collect();
        let unload: Vec<(f64, [f64; 3])> = curve
            .phase(Phase::Unloading)
            .map(|s| (t_pull + (t_end - t_pull) * (1.0 - (s.control - c0) / c_max).clamp(0.0, 1.0), s.tip))
            .collect();
        if load.len() < 2 || unload.len() < 2 {
            return Err(Error::Specification("emulated curve lacks a loading or unloading phase".into()));
        }
        let mut keyframes = spread_snaps(&load, spec.snap_duration, t_pull);
        let tail = spread_snaps(&unload, spec.snap_duration, t_end);
        let skip = match (keyframes.last(), tail.first()) {
            (Some(a), Some(b)) if (a.0 - b.0).abs() <= 1e-12 && pose_gap(&a.1, &b.1) <= 1e-9 => 1,
            _ => 0,
        };
        keyframes.extend(tail.into_iter().skip(skip));
        Ok(Self { cycle_time: t_end, fin_length, keyframes })
    }

    /// Rigid flap hinged at the origin, θ = amplitude · sin(2πt / T): a
    /// reciprocating stroke with time-symmetric timing.
    pub fn symmetric_flap(cycle_time: f64, fin_length: f64, amplitude: f64) -> Self {
        let n = 400;
        let keyframes = (0..=n)
            .map(|k| {
                let s = k as f64 / n as f64;
                (cycle_time * s, [0.0, 0.0, amplitude * (2.0 * PI * s).sin()])
            })
            .collect();
        Self { cycle_time, fin_length, keyframes }
    }

    /// Fin held at `pose` for the whole cycle.
    pub fn still(cycle_time: f64, fin_length: f64, pose: [f64; 3]) -> Self {
        Self { cycle_time, fin_length, keyframes: vec![(0.0, pose), (cycle_time, pose)] }
    }

    /// Tip pose at time `t` (wrapped into the cycle).
    pub fn pose(&self, t: f64) -> [f64; 3] {
        let t = t.rem_euclid(self.cycle_time);
        let k = self.keyframes.partition_point(|f| f.0 <= t);
        if k == 0 {
            return self.keyframes[0].1;
        }
        if k == self.keyframes.len() {
            return self.keyframes[k - 1].1;
        }
        let (t0, a) = self.keyframes[k - 1];
        let (t1, b) = self.keyframes[k];
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 1.0 };
        [0, 1, 2].map(|i| a[i] + w * (b[i] - a[i]))
    }

    /// Segment midpoints and the fin normal for a pose.
    fn segments(&self, pose: [f64; 3], n: usize) -> (Vec<Point>, Point) {
        let (s, c) = pose[2].sin_cos();
        let dir = [-s, c];
        let mids = (0..n)
            .map(|j| {
                let r = self.fin_length * (j as f64 + 0.5) / n as f64;
                [pose[0] + r * dir[0], pose[1] + r * dir[1]]
            })
            .collect();
        (mids, [c, s])
    }

    pub fn shape(&self, t: f64, points: usize) -> FinShape {
        let tip = self.pose(t);
        let (s, c) = tip[2].sin_cos();
        let centerline = (0..points.max(2))
            .map(|j| {
                let r = self.fin_length * j as f64 / (points.max(2) - 1) as f64;
                [tip[0] - r * s, tip[1] + r * c]
            })
            .collect();
        FinShape { time: t, tip, centerline }
    }

    /// Enclosed area of the fin-end trajectory over one cycle, mm².
    pub fn swept_loop_area(&self, samples: usize) -> f64 {
        let pts: Vec<Point> = (0..samples)
            .map(|k| {
                let s = self.shape(self.cycle_time * k as f64 / samples as f64, 2);
                s.centerline[1]
            })
            .collect();
        crate::analysis::polygon_area(&pts)
    }
}

fn pose_gap(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    (0..3).map(|i| (a[i] - b[i]).abs()).fold(0.0, f64::max)
}

/// Replaces each zero-duration jump (two frames at one time) by a linear
/// blend lasting `tau`, ending on the landing branch.
fn spread_snaps(raw: &[(f64, [f64; 3])], tau: f64, t_end: f64) -> Vec<(f64, [f64; 3])> {
    let is_jump = |k: usize| k + 1 < raw.len() && raw[k + 1].0 - raw[k].0 <= 1e-12;
    let mut out: Vec<(f64, [f64; 3])> = Vec::with_capacity(raw.len());
    let mut i = 0;
    while i < raw.len() {
        if !is_jump(i) {
            if out.last().map_or(true, |l| raw[i].0 > l.0 + 1e-12) {
                out.push(raw[i]);
            }
            i += 1;
            continue;
        }
        if pose_gap(&raw[i].1, &raw[i + 1].1) <= 1e-9 {
            i += 1;
            continue;
        }
        out.push(raw[i]);
        let te = (raw[i].0 + tau).min(t_end);
        let mut k = i + 1;
        while k + 1 < raw.len() && raw[k + 1].0 < te && !is_jump(k + 1) {
            k += 1;
        }
        let pose = if k + 1 < raw.len() && raw[k + 1].0 > raw[k].0 {
            let w = ((te - raw[k].0) / (raw[k + 1].0 - raw[k].0)).clamp(0.0, 1.0);
            [0, 1, 2].map(|m| raw[k].1[m] + w * (raw[k + 1].1[m] - raw[k].1[m]))
        } else {
            raw[k].1
        };
        let te = te.max(raw[k].0);
        out.push((te, pose));
        i = k + 1;
        while i < raw.len() && raw[i].0 <= te + 1e-12 && !is_jump(i) {
            i += 1;
        }
    }
    out
}

/// Traces the mode's scenario and emulates the pull to `pull_displacement`.
pub fn mode_curve(spec: &RobotSpec) -> Result<(Scenario, EmulatedCurve)> {
    spec.validate()?;
    let mut scenario = resolve_builtin(spec.mode.scenario_label())?;
    scenario.loading.stroke = scenario.loading.stroke.max(spec.pull_displacement);
    let sm = scenario.build()?;
    let path = arc_length_trace(&sm.model, &scenario.solver, scenario.loading.stroke, sm.mesh.tip)?;
    let reach = path.points.iter().map(|p| p.control).fold(f64::NEG_INFINITY, f64::max);
    if reach < spec.pull_displacement {
        return Err(Error::Specification(format!(
            "path reaches {reach} mm, short of the pull displacement {} mm",
            spec.pull_displacement
        )));
    }
    let curve = emulate_displacement_control(&path, spec.pull_displacement)?;
    Ok((scenario, curve))
}

/// Fin kinematics for `spec.mode`.
pub fn mode_kinematics(spec: &RobotSpec) -> Result<FinKinematics> {
    let (scenario, curve) = mode_curve(spec)?;
    let fin_length = spec.fin_length.unwrap_or_else(|| scenario.layout.apex_block.height());
    FinKinematics::from_curve(&curve, spec, fin_length)
}

/// Fin shapes at every integration step of one cycle.
pub fn fin_shape_sequence(spec: &RobotSpec) -> Result<Vec<FinShape>> {
    let kin = mode_kinematics(spec)?;
    let dt = spec.cycle_time / spec.steps_per_cycle as f64;
    Ok((0..=spec.steps_per_cycle)
        .map(|k| kin.shape(k as f64 * dt, spec.fin_segments + 1))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSample {
    pub t: f64,
    pub position: f64,
    pub velocity: f64,
    pub thrust: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleResult {
    pub mode: RobotMode,
    pub time_series: Vec<TimeSample>,
    pub per_cycle_displacement: Vec<f64>,
    pub mean_cycle_displacement: f64,
    /// Largest drop below the running maximum within each cycle, mm.
    pub per_cycle_backward_slip: Vec<f64>,
    pub backward_segment_present: Vec<bool>,
    /// Largest |net lateral force| over the run, N.
    pub max_lateral_force: f64,
}

/// A cycle has a backward segment when its slip exceeds this fraction of
/// its net travel and [`BACKWARD_MIN_SLIP`].
pub const BACKWARD_FRACTION: f64 = 0.01;
pub const BACKWARD_MIN_SLIP: f64 = 1e-3;

const MAX_SPEED: f64 = 1e6;

/// Thrust and lateral force from both fins for a step from `p0` to `p1`.
fn fin_forces(spec: &RobotSpec, kin: &FinKinematics, p0: [f64; 3], p1: [f64; 3], dt: f64, u: f64) -> (f64, f64) {
    let n = spec.fin_segments;
    let (a, _) = kin.segments(p0, n);
    let (b, _) = kin.segments(p1, n);
    let (_, normal) = kin.segments([0.0, 0.0, 0.5 * (p0[2] + p1[2])], 1);
    let area = kin.fin_length / n as f64 * spec.fin_depth;
    let k = 0.5 * spec.fluid_density * spec.normal_drag_coeff * area;
    let h = spec.heading;
    // The left fin mirrors y, so its terms negate the right fin's exactly.
    let side = |sign: f64| {
        let nrm = [h * normal[0], sign * normal[1]];
        (0..n).fold((0.0, 0.0), |(fx, fy), j| {
            let v = [h * (b[j][0] - a[j][0]) / dt + u, sign * (b[j][1] - a[j][1]) / dt];
            let vn = v[0] * nrm[0] + v[1] * nrm[1];
            let f = -k * vn.abs() * vn;
            (fx + f * nrm[0], fy + f * nrm[1])
        })
    };
    let (rx, ry) = side(1.0);
    let (lx, ly) = side(-1.0);
    (rx + lx, ry + ly)
}

/// Integrates the body with Heun's method. Set `body_drag` to false to
/// drop the body drag term.
pub fn simulate_with(spec: &RobotSpec, kin: &FinKinematics, body_drag: bool) -> Result<CycleResult> {
    spec.validate()?;
    let steps = spec.steps_per_cycle;
    let dt = spec.cycle_time / steps as f64;
    let cd = if body_drag {
        0.5 * spec.fluid_density * spec.body_drag_coeff * spec.body_frontal_area
    } else {
        0.0
    };
    let m = spec.body_mass;
    let (mut x, mut u) = (0.0f64, 0.0f64);
    let mut series = Vec::with_capacity(steps * spec.cycles + 1);
    series.push(TimeSample { t: 0.0, position: 0.0, velocity: 0.0, thrust: 0.0 });
    let mut per_cycle = Vec::with_capacity(spec.cycles);
    let mut slip = Vec::with_capacity(spec.cycles);
    let mut max_lateral = 0.0f64;
    for cycle in 0..spec.cycles {
        let x_start = x;
        let mut peak = x;
        let mut drop = 0.0f64;
        for k in 0..steps {
            let t0 = k as f64 * dt;
            let p0 = kin.pose(t0);
            let p1 = if k + 1 == steps { kin.pose(0.0) } else { kin.pose(t0 + dt) };
            let accel = |u: f64| {
                let (fx, fy) = fin_forces(spec, kin, p0, p1, dt, u);
                ((fx - cd * u.abs() * u) / m, fx, fy)
            };
            let (a0, thrust, lateral) = accel(u);
            let (a1, _, _) = accel(u + dt * a0);
            let mut u_new = u + 0.5 * dt * (a0 + a1);
            let mut x_new = x + 0.5 * dt * (u + u_new);
            if spec.wall && cycle == 0 && x_new < 0.0 {
                x_new = 0.0;
                u_new = u_new.max(0.0);
            }
            let time = (cycle * steps + k + 1) as f64 * dt;
            if !u_new.is_finite() || u_new.abs() > MAX_SPEED {
                return Err(Error::Integration { time });
            }
            max_lateral = max_lateral.max(lateral.abs());
            x = x_new;
            u = u_new;
            peak = peak.max(x);
            drop = drop.max(peak - x);
            series.push(TimeSample { t: time, position: x, velocity: u, thrust });
        }
        per_cycle.push(x - x_start);
        slip.push(drop);
    }
    let mean = per_cycle.iter().sum::<f64>() / per_cycle.len() as f64;
    let backward = per_cycle
        .iter()
        .zip(&slip)
        .map(|(d, s)| *s > (BACKWARD_FRACTION * d.abs()).max(BACKWARD_MIN_SLIP))
        .collect();
    Ok(CycleResult {
        mode: spec.mode,
        time_series: series,
        per_cycle_displacement: per_cycle,
        mean_cycle_displacement: mean,
        per_cycle_backward_slip: slip,
        backward_segment_present: backward,
        max_lateral_force: max_lateral,
    })
}

/// Net fin impulse over one cycle on a body held still, N·s.
pub fn cycle_impulse(spec: &RobotSpec, kin: &FinKinematics) -> f64 {
    let steps = spec.steps_per_cycle;
    let dt = spec.cycle_time / steps as f64;
    (0..steps)
        .map(|k| {
            let t = k as f64 * dt;
            let p1 = if k + 1 == steps { kin.pose(0.0) } else { kin.pose(t + dt) };
            fin_forces(spec, kin, kin.pose(t), p1, dt, 0.0).0 * dt
        })
        .sum()
}

/// Traces the mode's structure and swims `spec.cycles` cycles.
pub fn simulate_swim(spec: &RobotSpec) -> Result<CycleResult> {
    let kin = mode_kinematics(spec)?;
    simulate_with(spec, &kin, true)
}

pub fn cycle_csv(result: &CycleResult) -> Vec<u8> {
    let mut csv = Csv::new(&["t_s", "position_mm", "velocity_mm_s", "thrust_N"]);
    for s in &result.time_series {
        csv.row(&[fmt_f64(s.t), fmt_f64(s.position), fmt_f64(s.velocity), fmt_f64(s.thrust)]);
    }
    csv.into_bytes()
}
