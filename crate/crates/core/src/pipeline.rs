//! Trace, analyze and robot runs with their on-disk artifacts. File names
//! derive from the scenario slug: `<slug>.path.csv`, `<slug>.path.json`,
//! `<slug>.curve.csv`, `<slug>.analysis.json`, `<slug>.trajectory.csv`
//! and two SVG plots.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify_stability, critical_force, curve_trajectory, emulate_displacement_control, energy_report, EmulatedCurve,
    EnergyReport, Jump, Phase, Reciprocity, StabilityClass, TrajectoryPair,
};
use crate::continuation::{
    arc_length_trace, find_free_equilibria, path_csv, read_path_csv, EquilibriumPath, FoldKind, FreeEquilibrium,
    PathArtifact, SolverSettings,
};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, read_json, write_atomic, write_json, Csv};
use crate::plot::{line_plot, Series};
use crate::robot::{cycle_csv, CycleResult, FinKinematics, RobotSpec};
use crate::scenario::{canonical_label, resolve_builtin, Scenario};
use crate::verify::Truss;

pub const TRUSS_LABEL: &str = "vonmises-truss";

/// File-name form of a label: `fixed-pinned(fix)` → `fixed-pinned-fix`,
/// `fixed-fixed(-4)` → `fixed-fixed-m4`.
pub fn slug(label: &str) -> String {
    label
        .to_ascii_lowercase()
        .replace("(+", "-p")
        .replace("(-", "-m")
        .replace('(', "-")
        .replace(')', "")
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Outcome of a trace; `path.complete` is false for a partial trace.
#[derive(Debug, Clone)]
pub struct TraceRun {
    pub label: String,
    pub path: EquilibriumPath,
    pub free: Vec<FreeEquilibrium>,
    pub imperfection: f64,
    pub config: serde_json::Value,
    /// Why the trace stopped early, if it did.
    pub stop_reason: Option<String>,
}

impl TraceRun {
    pub fn is_complete(&self) -> bool {
        self.path.complete && self.stop_reason.is_none()
    }
}

pub fn trace_scenario(sc: &Scenario) -> Result<TraceRun> {
    let sm = sc.build()?;
    let (path, stop_reason) = match arc_length_trace(&sm.model, &sc.solver, sc.loading.stroke, sm.mesh.tip) {
        Ok(p) => {
            let why = (!p.complete).then(|| format!("step budget exhausted at {} points", p.points.len()));
            (p, why)
        }
        Err(Error::TraceStalled { control, points, partial }) => {
            (*partial, Some(format!("stalled at control {control} mm after {points} points")))
        }
        Err(e) => return Err(e),
    };
    let free = find_free_equilibria(&sm.model, &path, &sc.solver)?;
    Ok(TraceRun {
        label: sc.label.clone(),
        path,
        free,
        imperfection: sc.applied_imperfection(),
        config: serde_json::to_value(sc.resolved_config())?,
        stop_reason,
    })
}

/// Load-controlled truss benchmark to 1.5× its limit load.
pub fn trace_truss(settings: &SolverSettings) -> Result<TraceRun> {
    let truss = Truss::default();
    let model = truss.model()?;
    let target = 1.5 * truss.limit().1;
    let path = arc_length_trace(&model, settings, target, Truss::APEX)?;
    let stop_reason = (!path.complete).then(|| "step budget exhausted".to_string());
    Ok(TraceRun {
        label: TRUSS_LABEL.into(),
        path,
        free: Vec::new(),
        imperfection: 0.0,
        config: serde_json::json!({ "truss": truss, "solver": settings, "target_load": target }),
        stop_reason,
    })
}

/// Resolves a builtin label or the truss benchmark and traces it.
pub fn trace_label(label: &str, tweak: impl Fn(&mut Scenario)) -> Result<TraceRun> {
    if slug(label) == TRUSS_LABEL {
        return trace_truss(&SolverSettings::default());
    }
    let mut sc = resolve_builtin(label)?;
    tweak(&mut sc);
    sc.validate()?;
    trace_scenario(&sc)
}

pub fn trace_files(dir: &Path, label: &str) -> (PathBuf, PathBuf) {
    let s = slug(label);
    (dir.join(format!("{s}.path.csv")), dir.join(format!("{s}.path.json")))
}

pub fn write_trace(dir: &Path, run: &TraceRun) -> Result<(PathBuf, PathBuf)> {
    let (csv, json) = trace_files(dir, &run.label);
    write_atomic(&csv, &path_csv(&run.path))?;
    let mut art = PathArtifact::new(&run.label, &run.path, run.free.clone(), run.imperfection, run.config.clone());
    art.truncated |= run.stop_reason.is_some();
    write_json(&json, &art)?;
    Ok((csv, json))
}

pub fn read_trace(dir: &Path, label: &str) -> Result<(PathArtifact, EquilibriumPath)> {
    let (csv, json) = trace_files(dir, label);
    for f in [&csv, &json] {
        if !f.exists() {
            return Err(Error::Specification(format!("missing trace artifact {}", f.display())));
        }
    }
    let art: PathArtifact = read_json(&json)?;
    let points = read_path_csv(&csv)?;
    if points.len() < 2 {
        return Err(Error::Specification(format!("{} holds fewer than two points", csv.display())));
    }
    let path = art.restore(points);
    Ok((art, path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub version: String,
    pub label: String,
    pub stability: StabilityClass,
    pub critical_force: f64,
    pub reciprocity: Reciprocity,
    pub enclosed_area: f64,
    pub reciprocity_threshold: f64,
    pub displacement_limit_folds: usize,
    pub force_limit_folds: usize,
    pub negative_force_loading: bool,
    pub negative_force_unloading: bool,
    pub jumps: Vec<Jump>,
    pub energy: EnergyReport,
    pub config: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub summary: AnalysisSummary,
    pub curve: EmulatedCurve,
    pub trajectory: TrajectoryPair,
}

pub fn analyze(
    label: &str,
    path: &EquilibriumPath,
    free: &[FreeEquilibrium],
    stroke: f64,
    config: serde_json::Value,
) -> Result<Analysis> {
    let curve = emulate_displacement_control(path, stroke)?;
    let trajectory = curve_trajectory(&curve)?;
    let summary = AnalysisSummary {
        version: crate::VERSION.into(),
        label: label.into(),
        stability: classify_stability(free)?,
        critical_force: critical_force(&curve)?,
        reciprocity: trajectory.reciprocity_class,
        enclosed_area: trajectory.enclosed_area,
        reciprocity_threshold: trajectory.threshold,
        displacement_limit_folds: path.folds_of(FoldKind::DisplacementLimit),
        force_limit_folds: path.folds_of(FoldKind::ForceLimit),
        negative_force_loading: curve.has_negative_force(Phase::Loading),
        negative_force_unloading: curve.has_negative_force(Phase::Unloading),
        jumps: curve.jumps.clone(),
        energy: energy_report(&curve, free)?,
        config,
    };
    Ok(Analysis { summary, curve, trajectory })
}

/// Analysis of a trace read back from `dir`.
pub fn analyze_artifacts(dir: &Path, label: &str) -> Result<Analysis> {
    let (art, path) = read_trace(dir, label)?;
    if art.label == TRUSS_LABEL {
        return Err(Error::Specification("analyze covers the snapping-structure scenarios only".into()));
    }
    if !art.complete || art.truncated {
        return Err(Error::Specification(format!("trace of {label} is partial; rerun trace")));
    }
    let stroke = art
        .config
        .pointer("/loading/stroke")
        .and_then(|v| v.as_f64())
        .ok_or_else(|| Error::Specification(format!("{label}: path sidecar lacks loading.stroke")))?;
    analyze(&art.label, &path, &art.free_equilibria, stroke, art.config.clone())
}

pub fn summary_line(s: &AnalysisSummary) -> String {
    let stab = match s.stability {
        StabilityClass::Monostable => "monostable",
        StabilityClass::Bistable => "bistable",
        StabilityClass::Multistable => "multistable",
    };
    let rec = match s.reciprocity {
        Reciprocity::Reciprocating => "reciprocating",
        Reciprocity::NonReciprocating => "non_reciprocating",
    };
    format!(
        "{}: {stab}, {rec}, critical force {:.4} N, snap-back folds {}, jumps {}, dissipation ratio {:.4}, enclosed area {:.2} mm²",
        s.label,
        s.critical_force,
        s.displacement_limit_folds,
        s.jumps.len(),
        s.energy.dissipation_ratio,
        s.enclosed_area
    )
}

pub fn curve_csv(curve: &EmulatedCurve) -> Vec<u8> {
    let mut csv = Csv::new(&["phase", "control_mm", "force_N"]);
    for s in &curve.samples {
        csv.row(&[s.phase.name().to_string(), fmt_f64(s.control), fmt_f64(s.force)]);
    }
    csv.into_bytes()
}

pub fn trajectory_csv(t: &TrajectoryPair) -> Vec<u8> {
    let mut csv = Csv::new(&["phase", "x_mm", "y_mm"]);
    for (phase, pts) in [(Phase::Loading, &t.loading_path), (Phase::Unloading, &t.unloading_path)] {
        for p in pts.iter() {
            csv.row(&[phase.name().to_string(), fmt_f64(p[0]), fmt_f64(p[1])]);
        }
    }
    csv.into_bytes()
}

pub fn curve_svg(a: &Analysis) -> String {
    let pts = |ph: Phase| -> Vec<[f64; 2]> { a.curve.phase(ph).map(|s| [s.control, s.force]).collect() };
    let (l, u) = (pts(Phase::Loading), pts(Phase::Unloading));
    line_plot(
        &format!("{} force-displacement", a.summary.label),
        "displacement (mm)",
        "force (N)",
        &[Series { name: "loading", points: &l }, Series { name: "unloading", points: &u }],
        false,
    )
}

pub fn trajectory_svg(a: &Analysis) -> String {
    let t = &a.trajectory;
    line_plot(
        &format!("{} tip trajectory", a.summary.label),
        "x (mm)",
        "y (mm)",
        &[
            Series { name: "loading", points: &t.loading_path },
            Series { name: "unloading", points: &t.unloading_path },
        ],
        true,
    )
}

pub fn write_analysis(dir: &Path, a: &Analysis) -> Result<Vec<PathBuf>> {
    let s = slug(&a.summary.label);
    let files = [
        (format!("{s}.curve.csv"), curve_csv(&a.curve)),
        (format!("{s}.trajectory.csv"), trajectory_csv(&a.trajectory)),
        (format!("{s}.curve.svg"), curve_svg(a).into_bytes()),
        (format!("{s}.trajectory.svg"), trajectory_svg(a).into_bytes()),
    ];
    let mut out = Vec::new();
    for (name, bytes) in files {
        let p = dir.join(name);
        write_atomic(&p, &bytes)?;
        out.push(p);
    }
    let p = dir.join(format!("{s}.analysis.json"));
    write_json(&p, &a.summary)?;
    out.push(p);
    Ok(out)
}

/// Cycle summary written next to the time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotSummary {
    pub version: String,
    pub mode: String,
    pub per_cycle_displacement: Vec<f64>,
    pub mean_cycle_displacement: f64,
    pub per_cycle_backward_slip: Vec<f64>,
    pub backward_segment_present: Vec<bool>,
    pub max_lateral_force: f64,
    pub config: RobotSpec,
}

impl RobotSummary {
    pub fn new(spec: &RobotSpec, r: &CycleResult) -> Self {
        Self {
            version: crate::VERSION.into(),
            mode: r.mode.name().into(),
            per_cycle_displacement: r.per_cycle_displacement.clone(),
            mean_cycle_displacement: r.mean_cycle_displacement,
            per_cycle_backward_slip: r.per_cycle_backward_slip.clone(),
            backward_segment_present: r.backward_segment_present.clone(),
            max_lateral_force: r.max_lateral_force,
            config: spec.clone(),
        }
    }
}

/// Fin centerlines at twelve instants of a cycle.
pub fn fin_strip_svg(spec: &RobotSpec, kin: &FinKinematics) -> String {
    let frames: Vec<(String, Vec<[f64; 2]>)> = (0..12)
        .map(|k| {
            let t = spec.cycle_time * k as f64 / 12.0;
            let shape = kin.shape(t, spec.fin_segments + 1);
            (format!("t = {t:.3} s"), shape.centerline)
        })
        .collect();
    let series: Vec<Series> = frames.iter().map(|(n, p)| Series { name: n, points: p }).collect();
    line_plot(&format!("fin shapes, {} mode", spec.mode.name()), "x (mm)", "y (mm)", &series, true)
}

pub fn write_robot(dir: &Path, spec: &RobotSpec, kin: &FinKinematics, r: &CycleResult) -> Result<Vec<PathBuf>> {
    let m = r.mode.name();
    let csv = dir.join(format!("robot-{m}.csv"));
    write_atomic(&csv, &cycle_csv(r))?;
    let json = dir.join(format!("robot-{m}.json"));
    write_json(&json, &RobotSummary::new(spec, r))?;
    let svg = dir.join(format!("robot-{m}.fins.svg"));
    write_atomic(&svg, fin_strip_svg(spec, kin).as_bytes())?;
    Ok(vec![csv, json, svg])
}

/// Whether `label` names a builtin scenario or the truss benchmark.
pub fn known_label(label: &str) -> bool {
    slug(label) == TRUSS_LABEL || canonical_label(label).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slugs() {
        assert_eq!(slug("fixed-pinned(fix)"), "fixed-pinned-fix");
        assert_eq!(slug("fixed-fixed(+4)"), "fixed-fixed-p4");
        assert_eq!(slug("pinned-pinned(-4)"), "pinned-pinned-m4");
        assert!(known_label("vonmises-truss") && known_label("fixed-pinned-fix") && !known_label("nope"));
    }
}
