//! Equilibrium path tracing through limit points.
//!
//! Paths are followed with a cylindrical arc-length constraint on the
//! translational DOFs (RMS-normalised) plus the control parameter. Each
//! accepted point records the inertia of the reduced tangent with the control
//! held fixed, and the inertia with the control released, so both
//! displacement-controlled and force-free stability can be read off.

use serde::{Deserialize, Serialize};

use crate::beam::Model;
use crate::error::{Error, Result};
use crate::linalg::Ldl;

mod persist;

pub use persist::{path_csv, read_path_csv, PathArtifact};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub residual_tol: f64,
    pub max_newton_iters: usize,
    pub initial_arc_radius: f64,
    pub radius_bounds: [f64; 2],
    pub target_iters: usize,
    pub max_steps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            max_newton_iters: 25,
            initial_arc_radius: 0.25,
            radius_bounds: [1e-4, 2.0],
            target_iters: 5,
            max_steps: 20_000,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.radius_bounds;
        let ok = self.residual_tol > 0.0
            && self.max_newton_iters > 0
            && self.initial_arc_radius > 0.0
            && lo > 0.0
            && lo <= hi
            && self.target_iters > 0
            && self.max_steps > 0;
        if !ok {
            return Err(Error::Specification(format!("invalid solver settings {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldKind {
    ForceLimit,
    DisplacementLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub kind: FoldKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub arc_coordinate: f64,
    pub control: f64,
    pub reaction: f64,
    /// Negative eigenvalues of the reduced tangent with the control fixed.
    pub negative_eigs: usize,
    /// Same, with the control parameter released (force-free stability).
    pub free_negative_eigs: usize,
    pub strain_energy: f64,
    /// Pose (x, y, θ) of the tracked node.
    pub tip: [f64; 3],
    /// Reduced state; see [`Model::full_state`].
    #[serde(skip)]
    pub q: Vec<f64>,
}

impl PathPoint {
    pub fn is_stable(&self) -> bool {
        self.negative_eigs == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumPath {
    pub points: Vec<PathPoint>,
    pub folds: Vec<Fold>,
    /// Points where the inertia changes with no fold between neighbours.
    pub bifurcations: Vec<usize>,
    pub tracked_node: usize,
    pub target: f64,
    /// Reached the target on a stable branch.
    pub complete: bool,
    /// Stopped on the step budget.
    pub truncated: bool,
}

impl EquilibriumPath {
    pub fn folds_of(&self, kind: FoldKind) -> usize {
        self.folds.iter().filter(|f| f.kind == kind).count()
    }

    /// Joins a path traced in the negative control direction with one traced
    /// in the positive direction from the same start point.
    pub fn stitch(backward: EquilibriumPath, forward: EquilibriumPath) -> EquilibriumPath {
        let nb = backward.points.len();
        let mut points: Vec<PathPoint> = backward
            .points
            .into_iter()
            .rev()
            .map(|mut p| {
                p.arc_coordinate = -p.arc_coordinate;
                p
            })
            .collect();
        points.extend(forward.points.into_iter().skip(1));
        let remap_b = |i: usize| nb - 1 - i;
        let mut folds: Vec<Fold> = backward
            .folds
            .iter()
            .map(|f| Fold { index: remap_b(f.index), kind: f.kind })
            .collect();
        folds.reverse();
        folds.extend(forward.folds.iter().map(|f| Fold { index: f.index + nb - 1, kind: f.kind }));
        let mut bifurcations: Vec<usize> = backward.bifurcations.iter().map(|&i| remap_b(i) + 1).collect();
        bifurcations.reverse();
        bifurcations.extend(forward.bifurcations.iter().map(|&i| i + nb - 1));
        EquilibriumPath {
            points,
            folds,
            bifurcations,
            tracked_node: forward.tracked_node,
            target: forward.target,
            complete: backward.complete && forward.complete,
            truncated: backward.truncated || forward.truncated,
        }
    }
}

/// Zero-reaction state found on a path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeEquilibrium {
    pub control: f64,
    pub reaction: f64,
    pub strain_energy: f64,
    pub arc_coordinate: f64,
    pub stable: bool,
    pub free_negative_eigs: usize,
    pub tip: [f64; 3],
    #[serde(skip)]
    pub q: Vec<f64>,
}

/// Smallest radius used to resolve inertia changes between neighbours.
const BEND_RADIUS: f64 = 1e-3;

/// Smallest accepted cosine between consecutive unit tangents.
const MIN_TURN_COS: f64 = 0.8;

fn converged(model: &Model, asm: &crate::beam::Assembly, tol: f64) -> bool {
    asm.residual_norm() <= tol * model.tolerance_scale(asm)
}

/// Newton iteration at fixed control.
pub fn newton_correct(model: &Model, q: &[f64], control: f64, settings: &SolverSettings) -> Result<(Vec<f64>, usize)> {
    let mut q = q.to_vec();
    let mut last = f64::INFINITY;
    for it in 0..=settings.max_newton_iters {
        let asm = model.assemble(&q, control)?;
        last = asm.residual_norm();
        if converged(model, &asm, settings.residual_tol) {
            return Ok((q, it));
        }
        if it == settings.max_newton_iters {
            break;
        }
        let ldl = asm
            .tangent
            .factor()
            .map_err(|_| Error::FoldSingularity { control })?;
        let dq = ldl.solve_refined(&asm.tangent, &asm.residual);
        q.iter_mut().zip(&dq).for_each(|(a, d)| *a -= d);
    }
    Err(Error::Convergence { iterations: settings.max_newton_iters, residual: last })
}

/// Weighted inner products for the arc-length constraint.
struct Metric {
    mask: Vec<bool>,
    inv_n: f64,
}

impl Metric {
    fn new(model: &Model) -> Self {
        let nt = model.n_translational();
        let mask: Vec<bool> = if nt == 0 {
            vec![true; model.n_free()]
        } else {
            (0..model.n_free()).map(|k| model.is_translational(k)).collect()
        };
        let n = mask.iter().filter(|&&m| m).count().max(1);
        Self { mask, inv_n: 1.0 / n as f64 }
    }

    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..a.len() {
            if self.mask[k] {
                s += a[k] * b[k];
            }
        }
        s * self.inv_n
    }
}

/// Tangent data at a converged point.
struct PointInfo {
    reaction: f64,
    energy: f64,
    neg: usize,
    free_neg: usize,
    /// Unit path tangent (q part, λ part), sign not yet fixed.
    t_q: Vec<f64>,
    t_l: f64,
    /// dF/ds along +t.
    df: f64,
}

fn point_info(model: &Model, metric: &Metric, q: &[f64], lambda: f64) -> Result<PointInfo> {
    let asm = model.assemble(q, lambda)?;
    let ldl: Ldl = asm.tangent.factor()?;
    let neg = ldl.negative_pivots();
    let rhs: Vec<f64> = asm.k_lambda.iter().map(|v| -v).collect();
    let tq = ldl.solve_refined(&asm.tangent, &rhs);
    let kt: f64 = asm.k_lambda.iter().zip(&tq).map(|(a, b)| a * b).sum();
    let schur = asm.k_lambda_lambda + kt;
    let norm = (metric.dot(&tq, &tq) + 1.0).sqrt();
    let t_q: Vec<f64> = tq.iter().map(|v| v / norm).collect();
    let t_l = 1.0 / norm;
    Ok(PointInfo {
        reaction: asm.reaction,
        energy: asm.strain_energy,
        neg,
        free_neg: neg + usize::from(schur < 0.0),
        df: (kt + asm.k_lambda_lambda) / norm,
        t_q,
        t_l,
    })
}

impl PointInfo {
    /// Orients the tangent along `(dq, dl)`.
    fn orient(&mut self, metric: &Metric, dq: &[f64], dl: f64) {
        if metric.dot(&self.t_q, dq) + self.t_l * dl < 0.0 {
            self.t_q.iter_mut().for_each(|v| *v = -*v);
            self.t_l = -self.t_l;
            self.df = -self.df;
        }
    }
}

struct Node {
    q: Vec<f64>,
    lambda: f64,
    arc: f64,
    info: PointInfo,
}

/// One arc-length step of radius `r` from `(q0, l0)` along the unit tangent.
fn arc_step(
    model: &Model,
    metric: &Metric,
    settings: &SolverSettings,
    q0: &[f64],
    l0: f64,
    t_q: &[f64],
    t_l: f64,
    r: f64,
) -> Result<(Vec<f64>, f64, usize)> {
    let n = q0.len();
    let mut dq: Vec<f64> = t_q.iter().map(|v| r * v).collect();
    let mut dl = r * t_l;
    let mut q = vec![0.0; n];
    let mut last = f64::INFINITY;
    for it in 0..=settings.max_newton_iters {
        for k in 0..n {
            q[k] = q0[k] + dq[k];
        }
        let lambda = l0 + dl;
        let asm = model.assemble(&q, lambda)?;
        last = asm.residual_norm();
        if !last.is_finite() {
            break;
        }
        if converged(model, &asm, settings.residual_tol) {
            return Ok((q, lambda, it));
        }
        if it == settings.max_newton_iters {
            break;
        }
        let ldl = asm.tangent.factor()?;
        let neg_r: Vec<f64> = asm.residual.iter().map(|v| -v).collect();
        let neg_k: Vec<f64> = asm.k_lambda.iter().map(|v| -v).collect();
        let da = ldl.solve_refined(&asm.tangent, &neg_r);
        let db = ldl.solve_refined(&asm.tangent, &neg_k);
        let u: Vec<f64> = dq.iter().zip(&da).map(|(a, b)| a + b).collect();
        let a1 = metric.dot(&db, &db) + 1.0;
        let a2 = 2.0 * (metric.dot(&u, &db) + dl);
        let a3 = metric.dot(&u, &u) + dl * dl - r * r;
        let disc = a2 * a2 - 4.0 * a1 * a3;
        if disc < 0.0 {
            return Err(Error::Convergence { iterations: it, residual: last });
        }
        let sq = disc.sqrt();
        // numerically stable pair of roots
        let qq = -0.5 * (a2 + a2.signum() * sq);
        let roots = if qq != 0.0 { [qq / a1, a3 / qq] } else { [0.0, 0.0] };
        let mut best = None;
        let mut best_cos = f64::NEG_INFINITY;
        for &s in &roots {
            let cand: Vec<f64> = u.iter().zip(&db).map(|(a, b)| a + s * b).collect();
            let cl = dl + s;
            let cos = metric.dot(&cand, &dq) + cl * dl;
            if cos > best_cos {
                best_cos = cos;
                best = Some((cand, cl));
            }
        }
        let (cand, cl) = best.expect("two roots");
        dq = cand;
        dl = cl;
    }
    Err(Error::Convergence { iterations: settings.max_newton_iters, residual: last })
}

fn make_point(model: &Model, node: &Node, tracked: usize) -> PathPoint {
    PathPoint {
        arc_coordinate: node.arc,
        control: node.lambda,
        reaction: node.info.reaction,
        negative_eigs: node.info.neg,
        free_negative_eigs: node.info.free_neg,
        strain_energy: node.info.energy,
        tip: model.node_pose(tracked, &node.q, node.lambda),
        q: node.q.clone(),
    }
}

fn sgn(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn changes(a: f64, b: f64) -> bool {
    sgn(a) * sgn(b) < 0 || (sgn(a) != 0 && sgn(b) == 0)
}

/// Traces from the rest state towards `target` (either sign).
pub fn arc_length_trace(model: &Model, settings: &SolverSettings, target: f64, tracked: usize) -> Result<EquilibriumPath> {
    let q0 = vec![0.0; model.n_free()];
    trace_from(model, settings, &q0, 0.0, target, tracked)
}

/// Traces from a converged equilibrium `(q0, control0)` until the control
/// reaches `target` on a displacement-stable branch.
pub fn trace_from(
    model: &Model,
    settings: &SolverSettings,
    q0: &[f64],
    control0: f64,
    target: f64,
    tracked: usize,
) -> Result<EquilibriumPath> {
    settings.validate()?;
    if target == control0 {
        return Err(Error::Specification("target equals the start control".into()));
    }
    if tracked >= model.n_nodes() {
        return Err(Error::Specification(format!("tracked node {tracked} does not exist")));
    }
    let metric = Metric::new(model);
    let dir = (target - control0).signum();
    let (q0, _) = newton_correct(model, q0, control0, settings)?;
    let mut info = point_info(model, &metric, &q0, control0)?;
    if info.t_l * dir < 0.0 {
        info.t_q.iter_mut().for_each(|v| *v = -*v);
        info.t_l = -info.t_l;
        info.df = -info.df;
    }
    let mut cur = Node { q: q0, lambda: control0, arc: 0.0, info };
    let mut path = EquilibriumPath {
        points: vec![make_point(model, &cur, tracked)],
        folds: Vec::new(),
        bifurcations: Vec::new(),
        tracked_node: tracked,
        target,
        complete: false,
        truncated: false,
    };
    let [rmin, rmax] = settings.radius_bounds;
    let mut r = settings.initial_arc_radius.clamp(rmin, rmax);

    for _ in 0..settings.max_steps {
        // attempt a step, halving on failure
        let (q, lambda, iters) = loop {
            match arc_step(model, &metric, settings, &cur.q, cur.lambda, &cur.info.t_q, cur.info.t_l, r) {
                Ok(v) => break v,
                Err(Error::SingularElement { .. })
                | Err(Error::SingularMatrix { .. })
                | Err(Error::Convergence { .. }) => {
                    r *= 0.5;
                    if r < rmin {
                        return Err(Error::TraceStalled {
                            control: cur.lambda,
                            points: path.points.len(),
                            partial: Box::new(path),
                        });
                    }
                }
                Err(e) => return Err(e),
            }
        };
        let dq: Vec<f64> = q.iter().zip(&cur.q).map(|(a, b)| a - b).collect();
        let dl = lambda - cur.lambda;
        let mut info = match point_info(model, &metric, &q, lambda) {
            Ok(i) => i,
            Err(Error::SingularMatrix { .. }) => {
                // landed on a singular point; step again with a smaller radius
                r *= 0.5;
                if r < rmin {
                    return Err(Error::TraceStalled {
                        control: cur.lambda,
                        points: path.points.len(),
                        partial: Box::new(path),
                    });
                }
                continue;
            }
            Err(e) => return Err(e),
        };
        info.orient(&metric, &dq, dl);
        // a sharp turn between neighbours means the corrector may have
        // jumped to another part of the path
        let turn = metric.dot(&cur.info.t_q, &info.t_q) + cur.info.t_l * info.t_l;
        if turn < MIN_TURN_COS && r > rmin {
            r = (0.25 * r).max(rmin);
            continue;
        }
        let next = Node { q, lambda, arc: cur.arc + r, info };

        let disp_fold = changes(cur.info.t_l, next.info.t_l);
        let force_fold = changes(cur.info.df, next.info.df);
        // an inertia change with no fold is either a bifurcation or a tight
        // bend of an imperfect path; resolve it with shorter steps first
        if !disp_fold && !force_fold && cur.info.neg != next.info.neg && r > BEND_RADIUS {
            r = (0.25 * r).max(BEND_RADIUS);
            continue;
        }
        let mut inserted: Vec<(Node, FoldKind)> = Vec::new();
        for (flag, kind) in [(disp_fold, FoldKind::DisplacementLimit), (force_fold, FoldKind::ForceLimit)] {
            if flag {
                if let Some(node) = refine_fold(model, &metric, settings, &cur, r, kind)? {
                    inserted.push((node, kind));
                }
            }
        }
        inserted.sort_by(|a, b| a.0.arc.total_cmp(&b.0.arc));
        let mut prev_neg = cur.info.neg;
        let had_fold = !inserted.is_empty();
        for (node, kind) in inserted {
            path.folds.push(Fold { index: path.points.len(), kind: physical_kind(model, kind) });
            path.points.push(make_point(model, &node, tracked));
            prev_neg = node.info.neg;
        }
        if !had_fold && prev_neg != next.info.neg {
            path.bifurcations.push(path.points.len());
        }

        // landing on the target
        let crossed = (next.lambda - target) * dir >= 0.0;
        if crossed && next.info.neg == 0 && !had_fold {
            let w = (target - cur.lambda) / (next.lambda - cur.lambda);
            let guess: Vec<f64> = cur.q.iter().zip(&next.q).map(|(a, b)| a + w * (b - a)).collect();
            if let Ok((ql, _)) = newton_correct(model, &guess, target, settings) {
                let dq: Vec<f64> = ql.iter().zip(&cur.q).map(|(a, b)| a - b).collect();
                let dl = target - cur.lambda;
                let dist = (metric.dot(&dq, &dq) + dl * dl).sqrt().clamp(1e-12, r);
                let mut linfo = point_info(model, &metric, &ql, target)?;
                linfo.orient(&metric, &dq, dl);
                let land = Node { q: ql, lambda: target, arc: cur.arc + dist, info: linfo };
                path.points.push(make_point(model, &land, tracked));
                path.complete = true;
                return Ok(path);
            }
        }
        path.points.push(make_point(model, &next, tracked));
        cur = next;
        let factor = (settings.target_iters as f64 / iters.max(1) as f64).sqrt();
        r = (r * factor).clamp(rmin, rmax);
    }
    path.truncated = true;
    Ok(path)
}

/// Folds are detected on the control (t_λ) and the conjugate (dF/ds); under
/// load control the control is the force, so the names swap.
fn physical_kind(model: &Model, kind: FoldKind) -> FoldKind {
    match (model.constraints.control.is_displacement(), kind) {
        (true, k) => k,
        (false, FoldKind::DisplacementLimit) => FoldKind::ForceLimit,
        (false, FoldKind::ForceLimit) => FoldKind::DisplacementLimit,
    }
}

fn indicator(info: &PointInfo, kind: FoldKind) -> f64 {
    match kind {
        FoldKind::DisplacementLimit => info.t_l,
        FoldKind::ForceLimit => info.df,
    }
}

/// Bisects the arc radius from `from` until the sign change of the fold
/// indicator is bracketed within 1e-3 mm.
fn refine_fold(
    model: &Model,
    metric: &Metric,
    settings: &SolverSettings,
    from: &Node,
    r: f64,
    kind: FoldKind,
) -> Result<Option<Node>> {
    let s0 = indicator(&from.info, kind);
    let (mut lo, mut hi) = (0.0, r);
    let mut best: Option<Node> = None;
    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        let Ok((q, lambda, _)) = arc_step(model, metric, settings, &from.q, from.lambda, &from.info.t_q, from.info.t_l, mid) else {
            break;
        };
        let Ok(mut info) = point_info(model, metric, &q, lambda) else {
            break;
        };
        let dq: Vec<f64> = q.iter().zip(&from.q).map(|(a, b)| a - b).collect();
        info.orient(metric, &dq, lambda - from.lambda);
        if changes(s0, indicator(&info, kind)) {
            hi = mid;
        } else {
            lo = mid;
        }
        best = Some(Node { q, lambda, arc: from.arc + mid, info });
    }
    Ok(best.filter(|n| n.arc > from.arc && n.arc < from.arc + r))
}

/// Zero-reaction states along `path`, the start point included.
pub fn find_free_equilibria(model: &Model, path: &EquilibriumPath, settings: &SolverSettings) -> Result<Vec<FreeEquilibrium>> {
    let metric = Metric::new(model);
    let mut out = Vec::new();
    let Some(first) = path.points.first() else {
        return Ok(out);
    };
    let from_point = |p: &PathPoint| FreeEquilibrium {
        control: p.control,
        reaction: p.reaction,
        strain_energy: p.strain_energy,
        arc_coordinate: p.arc_coordinate,
        stable: p.free_negative_eigs == 0,
        free_negative_eigs: p.free_negative_eigs,
        tip: p.tip,
        q: p.q.clone(),
    };
    out.push(from_point(first));
    for w in path.points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        if !(a.reaction * b.reaction < 0.0) {
            if b.reaction == 0.0 && b.arc_coordinate != first.arc_coordinate {
                out.push(from_point(b));
            }
            continue;
        }
        let mut info = point_info(model, &metric, &a.q, a.control)?;
        let dq: Vec<f64> = b.q.iter().zip(&a.q).map(|(x, y)| x - y).collect();
        info.orient(&metric, &dq, b.control - a.control);
        let (mut lo, mut hi) = (0.0, b.arc_coordinate - a.arc_coordinate);
        let mut found: Option<FreeEquilibrium> = None;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let Ok((q, lambda, _)) = arc_step(model, &metric, settings, &a.q, a.control, &info.t_q, info.t_l, mid) else {
                break;
            };
            let pi = point_info(model, &metric, &q, lambda)?;
            let f = pi.reaction;
            found = Some(FreeEquilibrium {
                control: lambda,
                reaction: f,
                strain_energy: pi.energy,
                arc_coordinate: a.arc_coordinate + mid,
                stable: pi.free_neg == 0,
                free_negative_eigs: pi.free_neg,
                tip: model.node_pose(path.tracked_node, &q, lambda),
                q,
            });
            if f * a.reaction > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-9 {
                break;
            }
        }
        let fe = found.unwrap_or_else(|| from_point(if a.reaction.abs() < b.reaction.abs() { a } else { b }));
        // a start point sitting at round-off reaction brackets itself
        let dup = out.last().is_some_and(|l: &FreeEquilibrium| {
            (l.control - fe.control).abs() < 1e-6 && (l.strain_energy - fe.strain_energy).abs() < 1e-9
        });
        if !dup {
            out.push(fe);
        }
    }
    Ok(out)
}
