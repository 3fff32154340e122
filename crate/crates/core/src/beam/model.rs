//! Constraint reduction and assembly.
//!
//! Every nodal displacement is expressed through a reduced set of free
//! variables `q` and the scalar control parameter λ. Supports remove DOFs,
//! rigid links make slave nodes follow a master exactly (no penalty), and the
//! control either prescribes a nodal translation, drives a rigid two-pin bar,
//! or scales a load pattern. Assembly returns derivatives of the total
//! potential Π(q, λ) with respect to q and λ.

use serde::{Deserialize, Serialize};

use super::element::element_force_and_tangent;
use super::{BeamMesh, State};
use crate::error::{Error, Result};
use crate::linalg::SymBand;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dof {
    U = 0,
    V = 1,
    Theta = 2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodalLoad {
    pub node: usize,
    /// (F_x, F_y, M) in N and N·mm.
    pub force: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Control {
    /// Translation of `node` along `axis` equals `sign`·λ; the other
    /// translation stays free.
    Prescribed { node: usize, axis: Axis, sign: f64 },
    /// Two-pin rigid bar of `length` from `node` to a crosshead that moves by
    /// λ along `pull`. At rest the crosshead sits `offset` to the left of the
    /// pull axis through `node` (measured along `pull` rotated +90°) and
    /// `length` away from `node`.
    RigidBar {
        node: usize,
        length: f64,
        pull: [f64; 2],
        #[serde(default)]
        offset: f64,
    },
    /// λ multiplies the load pattern.
    Load { pattern: Vec<NodalLoad> },
}

impl Control {
    pub fn node(&self) -> Option<usize> {
        match self {
            Control::Prescribed { node, .. } | Control::RigidBar { node, .. } => Some(*node),
            Control::Load { .. } => None,
        }
    }

    pub fn is_displacement(&self) -> bool {
        !matches!(self, Control::Load { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub fixed: Vec<(usize, Dof)>,
    pub control: Control,
    /// Constant loads applied on top of the control.
    #[serde(default)]
    pub dead_loads: Vec<NodalLoad>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Var {
    Fixed,
    Free(usize),
    Control(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeKind {
    Independent([Var; 3]),
    BarHung {
        phi: usize,
        theta: Var,
        length: f64,
        pull: [f64; 2],
        /// Rest angle of the bar from the pull axis.
        tilt: f64,
    },
    Slave {
        master: usize,
        offset: [f64; 2],
    },
}

/// Displacement of one node with first and second derivatives with respect
/// to the (at most three) variables it depends on.
#[derive(Debug, Clone, Copy)]
struct NodeKin {
    n: usize,
    vars: [usize; 3],
    val: [f64; 3],
    jac: [[f64; 3]; 3],
    hess: [[[f64; 3]; 3]; 3],
}

impl NodeKin {
    fn new() -> Self {
        Self {
            n: 0,
            vars: [0; 3],
            val: [0.0; 3],
            jac: [[0.0; 3]; 3],
            hess: [[[0.0; 3]; 3]; 3],
        }
    }

    fn slot(&mut self, var: usize) -> usize {
        if let Some(k) = self.vars[..self.n].iter().position(|&v| v == var) {
            return k;
        }
        self.vars[self.n] = var;
        self.n += 1;
        self.n - 1
    }
}

/// Result of [`Model::assemble`].
#[derive(Debug, Clone)]
pub struct Assembly {
    /// ∂Π/∂q.
    pub residual: Vec<f64>,
    /// ∂²Π/∂q².
    pub tangent: SymBand,
    /// ∂²Π/∂q∂λ.
    pub k_lambda: Vec<f64>,
    /// ∂²Π/∂λ².
    pub k_lambda_lambda: f64,
    /// ∂Π/∂λ: the crosshead force for displacement control.
    pub reaction: f64,
    pub strain_energy: f64,
    pub potential: f64,
    /// Largest nodal internal force of any element.
    pub force_scale: f64,
}

impl Assembly {
    pub fn residual_norm(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// A mesh together with its constraints, reduced to free variables.
#[derive(Debug, Clone)]
pub struct Model {
    pub mesh: BeamMesh,
    pub constraints: Constraints,
    kinds: Vec<NodeKind>,
    n_free: usize,
    translational: Vec<bool>,
    bandwidth: usize,
    loads: Vec<NodalLoad>,
}

impl Model {
    pub fn new(mesh: BeamMesh, constraints: Constraints) -> Result<Self> {
        mesh.validate()?;
        let n = mesh.nodes.len();

        // resolve slave chains to their root master
        let mut link_of: Vec<Option<(usize, [f64; 2])>> = vec![None; n];
        for l in &mesh.rigid_links {
            if link_of[l.slave].is_some() {
                return Err(Error::Specification(format!(
                    "node {} is slaved twice",
                    l.slave
                )));
            }
            link_of[l.slave] = Some((l.master, l.offset));
        }
        let mut roots: Vec<Option<(usize, [f64; 2])>> = vec![None; n];
        for s in 0..n {
            let mut cur = s;
            let mut off = [0.0, 0.0];
            while let Some((m, o)) = link_of[cur] {
                off = [off[0] + o[0], off[1] + o[1]];
                cur = m;
            }
            if cur != s {
                roots[s] = Some((cur, off));
            }
        }

        let mut fixed = vec![[false; 3]; n];
        for &(node, dof) in &constraints.fixed {
            if node >= n {
                return Err(Error::Specification(format!("constraint on missing node {node}")));
            }
            if roots[node].is_some() {
                return Err(Error::Specification(format!(
                    "node {node} is rigidly linked and cannot carry a support"
                )));
            }
            fixed[node][dof as usize] = true;
        }

        let loads = match &constraints.control {
            Control::Load { pattern } => pattern.clone(),
            _ => Vec::new(),
        };
        for l in loads.iter().chain(&constraints.dead_loads) {
            if l.node >= n {
                return Err(Error::Specification(format!("load on missing node {}", l.node)));
            }
            if roots[l.node].is_some() {
                continue;
            }
            for c in 0..3 {
                if l.force[c] != 0.0 && fixed[l.node][c] {
                    return Err(Error::Specification(format!(
                        "load applied to constrained dof {c} of node {}",
                        l.node
                    )));
                }
            }
        }

        // node kinds with placeholder variables
        let mut kinds: Vec<NodeKind> = (0..n)
            .map(|k| match roots[k] {
                Some((master, offset)) => NodeKind::Slave { master, offset },
                None => NodeKind::Independent([
                    if fixed[k][0] { Var::Fixed } else { Var::Free(usize::MAX) },
                    if fixed[k][1] { Var::Fixed } else { Var::Free(usize::MAX) },
                    if fixed[k][2] { Var::Fixed } else { Var::Free(usize::MAX) },
                ]),
            })
            .collect();

        match &constraints.control {
            Control::Prescribed { node, axis, sign } => {
                let node = *node;
                if node >= n || roots[node].is_some() {
                    return Err(Error::Specification(format!(
                        "control node {node} must be an independent node"
                    )));
                }
                let c = *axis as usize;
                if fixed[node][c] {
                    return Err(Error::Specification(format!(
                        "control acts on constrained dof {c} of node {node}"
                    )));
                }
                if let NodeKind::Independent(v) = &mut kinds[node] {
                    v[c] = Var::Control(*sign);
                }
            }
            Control::RigidBar { node, length, pull, offset } => {
                let node = *node;
                if !(*length > 0.0) {
                    return Err(Error::Specification(format!(
                        "rigid bar length must be positive, got {length}"
                    )));
                }
                if node >= n || roots[node].is_some() {
                    return Err(Error::Specification(format!(
                        "control node {node} must be an independent node"
                    )));
                }
                if fixed[node][0] || fixed[node][1] {
                    return Err(Error::Specification(format!(
                        "rigid bar attached to a supported node {node}"
                    )));
                }
                let norm = pull[0].hypot(pull[1]);
                if !(norm > 0.0) {
                    return Err(Error::Specification("pull direction is zero".into()));
                }
                if !(offset.abs() < *length) {
                    return Err(Error::Specification(format!(
                        "crosshead offset {offset} must be smaller than the bar length"
                    )));
                }
                kinds[node] = NodeKind::BarHung {
                    phi: usize::MAX,
                    theta: if fixed[node][2] { Var::Fixed } else { Var::Free(usize::MAX) },
                    length: *length,
                    pull: [pull[0] / norm, pull[1] / norm],
                    tilt: (offset / length).asin(),
                };
            }
            Control::Load { .. } => {}
        }

        // number free variables in node order
        let mut translational: Vec<bool> = Vec::new();
        fn number(v: &mut Var, trans: bool, translational: &mut Vec<bool>) {
            if let Var::Free(_) = v {
                *v = Var::Free(translational.len());
                translational.push(trans);
            }
        }
        for kind in kinds.iter_mut() {
            match kind {
                NodeKind::Independent(v) => {
                    let [a, b, c] = v;
                    number(a, true, &mut translational);
                    number(b, true, &mut translational);
                    number(c, false, &mut translational);
                }
                NodeKind::BarHung { phi, theta, .. } => {
                    *phi = translational.len();
                    translational.push(false);
                    number(theta, false, &mut translational);
                }
                NodeKind::Slave { .. } => {}
            }
        }
        let next = translational.len();
        let n_free = next;

        let mut model = Self {
            mesh,
            constraints,
            kinds,
            n_free,
            translational,
            bandwidth: 0,
            loads,
        };
        let mut bw = 0;
        for e in &model.mesh.elements {
            let vars: Vec<usize> = e
                .nodes
                .iter()
                .flat_map(|&k| model.node_vars(k))
                .filter(|&v| v < n_free)
                .collect();
            if let (Some(lo), Some(hi)) = (vars.iter().min(), vars.iter().max()) {
                bw = bw.max(hi - lo);
            }
        }
        for l in model.loads.iter().chain(&model.constraints.dead_loads) {
            let vars: Vec<usize> = model.node_vars(l.node).into_iter().filter(|&v| v < n_free).collect();
            if let (Some(lo), Some(hi)) = (vars.iter().min(), vars.iter().max()) {
                bw = bw.max(hi - lo);
            }
        }
        model.bandwidth = bw;
        Ok(model)
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.nodes.len()
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    /// Whether free variable `k` is a translation (used by arc-length norms).
    pub fn is_translational(&self, k: usize) -> bool {
        self.translational[k]
    }

    pub fn n_translational(&self) -> usize {
        self.translational.iter().filter(|&&t| t).count()
    }

    /// Number of nodal DOFs removed by supports.
    pub fn constrained_dofs(&self) -> usize {
        self.kinds
            .iter()
            .map(|k| match k {
                NodeKind::Independent(v) => v.iter().filter(|x| **x == Var::Fixed).count(),
                NodeKind::BarHung { theta, .. } => usize::from(*theta == Var::Fixed),
                NodeKind::Slave { .. } => 0,
            })
            .sum()
    }

    /// Number of nodal DOFs expressed through a rigid link.
    pub fn condensed_dofs(&self) -> usize {
        3 * self
            .kinds
            .iter()
            .filter(|k| matches!(k, NodeKind::Slave { .. }))
            .count()
    }

    fn node_vars(&self, k: usize) -> Vec<usize> {
        let lambda = self.n_free;
        let from_var = |v: &Var| match v {
            Var::Free(i) => Some(*i),
            Var::Control(_) => Some(lambda),
            Var::Fixed => None,
        };
        match &self.kinds[k] {
            NodeKind::Independent(v) => v.iter().filter_map(from_var).collect(),
            NodeKind::BarHung { phi, theta, .. } => {
                let mut out = vec![*phi, lambda];
                out.extend(from_var(theta));
                out
            }
            NodeKind::Slave { master, .. } => self.node_vars(*master),
        }
    }

    fn kin(&self, k: usize, q: &[f64], lambda: f64) -> NodeKin {
        let lam = self.n_free;
        let mut out = NodeKin::new();
        let put_var = |out: &mut NodeKin, c: usize, v: &Var| match v {
            Var::Free(i) => {
                let s = out.slot(*i);
                out.val[c] = q[*i];
                out.jac[s][c] = 1.0;
            }
            Var::Control(coef) => {
                let s = out.slot(lam);
                out.val[c] = coef * lambda;
                out.jac[s][c] = *coef;
            }
            Var::Fixed => {}
        };
        match &self.kinds[k] {
            NodeKind::Independent(v) => {
                for c in 0..3 {
                    put_var(&mut out, c, &v[c]);
                }
            }
            NodeKind::BarHung {
                phi,
                theta,
                length,
                pull,
                tilt,
            } => {
                let p = *pull;
                let nrm = [-p[1], p[0]];
                let (s0, c0) = tilt.sin_cos();
                let (s, c) = (tilt + q[*phi]).sin_cos();
                let sp = out.slot(*phi);
                let sl = out.slot(lam);
                for comp in 0..2 {
                    out.val[comp] = lambda * p[comp] + length * ((c0 - c) * p[comp] + (s0 - s) * nrm[comp]);
                    out.jac[sp][comp] = length * s * p[comp] - length * c * nrm[comp];
                    out.jac[sl][comp] = p[comp];
                    out.hess[sp][sp][comp] = length * c * p[comp] + length * s * nrm[comp];
                }
                put_var(&mut out, 2, theta);
            }
            NodeKind::Slave { master, offset } => {
                let m = self.kin(*master, q, lambda);
                out = m;
                let th = m.val[2];
                let (s, c) = th.sin_cos();
                let [ox, oy] = *offset;
                let g = [(c - 1.0) * ox - s * oy, s * ox + (c - 1.0) * oy];
                let g1 = [-s * ox - c * oy, c * ox - s * oy];
                let g2 = [-c * ox + s * oy, -s * ox - c * oy];
                out.val[0] += g[0];
                out.val[1] += g[1];
                for a in 0..m.n {
                    let ja = m.jac[a][2];
                    for comp in 0..2 {
                        out.jac[a][comp] += g1[comp] * ja;
                    }
                    for b in 0..m.n {
                        let jb = m.jac[b][2];
                        for comp in 0..2 {
                            out.hess[a][b][comp] += g2[comp] * ja * jb + g1[comp] * m.hess[a][b][2];
                        }
                    }
                }
            }
        }
        out
    }

    /// Full nodal displacement state for reduced variables `q` at control λ.
    pub fn full_state(&self, q: &[f64], lambda: f64) -> State {
        let mut d = Vec::with_capacity(3 * self.n_nodes());
        for k in 0..self.n_nodes() {
            d.extend_from_slice(&self.kin(k, q, lambda).val);
        }
        State { displacements: d }
    }

    /// Reduced variables reproducing `state` (inverse of [`Model::full_state`]
    /// on the constraint manifold).
    pub fn reduce_state(&self, state: &State) -> Vec<f64> {
        let mut q = vec![0.0; self.n_free];
        for (k, kind) in self.kinds.iter().enumerate() {
            let d = state.node(k);
            match kind {
                NodeKind::Independent(v) => {
                    for c in 0..3 {
                        if let Var::Free(i) = v[c] {
                            q[i] = d[c];
                        }
                    }
                }
                NodeKind::BarHung {
                    phi, theta, pull, length, tilt,
                } => {
                    let nrm = [-pull[1], pull[0]];
                    let lateral = d[0] * nrm[0] + d[1] * nrm[1];
                    q[*phi] = (tilt.sin() - lateral / length).clamp(-1.0, 1.0).asin() - tilt;
                    if let Var::Free(i) = theta {
                        q[*i] = d[2];
                    }
                }
                NodeKind::Slave { .. } => {}
            }
        }
        q
    }

    /// Position and rotation (x, y, θ) of `node` in the deformed state.
    pub fn node_pose(&self, node: usize, q: &[f64], lambda: f64) -> [f64; 3] {
        let k = self.kin(node, q, lambda);
        let x = self.mesh.nodes[node];
        [x[0] + k.val[0], x[1] + k.val[1], k.val[2]]
    }

    fn force_reference(&self) -> f64 {
        self.mesh.max_axial_stiffness() * 1e-6
    }

    /// Scale against which residual norms are compared: the largest
    /// element force, floored at the force of a 1e-6 mm stretch of the
    /// stiffest element.
    pub fn tolerance_scale(&self, asm: &Assembly) -> f64 {
        asm.force_scale.max(self.force_reference())
    }

    pub fn assemble(&self, q: &[f64], lambda: f64) -> Result<Assembly> {
        let nq = self.n_free;
        let lam = nq;
        let kins: Vec<NodeKin> = (0..self.n_nodes()).map(|k| self.kin(k, q, lambda)).collect();
        let mut residual = vec![0.0; nq];
        let mut tangent = SymBand::zeros(nq, self.bandwidth);
        let mut k_lambda = vec![0.0; nq];
        let mut k_ll = 0.0;
        let mut reaction = 0.0;
        let mut energy = 0.0;
        let mut force_scale: f64 = 0.0;

        let mut vars = [0usize; 6];
        let mut jac = [[0.0f64; 6]; 6]; // jac[row][local var]
        for (id, e) in self.mesh.elements.iter().enumerate() {
            let [i, j] = e.nodes;
            let (ki, kj) = (&kins[i], &kins[j]);
            let d = [ki.val[0], ki.val[1], ki.val[2], kj.val[0], kj.val[1], kj.val[2]];
            let (ea, ei) = self.mesh.element_stiffness(e);
            let r = element_force_and_tangent(id, self.mesh.nodes[i], self.mesh.nodes[j], ea, ei, &d)?;
            energy += r.energy;
            force_scale = r.force.iter().fold(force_scale, |m, f| m.max(f.abs()));

            // local variable numbering
            let mut m = 0;
            let mut idx_i = [0usize; 3];
            let mut idx_j = [0usize; 3];
            for (kin, idx) in [(ki, &mut idx_i), (kj, &mut idx_j)] {
                for a in 0..kin.n {
                    let v = kin.vars[a];
                    let pos = vars[..m].iter().position(|&x| x == v).unwrap_or_else(|| {
                        vars[m] = v;
                        m += 1;
                        m - 1
                    });
                    idx[a] = pos;
                }
            }
            for row in jac.iter_mut() {
                row[..m].iter_mut().for_each(|x| *x = 0.0);
            }
            for a in 0..ki.n {
                for c in 0..3 {
                    jac[c][idx_i[a]] += ki.jac[a][c];
                }
            }
            for a in 0..kj.n {
                for c in 0..3 {
                    jac[3 + c][idx_j[a]] += kj.jac[a][c];
                }
            }

            let mut g = [0.0; 6];
            let mut kj_ = [[0.0; 6]; 6]; // K·J
            for rr in 0..6 {
                for a in 0..m {
                    let mut s = 0.0;
                    for cc in 0..6 {
                        s += r.tangent[rr][cc] * jac[cc][a];
                    }
                    kj_[rr][a] = s;
                }
            }
            let mut gmat = [[0.0; 6]; 6];
            for a in 0..m {
                let mut ga = 0.0;
                for rr in 0..6 {
                    ga += r.force[rr] * jac[rr][a];
                }
                g[a] = ga;
                for b in 0..=a {
                    let mut s = 0.0;
                    for rr in 0..6 {
                        s += jac[rr][a] * kj_[rr][b];
                    }
                    gmat[a][b] = s;
                }
            }
            // second-derivative terms of the kinematic maps
            for (kin, idx, base) in [(ki, &idx_i, 0usize), (kj, &idx_j, 3usize)] {
                for a in 0..kin.n {
                    for b in 0..kin.n {
                        let (la, lb) = (idx[a], idx[b]);
                        if lb > la {
                            continue;
                        }
                        let mut s = 0.0;
                        for c in 0..3 {
                            s += r.force[base + c] * kin.hess[a][b][c];
                        }
                        gmat[la][lb] += s;
                    }
                }
            }
            scatter(
                &vars[..m],
                &g,
                &gmat,
                lam,
                &mut residual,
                &mut tangent,
                &mut k_lambda,
                &mut k_ll,
                &mut reaction,
            );
        }

        let mut potential = energy;
        for load in &self.loads {
            let kin = &kins[load.node];
            let p = load.force;
            let work: f64 = (0..3).map(|c| p[c] * kin.val[c]).sum();
            potential -= lambda * work;
            reaction -= work;
            for a in 0..kin.n {
                let va = kin.vars[a];
                let dwa: f64 = (0..3).map(|c| p[c] * kin.jac[a][c]).sum();
                if va < nq {
                    residual[va] -= lambda * dwa;
                    k_lambda[va] -= dwa;
                }
                for b in 0..=a {
                    let vb = kin.vars[b];
                    let h: f64 = (0..3).map(|c| p[c] * kin.hess[a][b][c]).sum();
                    if va < nq && vb < nq && h != 0.0 {
                        tangent.add(va, vb, -lambda * h);
                    }
                }
            }
        }

        for load in &self.constraints.dead_loads {
            let kin = &kins[load.node];
            let p = load.force;
            potential -= (0..3).map(|c| p[c] * kin.val[c]).sum::<f64>();
            let mut g = [0.0; 6];
            let mut gmat = [[0.0; 6]; 6];
            for a in 0..kin.n {
                g[a] = -(0..3).map(|c| p[c] * kin.jac[a][c]).sum::<f64>();
                for b in 0..=a {
                    gmat[a][b] = -(0..3).map(|c| p[c] * kin.hess[a][b][c]).sum::<f64>();
                }
            }
            scatter(
                &kin.vars[..kin.n],
                &g,
                &gmat,
                lam,
                &mut residual,
                &mut tangent,
                &mut k_lambda,
                &mut k_ll,
                &mut reaction,
            );
        }

        Ok(Assembly {
            residual,
            tangent,
            k_lambda,
            k_lambda_lambda: k_ll,
            reaction,
            strain_energy: energy,
            potential,
            force_scale,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn scatter(
    vars: &[usize],
    g: &[f64; 6],
    gmat: &[[f64; 6]; 6],
    lam: usize,
    residual: &mut [f64],
    tangent: &mut SymBand,
    k_lambda: &mut [f64],
    k_ll: &mut f64,
    reaction: &mut f64,
) {
    for (a, &va) in vars.iter().enumerate() {
        if va == lam {
            *reaction += g[a];
        } else {
            residual[va] += g[a];
        }
        for (b, &vb) in vars.iter().enumerate().take(a + 1) {
            let v = gmat[a][b];
            match (va == lam, vb == lam) {
                (true, true) => *k_ll += v,
                (true, false) => k_lambda[vb] += v,
                (false, true) => k_lambda[va] += v,
                (false, false) => tangent.add(va, vb, v),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beam::{Material, RigidLink, Section};

    fn cantilever(n: usize) -> BeamMesh {
        BeamMesh::straight([0.0, 0.0], [20.0, 0.0], n, Material::default(), Section::rectangular(0.8, 10.0).unwrap())
    }

    fn clamp(node: usize) -> Vec<(usize, Dof)> {
        vec![(node, Dof::U), (node, Dof::V), (node, Dof::Theta)]
    }

    /// Frame with a rigid block (nodes 5 = master, 6, 7 slaves) driven by a bar.
    fn linked_model() -> Model {
        let mut mesh = BeamMesh::straight([0.0, 0.0], [4.0, 1.0], 4, Material::default(), Section::rectangular(0.8, 10.0).unwrap());
        // nodes: 0..=4 beam; add master 5 near the tip, slave 6 = tip node 4 replaced
        mesh.nodes.push([5.0, 1.0]); // 5 master
        mesh.nodes.push([6.0, 1.5]); // 6 slave with its own element to 7
        mesh.nodes.push([7.0, 0.5]); // 7 free
        mesh.elements.push(crate::beam::Element { nodes: [6, 7], material: 0, section: 0 });
        mesh.rigid_links = vec![
            RigidLink { master: 5, slave: 4, offset: [-1.0, 0.0] },
            RigidLink { master: 5, slave: 6, offset: [1.0, 0.5] },
        ];
        let mut fixed = clamp(0);
        fixed.push((7, Dof::U));
        fixed.push((7, Dof::V));
        Model::new(
            mesh,
            Constraints {
                fixed,
                control: Control::RigidBar { node: 5, length: 3.0, pull: [0.3, -1.0], offset: 0.4 },
                dead_loads: vec![
                    NodalLoad { node: 5, force: [0.1, 0.0, 0.3] },
                    NodalLoad { node: 6, force: [0.2, -0.1, 0.05] },
                ],
            },
        )
        .unwrap()
    }

    fn random_q(n: usize, amp: f64) -> Vec<f64> {
        (0..n).map(|k| amp * ((k as f64 * 1.7 + 0.3).sin())).collect()
    }

    #[test]
    fn unloaded_rest_state_has_zero_residual() {
        let model = Model::new(
            cantilever(10),
            Constraints { fixed: clamp(0), control: Control::Load { pattern: vec![NodalLoad { node: 10, force: [0.0, 1.0, 0.0] }] }, dead_loads: vec![] },
        )
        .unwrap();
        let asm = model.assemble(&vec![0.0; model.n_free()], 0.0).unwrap();
        assert_eq!(asm.residual_norm(), 0.0);
    }

    #[test]
    fn linked_residual_is_gradient_of_potential() {
        let model = linked_model();
        let q = random_q(model.n_free(), 0.05);
        let lambda = 0.4;
        let asm = model.assemble(&q, lambda).unwrap();
        let scale = model.tolerance_scale(&asm).max(1.0);
        for k in 0..model.n_free() {
            let h = 1e-7;
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += h;
            qm[k] -= h;
            let ep = model.assemble(&qp, lambda).unwrap().potential;
            let em = model.assemble(&qm, lambda).unwrap().potential;
            let fd = (ep - em) / (2.0 * h);
            assert!((fd - asm.residual[k]).abs() < 1e-5 * scale, "var {k}: {fd} vs {}", asm.residual[k]);
        }
        let h = 1e-7;
        let fd = (model.assemble(&q, lambda + h).unwrap().potential - model.assemble(&q, lambda - h).unwrap().potential) / (2.0 * h);
        assert!((fd - asm.reaction).abs() < 1e-5 * scale);
    }

    #[test]
    fn linked_tangent_matches_directional_differences() {
        let model = linked_model();
        let q = random_q(model.n_free(), 0.05);
        let lambda = 0.4;
        let asm = model.assemble(&q, lambda).unwrap();
        let dir = random_q(model.n_free(), 1.0);
        let kd = asm.tangent.mul_vec(&dir);
        let h = 1e-7;
        let qp: Vec<f64> = q.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
        let qm: Vec<f64> = q.iter().zip(&dir).map(|(a, b)| a - h * b).collect();
        let rp = model.assemble(&qp, lambda).unwrap();
        let rm = model.assemble(&qm, lambda).unwrap();
        let norm = kd.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in 0..model.n_free() {
            let fd = (rp.residual[k] - rm.residual[k]) / (2.0 * h);
            assert!((fd - kd[k]).abs() < 1e-5 * norm, "row {k}: {fd} vs {}", kd[k]);
        }
        // mixed and control derivatives
        let fd_react: f64 = (rp.reaction - rm.reaction) / (2.0 * h);
        let kl: f64 = asm.k_lambda.iter().zip(&dir).map(|(a, b)| a * b).sum();
        assert!((fd_react - kl).abs() < 1e-5 * norm.max(1.0));
        let rl = model.assemble(&q, lambda + h).unwrap();
        let rlm = model.assemble(&q, lambda - h).unwrap();
        let fd_ll = (rl.reaction - rlm.reaction) / (2.0 * h);
        assert!((fd_ll - asm.k_lambda_lambda).abs() < 1e-5 * norm.max(1.0));
    }

    #[test]
    fn constraint_bookkeeping_counts_every_dof() {
        let model = linked_model();
        let n = model.n_nodes();
        // bar replaces the master's two translations by one angle
        assert_eq!(model.n_free(), 3 * n - model.constrained_dofs() - model.condensed_dofs() - 1);
    }

    #[test]
    fn load_on_constrained_dof_is_rejected() {
        let res = Model::new(
            cantilever(4),
            Constraints { fixed: clamp(0), control: Control::Load { pattern: vec![NodalLoad { node: 0, force: [0.0, 1.0, 0.0] }] }, dead_loads: vec![] },
        );
        assert!(matches!(res, Err(Error::Specification(_))));
    }

    #[test]
    fn bar_with_nonpositive_length_is_rejected() {
        let res = Model::new(
            cantilever(4),
            Constraints { fixed: clamp(0), control: Control::RigidBar { node: 4, length: 0.0, pull: [0.0, 1.0], offset: 0.0 }, dead_loads: vec![] },
        );
        assert!(matches!(res, Err(Error::Specification(_))));
    }

    #[test]
    fn reduce_state_inverts_full_state() {
        let model = linked_model();
        let q = random_q(model.n_free(), 0.05);
        let state = model.full_state(&q, 0.7);
        let back = model.reduce_state(&state);
        for (a, b) in q.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
