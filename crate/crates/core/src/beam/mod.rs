//! Geometrically nonlinear planar frames: mesh description, corotational
//! elements, constraint reduction and assembly.

mod element;
mod mesher;
mod model;

pub use element::{element_energy, element_force_and_tangent, ElementResponse};
pub use mesher::{mesh_structure, MeshSettings, StructureMesh};
pub use model::{Assembly, Axis, Constraints, Control, Dof, Model, NodalLoad};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// MPa (N/mm²).
    pub youngs_modulus: f64,
    /// tonne/mm³.
    pub density: f64,
}

impl Default for Material {
    fn default() -> Self {
        Self {
            youngs_modulus: 3500.0,
            density: 1.24e-9,
        }
    }
}

/// Solid rectangular section: `h` in the plane of bending, `b` out of plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub in_plane_thickness_h: f64,
    pub depth_b: f64,
    pub area: f64,
    pub second_moment: f64,
}

impl Section {
    pub fn rectangular(h: f64, b: f64) -> Result<Self> {
        if !(h > 0.0 && b > 0.0) {
            return Err(Error::Domain(format!("section needs h > 0 and b > 0, got {h} x {b}")));
        }
        Ok(Self {
            in_plane_thickness_h: h,
            depth_b: b,
            area: b * h,
            second_moment: b * h * h * h / 12.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let expect = Self::rectangular(self.in_plane_thickness_h, self.depth_b)?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs();
        if !close(self.area, expect.area) || !close(self.second_moment, expect.second_moment) {
            return Err(Error::Specification(
                "section area / second moment inconsistent with h and b".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub nodes: [usize; 2],
    pub material: usize,
    pub section: usize,
}

/// `slave` follows `master` rigidly; `offset` is the rest-configuration
/// vector from master to slave.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidLink {
    pub master: usize,
    pub slave: usize,
    pub offset: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamMesh {
    pub nodes: Vec<Point>,
    pub elements: Vec<Element>,
    pub materials: Vec<Material>,
    pub sections: Vec<Section>,
    #[serde(default)]
    pub rigid_links: Vec<RigidLink>,
}

/// Nodal displacements (u, v, θ) per node, in node order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub displacements: Vec<f64>,
}

impl State {
    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            displacements: vec![0.0; 3 * n_nodes],
        }
    }

    pub fn node(&self, k: usize) -> [f64; 3] {
        let d = &self.displacements;
        [d[3 * k], d[3 * k + 1], d[3 * k + 2]]
    }
}

impl BeamMesh {
    /// Global index of a nodal DOF in the unreduced state vector.
    pub fn dof_index(node: usize, dof: Dof) -> usize {
        3 * node + dof as usize
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for s in &self.sections {
            s.validate()?;
        }
        for m in &self.materials {
            if !(m.youngs_modulus > 0.0) {
                return Err(Error::Specification("Young's modulus must be positive".into()));
            }
        }
        for (k, e) in self.elements.iter().enumerate() {
            let [i, j] = e.nodes;
            if i >= n || j >= n || i == j {
                return Err(Error::Specification(format!("element {k} references invalid nodes")));
            }
            if e.material >= self.materials.len() || e.section >= self.sections.len() {
                return Err(Error::Specification(format!(
                    "element {k} references a missing material or section"
                )));
            }
            let (a, b) = (self.nodes[i], self.nodes[j]);
            if !((b[0] - a[0]).hypot(b[1] - a[1]) > 0.0) {
                return Err(Error::Specification(format!("element {k} has zero rest length")));
            }
        }
        for l in &self.rigid_links {
            if l.master >= n || l.slave >= n || l.master == l.slave {
                return Err(Error::Specification("rigid link references invalid nodes".into()));
            }
        }
        // acyclic: follow master pointers
        for l in &self.rigid_links {
            let mut seen = vec![l.slave];
            let mut cur = l.master;
            while let Some(next) = self.rigid_links.iter().find(|r| r.slave == cur) {
                if seen.contains(&cur) {
                    return Err(Error::Specification("rigid link graph has a cycle".into()));
                }
                seen.push(cur);
                cur = next.master;
            }
            if seen.contains(&cur) {
                return Err(Error::Specification("rigid link graph has a cycle".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn element_stiffness(&self, e: &Element) -> (f64, f64) {
        let m = &self.materials[e.material];
        let s = &self.sections[e.section];
        (m.youngs_modulus * s.area, m.youngs_modulus * s.second_moment)
    }

    fn element_dofs(state: &State, e: &Element) -> [f64; 6] {
        let [i, j] = e.nodes;
        let a = state.node(i);
        let b = state.node(j);
        [a[0], a[1], a[2], b[0], b[1], b[2]]
    }

    /// Sum of element strain energies, N·mm.
    pub fn strain_energy(&self, state: &State) -> Result<f64> {
        let mut total = 0.0;
        for (k, e) in self.elements.iter().enumerate() {
            let (ea, ei) = self.element_stiffness(e);
            let d = Self::element_dofs(state, e);
            total += element_energy(k, self.nodes[e.nodes[0]], self.nodes[e.nodes[1]], ea, ei, &d)?;
        }
        Ok(total)
    }

    /// Assembled internal force over the unreduced DOFs.
    pub fn internal_force(&self, state: &State) -> Result<Vec<f64>> {
        let mut f = vec![0.0; 3 * self.nodes.len()];
        for (k, e) in self.elements.iter().enumerate() {
            let (ea, ei) = self.element_stiffness(e);
            let d = Self::element_dofs(state, e);
            let r = element_force_and_tangent(k, self.nodes[e.nodes[0]], self.nodes[e.nodes[1]], ea, ei, &d)?;
            for (local, &node) in e.nodes.iter().enumerate() {
                for c in 0..3 {
                    f[3 * node + c] += r.force[3 * local + c];
                }
            }
        }
        Ok(f)
    }

    /// Largest EA/L over the elements.
    pub fn max_axial_stiffness(&self) -> f64 {
        self.elements
            .iter()
            .map(|e| {
                let (ea, _) = self.element_stiffness(e);
                let (a, b) = (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
                ea / (b[0] - a[0]).hypot(b[1] - a[1])
            })
            .fold(0.0, f64::max)
    }

    /// Straight beam of `n` equal elements from `start` to `end`.
    pub fn straight(start: Point, end: Point, n: usize, material: Material, section: Section) -> Self {
        let nodes = (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                [start[0] + t * (end[0] - start[0]), start[1] + t * (end[1] - start[1])]
            })
            .collect();
        let elements = (0..n)
            .map(|k| Element {
                nodes: [k, k + 1],
                material: 0,
                section: 0,
            })
            .collect();
        Self {
            nodes,
            elements,
            materials: vec![material],
            sections: vec![section],
            rigid_links: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spiral_like_mesh() -> BeamMesh {
        // a short curved frame with mixed orientations
        let nodes: Vec<Point> = (0..9)
            .map(|k| {
                let t = k as f64 * 0.4;
                [t.cos() * (1.0 + 0.2 * t), t.sin() * (1.0 + 0.2 * t)]
            })
            .collect();
        let elements = (0..8)
            .map(|k| Element {
                nodes: [k, k + 1],
                material: 0,
                section: 0,
            })
            .collect();
        BeamMesh {
            nodes,
            elements,
            materials: vec![Material::default()],
            sections: vec![Section::rectangular(0.8, 10.0).unwrap()],
            rigid_links: Vec::new(),
        }
    }

    #[test]
    fn section_properties() {
        let s = Section::rectangular(0.8, 10.0).unwrap();
        assert!((s.area - 8.0).abs() < 1e-12);
        assert!((s.second_moment - 10.0 * 0.512 / 12.0).abs() < 1e-12);
        assert!(s.validate().is_ok());
        let mut bad = s;
        bad.area *= 1.01;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn rest_energy_is_zero() {
        let mesh = spiral_like_mesh();
        assert_eq!(mesh.strain_energy(&State::zeros(mesh.nodes.len())).unwrap(), 0.0);
    }

    #[test]
    fn cyclic_rigid_links_are_rejected() {
        let mut mesh = spiral_like_mesh();
        mesh.rigid_links = vec![
            RigidLink { master: 0, slave: 1, offset: [0.0, 0.0] },
            RigidLink { master: 1, slave: 0, offset: [0.0, 0.0] },
        ];
        assert!(mesh.validate().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn internal_force_is_energy_gradient(seed in proptest::collection::vec(-1.0f64..1.0, 27)) {
            let mesh = spiral_like_mesh();
            let mut state = State::zeros(mesh.nodes.len());
            for (k, v) in seed.iter().enumerate() {
                state.displacements[k] = if k % 3 == 2 { 0.2 * v } else { 0.05 * v };
            }
            let f = mesh.internal_force(&state).unwrap();
            let scale = f.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-3);
            for k in 0..state.displacements.len() {
                let h = 1e-7;
                let mut p = state.clone();
                let mut m = state.clone();
                p.displacements[k] += h;
                m.displacements[k] -= h;
                let fd = (mesh.strain_energy(&p).unwrap() - mesh.strain_energy(&m).unwrap()) / (2.0 * h);
                prop_assert!((fd - f[k]).abs() <= 1e-5 * scale, "dof {} fd {} f {}", k, fd, f[k]);
            }
        }

        #[test]
        fn energy_is_frame_indifferent(
            seed in proptest::collection::vec(-1.0f64..1.0, 27),
            phi in -3.0f64..3.0, tx in -10.0f64..10.0, ty in -10.0f64..10.0,
        ) {
            let mesh = spiral_like_mesh();
            let mut state = State::zeros(mesh.nodes.len());
            for (k, v) in seed.iter().enumerate() {
                state.displacements[k] = if k % 3 == 2 { 0.2 * v } else { 0.05 * v };
            }
            let e0 = mesh.strain_energy(&state).unwrap();
            let (s, c) = phi.sin_cos();
            let mut moved = state.clone();
            for (k, x) in mesh.nodes.iter().enumerate() {
                let d = state.node(k);
                let p = [x[0] + d[0], x[1] + d[1]];
                let q = [c * p[0] - s * p[1] + tx, s * p[0] + c * p[1] + ty];
                moved.displacements[3 * k] = q[0] - x[0];
                moved.displacements[3 * k + 1] = q[1] - x[1];
                moved.displacements[3 * k + 2] = d[2] + phi;
            }
            let e1 = mesh.strain_energy(&moved).unwrap();
            prop_assert!((e1 - e0).abs() <= 1e-9 * e0.max(1e-12) + 1e-12, "{} vs {}", e0, e1);
        }
    }
}
