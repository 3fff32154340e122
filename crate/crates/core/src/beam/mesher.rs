//! Discretisation of a structure layout into a frame mesh.

use serde::{Deserialize, Serialize};

use super::{BeamMesh, Element, Material, RigidLink, Section};
use crate::error::{Error, Result};
use crate::geometry::{arc_length, assemble_structure, chain_pieces, resample_uniform, Point, Polyline, SnapStructureLayout};

/// Spiral sampling used before resampling to the element length.
const MESH_SAMPLES_PER_TURN: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshSettings {
    /// Target element length along the centerline, mm.
    pub elem_len: f64,
    pub material: Material,
    /// Rigid x-shift of the apex block, mm (symmetry-breaking imperfection).
    #[serde(default)]
    pub apex_shift: f64,
}

impl Default for MeshSettings {
    fn default() -> Self {
        Self {
            elem_len: 0.5,
            material: Material::default(),
            apex_shift: 0.0,
        }
    }
}

/// Mesh of the mirrored structure plus the tags the scenarios refer to.
///
/// Nodes run from the left support up the left beam, through the apex
/// block, and down the right beam, which keeps the reduced tangent banded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureMesh {
    pub mesh: BeamMesh,
    pub left_support: usize,
    pub right_support: usize,
    pub tip: usize,
    /// Parallel to the layout's anchor offsets.
    pub anchors: Vec<usize>,
    pub anchor_offsets: Vec<f64>,
    /// Every node moving with the rigid apex block.
    pub apex_nodes: Vec<usize>,
    pub apex_master: usize,
    pub left_beam: Vec<usize>,
    pub right_beam: Vec<usize>,
}

impl StructureMesh {
    /// Makes `node` the master of the apex block; every other block node is
    /// slaved to it.
    pub fn set_apex_master(&mut self, node: usize) -> Result<()> {
        if !self.apex_nodes.contains(&node) {
            return Err(Error::Specification(format!("node {node} is not on the apex block")));
        }
        let m = self.mesh.nodes[node];
        self.mesh.rigid_links = self
            .apex_nodes
            .iter()
            .filter(|&&k| k != node)
            .map(|&k| {
                let p = self.mesh.nodes[k];
                RigidLink {
                    master: node,
                    slave: k,
                    offset: [p[0] - m[0], p[1] - m[1]],
                }
            })
            .collect();
        self.apex_master = node;
        Ok(())
    }

    pub fn anchor(&self, offset: f64) -> Option<usize> {
        self.anchor_offsets
            .iter()
            .position(|o| (o - offset).abs() < 1e-9)
            .map(|k| self.anchors[k])
    }
}

fn resample_pieces(pieces: &[Polyline], elem_len: f64) -> Polyline {
    let mut out: Polyline = Vec::new();
    for p in pieces {
        let n = (arc_length(p) / elem_len).ceil().max(1.0) as usize;
        let r = resample_uniform(p, n);
        if out.is_empty() {
            out.extend_from_slice(&r);
        } else {
            out.extend_from_slice(&r[1..]);
        }
    }
    out
}

/// Meshes both beams of `layout` at `settings.elem_len` and joins them with a
/// rigid apex block mastered at the tip node.
pub fn mesh_structure(layout: &SnapStructureLayout, settings: &MeshSettings) -> Result<StructureMesh> {
    if !(settings.elem_len > 0.0) {
        return Err(Error::Domain(format!("element length must be positive, got {}", settings.elem_len)));
    }
    if !(settings.material.youngs_modulus > 0.0) {
        return Err(Error::Domain("Young's modulus must be positive".into()));
    }
    let pieces: Vec<Polyline> = chain_pieces(&layout.metabeam, MESH_SAMPLES_PER_TURN)?
        .into_iter()
        .map(|p| p.points)
        .collect();
    let fine = resample_pieces(&pieces, settings.elem_len);
    let placed = assemble_structure(&layout.metabeam, &fine, &layout.structure)?;
    let section = Section::rectangular(layout.metabeam.cell.coil_thickness, layout.structure.depth)?;

    let shift = settings.apex_shift;
    let moved = |p: Point| [p[0] + shift, p[1]];
    let mut nodes: Vec<Point> = Vec::new();
    let nl = placed.left_beam.len();
    nodes.extend_from_slice(&placed.left_beam[..nl - 1]);
    let block = &placed.apex_block;
    let left_end = nodes.len();
    nodes.push(moved(block.left_end));
    let anchor_pts: Vec<(f64, Point)> = layout
        .structure
        .anchor_offsets
        .iter()
        .zip(&block.anchors)
        .map(|(&o, &p)| (o, p))
        .collect();
    // order block nodes left to right
    let mut order: Vec<usize> = (0..anchor_pts.len()).collect();
    order.sort_by(|&a, &b| anchor_pts[a].0.total_cmp(&anchor_pts[b].0));
    let mut anchors = vec![0usize; anchor_pts.len()];
    let mut tip = None;
    for &k in &order {
        if tip.is_none() && anchor_pts[k].0 > 0.0 {
            tip = Some(nodes.len());
            nodes.push(moved(block.tip));
        }
        anchors[k] = nodes.len();
        nodes.push(moved(anchor_pts[k].1));
    }
    let tip = match tip {
        Some(t) => t,
        None => {
            nodes.push(moved(block.tip));
            nodes.len() - 1
        }
    };
    let right_end = nodes.len();
    nodes.push(moved(block.right_end));
    let right_start = nodes.len();
    for p in placed.right_beam[..placed.right_beam.len() - 1].iter().rev() {
        nodes.push(*p);
    }

    let mut elements = Vec::new();
    let left_beam: Vec<usize> = (0..=left_end).collect();
    let mut right_beam: Vec<usize> = vec![right_end];
    right_beam.extend(right_start..nodes.len());
    for w in left_beam.windows(2).chain(right_beam.windows(2)) {
        elements.push(Element {
            nodes: [w[0], w[1]],
            material: 0,
            section: 0,
        });
    }
    let right_support = nodes.len() - 1;
    right_beam.reverse();

    let mut out = StructureMesh {
        mesh: BeamMesh {
            nodes,
            elements,
            materials: vec![settings.material],
            sections: vec![section],
            rigid_links: Vec::new(),
        },
        left_support: 0,
        right_support,
        tip,
        anchors,
        anchor_offsets: layout.structure.anchor_offsets.clone(),
        apex_nodes: (left_end..=right_end).collect(),
        apex_master: tip,
        left_beam,
        right_beam,
    };
    out.set_apex_master(tip)?;
    out.mesh.validate()?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_layout, MetabeamSpec, StructureSpec};

    fn default_mesh() -> StructureMesh {
        let layout = generate_layout(&MetabeamSpec::default(), &StructureSpec::default()).unwrap();
        mesh_structure(&layout, &MeshSettings::default()).unwrap()
    }

    #[test]
    fn element_lengths_do_not_exceed_target() {
        let m = default_mesh();
        for e in &m.mesh.elements {
            let (a, b) = (m.mesh.nodes[e.nodes[0]], m.mesh.nodes[e.nodes[1]]);
            assert!((b[0] - a[0]).hypot(b[1] - a[1]) <= 0.5 + 1e-9);
        }
    }

    #[test]
    fn supports_and_apex_tags() {
        let m = default_mesh();
        let n = &m.mesh.nodes;
        assert!(n[m.left_support][1].abs() < 1e-9);
        assert!((n[m.left_support][0] + n[m.right_support][0]).abs() < 1e-9);
        assert_eq!(n[m.tip][0], 0.0);
        assert!((n[m.anchor(4.0).unwrap()][0] - 4.0).abs() < 1e-12);
        assert!((n[m.anchor(-4.0).unwrap()][0] + 4.0).abs() < 1e-12);
        assert_eq!(m.mesh.rigid_links.len(), m.apex_nodes.len() - 1);
        // block nodes listed left to right
        for w in m.apex_nodes.windows(2) {
            assert!(n[w[0]][0] < n[w[1]][0]);
        }
    }

    #[test]
    fn reroot_keeps_the_block_rigid() {
        let mut m = default_mesh();
        let a = m.anchor(4.0).unwrap();
        m.set_apex_master(a).unwrap();
        assert!(m.mesh.rigid_links.iter().all(|l| l.master == a));
        assert!(m.set_apex_master(0).is_err());
    }

    #[test]
    fn apex_shift_moves_only_the_block() {
        let layout = generate_layout(&MetabeamSpec::default(), &StructureSpec::default()).unwrap();
        let base = mesh_structure(&layout, &MeshSettings::default()).unwrap();
        let shifted = mesh_structure(&layout, &MeshSettings { apex_shift: 1e-3, ..MeshSettings::default() }).unwrap();
        for (k, (p, q)) in base.mesh.nodes.iter().zip(&shifted.mesh.nodes).enumerate() {
            let dx = q[0] - p[0];
            if base.apex_nodes.contains(&k) {
                assert!((dx - 1e-3).abs() < 1e-12);
            } else {
                assert_eq!(dx, 0.0);
            }
        }
    }
}
