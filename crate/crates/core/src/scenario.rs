//! Test configurations: supports, loading linkage and stroke.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::beam::{mesh_structure, Axis, Constraints, Control, Dof, MeshSettings, Model, NodalLoad, StructureMesh};
use crate::continuation::SolverSettings;
use crate::error::{Error, Result};
use crate::geometry::{generate_layout, MetabeamSpec, SnapStructureLayout, StructureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Support {
    Fixed,
    Pinned,
}

impl Support {
    fn dofs(self, node: usize) -> Vec<(usize, Dof)> {
        match self {
            Support::Fixed => vec![(node, Dof::U), (node, Dof::V), (node, Dof::Theta)],
            Support::Pinned => vec![(node, Dof::U), (node, Dof::V)],
        }
    }

    fn name(self) -> &'static str {
        match self {
            Support::Fixed => "fixed",
            Support::Pinned => "pinned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryPair {
    pub left: Support,
    pub right: Support,
}

impl BoundaryPair {
    pub const FIXED_FIXED: Self = Self { left: Support::Fixed, right: Support::Fixed };
    pub const PINNED_PINNED: Self = Self { left: Support::Pinned, right: Support::Pinned };
    /// Pinned on the left (−x) side, fixed on the right.
    pub const FIXED_PINNED: Self = Self { left: Support::Pinned, right: Support::Fixed };

    pub fn is_symmetric(&self) -> bool {
        self.left == self.right
    }

    pub fn mirrored(&self) -> Self {
        Self { left: self.right, right: self.left }
    }

    pub fn name(&self) -> String {
        if self.is_symmetric() {
            format!("{}-{}", self.left.name(), self.right.name())
        } else {
            "fixed-pinned".to_string()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attachment {
    Center,
    /// Signed offset along the apex crossline, mm.
    Offset(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarMode {
    RigidLink,
    VerticalOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Loading,
    Unloading,
    FullCycle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadingSpec {
    pub attachment: Attachment,
    pub bar_length: f64,
    pub bar_mode: BarMode,
    /// Crosshead travel, mm.
    pub stroke: f64,
    pub direction: Direction,
}

impl Default for LoadingSpec {
    fn default() -> Self {
        Self {
            attachment: Attachment::Center,
            bar_length: 80.0,
            bar_mode: BarMode::RigidLink,
            stroke: 55.0,
            direction: Direction::FullCycle,
        }
    }
}

/// Default imperfection couple, N·mm, applied to symmetric center-loaded cases.
pub const DEFAULT_IMPERFECTION: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub layout: SnapStructureLayout,
    pub boundary: BoundaryPair,
    pub loading: LoadingSpec,
    pub mesh: MeshSettings,
    pub solver: SolverSettings,
    /// Dead couple on the loaded apex node, N·mm (counterclockwise
    /// positive); used only when the case is mirror symmetric.
    pub imperfection: f64,
}

/// Scenario config file. Every field is optional except the boundary.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub label: Option<String>,
    pub metabeam: Option<MetabeamSpec>,
    pub structure: Option<StructureSpec>,
    pub boundary: Option<BoundaryPair>,
    pub loading: Option<LoadingSpec>,
    pub mesh: Option<MeshSettings>,
    pub solver: Option<SolverSettings>,
    pub imperfection: Option<f64>,
    /// Builtin label to start from.
    pub base: Option<String>,
}

impl Scenario {
    pub fn new(label: &str, boundary: BoundaryPair, attachment: Attachment) -> Result<Self> {
        let layout = generate_layout(&MetabeamSpec::default(), &StructureSpec::default())?;
        Ok(Self {
            label: label.to_string(),
            layout,
            boundary,
            loading: LoadingSpec { attachment, ..LoadingSpec::default() },
            mesh: MeshSettings::default(),
            solver: SolverSettings::default(),
            imperfection: DEFAULT_IMPERFECTION,
        })
    }

    pub fn from_config(cfg: &ScenarioConfig) -> Result<Self> {
        let mut sc = match &cfg.base {
            Some(b) => resolve_builtin(b)?,
            None => {
                let boundary = cfg
                    .boundary
                    .ok_or_else(|| Error::Specification("scenario config needs a boundary or a base".into()))?;
                Scenario::new("custom", boundary, Attachment::Center)?
            }
        };
        if cfg.metabeam.is_some() || cfg.structure.is_some() {
            let mb = cfg.metabeam.clone().unwrap_or_else(|| sc.layout.metabeam.clone());
            let st = cfg.structure.clone().unwrap_or_else(|| sc.layout.structure.clone());
            sc.layout = generate_layout(&mb, &st)?;
        }
        if let Some(b) = cfg.boundary {
            sc.boundary = b;
        }
        if let Some(l) = &cfg.loading {
            sc.loading = l.clone();
        }
        if let Some(m) = &cfg.mesh {
            sc.mesh = m.clone();
        }
        if let Some(s) = &cfg.solver {
            sc.solver = s.clone();
        }
        if let Some(i) = cfg.imperfection {
            sc.imperfection = i;
        }
        if let Some(l) = &cfg.label {
            sc.label = l.clone();
        }
        sc.validate()?;
        Ok(sc)
    }

    /// Config that rebuilds this scenario through [`Scenario::from_config`].
    pub fn resolved_config(&self) -> ScenarioConfig {
        ScenarioConfig {
            label: Some(self.label.clone()),
            metabeam: Some(self.layout.metabeam.clone()),
            structure: Some(self.layout.structure.clone()),
            boundary: Some(self.boundary),
            loading: Some(self.loading.clone()),
            mesh: Some(self.mesh.clone()),
            solver: Some(self.solver.clone()),
            imperfection: Some(self.imperfection),
            base: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ScenarioConfig = crate::io::read_json(path)?;
        Self::from_config(&cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let l = &self.loading;
        if !(l.stroke > 0.0) {
            return Err(Error::Specification(format!("stroke must be positive, got {}", l.stroke)));
        }
        if l.bar_mode == BarMode::RigidLink && !(l.bar_length > 0.0) {
            return Err(Error::Specification(format!("bar length must be positive, got {}", l.bar_length)));
        }
        if let Attachment::Offset(o) = l.attachment {
            if !(o.abs() < self.layout.structure.apex_half_width) {
                return Err(Error::Specification(format!("attachment offset {o} mm lies outside the apex block")));
            }
            if self.layout.anchor(o).is_none() {
                return Err(Error::Specification(format!("no anchor at offset {o} mm")));
            }
        }
        if !self.imperfection.is_finite() {
            return Err(Error::Specification("imperfection must be finite".into()));
        }
        self.solver.validate()
    }

    /// Whether the imperfection is applied.
    pub fn needs_imperfection(&self) -> bool {
        self.boundary.is_symmetric() && self.loading.attachment == Attachment::Center
    }

    pub fn applied_imperfection(&self) -> f64 {
        if self.needs_imperfection() {
            self.imperfection
        } else {
            0.0
        }
    }

    /// Mirror image about the centerline (supports swapped, offset negated).
    pub fn mirrored(&self) -> Self {
        let mut m = self.clone();
        m.boundary = self.boundary.mirrored();
        if let Attachment::Offset(o) = self.loading.attachment {
            m.loading.attachment = Attachment::Offset(-o);
        }
        m.imperfection = -self.imperfection;
        m
    }

    pub fn build(&self) -> Result<ScenarioModel> {
        self.validate()?;
        let mut mesh = mesh_structure(&self.layout, &self.mesh)?;
        let fixed = apply_boundary(&mesh, self.boundary)?;
        let control = attach_loading(&mut mesh, &self.loading)?;
        let couple = self.applied_imperfection();
        let dead_loads = if couple != 0.0 {
            vec![NodalLoad { node: mesh.apex_master, force: [0.0, 0.0, couple] }]
        } else {
            Vec::new()
        };
        let model = Model::new(mesh.mesh.clone(), Constraints { fixed, control, dead_loads })?;
        Ok(ScenarioModel { model, mesh })
    }
}

/// Model built from a scenario together with the mesh tags.
#[derive(Debug, Clone)]
pub struct ScenarioModel {
    pub model: Model,
    pub mesh: StructureMesh,
}

pub fn apply_boundary(mesh: &StructureMesh, pair: BoundaryPair) -> Result<Vec<(usize, Dof)>> {
    let n = mesh.mesh.nodes.len();
    if mesh.left_support >= n || mesh.right_support >= n || mesh.left_support == mesh.right_support {
        return Err(Error::Specification("mesh lacks distinct left/right support nodes".into()));
    }
    let mut out = pair.left.dofs(mesh.left_support);
    out.extend(pair.right.dofs(mesh.right_support));
    Ok(out)
}

/// Selects the attachment node, makes it the apex master and returns the
/// control description. The crosshead pulls along −y, towards the supports.
pub fn attach_loading(mesh: &mut StructureMesh, loading: &LoadingSpec) -> Result<Control> {
    let node = match loading.attachment {
        Attachment::Center => mesh.tip,
        Attachment::Offset(o) => mesh
            .anchor(o)
            .ok_or_else(|| Error::Specification(format!("no anchor at offset {o} mm")))?,
    };
    mesh.set_apex_master(node)?;
    match loading.bar_mode {
        BarMode::RigidLink => {
            if !(loading.bar_length > 0.0) {
                return Err(Error::Specification(format!(
                    "bar length must be positive, got {}",
                    loading.bar_length
                )));
            }
            Ok(Control::RigidBar {
                node,
                length: loading.bar_length,
                pull: [0.0, -1.0],
                offset: 0.0,
            })
        }
        BarMode::VerticalOnly => Ok(Control::Prescribed { node, axis: Axis::Y, sign: -1.0 }),
    }
}

const BUILTIN: [(&str, BoundaryPair, Attachment); 8] = [
    ("fixed-fixed", BoundaryPair::FIXED_FIXED, Attachment::Center),
    ("pinned-pinned", BoundaryPair::PINNED_PINNED, Attachment::Center),
    ("fixed-fixed(+4)", BoundaryPair::FIXED_FIXED, Attachment::Offset(4.0)),
    ("fixed-fixed(-4)", BoundaryPair::FIXED_FIXED, Attachment::Offset(-4.0)),
    ("pinned-pinned(+4)", BoundaryPair::PINNED_PINNED, Attachment::Offset(4.0)),
    ("pinned-pinned(-4)", BoundaryPair::PINNED_PINNED, Attachment::Offset(-4.0)),
    ("fixed-pinned(pin)", BoundaryPair::FIXED_PINNED, Attachment::Offset(-4.0)),
    ("fixed-pinned(fix)", BoundaryPair::FIXED_PINNED, Attachment::Offset(4.0)),
];

/// The eight builtin configurations with default dimensions.
pub fn builtin_scenarios() -> Result<Vec<Scenario>> {
    BUILTIN.iter().map(|(l, b, a)| Scenario::new(l, *b, *a)).collect()
}

pub fn builtin_labels() -> Vec<&'static str> {
    BUILTIN.iter().map(|b| b.0).collect()
}

/// Canonical form of a label: `fixed-pinned-fix` and `fixed-fixed+4` are
/// accepted for `fixed-pinned(fix)` and `fixed-fixed(+4)`.
pub fn canonical_label(label: &str) -> Option<&'static str> {
    let squash = |s: &str| -> String {
        s.to_ascii_lowercase().chars().filter(|c| !"()-_ ".contains(*c)).collect()
    };
    let want = squash(label);
    BUILTIN.iter().map(|b| b.0).find(|l| squash(l) == want)
}

pub fn resolve_builtin(label: &str) -> Result<Scenario> {
    let canon = canonical_label(label).ok_or_else(|| {
        Error::Specification(format!("unknown scenario '{label}'; known: {}", builtin_labels().join(", ")))
    })?;
    let (l, b, a) = BUILTIN.iter().find(|b| b.0 == canon).unwrap();
    Scenario::new(l, *b, *a)
}
