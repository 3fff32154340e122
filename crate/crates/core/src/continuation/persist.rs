//! Path artifacts: a CSV of path points and a JSON sidecar with folds, free
//! equilibria and the resolved configuration.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EquilibriumPath, Fold, FreeEquilibrium, PathPoint};
use crate::error::Result;
use crate::io::{column, fmt_f64, parse_cell, read_csv, Csv};

const COLUMNS: [&str; 9] = [
    "arc_coordinate",
    "control_mm",
    "reaction_N",
    "negative_eigs",
    "tip_x_mm",
    "tip_y_mm",
    "free_negative_eigs",
    "strain_energy_Nmm",
    "tip_rotation_rad",
];

pub fn path_csv(path: &EquilibriumPath) -> Vec<u8> {
    let mut csv = Csv::new(&COLUMNS);
    for p in &path.points {
        csv.row(&[
            fmt_f64(p.arc_coordinate),
            fmt_f64(p.control),
            fmt_f64(p.reaction),
            p.negative_eigs.to_string(),
            fmt_f64(p.tip[0]),
            fmt_f64(p.tip[1]),
            p.free_negative_eigs.to_string(),
            fmt_f64(p.strain_energy),
            fmt_f64(p.tip[2]),
        ]);
    }
    csv.into_bytes()
}

/// Reads points written by [`path_csv`]; reduced states are not stored.
pub fn read_path_csv(file: &Path) -> Result<Vec<PathPoint>> {
    let (header, rows) = read_csv(file)?;
    let idx: Vec<usize> = COLUMNS
        .iter()
        .map(|c| column(&header, c, file))
        .collect::<Result<_>>()?;
    rows.iter()
        .enumerate()
        .map(|(k, r)| {
            let row = k + 2;
            let f = |i: usize| parse_cell::<f64>(&r[idx[i]], file, row);
            let n = |i: usize| parse_cell::<usize>(&r[idx[i]], file, row);
            Ok(PathPoint {
                arc_coordinate: f(0)?,
                control: f(1)?,
                reaction: f(2)?,
                negative_eigs: n(3)?,
                tip: [f(4)?, f(5)?, f(8)?],
                free_negative_eigs: n(6)?,
                strain_energy: f(7)?,
                q: Vec::new(),
            })
        })
        .collect()
}

/// Sidecar written next to the path CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathArtifact {
    pub version: String,
    pub label: String,
    /// Imperfection actually applied to the model.
    pub imperfection_applied: f64,
    pub folds: Vec<Fold>,
    pub bifurcations: Vec<usize>,
    pub tracked_node: usize,
    pub target: f64,
    pub complete: bool,
    pub truncated: bool,
    pub free_equilibria: Vec<FreeEquilibrium>,
    /// Resolved scenario, solver settings included.
    pub config: serde_json::Value,
}

impl PathArtifact {
    pub fn new(
        label: &str,
        path: &EquilibriumPath,
        free_equilibria: Vec<FreeEquilibrium>,
        imperfection_applied: f64,
        config: serde_json::Value,
    ) -> Self {
        Self {
            version: crate::VERSION.to_string(),
            label: label.to_string(),
            imperfection_applied,
            folds: path.folds.clone(),
            bifurcations: path.bifurcations.clone(),
            tracked_node: path.tracked_node,
            target: path.target,
            complete: path.complete,
            truncated: path.truncated,
            free_equilibria,
            config,
        }
    }

    /// Reassembles the path from the sidecar and the CSV points.
    pub fn restore(&self, points: Vec<PathPoint>) -> EquilibriumPath {
        EquilibriumPath {
            points,
            folds: self.folds.clone(),
            bifurcations: self.bifurcations.clone(),
            tracked_node: self.tracked_node,
            target: self.target,
            complete: self.complete,
            truncated: self.truncated,
        }
    }
}
