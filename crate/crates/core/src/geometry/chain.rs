use serde::{Deserialize, Serialize};

use super::spiral::{cell_pieces, CellPieces, UnitCellSpec};
use super::Polyline;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConnectorPolicy {
    /// Equal straight links between neighbouring cells and at both ends.
    #[default]
    UniformLinks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetabeamSpec {
    pub cell: UnitCellSpec,
    pub cell_count: usize,
    pub total_length: f64,
    #[serde(default)]
    pub connector_policy: ConnectorPolicy,
}

impl Default for MetabeamSpec {
    fn default() -> Self {
        Self {
            cell: UnitCellSpec::default(),
            cell_count: 6,
            total_length: 56.0,
            connector_policy: ConnectorPolicy::UniformLinks,
        }
    }
}

impl MetabeamSpec {
    pub fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        if self.cell_count == 0 {
            return Err(Error::Domain("cell_count must be at least 1".into()));
        }
        if !(self.total_length > 0.0) {
            return Err(Error::Domain(format!(
                "total length must be positive, got {}",
                self.total_length
            )));
        }
        let pitch_sum = self.cell_count as f64 * self.cell.width;
        if self.total_length < pitch_sum - 1e-12 {
            return Err(Error::GeometryInfeasible(format!(
                "total length {} mm is shorter than {} cells of pitch {} mm",
                self.total_length, self.cell_count, self.cell.width
            )));
        }
        Ok(())
    }

    /// Length of each straight connector link.
    pub fn link_length(&self) -> f64 {
        let spare = self.total_length - self.cell_count as f64 * self.cell.width;
        (spare / (self.cell_count + 1) as f64).max(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceKind {
    Link,
    Spiral,
    Bridge,
}

/// A smooth piece of the metabeam centerline. Pieces meet at corners.
#[derive(Debug, Clone)]
pub struct Piece {
    pub kind: PieceKind,
    pub cell: Option<usize>,
    pub points: Polyline,
}

/// Metabeam centerline laid out along +x from (0, 0) to (total_length, 0).
#[derive(Debug, Clone)]
pub struct ChainedBeam {
    pub polyline: Polyline,
    /// Inclusive vertex range of each cell within `polyline`.
    pub cell_spans: Vec<(usize, usize)>,
}

pub(crate) fn chain_pieces(spec: &MetabeamSpec, samples_per_turn: usize) -> Result<Vec<Piece>> {
    spec.validate()?;
    let cell = cell_pieces(&spec.cell, samples_per_turn)?;
    let gap = cell.min_coil_gap();
    if gap < spec.cell.coil_thickness {
        return Err(Error::GeometryInfeasible(format!(
            "coil gap {gap:.4} mm is smaller than the coil thickness {} mm",
            spec.cell.coil_thickness
        )));
    }
    let link = spec.link_length();
    let w = spec.cell.width;
    let mut pieces = Vec::new();
    let mut x = 0.0;
    let push_link = |pieces: &mut Vec<Piece>, x0: f64| {
        if link > 0.0 {
            pieces.push(Piece {
                kind: PieceKind::Link,
                cell: None,
                points: vec![[x0, 0.0], [x0 + link, 0.0]],
            });
        }
    };
    for k in 0..spec.cell_count {
        push_link(&mut pieces, x);
        x += link;
        let center = x + 0.5 * w;
        let shift = |pts: &Polyline| -> Polyline {
            pts.iter().map(|p| [p[0] + center, p[1]]).collect()
        };
        let CellPieces {
            inward,
            bridge,
            outward,
            ..
        } = &cell;
        pieces.push(Piece {
            kind: PieceKind::Spiral,
            cell: Some(k),
            points: shift(inward),
        });
        if let Some(bridge) = bridge {
            pieces.push(Piece {
                kind: PieceKind::Bridge,
                cell: Some(k),
                points: shift(bridge),
            });
        }
        pieces.push(Piece {
            kind: PieceKind::Spiral,
            cell: Some(k),
            points: shift(outward),
        });
        x += w;
    }
    push_link(&mut pieces, x);
    // pin the far end exactly
    if let Some(last) = pieces.last_mut() {
        let n = last.points.len();
        last.points[n - 1] = [spec.total_length, 0.0];
    }
    Ok(pieces)
}

/// Chains `cell_count` cells in series with uniform straight links.
pub fn chain_cells(spec: &MetabeamSpec) -> Result<ChainedBeam> {
    let pieces = chain_pieces(spec, spec.cell.samples_per_turn)?;
    let mut polyline: Polyline = Vec::new();
    let mut cell_spans: Vec<(usize, usize)> = Vec::new();
    for piece in &pieces {
        let start = if polyline.is_empty() {
            polyline.extend_from_slice(&piece.points);
            0
        } else {
            let s = polyline.len() - 1;
            polyline.extend_from_slice(&piece.points[1..]);
            s
        };
        let end = polyline.len() - 1;
        if let Some(k) = piece.cell {
            match cell_spans.get_mut(k) {
                Some(span) => span.1 = end,
                None => cell_spans.push((start, end)),
            }
        }
    }
    Ok(ChainedBeam {
        polyline,
        cell_spans,
    })
}
