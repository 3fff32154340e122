use thiserror::Error;

use crate::analysis::EmulatedCurve;
use crate::continuation::EquilibriumPath;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry infeasible: {0}")]
    GeometryInfeasible(String),

    #[error("specification error: {0}")]
    Specification(String),

    #[error("element {element} collapsed to length {length:e} mm")]
    SingularElement { element: usize, length: f64 },

    #[error("matrix is singular at pivot {pivot} (value {value:e})")]
    SingularMatrix { pivot: usize, value: f64 },

    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    #[error("tangent is singular at control {control}; a fold is nearby, switch to arc-length control")]
    FoldSingularity { control: f64 },

    #[error("path trace stalled at control {control} mm after {points} points")]
    TraceStalled {
        control: f64,
        points: usize,
        partial: Box<EquilibriumPath>,
    },

    #[error("displacement-control emulation incomplete: no stable landing at control {control} mm")]
    EmulationIncomplete {
        control: f64,
        partial: Box<EmulatedCurve>,
    },

    #[error("time integration unstable at t = {time} s; use a smaller step")]
    Integration { time: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
