//! Snapping spiral metabeams: geometry, nonlinear frame mechanics, path
//! continuation, loading emulation and a resistive swimmer model.

pub mod analysis;
pub mod beam;
pub mod continuation;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod pipeline;
pub mod plot;
pub mod robot;
pub mod scenario;
pub mod verify;

pub use error::{Error, Result};

/// Version string embedded in every JSON artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
