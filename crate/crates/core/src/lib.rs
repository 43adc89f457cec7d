//! Surface-state spectral densities of magnetic Neumann Schrödinger
//! operators.

pub mod ball3d;
pub mod degennes;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod halfcylinder;
pub mod linalg;
pub mod lupan;
pub mod quad;

pub use error::{Error, Result};
