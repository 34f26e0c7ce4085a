//! Rough-channel Poisson laboratory: meshes, finite elements, boundary-layer
//! cell problems, wall laws and convergence studies.

pub mod boundary_layers;
pub mod cell;
pub mod error;
pub mod fem;
pub mod fourier;
pub mod io_util;
pub mod lab;
pub mod mesh;
pub mod profile;
pub mod spline;
pub mod wall_laws;

pub use error::{Error, Result};
