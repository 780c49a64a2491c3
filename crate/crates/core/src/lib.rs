//! Exact series solutions for orthotropic diffusion in a cube with no-flux
//! walls, their spatial moments, a reference finite-difference solver and
//! Grid Convergence Index estimation.
//!
//! Units: lengths in m, time in s, diffusivities in m²/s, mass in µg,
//! concentrations in µg/m³. Every built-in initial condition carries unit mass.

pub mod fd;
pub mod field;
pub mod gci;
pub mod io;
pub mod moments;
pub mod quadrature;
pub mod series;
pub mod special;
pub mod tensor;

pub use fd::{FdConfig, FdError, FdState};
pub use field::Field3;
pub use gci::{GciError, GciReport, GridTriple};
pub use moments::{MomentError, MomentSet, NormalizedMoments};
pub use series::{InitialCondition, SeriesError, SeriesSolution};
pub use tensor::{OrthotropicModel, SymmetricTensor3, TensorError};

/// Umbrella error carrying the originating module.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("tensor: {0}")]
    Tensor(#[from] TensorError),
    #[error("series: {0}")]
    Series(#[from] SeriesError),
    #[error("moments: {0}")]
    Moments(#[from] MomentError),
    #[error("fd: {0}")]
    Fd(#[from] FdError),
    #[error("gci: {0}")]
    Gci(#[from] GciError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
