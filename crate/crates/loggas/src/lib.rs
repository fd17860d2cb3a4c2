//! Numerical toolkit for multi-cut β-ensemble log-gases.

pub mod cheb;
pub mod contour;
pub mod equilibrium;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod interaction;
pub mod io;
pub mod master_operator;
pub mod potentials;
pub mod quad;
pub mod sampler;
pub mod statistics;
pub mod transport;

pub use equilibrium::{solve_equilibrium, EquilibriumMeasure, SolveOptions};
pub use error::{Error, Result};
pub use geometry::{GeometryConfig, SupportGeometry};
pub use potentials::Potential;
