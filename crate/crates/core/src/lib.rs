//! Exit-law toolkit for overdamped Langevin diffusions in bounded domains.
//!
//! Given a smooth Morse potential on an interval or planar ball, this crate
//! locates the critical landscape, builds the sublevel-set merge structure
//! (separating saddles, well labeling, maximal well), evaluates closed-form
//! exit-law and eigenvalue asymptotics, and validates them against Monte
//! Carlo simulation, exact 1D quadrature, and a 1D Dirichlet eigensolver.

pub mod asymptotics;
pub mod error;
pub mod landscape;
pub mod oracle1d;
pub mod potential;
pub mod sampler;
pub mod spectral1d;
pub mod topology;

pub use error::CoreError;
pub use potential::{DomainGeometry, PotentialField, PotentialSource, PotentialSpec};
