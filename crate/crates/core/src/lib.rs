//! Numerical laboratory for the saddle solution of the three-dimensional
//! complex Ginzburg-Landau system −Δu = u(1−|u|²) whose zero set is the cross
//! X = {xy=0, z=0}: two perpendicular lines through the origin.
//!
//! The construction minimizes the Ginzburg-Landau energy on the octant
//! Q_R = {x,y,z>0} ∩ B_R under the symmetry class u∘R_x = −ū, u∘R_y = −ū,
//! u∘R_z = ū (equivalently, mixed Dirichlet–Neumann face conditions) with an
//! explicit S¹-valued boundary datum carrying vortices of degree +1 around
//! ±e₁ and −1 around ±e₂. The crate also ships the analytic competitor maps,
//! their energy quadrature with the 4π·r·log r growth law, and the
//! verification battery: zero-set extraction, winding numbers, energy-growth
//! fits, clearing-out and blow-down concentration diagnostics.

pub mod analysis;
pub mod boundary;
pub mod competitors;
pub mod energy;
pub mod geometry;
pub mod io;
pub mod numerics;
pub mod solver;
pub mod sphere_mesh;

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("mesh too coarse: {0}")]
    MeshTooCoarse(String),
    #[error("vortex singularity: {0}")]
    VortexPoint(String),
    #[error("under-resolved: {0}")]
    UnderResolved(String),
    #[error("region error: {0}")]
    Region(String),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
