//! Solvers and verifiers for one-dimensional BPS domain walls.
//!
//! - [`grid`]: uniform grids, quadrature, differences, tail fits.
//! - [`abelian_wall`]: Liouville-type walls by first-integral marching.
//! - [`liouville_cs`]: closed-form Chern-Simons walls, lumps, energies.
//! - [`wspace`]: the weighted space, its measure and background functions.
//! - [`u2_minimizer`], [`ew_minimizer`]: variational solves of coupled walls.
//! - [`verify`]: second-order residual and gradient checks.

pub mod abelian_wall;
pub mod error;
pub mod ew_minimizer;
pub mod grid;
pub mod liouville_cs;
mod ode;
pub mod optim;
pub mod u2_minimizer;
pub mod verify;
pub mod wspace;

pub use error::{Error, Result};
pub use grid::{Grid, Profile, Rule, TailFit, TailModel};
