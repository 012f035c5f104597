//! Inverse design for first-order Hamilton-Jacobi equations on sampled grids.
//!
//! Forward and backward Hopf-Lax operators, reachability tests, the set of
//! initial data reaching a target, semiconcave envelopes, and a
//! vanishing-viscosity finite-difference solver used for cross-checks.

pub mod catalog;
pub mod envelope;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod hopflax;
pub mod hull;
pub mod inverse_set;
pub mod lower_envelope;
pub mod piecewise;
pub mod reachability;
pub mod viscosity;

pub use error::{Error, Result};
pub use grid::{Extension, Grid, GridFn};
pub use hamiltonian::{Hamiltonian, HamiltonianDescriptor, Scalar1D, SpdMatrix};
pub use piecewise::PiecewiseSpec;
