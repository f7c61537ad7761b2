//! Multigroup slab criticality kit: discrete-ordinates transport, nonlinear
//! diffusion acceleration, Jacobian-free Newton-Krylov eigensolves and
//! multilevel Schwarz preconditioning with subspace-based coarsening.

pub mod coarsen;
pub mod config;
pub mod dense;
pub mod discretization;
pub mod eigen;
pub mod error;
pub(crate) mod keyvalue;
pub mod krylov;
pub mod multilevel;
pub mod nda;
pub mod operator;
pub mod partition;
pub mod report;
pub mod schwarz;
pub mod sparse;

pub use error::{Error, Result};
pub use sparse::{DenseVector, SparseMatrix};
