//! Numerical laboratory for Riemannian submersions from compact matrix Lie
//! groups with bi-invariant metrics: closed-form Jacobi fields, holonomy
//! Jacobi fields of biquotients, horizontal flats, boundedness audits, and a
//! twisted-product submersion whose holonomy Jacobi fields grow without bound.

pub mod biquotient;
pub mod boundedness;
pub mod error;
pub mod example_e;
pub mod flats;
pub mod jacobi;
pub mod linalg;
pub mod liegroup;
pub mod sampling;
pub mod scenario;

pub use error::{Error, Result};
