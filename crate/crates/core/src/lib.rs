//! Numerical study of satellite motion along the axis of a symmetric
//! planar n-body configuration.
//!
//! The crate constructs certified primary configurations, deforms them
//! through a radius homotopy toward a circular reference problem, solves
//! the conservative reference by quadrature, continues the resulting
//! periodic orbits back to the true primary motion by one-dimensional
//! shooting, and validates every branch with winding-number zero counts
//! and Neumann Sturm-Liouville diagnostics of the trivial solution.

pub mod conservative;
pub mod continuation;
pub mod error;
pub mod field;
pub mod fourier;
pub mod io;
pub mod ode;
pub mod par;
pub mod primaries;
pub mod quad;
pub mod rootfind;
pub mod shooting;
pub mod spectral;

pub use error::{Error, Result};
