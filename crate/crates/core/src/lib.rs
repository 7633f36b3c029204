//! Harmonic maps of the Riemann sphere into complex Grassmannians and flag
//! manifolds, realised concretely: subbundles of a trivial bundle are carried
//! by polynomial frames in `z` and `conj(z)`, projector fields and their jets
//! are evaluated exactly, and the classical constructions (splitting types,
//! twistor lifts, Grothendieck factorisation, polarised-space models) are
//! exposed as checkable computations.

pub mod bipoly;
pub mod bundle;
pub mod catalog;
pub mod error;
pub mod flags;
pub mod hs;
pub mod numeric;
pub mod sphere;
pub mod splitting;
pub mod tol;
pub mod twistor;

pub use error::{Error, Result};
pub use tol::ToleranceConfig;
