//! Classical and quantum dynamics of a two-level atom in a phase-modulated
//! standing wave.

pub mod bessel;
pub mod classical;
pub mod error;
pub mod hamiltonians;
mod linalg;
pub mod params;
pub mod perturbation;
pub mod pes;
pub mod quantum;

pub use error::{Error, Result};
pub use hamiltonians::{HamiltonianVariant, Model};
pub use params::{DimensionlessParams, PhysicalParams};
