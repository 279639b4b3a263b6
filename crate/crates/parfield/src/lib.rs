//! Electrons from a fixed-energy point source in parallel uniform electric
//! and magnetic fields: classical trajectories and caustics, primitive and
//! uniform semiclassical wavefunctions, and the exact quantum Green function.

pub mod caustics;
pub mod classical;
pub mod error;
pub mod profile;
pub mod quantum;
pub mod scales;
pub mod semiclassics;
pub mod specfun;

pub use error::{Error, Result};
pub use scales::{derive_scales, FieldSetup, PhysicalPoint};
