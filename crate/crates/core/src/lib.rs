//! Exact finite-instance machinery for lifting randomized query complexity to
//! communication complexity through the index gadget.

pub mod affine;
pub mod analysis;
pub mod dist;
pub mod entropy;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod gadget;
pub mod protocol;
pub mod simulate;

pub use dist::ExactDist;
pub use entropy::{DensityPart, SetVar};
pub use error::{Error, Result};
pub use exact::{Bits, Q};
pub use gadget::{Budget, ComposedInstance, GadgetSpec, OuterFunction, PartialAssignment, Rect, Subset};
