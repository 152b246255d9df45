//! Numerical verification of total-curvature and isoperimetric bounds for
//! closed hypersurfaces in products of Euclidean, hyperbolic and SPD
//! symmetric spaces.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod busemann;
pub mod error;
pub mod gauss;
pub mod lie;
pub mod numeric;
pub mod sampling;
pub mod space;
pub mod surface;
pub mod tolerances;
pub mod verify;

pub use error::{Error, Result};
