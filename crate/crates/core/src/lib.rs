//! Numerical engine for biconservative (H-) hypersurfaces of Euclidean
//! space with three distinct principal curvatures.
//!
//! * [`surface`] and [`geometry`]: charts, derivative jets, fundamental
//!   forms and principal curvature spectra.
//! * [`analysis`]: pointwise and grid-wide checks of the H-condition, the
//!   Codazzi equations, connection forms and related identities.
//! * [`profile`]: the profile-curve ODEs and their adaptive integration.
//! * [`factory`]: generalized rotational hypersurfaces, generalized
//!   cylinders and reference surfaces with exact jets.

pub mod analysis;
pub mod error;
pub mod factory;
pub mod linalg;
pub mod profile;
pub mod report;
pub mod surface;
pub mod geometry;
pub mod grid;
pub mod taylor;
pub mod tolerances;

pub use error::{GeomError, Result};
