//! Canonical cell decompositions of cusped convex projective manifolds.
//!
//! Given a holonomy representation into SL(n+1,ℝ) together with a properly
//! convex cone model, this crate lifts parabolic fixed points to the
//! lightcone, takes the convex hull of their group orbit, certifies which
//! hull facets are unaffected by un-enumerated orbit points, and
//! projectivizes the stable facets into a cell decomposition with face
//! pairings. Characteristic functions of convex cones, horofunctions, and
//! horoballs provide the metric-free toolkit behind the construction, and
//! a deformation module rebuilds the decomposition as a triangulated
//! polytope under small perturbations of the holonomy.

pub mod cone;
pub mod decomp;
pub mod deform;
pub mod error;
pub mod fixtures;
pub mod group;
pub mod hull;
pub mod linalg;
pub mod tolerance;
pub(crate) mod vecjson;

pub use error::{Error, Result};
pub use tolerance::ToleranceConfig;
