//! Discontinuous Galerkin finite elements with Nitsche-blended cohesive
//! interfaces on every element face, for 2D small-strain elasticity.
//!
//! Cracks nucleate and grow along element boundaries: each interior face
//! carries a compliance obtained from a mixed-mode traction-separation law,
//! and the same bilinear form covers the intact (zero compliance) and the
//! fully separated regimes.

pub mod mesh;
pub mod material;
pub mod cohesive;
pub mod sparse;
pub mod dg;
pub mod solver;
