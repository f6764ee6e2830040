//! Two-dimensional finite-element library for frictionless elastostatic
//! contact between deformable bodies.
//!
//! The solver combines:
//!
//! - hierarchical quadrilateral meshes with non-conforming h-refinement
//!   (2:1 balanced, hanging nodes constrained through a prolongation
//!   operator),
//! - super-parametric geometry: the element transformation is a tensor
//!   Lagrange polynomial of order `q` that may exceed the solution order,
//!   so curved boundaries survive refinement without re-projection,
//! - node-to-node contact pairing with penalty enforcement and an
//!   active-set fixed-point loop,
//! - Zienkiewicz–Zhu stress recovery driving an estimate–mark–stop–refine
//!   adaptive loop with either a global (equidistributed) or a local
//!   error criterion,
//! - a deterministic, contact-aware element-to-rank partition planner.
//!
//! The `parallel` feature (on by default) parallelizes element loops and
//! sparse matrix-vector products with rayon; without it every kernel falls
//! back to the sequential implementation.

pub mod amr;
pub mod basis;
pub mod contact;
pub mod error;
pub mod fem;
pub mod hertz;
pub mod mesh;
pub mod partition;
pub mod quadrature;
pub mod sparse;
pub mod study;
pub mod vtk;

pub(crate) mod parallel;

pub use error::{Error, Result};
