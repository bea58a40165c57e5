//! Decision and realization toolkit for punctured pseudoholomorphic
//! spheres in `R x (S^1 x S^2)`.
//!
//! The crate decides, from a finite asymptotic data set, whether the
//! corresponding moduli space is non-empty (through positive line graphs
//! and moduli-space graphs), computes its formal dimension, and samples
//! and verifies explicit cylinder parametrizations of candidate surfaces.
//!
//! Modules:
//!
//! * [`algebra`] - exact integer predicates for orbit angles.
//! * [`dataset`] - asymptotic data sets and their validation.
//! * [`linegraph`] - positive line graphs and the non-emptiness decision.
//! * [`moduligraph`] - moduli-space graphs, zipper moves, linearization.
//! * [`index`] - dimension and counting formulas.
//! * [`geometry`] - the ambient frame and the cylinder PDE residual.
//! * [`sampler`] - chart sampling, verification, decay fits, exporters.
//! * [`par`] - data-parallel grid loops with a sequential fallback.

pub mod algebra;
pub mod dataset;
pub mod geometry;
pub mod index;
pub mod jsonc;
pub mod linegraph;
pub mod moduligraph;
pub mod par;
pub mod sampler;
