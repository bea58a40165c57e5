//! Labeled contractible graphs: moduli-space graphs, the looser positive
//! graphs closed under the zipper moves, the expansion of a line graph
//! into a moduli-space graph, and the move-based linearization back.
//!
//! Trivalent vertices need generic angles, distinct from every orbit
//! angle in sight; they are parked at [`AngleToken`]s (an anchor angle
//! plus an infinitesimal rational offset) so that all order and sign
//! tests remain exact integer work.

mod expand;
mod graph;
mod moves;
mod validate;

pub use expand::{expand_to_moduli_graph, ExpandError};
pub use graph::{
    BiPayload, Edge, GraphError, MonoPayload, ModuliSpaceGraph, PositiveGraph, Vertex, VertexKind,
};
pub use moves::{apply_move, linearize, MoveError, MoveRecord};
pub use validate::{validate_moduli_graph, validate_positive_graph, ConstraintFailure, GraphReport};
