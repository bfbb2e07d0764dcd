//! Context-based space-filling curves for images.
//!
//! A scan order over an even-sized pixel grid is parameterized by one real
//! weight per edge of the dual graph built over covering 2x2 circuits:
//! a minimum spanning tree of those weights selects which circuits merge,
//! and merging plus a fixed cut yields a Hamiltonian path. On top of that
//! construction this crate provides
//!
//! - context-agnostic baselines (raster, serpentine, Hilbert) and a
//!   resolution-doubling rule ([`universal`]),
//! - objectives over flattened pixel sequences: lag-k autocorrelation and
//!   bit-exact LZW code length ([`objective`], [`lzw`]),
//! - a learned weight generator/evaluator pair trained by alternating
//!   minimization against the (non-differentiable) objectives, plus a
//!   simulated-annealing baseline and a finite-difference gradient audit
//!   ([`learner`]).

pub mod cover;
pub mod error;
pub mod grid;
pub mod image;
pub mod learner;
pub mod lzw;
pub mod objective;
pub mod universal;

pub use cover::{
    cut_to_order, dafner_weights, merge, minimum_spanning_tree, sfc_from_weights, EdgeWeights,
    HamiltonianCircuit, SfcOrder, SpanningTree,
};
pub use error::{Error, Result};
pub use grid::{
    build_dual, build_line_graph, circuit_cover, cross_edges, dual_edge_count, CircuitId,
    DualEdgeId, DualGraph, GridSize, LineGraph, PixelEdge, PixelEdgeQuad, PixelId,
};
pub use image::{GrayImage, ImageBatch};
pub use objective::{
    autocorrelation, flatten, normalized_objective, objective, ObjectiveKind, PixelSequence,
};
pub use universal::{scale_order, universal_order, CurveKind};
