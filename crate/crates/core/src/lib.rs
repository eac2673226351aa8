//! Packing edge-disjoint Hamilton cycles in sparse random graphs.
//!
//! The pipeline splits `G(n,p)` into exposure rounds, builds path systems from
//! regular bipartite factors and matching decompositions, and closes each
//! system into a Hamilton cycle with Pósa rotations and booster edges. Every
//! returned cycle is certified against the input graph.

pub mod binomial;
pub mod exposure;
pub mod flow;
pub mod graph;
pub mod matching;
pub mod pipeline;
pub mod posa;
pub mod regular;
pub mod report;
pub mod rng;
