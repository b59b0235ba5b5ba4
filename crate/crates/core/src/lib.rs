//! Simulation laboratory for the chromatic-number scaling windows of random
//! triangle-free graphs and for the bipartite random 2-SAT scaling window.
//!
//! The crate provides:
//!
//! * exact planted-bipartition samplers for triangle-free graphs
//!   ([`sampler`]), built on exact hard-core sampling over the defect product
//!   graph ([`hardcore`]),
//! * the green-edge-coloring reduction from 3-colorability to bipartite 2-SAT
//!   ([`coloring`], [`twosat`]) together with the per-cycle coupling against
//!   independent clauses ([`coupling`]),
//! * exact enumeration of connected bipartite subgraphs and the closed-form
//!   cluster laws of the implication digraph ([`enumeration`]),
//! * the Karp-style bipartite exploration process ([`branching`]),
//! * threshold and window parameter computations ([`numerics`]),
//! * batch experiment drivers behind the `tfg` CLI ([`experiments`]).

pub mod branching;
pub mod coloring;
pub mod coupling;
pub mod enumeration;
pub mod experiments;
pub mod graphcore;
pub mod hardcore;
pub mod numerics;
pub mod sampler;
pub mod stats;
pub mod twosat;

mod rng;

pub use rng::stream_rng;
