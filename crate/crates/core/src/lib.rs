//! Flow models on metric graphs.
//!
//! Networks of straight edges embedded in 3D are meshed edge by edge and
//! discretised with mixed finite elements that are broken at the graph
//! vertices. Mass conservation at junctions is imposed with one Lagrange
//! multiplier per interior vertex, which doubles as the junction pressure.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod error;
pub mod fem;
pub mod mesh;
pub mod mms;
pub mod models;
pub mod network;
pub mod pulsatile;

pub use error::{Error, Result};
pub use mesh::NetworkMesh;
pub use network::{
    classify_vertices, generate_line, generate_tree, generate_y, BoundaryKind, Edge, Network,
    TreeParams, Vertex, VertexClassification,
};
