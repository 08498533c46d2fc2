//! Finite-element layer: quadrature, broken per-edge spaces, elemental
//! operators, block assembly and the sparse direct solve.

pub mod assembly;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;

pub use assembly::{
    assemble_divergence, assemble_jump_matrix, assemble_load, assemble_saddle,
    assemble_stiffness, assemble_weighted_mass, BlockSystem, QuadPoint,
};
pub use quadrature::QuadratureRule;
pub use solver::{relative_residual, solve_matrix, solve_sparse, SparseLu};
pub use space::{DiscreteFunction, EdgeSpace, Element};
pub use sparse::{CsrMatrix, Triplets};
