//! Local Dirichlet-to-Neumann maps on the boundary patch and their norms.

pub mod basis;
pub mod dtn;
pub mod gram;
pub mod persist;

pub use basis::{build_sigma_basis, SigmaBasis};
pub use dtn::{assemble_dtn, relative_asymmetry, star_norm, whitened_norm, DtnAssembler, DtnMatrix, DtnSolution};
pub use gram::{assemble_h_half_gram, surface_matrices, HalfGram};
pub use persist::{read_dtn, verify_mesh_hash, write_dtn, DtnHeader};
