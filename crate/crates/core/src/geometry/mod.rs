//! Layered-chain geometry: partitions, meshes and mesh I/O.

pub mod domain;
pub mod mesh;
pub mod msh;

pub use domain::{
    build_layered_partition, validate_regularity, DomainSpec, FnGraph, GraphFunction, InterfaceShape,
    PartitionedDomain, RegularityReport, SampleWindow, SigmaRegion, SlabExtension,
};
pub use mesh::{ball_mesh, boundary_faces, extend_with_d0, generate_mesh, BoundaryFacet, FacetTag, Mesh};
pub use msh::{ingest_mesh, parse_msh, write_msh, write_msh_string, IngestReport};
