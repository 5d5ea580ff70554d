#![allow(dead_code)]

use lame_dtn::boundary::DtnAssembler;
use lame_dtn::forward::CgOptions;
use lame_dtn::geometry::{build_layered_partition, generate_mesh, DomainSpec, InterfaceShape, Mesh, PartitionedDomain, SigmaRegion};
use lame_dtn::material::LameParams;
use lame_dtn::Exec;

pub const ALPHA0: f64 = 0.5;
pub const BETA0: f64 = 1.0;

pub fn spec(interfaces: Vec<InterfaceShape>) -> DomainSpec {
    DomainSpec {
        box_dims: [1.0, 1.0, 1.0],
        r0: 1.0,
        interfaces,
        sigma: SigmaRegion { x: [0.0, 1.0], y: [0.0, 1.0] },
        l_const: 2.0,
        alpha: 0.5,
        volume_bound: 1.0,
        regularity_grid: None,
    }
}

/// Unit cube, one subdomain.
pub fn cube() -> PartitionedDomain {
    build_layered_partition(&spec(vec![])).unwrap()
}

/// Unit cube split at `x3 = 1/2`.
pub fn two_layer() -> PartitionedDomain {
    build_layered_partition(&spec(vec![InterfaceShape::Flat { level: 0.5 }])).unwrap()
}

pub fn mesh(domain: &PartitionedDomain, n: usize) -> Mesh {
    generate_mesh(domain, n).unwrap()
}

pub fn dtn_assembler(domain: &PartitionedDomain, n: usize) -> DtnAssembler {
    DtnAssembler::new(&mesh(domain, n), domain.r0, CgOptions::default(), Exec::default()).unwrap()
}

/// `(lam, mu) = (1, 1)` above, `(2, 1.5)` below.
pub fn two_layer_truth() -> LameParams {
    LameParams::new(&[1.0, 2.0], &[1.0, 1.5], ALPHA0, BETA0).unwrap()
}
