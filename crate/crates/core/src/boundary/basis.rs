use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::{FacetTag, Mesh};

/// Boundary dofs whose nodal hat function is supported in the closed patch:
/// every vertex of a SIGMA facet that does not lie on the rim of the SIGMA
/// surface, with all three components. Ordered vertex-major
/// (`3 i + component`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaBasis {
    pub vertices: Vec<usize>,
    pub dofs: Vec<usize>,
}

impl SigmaBasis {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Position of a vertex in `vertices`.
    pub fn vertex_position(&self) -> HashMap<usize, usize> {
        self.vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect()
    }
}

pub fn build_sigma_basis(mesh: &Mesh) -> Result<SigmaBasis> {
    let mut edge_count: HashMap<(usize, usize), u32> = HashMap::new();
    let mut on_sigma = vec![false; mesh.n_vertices()];
    for f in mesh.boundary_facets.iter().filter(|f| f.tag == FacetTag::Sigma) {
        let v = f.vertices;
        for k in 0..3 {
            let (a, b) = (v[k], v[(k + 1) % 3]);
            *edge_count.entry((a.min(b), a.max(b))).or_default() += 1;
            on_sigma[v[k]] = true;
        }
    }
    let mut rim = vec![false; mesh.n_vertices()];
    for (&(a, b), &c) in &edge_count {
        if c == 1 {
            rim[a] = true;
            rim[b] = true;
        }
    }
    let vertices: Vec<usize> = (0..mesh.n_vertices()).filter(|&v| on_sigma[v] && !rim[v]).collect();
    if vertices.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let dofs = vertices.iter().flat_map(|&v| [3 * v, 3 * v + 1, 3 * v + 2]).collect();
    Ok(SigmaBasis { vertices, dofs })
}
