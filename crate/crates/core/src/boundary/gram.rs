//! Discrete `H^{1/2}` inner product on the patch by spectral interpolation
//! between the surface mass and surface stiffness matrices.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::basis::SigmaBasis;
use crate::error::{Error, Result};
use crate::geometry::{FacetTag, Mesh};

/// `G = M V (I + Theta)^{1/2} V^T M` for the pencil `S V = M V Theta`,
/// `V^T M V = I`, together with `G^{-1/2}`.
///
/// The vector form is the scalar form repeated per component, so every
/// matrix here is `kron(scalar, I_3)` in the vertex-major basis ordering.
#[derive(Debug, Clone)]
pub struct HalfGram {
    /// Scalar surface mass `r0^-2 int phi_i phi_j`.
    pub mass: DMatrix<f64>,
    /// Scalar surface stiffness `int grad phi_i . grad phi_j`.
    pub stiffness: DMatrix<f64>,
    /// Generalized eigenvalues, ascending.
    pub theta: DVector<f64>,
    /// M-orthonormal generalized eigenvectors (columns).
    pub modes: DMatrix<f64>,
    /// Scalar Gram matrix.
    pub scalar: DMatrix<f64>,
    /// Full `m x m` Gram matrix.
    pub gram: DMatrix<f64>,
    /// Full `G^{-1/2}`.
    pub inv_sqrt: DMatrix<f64>,
}

fn kron_i3(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let mut out = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        for j in 0..n {
            let v = s[(i, j)];
            if v != 0.0 {
                for c in 0..3 {
                    out[(3 * i + c, 3 * j + c)] = v;
                }
            }
        }
    }
    out
}

/// Scalar P1 surface mass and stiffness on the SIGMA facets, restricted to
/// the basis vertices.
pub fn surface_matrices(mesh: &Mesh, basis: &SigmaBasis, r0: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let pos = basis.vertex_position();
    let n = basis.vertices.len();
    let mut mass = DMatrix::zeros(n, n);
    let mut stiff = DMatrix::zeros(n, n);
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    for f in mesh.boundary_facets.iter().filter(|f| f.tag == FacetTag::Sigma) {
        let p = f.vertices.map(|v| mesh.vertices[v]);
        let (e1, e2) = (sub(p[1], p[0]), sub(p[2], p[0]));
        let cross = [e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]];
        let area = 0.5 * dot(cross, cross).sqrt();
        // edge opposite to local vertex k
        let opp = [sub(p[2], p[1]), sub(p[0], p[2]), sub(p[1], p[0])];
        for a in 0..3 {
            let Some(&i) = pos.get(&f.vertices[a]) else { continue };
            for b in 0..3 {
                let Some(&j) = pos.get(&f.vertices[b]) else { continue };
                let m = if a == b { area / 6.0 } else { area / 12.0 };
                mass[(i, j)] += m / (r0 * r0);
                stiff[(i, j)] += dot(opp[a], opp[b]) / (4.0 * area);
            }
        }
    }
    (mass, stiff)
}

pub fn assemble_h_half_gram(mesh: &Mesh, basis: &SigmaBasis, r0: f64) -> Result<HalfGram> {
    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    let (mass, stiffness) = surface_matrices(mesh, basis, r0);
    let chol = mass
        .clone()
        .cholesky()
        .ok_or_else(|| Error::EigFail("surface mass is not positive definite".into()))?;
    let l = chol.l();
    // A = L^-1 S L^-T
    let y = l
        .solve_lower_triangular(&stiffness)
        .ok_or_else(|| Error::EigFail("singular Cholesky factor".into()))?;
    let a = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::EigFail("singular Cholesky factor".into()))?;
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigFail("non-finite eigenvalues of the surface pencil".into()));
    }
    // sort ascending
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let theta = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i].max(0.0)));
    let w = DMatrix::from_columns(&order.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    let modes = l
        .transpose()
        .solve_upper_triangular(&w)
        .ok_or_else(|| Error::EigFail("singular Cholesky factor".into()))?;

    // G = L W diag(sqrt(1+theta)) W^T L^T
    let lw = &l * &w;
    let mut scaled = lw.clone();
    for (k, mut col) in scaled.column_iter_mut().enumerate() {
        col *= (1.0 + theta[k]).sqrt();
    }
    let scalar = &scaled * lw.transpose();
    let scalar = (&scalar + scalar.transpose()) * 0.5;

    let geig = SymmetricEigen::new(scalar.clone());
    let gmin = geig.eigenvalues.min();
    let gmax = geig.eigenvalues.max();
    if !(gmin > 1e-14 * gmax) {
        return Err(Error::EigFail(format!("Gram matrix not positive definite (min eigenvalue {gmin:e})")));
    }
    let q = &geig.eigenvectors;
    let mut qs = q.clone();
    for (k, mut col) in qs.column_iter_mut().enumerate() {
        col *= 1.0 / geig.eigenvalues[k].sqrt();
    }
    let inv_sqrt_scalar = &qs * q.transpose();
    let inv_sqrt_scalar = (&inv_sqrt_scalar + inv_sqrt_scalar.transpose()) * 0.5;

    Ok(HalfGram {
        gram: kron_i3(&scalar),
        inv_sqrt: kron_i3(&inv_sqrt_scalar),
        mass,
        stiffness,
        theta,
        modes,
        scalar,
    })
}
