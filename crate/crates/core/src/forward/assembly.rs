//! P1 elasticity stiffness assembly and the Dirichlet solver.

use nalgebra::{Matrix3, Vector3};

use super::cg::{pcg, CgOptions, CgStats};
use super::sparse::CsrMatrix;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::geometry::Mesh;
use crate::material::LameParams;

/// Volumes and barycentric gradients of every tetrahedron.
#[derive(Debug, Clone)]
pub struct ElementCache {
    pub volumes: Vec<f64>,
    pub grads: Vec<[Vector3<f64>; 4]>,
    pub tets: Vec<[usize; 4]>,
    pub labels: Vec<usize>,
}

impl ElementCache {
    pub fn new(mesh: &Mesh) -> ElementCache {
        let mut volumes = Vec::with_capacity(mesh.tets.len());
        let mut grads = Vec::with_capacity(mesh.tets.len());
        for t in 0..mesh.tets.len() {
            let p = mesh.tet_points(t).map(|q| Vector3::new(q[0], q[1], q[2]));
            let jac = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
            let det = jac.determinant();
            let inv = jac.try_inverse().unwrap_or_else(Matrix3::zeros);
            let g1 = inv.row(0).transpose();
            let g2 = inv.row(1).transpose();
            let g3 = inv.row(2).transpose();
            grads.push([-(g1 + g2 + g3), g1, g2, g3]);
            volumes.push(det.abs() / 6.0);
        }
        ElementCache { volumes, grads, tets: mesh.tets.clone(), labels: mesh.labels.clone() }
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    /// Displacement gradient of a nodal field `u` (3 entries per vertex) on tet `t`.
    pub fn displacement_gradient(&self, t: usize, u: &[f64]) -> Matrix3<f64> {
        let mut g = Matrix3::zeros();
        for (a, &v) in self.tets[t].iter().enumerate() {
            let ga = &self.grads[t][a];
            for i in 0..3 {
                let ui = u[3 * v + i];
                for j in 0..3 {
                    g[(i, j)] += ui * ga[j];
                }
            }
        }
        g
    }

    /// Symmetric gradient (small strain).
    pub fn strain(&self, t: usize, u: &[f64]) -> Matrix3<f64> {
        let g = self.displacement_gradient(t, u);
        (g + g.transpose()) * 0.5
    }

    /// 12x12 element matrix, row-major, exactly symmetric.
    pub fn element_matrix(&self, t: usize, lam: f64, mu: f64) -> [f64; 144] {
        let vol = self.volumes[t];
        let g = &self.grads[t];
        let mut ke = [0.0; 144];
        for a in 0..4 {
            for b in a..4 {
                let gab = g[a].dot(&g[b]);
                for i in 0..3 {
                    for j in 0..3 {
                        let r = 3 * a + i;
                        let c = 3 * b + j;
                        if c < r {
                            continue;
                        }
                        let delta = if i == j { gab } else { 0.0 };
                        let v = vol * (lam * g[a][i] * g[b][j] + mu * (delta + g[a][j] * g[b][i]));
                        ke[12 * r + c] = v;
                        ke[12 * c + r] = v;
                    }
                }
            }
        }
        ke
    }
}

/// Sparse stiffness matrix over 3 dofs per vertex (`dof = 3 v + component`),
/// with the Dirichlet set of all boundary dofs.
#[derive(Debug, Clone)]
pub struct StiffnessSystem {
    pub k: CsrMatrix,
    pub n_vertices: usize,
    /// Per dof: prescribed (on the boundary) or free.
    pub dirichlet: Vec<bool>,
}

impl StiffnessSystem {
    pub fn n_dofs(&self) -> usize {
        3 * self.n_vertices
    }
}

/// Reusable sparsity pattern and scatter map for one mesh.
#[derive(Debug, Clone)]
pub struct Assembler {
    pub cache: ElementCache,
    pattern: CsrMatrix,
    scatter: Vec<[u32; 144]>,
    n_vertices: usize,
    dirichlet: Vec<bool>,
}

impl Assembler {
    pub fn new(mesh: &Mesh) -> Assembler {
        let cache = ElementCache::new(mesh);
        let n = mesh.n_dofs();
        let mut pairs = Vec::with_capacity(mesh.tets.len() * 144);
        for t in &mesh.tets {
            for &va in t {
                for &vb in t {
                    for i in 0..3 {
                        for j in 0..3 {
                            pairs.push((3 * va + i, 3 * vb + j));
                        }
                    }
                }
            }
        }
        let pattern = CsrMatrix::from_pattern(n, n, pairs);
        let scatter = mesh
            .tets
            .iter()
            .map(|t| {
                let mut s = [0u32; 144];
                for r in 0..12 {
                    for c in 0..12 {
                        let gr = 3 * t[r / 3] + r % 3;
                        let gc = 3 * t[c / 3] + c % 3;
                        s[12 * r + c] = pattern.position(gr, gc).expect("pattern entry") as u32;
                    }
                }
                s
            })
            .collect();
        let mut dirichlet = vec![false; n];
        for (v, &b) in mesh.boundary_vertex_mask().iter().enumerate() {
            if b {
                dirichlet[3 * v..3 * v + 3].fill(true);
            }
        }
        Assembler { cache, pattern, scatter, n_vertices: mesh.n_vertices(), dirichlet }
    }

    pub fn n_dofs(&self) -> usize {
        3 * self.n_vertices
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    /// Check that every element label indexes into `p`.
    pub fn check_labels(&self, p: &LameParams) -> Result<()> {
        let len = p.lam.len().min(p.mu.len());
        match self.cache.labels.iter().find(|&&l| l >= len) {
            Some(&label) => Err(Error::LabelOutOfRange { label, len }),
            None => Ok(()),
        }
    }

    /// Global stiffness for the moduli `p`.
    ///
    /// Element matrices may be computed in parallel; the scatter runs in
    /// element order, so `K` is bitwise reproducible and exactly symmetric.
    pub fn assemble(&self, p: &LameParams, exec: Exec) -> Result<StiffnessSystem> {
        self.check_labels(p)?;
        let elems = exec.map_range(self.cache.len(), |t| {
            let l = self.cache.labels[t];
            self.cache.element_matrix(t, p.lam[l], p.mu[l])
        });
        let mut k = self.pattern.clone();
        for (ke, s) in elems.iter().zip(&self.scatter) {
            for (v, &pos) in ke.iter().zip(s.iter()) {
                k.values[pos as usize] += v;
            }
        }
        Ok(StiffnessSystem { k, n_vertices: self.n_vertices, dirichlet: self.dirichlet.clone() })
    }
}

/// Assemble the stiffness of `mesh` for the moduli `p`.
pub fn assemble_stiffness(mesh: &Mesh, p: &LameParams) -> Result<StiffnessSystem> {
    Assembler::new(mesh).assemble(p, Exec::default())
}

/// Interior/boundary split of a stiffness system, ready for repeated solves.
#[derive(Debug, Clone)]
pub struct DirichletSolver {
    pub k: CsrMatrix,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    pub k_ii: CsrMatrix,
    pub k_ib: CsrMatrix,
    inv_diag: Vec<f64>,
    /// Position of a dof within `boundary`, or `usize::MAX`.
    boundary_pos: Vec<usize>,
    interior_pos: Vec<usize>,
    pub opts: CgOptions,
}

impl DirichletSolver {
    pub fn new(sys: &StiffnessSystem, opts: CgOptions) -> DirichletSolver {
        let n = sys.n_dofs();
        let interior: Vec<usize> = (0..n).filter(|&d| !sys.dirichlet[d]).collect();
        let boundary: Vec<usize> = (0..n).filter(|&d| sys.dirichlet[d]).collect();
        let mut imap = vec![usize::MAX; n];
        for (k, &d) in interior.iter().enumerate() {
            imap[d] = k;
        }
        let mut bmap = vec![usize::MAX; n];
        for (k, &d) in boundary.iter().enumerate() {
            bmap[d] = k;
        }
        let k_ii = sys.k.submatrix(&interior, &imap, interior.len());
        let interior_pos = imap;
        let k_ib = sys.k.submatrix(&interior, &bmap, boundary.len());
        let inv_diag = k_ii.diagonal().iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect();
        DirichletSolver { k: sys.k.clone(), interior, boundary, k_ii, k_ib, inv_diag, boundary_pos: bmap, interior_pos, opts }
    }

    /// Solve `K_II x = rhs` on the interior dofs.
    pub fn solve_interior(&self, rhs: &[f64]) -> Result<(Vec<f64>, CgStats)> {
        pcg(&self.k_ii, rhs, &self.inv_diag, &self.opts)
    }

    /// Full solution with boundary values taken from `psi` (a full-length dof
    /// vector; interior entries of `psi` are ignored).
    pub fn solve(&self, psi: &[f64]) -> Result<Vec<f64>> {
        let ub: Vec<f64> = self.boundary.iter().map(|&d| psi[d]).collect();
        let mut rhs = self.k_ib.mul_vec(&ub);
        rhs.iter_mut().for_each(|v| *v = -*v);
        let (ui, _) = self.solve_interior(&rhs)?;
        let mut u = vec![0.0; psi.len()];
        for (k, &d) in self.boundary.iter().enumerate() {
            u[d] = ub[k];
        }
        for (k, &d) in self.interior.iter().enumerate() {
            u[d] = ui[k];
        }
        Ok(u)
    }

    /// Solution for the boundary data `e_dof` (unit value on one boundary dof).
    pub fn solve_unit(&self, dof: usize) -> Result<Vec<f64>> {
        assert!(self.boundary_pos[dof] != usize::MAX, "dof {dof} is not a boundary dof");
        // column `dof` of K restricted to interior rows, read off row `dof` (K = K^T)
        let mut rhs = vec![0.0; self.interior.len()];
        for k in self.k.row_ptr[dof]..self.k.row_ptr[dof + 1] {
            let i = self.interior_pos[self.k.col_idx[k]];
            if i != usize::MAX {
                rhs[i] = -self.k.values[k];
            }
        }
        let (ui, _) = self.solve_interior(&rhs)?;
        let mut u = vec![0.0; self.boundary_pos.len()];
        u[dof] = 1.0;
        for (k, &d) in self.interior.iter().enumerate() {
            u[d] = ui[k];
        }
        Ok(u)
    }
}

/// Solve the Dirichlet problem with boundary values `psi`.
pub fn solve_dirichlet(sys: &StiffnessSystem, psi: &[f64], opts: CgOptions) -> Result<Vec<f64>> {
    DirichletSolver::new(sys, opts).solve(psi)
}

/// Scaled energy `r0^-2 * sum_T |T| (lam tr(e)^2 + 2 mu e:e)`, computed from
/// element strains (independently of the assembled matrix).
pub fn energy(u: &[f64], cache: &ElementCache, p: &LameParams, r0: f64) -> f64 {
    let mut e = 0.0;
    for t in 0..cache.len() {
        let l = cache.labels[t];
        let eps = cache.strain(t, u);
        let tr = eps.trace();
        e += cache.volumes[t] * (p.lam[l] * tr * tr + 2.0 * p.mu[l] * eps.norm_squared());
    }
    e / (r0 * r0)
}

/// The six rigid motions (three translations, three infinitesimal rotations)
/// sampled at the mesh vertices.
pub fn rigid_motions(mesh: &Mesh) -> [Vec<f64>; 6] {
    let n = mesh.n_dofs();
    let mut out: [Vec<f64>; 6] = Default::default();
    for (k, o) in out.iter_mut().enumerate() {
        *o = vec![0.0; n];
        for (v, x) in mesh.vertices.iter().enumerate() {
            let val: [f64; 3] = match k {
                0 => [1.0, 0.0, 0.0],
                1 => [0.0, 1.0, 0.0],
                2 => [0.0, 0.0, 1.0],
                3 => [0.0, -x[2], x[1]],
                4 => [x[2], 0.0, -x[0]],
                _ => [-x[1], x[0], 0.0],
            };
            o[3 * v..3 * v + 3].copy_from_slice(&val);
        }
    }
    out
}

/// Nodal interpolant of a vector field.
pub fn interpolate(mesh: &Mesh, f: impl Fn([f64; 3]) -> [f64; 3]) -> Vec<f64> {
    let mut u = vec![0.0; mesh.n_dofs()];
    for (v, &x) in mesh.vertices.iter().enumerate() {
        u[3 * v..3 * v + 3].copy_from_slice(&f(x));
    }
    u
}
