use std::sync::Arc;

use nalgebra::DMatrix;

use super::basis::{build_sigma_basis, SigmaBasis};
use super::gram::{assemble_h_half_gram, HalfGram};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::forward::{Assembler, CgOptions, DirichletSolver};
use crate::geometry::Mesh;
use crate::material::LameParams;

/// Discrete local DtN map: `l[(a, b)] = r0^-2 int C sym grad u_b : sym grad u_a`
/// with `u_b` the discrete solution for the `b`-th patch basis function.
#[derive(Debug, Clone)]
pub struct DtnMatrix {
    pub l: DMatrix<f64>,
    pub gram: Arc<HalfGram>,
    pub r0: f64,
}

impl DtnMatrix {
    pub fn m(&self) -> usize {
        self.l.nrows()
    }

    /// `|L - L^T|_F / |L|_F`
    pub fn symmetry_error(&self) -> f64 {
        relative_asymmetry(&self.l)
    }
}

pub fn relative_asymmetry(l: &DMatrix<f64>) -> f64 {
    let n = l.norm();
    if n == 0.0 {
        return 0.0;
    }
    (l - l.transpose()).norm() / n
}

/// A DtN matrix together with the forward solutions that produced it
/// (column `b` of `solutions` is the full dof vector of `u_b`).
#[derive(Debug, Clone)]
pub struct DtnSolution {
    pub dtn: DtnMatrix,
    pub solutions: DMatrix<f64>,
}

/// Everything that depends on the mesh but not on the moduli: element
/// cache, stiffness pattern, patch basis and `H^{1/2}` Gram.
#[derive(Debug, Clone)]
pub struct DtnAssembler {
    pub assembler: Assembler,
    pub basis: SigmaBasis,
    pub gram: Arc<HalfGram>,
    pub r0: f64,
    pub cg: CgOptions,
    pub exec: Exec,
}

impl DtnAssembler {
    pub fn new(mesh: &Mesh, r0: f64, cg: CgOptions, exec: Exec) -> Result<DtnAssembler> {
        let basis = build_sigma_basis(mesh)?;
        let gram = Arc::new(assemble_h_half_gram(mesh, &basis, r0)?);
        Ok(DtnAssembler { assembler: Assembler::new(mesh), basis, gram, r0, cg, exec })
    }

    pub fn m(&self) -> usize {
        self.basis.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.assembler.n_dofs()
    }

    /// Forward solutions for every basis function, as columns.
    pub fn solve_basis(&self, p: &LameParams) -> Result<(DirichletSolver, DMatrix<f64>)> {
        let sys = self.assembler.assemble(p, self.exec)?;
        let solver = DirichletSolver::new(&sys, self.cg);
        let cols = self.exec.try_map_range(self.m(), |b| solver.solve_unit(self.basis.dofs[b]))?;
        let n = self.n_dofs();
        let mut u = DMatrix::zeros(n, cols.len());
        for (b, col) in cols.iter().enumerate() {
            u.column_mut(b).copy_from_slice(col);
        }
        Ok((solver, u))
    }

    pub fn assemble_with_solutions(&self, p: &LameParams) -> Result<DtnSolution> {
        let (solver, u) = self.solve_basis(p)?;
        let ku_cols = self.exec.map_range(u.ncols(), |b| solver.k.mul_vec(u.column(b).as_slice()));
        let mut ku = DMatrix::zeros(u.nrows(), u.ncols());
        for (b, col) in ku_cols.iter().enumerate() {
            ku.column_mut(b).copy_from_slice(col);
        }
        // every entry is an independent volume-form evaluation u_a^T K u_b
        let l = u.transpose() * ku / (self.r0 * self.r0);
        Ok(DtnSolution { dtn: DtnMatrix { l, gram: self.gram.clone(), r0: self.r0 }, solutions: u })
    }

    pub fn assemble(&self, p: &LameParams) -> Result<DtnMatrix> {
        Ok(self.assemble_with_solutions(p)?.dtn)
    }
}

/// Build the DtN matrix of `mesh` for the moduli `p` from scratch.
pub fn assemble_dtn(mesh: &Mesh, p: &LameParams, r0: f64, cg: CgOptions) -> Result<DtnMatrix> {
    DtnAssembler::new(mesh, r0, cg, Exec::default())?.assemble(p)
}

fn same_gram(a: &Arc<HalfGram>, b: &Arc<HalfGram>) -> bool {
    Arc::ptr_eq(a, b) || (a.gram.shape() == b.gram.shape() && a.gram == b.gram)
}

/// Operator norm of `L1 - L2` from the discrete `H^{1/2}` space to its dual:
/// the largest singular value of `G^{-1/2} (L1 - L2) G^{-1/2}`.
pub fn star_norm(l1: &DtnMatrix, l2: &DtnMatrix) -> Result<f64> {
    if !same_gram(&l1.gram, &l2.gram) || l1.l.shape() != l2.l.shape() {
        return Err(Error::GramMismatch);
    }
    Ok(whitened_norm(&l1.gram, &(&l1.l - &l2.l)))
}

/// Largest singular value of `G^{-1/2} D G^{-1/2}`.
pub fn whitened_norm(gram: &HalfGram, d: &DMatrix<f64>) -> f64 {
    let w = &gram.inv_sqrt;
    let b = w * d * w;
    b.singular_values().max()
}
