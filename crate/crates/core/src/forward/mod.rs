//! Finite element solution of `div(C sym grad u) = 0` with piecewise constant `C`.

pub mod assembly;
pub mod cg;
pub mod sparse;

pub use assembly::{
    assemble_stiffness, energy, interpolate, rigid_motions, solve_dirichlet, Assembler, DirichletSolver,
    ElementCache, StiffnessSystem,
};
pub use cg::{pcg, CgOptions, CgStats, TOL_CG};
pub use sparse::CsrMatrix;
