//! The energy identity relating DtN differences to volume integrals of the
//! moduli difference, and the exact sensitivity of the DtN matrix with
//! respect to each subdomain modulus.

use nalgebra::{DMatrix, Matrix3};

use crate::boundary::{DtnAssembler, DtnSolution};
use crate::error::Result;
use crate::exec::Exec;
use crate::forward::ElementCache;
use crate::material::LameParams;

/// Both sides of the identity for one pair of basis functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlessandriniCheck {
    /// `int (C_p - C_q) e(u_p^a) : e(u_q^b)`, summed over elements.
    pub lhs: f64,
    /// `r0^2 (L_p - L_q)[a, b]`.
    pub rhs: f64,
    pub rel_residual: f64,
}

fn strain_pair(cache: &ElementCache, t: usize, ua: &[f64], ub: &[f64]) -> (Matrix3<f64>, Matrix3<f64>) {
    (cache.strain(t, ua), cache.strain(t, ub))
}

/// Evaluate the identity from precomputed solutions at `p` and `q`.
#[allow(clippy::too_many_arguments)]
pub fn alessandrini_from_solutions(
    cache: &ElementCache,
    sp: &DtnSolution,
    sq: &DtnSolution,
    p: &LameParams,
    q: &LameParams,
    a: usize,
    b: usize,
) -> AlessandriniCheck {
    let ua = sp.solutions.column(a);
    let ub = sq.solutions.column(b);
    let mut lhs = 0.0;
    for t in 0..cache.len() {
        let l = cache.labels[t];
        let (dl, dm) = (p.lam[l] - q.lam[l], p.mu[l] - q.mu[l]);
        if dl == 0.0 && dm == 0.0 {
            continue;
        }
        let (ea, eb) = strain_pair(cache, t, ua.as_slice(), ub.as_slice());
        lhs += cache.volumes[t] * (dl * ea.trace() * eb.trace() + 2.0 * dm * ea.dot(&eb));
    }
    let r0 = sp.dtn.r0;
    let rhs = r0 * r0 * (sp.dtn.l[(a, b)] - sq.dtn.l[(a, b)]);
    let scale = r0 * r0 * sp.dtn.l.amax().max(sq.dtn.l.amax());
    let floor = 1e-14 * scale.max(f64::MIN_POSITIVE);
    let rel_residual = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(floor);
    AlessandriniCheck { lhs, rhs, rel_residual }
}

/// Solve for both moduli and evaluate the identity for the pair `(a, b)`.
pub fn alessandrini_residual(
    asm: &DtnAssembler,
    p: &LameParams,
    q: &LameParams,
    a: usize,
    b: usize,
) -> Result<AlessandriniCheck> {
    let sp = asm.assemble_with_solutions(p)?;
    let sq = asm.assemble_with_solutions(q)?;
    Ok(alessandrini_from_solutions(&asm.assembler.cache, &sp, &sq, p, q, a, b))
}

/// Derivatives of the DtN matrix with respect to `(lam_1, mu_1, ..., lam_N, mu_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityTensor {
    /// `slices[2 (j - 1) + 0]` is `dL/dlam_j`, `slices[2 (j - 1) + 1]` is `dL/dmu_j`.
    pub slices: Vec<DMatrix<f64>>,
}

impl SensitivityTensor {
    pub fn n_params(&self) -> usize {
        self.slices.len()
    }

    pub fn m(&self) -> usize {
        self.slices.first().map_or(0, |s| s.nrows())
    }

    /// Directional derivative `sum_k d_k J_k`.
    pub fn apply(&self, d: &[f64]) -> DMatrix<f64> {
        let m = self.m();
        let mut out = DMatrix::zeros(m, m);
        for (s, &dk) in self.slices.iter().zip(d) {
            out += s * dk;
        }
        out
    }

    /// `m^2 x 2N` matrix whose column `k` is the column-major vectorization of slice `k`.
    pub fn flattened(&self) -> DMatrix<f64> {
        let m = self.m();
        let mut out = DMatrix::zeros(m * m, self.n_params());
        for (k, s) in self.slices.iter().enumerate() {
            out.column_mut(k).copy_from_slice(s.as_slice());
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.slices.iter().map(|s| s.norm_squared()).sum::<f64>().sqrt()
    }
}

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Exact derivative of the DtN matrix at the moduli that produced `sol`.
///
/// For each subdomain the element strains of all basis solutions are stacked
/// (weighted by `sqrt(volume)`) and the slices are formed as Gram products,
/// so every slice is symmetric to the last bit.
pub fn sensitivity_from_solution(cache: &ElementCache, sol: &DtnSolution, n_sub: usize, exec: Exec) -> SensitivityTensor {
    let m = sol.solutions.ncols();
    let r0 = sol.dtn.r0;
    let mut by_label: Vec<Vec<usize>> = vec![Vec::new(); n_sub + 1];
    for t in 0..cache.len() {
        if let Some(list) = by_label.get_mut(cache.labels[t]) {
            list.push(t);
        }
    }
    let slices = exec.map_range(n_sub, |j0| {
        let elems = &by_label[j0 + 1];
        let mut tr = DMatrix::zeros(elems.len(), m);
        let mut voigt = DMatrix::zeros(6 * elems.len(), m);
        for a in 0..m {
            let u = sol.solutions.column(a);
            for (r, &t) in elems.iter().enumerate() {
                let e = cache.strain(t, u.as_slice());
                let w = cache.volumes[t].sqrt();
                tr[(r, a)] = w * e.trace();
                let v = [e[(0, 0)], e[(1, 1)], e[(2, 2)], SQRT2 * e[(0, 1)], SQRT2 * e[(0, 2)], SQRT2 * e[(1, 2)]];
                for (c, vc) in v.iter().enumerate() {
                    voigt[(6 * r + c, a)] = w * vc;
                }
            }
        }
        let s = 1.0 / (r0 * r0);
        let d_lam = tr.tr_mul(&tr) * s;
        let d_mu = voigt.tr_mul(&voigt) * (2.0 * s);
        [d_lam, d_mu]
    });
    SensitivityTensor { slices: slices.into_iter().flatten().collect() }
}

/// Solve at `p` and return the sensitivity tensor together with the solution.
pub fn sensitivity_jacobian(asm: &DtnAssembler, p: &LameParams) -> Result<(SensitivityTensor, DtnSolution)> {
    let sol = asm.assemble_with_solutions(p)?;
    let j = sensitivity_from_solution(&asm.assembler.cache, &sol, p.n_sub(), asm.exec);
    Ok((j, sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::CgOptions;
    use crate::geometry::{build_layered_partition, generate_mesh, DomainSpec, InterfaceShape, SigmaRegion};

    fn two_layer(n: usize) -> DtnAssembler {
        let spec = DomainSpec {
            box_dims: [1.0, 1.0, 1.0],
            r0: 1.0,
            interfaces: vec![InterfaceShape::Flat { level: 0.5 }],
            sigma: SigmaRegion { x: [0.0, 1.0], y: [0.0, 1.0] },
            l_const: 2.0,
            alpha: 0.5,
            volume_bound: 1.0,
            regularity_grid: None,
        };
        let dom = build_layered_partition(&spec).unwrap();
        let mesh = generate_mesh(&dom, n).unwrap();
        DtnAssembler::new(&mesh, 1.0, CgOptions::default(), Exec::default()).unwrap()
    }

    #[test]
    fn identical_moduli_give_zero() {
        let asm = two_layer(3);
        let p = LameParams::new(&[1.0, 2.0], &[1.0, 1.5], 0.5, 1.0).unwrap();
        let c = alessandrini_residual(&asm, &p, &p, 0, 4).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert_eq!(c.rhs, 0.0);
        assert_eq!(c.rel_residual, 0.0);
    }

    #[test]
    fn identity_holds_for_a_lambda_change() {
        let asm = two_layer(4);
        let p = LameParams::new(&[1.0, 2.0], &[1.0, 1.5], 0.5, 1.0).unwrap();
        let q = LameParams::new(&[1.0, 1.5], &[1.0, 1.5], 0.5, 1.0).unwrap();
        for (a, b) in [(0, 0), (2, 7), (10, 3)] {
            let c = alessandrini_residual(&asm, &p, &q, a, b).unwrap();
            assert!(c.lhs.abs() > 0.0);
            assert!(c.rel_residual < 1e-8, "{c:?}");
        }
    }

    #[test]
    fn slices_are_symmetric_and_match_a_rigid_lift() {
        let asm = two_layer(3);
        let p = LameParams::new(&[1.0, 2.0], &[1.0, 1.5], 0.5, 1.0).unwrap();
        let (j, sol) = sensitivity_jacobian(&asm, &p).unwrap();
        assert_eq!(j.n_params(), 4);
        for s in &j.slices {
            assert_eq!(s, &s.transpose());
        }
        // the derivative is linear in the moduli: the directional derivative
        // along p itself reproduces L (C -> C + tC scales the whole form)
        let x = p.to_vec();
        let along = j.apply(&x);
        let diff = (&along - &sol.dtn.l).norm() / sol.dtn.l.norm();
        assert!(diff < 1e-9, "{diff}");
    }
}
