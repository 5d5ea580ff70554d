//! Jacobi-preconditioned conjugate gradients.

use super::sparse::CsrMatrix;
use crate::error::{Error, Result};

/// Default relative residual tolerance.
pub const TOL_CG: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    pub tol: f64,
    /// Iteration cap; `None` means `10 * n`.
    pub max_iter: Option<usize>,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions { tol: TOL_CG, max_iter: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `A x = b` until `|b - A x| <= tol |b|`. `inv_diag` holds the
/// reciprocal diagonal of `A`.
pub fn pcg(a: &CsrMatrix, b: &[f64], inv_diag: &[f64], opts: &CgOptions) -> Result<(Vec<f64>, CgStats)> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok((x, CgStats { iterations: 0, relative_residual: 0.0 }));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let target = opts.tol * b_norm;
    for it in 1..=max_iter {
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::CgNoConvergence { iterations: it, residual: dot(&r, &r).sqrt() / b_norm });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt();
        if res <= target {
            // confirm with the true residual to guard against drift
            a.mul_vec_into(&x, &mut ap);
            let true_res = b.iter().zip(&ap).map(|(b, ax)| (b - ax) * (b - ax)).sum::<f64>().sqrt();
            if true_res <= target {
                return Ok((x, CgStats { iterations: it, relative_residual: true_res / b_norm }));
            }
            for i in 0..n {
                r[i] = b[i] - ap[i];
            }
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::CgNoConvergence { iterations: max_iter, residual: dot(&r, &r).sqrt() / b_norm })
}
