//! Discrete Green-matrix reciprocity: `e_a^T K_II^-1 e_b = e_b^T K_II^-1 e_a`.

use rand::Rng;
use serde::Serialize;

use super::sampler::sample_rng;
use crate::error::Result;
use crate::forward::{pcg, CgOptions, CsrMatrix};
use crate::report::Num;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReciprocityPair {
    pub a: usize,
    pub b: usize,
    pub g_ab: Num,
    pub g_ba: Num,
    /// `|g_ab - g_ba| / sqrt(g_aa g_bb)`
    pub asymmetry: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReciprocityReport {
    pub pairs: Vec<ReciprocityPair>,
    pub max_asymmetry: Num,
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Compare Green-matrix entries for explicit pairs of interior indices of `k_ii`.
pub fn reciprocity_on_pairs(k_ii: &CsrMatrix, pairs: &[(usize, usize)], opts: &CgOptions) -> Result<ReciprocityReport> {
    let n = k_ii.n_rows;
    let diag = k_ii.diagonal();
    let inv_diag: Vec<f64> = diag.iter().map(|d| if *d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut out = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        let (col_b, _) = pcg(k_ii, &unit(n, b), &inv_diag, opts)?;
        let (col_a, _) = pcg(k_ii, &unit(n, a), &inv_diag, opts)?;
        let (g_ab, g_ba) = (col_b[a], col_a[b]);
        let scale = (col_a[a] * col_b[b]).abs().sqrt();
        out.push(ReciprocityPair { a, b, g_ab: Num(g_ab), g_ba: Num(g_ba), asymmetry: Num((g_ab - g_ba).abs() / scale) });
    }
    let max = out.iter().map(|p| p.asymmetry.0).fold(0.0, f64::max);
    Ok(ReciprocityReport { pairs: out, max_asymmetry: Num(max) })
}

/// Reciprocity at `n_pairs` random distinct interior index pairs.
pub fn green_reciprocity_check(k_ii: &CsrMatrix, n_pairs: usize, seed: u64, opts: &CgOptions) -> Result<ReciprocityReport> {
    let n = k_ii.n_rows;
    let mut rng = sample_rng(seed, 0);
    let pairs: Vec<(usize, usize)> = (0..n_pairs)
        .map(|_| loop {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b || n == 1 {
                break (a, b);
            }
        })
        .collect();
    reciprocity_on_pairs(k_ii, &pairs, opts)
}
