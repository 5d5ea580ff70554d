//! Isotropic elasticity tensors, admissibility and the sup distance between
//! piecewise constant tensors.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lamé moduli of the frozen extension slab `D0`.
pub const D0_LAMBDA: f64 = 0.0;
pub const D0_MU: f64 = 1.0;

/// `C A = lam tr(A) I + 2 mu sym(A)`.
pub fn apply_isotropic(lam: f64, mu: f64, a: &Matrix3<f64>) -> Matrix3<f64> {
    let sym = (a + a.transpose()) * 0.5;
    Matrix3::identity() * (lam * a.trace()) + sym * (2.0 * mu)
}

/// Frobenius contraction `A : B`.
pub fn contract(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// Poisson ratio `lam / (2 (lam + mu))`.
pub fn poisson_ratio(lam: f64, mu: f64) -> f64 {
    lam / (2.0 * (lam + mu))
}

/// Piecewise constant Lamé moduli. Index 0 is the `D0` extension, frozen at
/// `(0, 1)`; indices `1..=N` are the subdomains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LameParams {
    pub lam: Vec<f64>,
    pub mu: Vec<f64>,
    pub alpha0: f64,
    pub beta0: f64,
}

impl LameParams {
    /// Build from the `N` subdomain values; the `D0` entry is prepended.
    pub fn new(lam: &[f64], mu: &[f64], alpha0: f64, beta0: f64) -> Result<Self> {
        if lam.len() != mu.len() {
            return Err(Error::DimMismatch(lam.len(), mu.len()));
        }
        let mut l = vec![D0_LAMBDA];
        l.extend_from_slice(lam);
        let mut m = vec![D0_MU];
        m.extend_from_slice(mu);
        Ok(LameParams { lam: l, mu: m, alpha0, beta0 })
    }

    /// A single homogeneous subdomain.
    pub fn homogeneous(lam: f64, mu: f64, alpha0: f64, beta0: f64) -> Self {
        LameParams { lam: vec![D0_LAMBDA, lam], mu: vec![D0_MU, mu], alpha0, beta0 }
    }

    /// Number of subdomains `N`.
    pub fn n_sub(&self) -> usize {
        self.lam.len() - 1
    }

    /// Optimization vector `(lam_1, mu_1, ..., lam_N, mu_N)`.
    pub fn to_vec(&self) -> Vec<f64> {
        (1..=self.n_sub()).flat_map(|j| [self.lam[j], self.mu[j]]).collect()
    }

    /// Replace the subdomain values from an optimization vector.
    pub fn with_vec(&self, x: &[f64]) -> Self {
        let mut p = self.clone();
        for j in 1..=self.n_sub() {
            p.lam[j] = x[2 * (j - 1)];
            p.mu[j] = x[2 * (j - 1) + 1];
        }
        p
    }

    pub fn admissible_set(&self) -> AdmissibleSet {
        AdmissibleSet { alpha0: self.alpha0, beta0: self.beta0 }
    }
}

/// The strong convexity polytope
/// `alpha0 <= mu <= 1/alpha0, lam <= 1/alpha0, 2 mu + 3 lam >= beta0`
/// for a single `(lam, mu)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibleSet {
    pub alpha0: f64,
    pub beta0: f64,
}

impl AdmissibleSet {
    pub fn contains(&self, lam: f64, mu: f64) -> bool {
        let a = self.alpha0;
        mu >= a && mu <= 1.0 / a && lam <= 1.0 / a && 2.0 * mu + 3.0 * lam >= self.beta0
    }

    /// Poisson-ratio band implied by the polytope.
    pub fn poisson_bounds(&self) -> (f64, f64) {
        let a = self.alpha0;
        (-1.0 + a * self.beta0 / 4.0, 0.5 - a * a / 4.0)
    }

    /// Corners `(lam, mu)` in counter-clockwise order.
    pub fn vertices(&self) -> [(f64, f64); 4] {
        let a = self.alpha0;
        let b = self.beta0;
        [
            ((b - 2.0 * a) / 3.0, a),
            ((b - 2.0 / a) / 3.0, 1.0 / a),
            (1.0 / a, 1.0 / a),
            (1.0 / a, a),
        ]
    }

    /// Bounding box `([lam_min, lam_max], [mu_min, mu_max])`.
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let a = self.alpha0;
        ([(self.beta0 - 2.0 / a) / 3.0, 1.0 / a], [a, 1.0 / a])
    }

    /// Euclidean projection onto the polytope.
    pub fn project(&self, lam: f64, mu: f64) -> (f64, f64) {
        if self.contains(lam, mu) {
            return (lam, mu);
        }
        let v = self.vertices();
        let mut best = (f64::INFINITY, (lam, mu));
        for k in 0..4 {
            let (p, q) = (v[k], v[(k + 1) % 4]);
            let (dx, dy) = (q.0 - p.0, q.1 - p.1);
            let t = (((lam - p.0) * dx + (mu - p.1) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            let c = (p.0 + t * dx, p.1 + t * dy);
            let d = (c.0 - lam).powi(2) + (c.1 - mu).powi(2);
            if d < best.0 {
                best = (d, c);
            }
        }
        // snap away the rounding error of the edge formula
        let a = self.alpha0;
        let mu = best.1 .1.clamp(a, 1.0 / a);
        let lam = best.1 .0.max((self.beta0 - 2.0 * mu) / 3.0).min(1.0 / a);
        (lam, mu)
    }
}

/// Result of [`check_admissible`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub pass: bool,
    pub xi0: f64,
    /// Poisson ratio per subdomain `1..=N`.
    pub nu: Vec<f64>,
    pub violations: Vec<String>,
}

pub fn check_admissible(p: &LameParams) -> AdmissibilityReport {
    let (a, b) = (p.alpha0, p.beta0);
    let mut violations = Vec::new();
    if !(a > 0.0 && a <= 1.0) {
        violations.push(format!("alpha0 = {a} outside (0, 1]"));
    }
    if !(b > 0.0 && b <= 2.0) {
        violations.push(format!("beta0 = {b} outside (0, 2]"));
    }
    if p.lam.len() != p.mu.len() || p.lam.is_empty() {
        violations.push("lambda and mu tables differ in length".into());
    }
    let set = p.admissible_set();
    let (nu_lo, nu_hi) = set.poisson_bounds();
    let mut nu = Vec::new();
    for j in 1..p.lam.len().min(p.mu.len()) {
        let (l, m) = (p.lam[j], p.mu[j]);
        if !(l.is_finite() && m.is_finite()) {
            violations.push(format!("D_{j}: non-finite moduli"));
        }
        if !(m >= a && m <= 1.0 / a) {
            violations.push(format!("D_{j}: mu = {m} outside [alpha0, 1/alpha0]"));
        }
        if !(l <= 1.0 / a) {
            violations.push(format!("D_{j}: lambda = {l} above 1/alpha0"));
        }
        if !(2.0 * m + 3.0 * l >= b) {
            violations.push(format!("D_{j}: 2 mu + 3 lambda = {} below beta0", 2.0 * m + 3.0 * l));
        }
        let n = poisson_ratio(l, m);
        if !(n >= nu_lo && n <= nu_hi) {
            violations.push(format!("D_{j}: Poisson ratio {n} outside [{nu_lo}, {nu_hi}]"));
        }
        nu.push(n);
    }
    AdmissibilityReport { pass: violations.is_empty(), xi0: (2.0 * a).min(b), nu, violations }
}

/// `max_j max(|lam_j - lam'_j|, |mu_j - mu'_j|)` over subdomains `j >= 1`.
pub fn sup_distance(p: &LameParams, q: &LameParams) -> Result<f64> {
    if p.lam.len() != q.lam.len() {
        return Err(Error::DimMismatch(p.lam.len(), q.lam.len()));
    }
    if p.mu.len() != q.mu.len() {
        return Err(Error::DimMismatch(p.mu.len(), q.mu.len()));
    }
    Ok((1..p.lam.len())
        .map(|j| (p.lam[j] - q.lam[j]).abs().max((p.mu[j] - q.mu[j]).abs()))
        .fold(0.0, f64::max))
}
