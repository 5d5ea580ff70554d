//! Three-spheres inequality `|u|_{B2} <= C |u|_{B1}^delta |u|_{B3}^{1-delta}`
//! fitted over random solutions in a homogeneous ball.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampler::sample_rng;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::forward::{Assembler, CgOptions, DirichletSolver};
use crate::geometry::{ball_mesh, Mesh};
use crate::material::LameParams;
use crate::report::{Cell, CsvTable, Num, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpheresConfig {
    pub radius: f64,
    /// Ball mesh resolution (`2 n` cells per side of the mapped cube).
    pub mesh_n: usize,
    /// `r1, r2, r3` as fractions of `radius`.
    pub fractions: [f64; 3],
    pub n_samples: usize,
    /// Total degree of the random polynomial boundary data.
    pub degree: usize,
    pub lambda: f64,
    pub mu: f64,
    /// Largest acceptable constant when choosing the exponent.
    pub c_cap: f64,
    pub delta_step: f64,
}

impl Default for SpheresConfig {
    fn default() -> Self {
        SpheresConfig {
            radius: 1.0,
            mesh_n: 6,
            fractions: [0.25, 0.5, 1.0],
            n_samples: 50,
            degree: 3,
            lambda: 1.0,
            mu: 1.0,
            c_cap: 4.0,
            delta_step: 0.01,
        }
    }
}

/// Sup norms of one solution on the three concentric balls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeSpheresRecord {
    pub sample: usize,
    pub center: [f64; 3],
    pub radii: [f64; 3],
    pub sup1: Num,
    pub sup2: Num,
    pub sup3: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpheresFit {
    pub schema_version: u32,
    pub delta: Num,
    pub c: Num,
    pub violations: usize,
    pub c_cap: f64,
    /// Smallest admissible constant for every exponent on the grid.
    pub curve: Vec<(Num, Num)>,
}

/// Maximum Euclidean vertex norm of `u` over the vertices within `r` of `center`.
pub fn vertex_sup(mesh: &Mesh, u: &[f64], center: [f64; 3], r: f64) -> f64 {
    let tol = 1e-12 * r.max(1.0);
    mesh.vertices
        .iter()
        .enumerate()
        .filter(|(_, x)| {
            let d = [x[0] - center[0], x[1] - center[1], x[2] - center[2]];
            (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() <= r + tol
        })
        .map(|(v, _)| (u[3 * v].powi(2) + u[3 * v + 1].powi(2) + u[3 * v + 2].powi(2)).sqrt())
        .fold(0.0, f64::max)
}

fn monomials(degree: usize) -> Vec<[i32; 3]> {
    let d = degree as i32;
    let mut out = Vec::new();
    for i in 0..=d {
        for j in 0..=d - i {
            for k in 0..=d - i - j {
                out.push([i, j, k]);
            }
        }
    }
    out
}

/// The grid-wise smallest constant and the largest exponent whose constant
/// stays below `c_cap`.
pub fn three_spheres_fit(records: &[ThreeSpheresRecord], c_cap: f64, delta_step: f64) -> Result<SpheresFit> {
    let steps = (1.0 / delta_step).round() as usize;
    let mut curve = Vec::new();
    let mut best: Option<(f64, f64)> = None;
    for k in 1..steps {
        let delta = k as f64 * delta_step;
        let c = records
            .iter()
            .map(|r| {
                let (a, b, c) = (r.sup1.0, r.sup2.0, r.sup3.0);
                if b == 0.0 {
                    0.0
                } else {
                    b / (a.powf(delta) * c.powf(1.0 - delta))
                }
            })
            .fold(0.0, f64::max);
        curve.push((Num(delta), Num(c)));
        if c <= c_cap {
            best = Some((delta, c));
        }
    }
    let (delta, c) = best.ok_or(Error::NoFeasibleDelta)?;
    let violations = records
        .iter()
        .filter(|r| r.sup2.0 > c * r.sup1.0.powf(delta) * r.sup3.0.powf(1.0 - delta) * (1.0 + 1e-12))
        .count();
    Ok(SpheresFit { schema_version: SCHEMA_VERSION, delta: Num(delta), c: Num(c), violations, c_cap, curve })
}

/// Solve with random polynomial boundary data and fit `(delta, C)`.
pub fn three_spheres_check(cfg: &SpheresConfig, seed: u64, cg: CgOptions, exec: Exec) -> Result<(Vec<ThreeSpheresRecord>, SpheresFit)> {
    let mesh = ball_mesh(cfg.radius, cfg.mesh_n)?;
    let p = LameParams::homogeneous(cfg.lambda, cfg.mu, 0.0, 0.0);
    let sys = Assembler::new(&mesh).assemble(&p, exec)?;
    let solver = DirichletSolver::new(&sys, cg);
    let mons = monomials(cfg.degree);
    let radii = cfg.fractions.map(|f| f * cfg.radius);
    let center = [0.0; 3];
    let records = exec.try_map_range(cfg.n_samples, |s| {
        let mut rng = sample_rng(seed, s as u64);
        let coef: Vec<[f64; 3]> = mons.iter().map(|_| [0; 3].map(|_| rng.random_range(-1.0..1.0))).collect();
        let mut psi = vec![0.0; mesh.n_dofs()];
        for (v, x) in mesh.vertices.iter().enumerate() {
            let y = x.map(|c| c / cfg.radius);
            for (m, c) in mons.iter().zip(&coef) {
                let b = y[0].powi(m[0]) * y[1].powi(m[1]) * y[2].powi(m[2]);
                for i in 0..3 {
                    psi[3 * v + i] += c[i] * b;
                }
            }
        }
        let u = solver.solve(&psi)?;
        let sup = radii.map(|r| vertex_sup(&mesh, &u, center, r));
        Ok::<_, Error>(ThreeSpheresRecord { sample: s, center, radii, sup1: Num(sup[0]), sup2: Num(sup[1]), sup3: Num(sup[2]) })
    })?;
    let fit = three_spheres_fit(&records, cfg.c_cap, cfg.delta_step)?;
    Ok((records, fit))
}

/// Columns: `sample, r1, r2, r3, sup1, sup2, sup3`.
pub fn records_csv(records: &[ThreeSpheresRecord]) -> CsvTable {
    let mut t = CsvTable::new(&["sample", "r1", "r2", "r3", "sup1", "sup2", "sup3"]);
    for r in records {
        t.push(vec![
            Cell::from(r.sample),
            r.radii[0].into(),
            r.radii[1].into(),
            r.radii[2].into(),
            r.sup1.0.into(),
            r.sup2.0.into(),
            r.sup3.0.into(),
        ]);
    }
    t
}
