//! Empirical Lipschitz constant of the inverse map: ratios
//! `E / eps = sup_j |C_j - C'_j| / (r0 |L(C) - L(C')|_*)` over random
//! admissible pairs, at several mesh resolutions.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sampler::{sample_rng, AdmissibleSampler};
use crate::boundary::{star_norm, DtnAssembler};
use crate::error::Result;
use crate::exec::Exec;
use crate::forward::CgOptions;
use crate::geometry::{generate_mesh, PartitionedDomain};
use crate::inverse::{reconstruct, LameValues, ReconstructionProblem};
use crate::material::{sup_distance, LameParams};
use crate::report::{Cell, CsvTable, Num, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LipschitzConfig {
    pub n_samples: usize,
    pub mesh_levels: Vec<usize>,
    /// Number of largest ratios listed separately in the report.
    pub top_k: usize,
}

impl Default for LipschitzConfig {
    fn default() -> Self {
        LipschitzConfig { n_samples: 50, mesh_levels: vec![6, 8], top_k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSample {
    pub sample: usize,
    pub mesh_level: usize,
    pub p: LameValues,
    pub q: LameValues,
    pub e: Num,
    pub eps: Num,
    pub ratio: Num,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSummary {
    pub mesh_level: usize,
    pub m: usize,
    pub empirical_constant: Num,
    /// Sample indices of the largest ratios, descending.
    pub top_samples: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityReport {
    pub schema_version: u32,
    pub n_sub: usize,
    pub r0: f64,
    pub seed: u64,
    pub levels: Vec<LevelSummary>,
    /// Relative change of the empirical constant between consecutive levels.
    pub level_change: Vec<Num>,
    /// Every sampled pair had `p = q`.
    pub degenerate: bool,
    /// Pairs with `E > 0` but `eps = 0`.
    pub injectivity_violations: usize,
    pub samples: Vec<PairSample>,
}

/// `(E, eps)` for one pair on one mesh.
pub fn evaluate_pair(asm: &DtnAssembler, p: &LameParams, q: &LameParams) -> Result<(f64, f64)> {
    let e = sup_distance(p, q)?;
    if p == q {
        return Ok((e, 0.0));
    }
    let lp = asm.assemble(p)?;
    let lq = asm.assemble(q)?;
    Ok((e, asm.r0 * star_norm(&lp, &lq)?))
}

fn ratio(e: f64, eps: f64) -> f64 {
    if e == 0.0 && eps == 0.0 {
        f64::NAN
    } else {
        e / eps
    }
}

/// Draw the pairs for `cfg` (independent of the mesh level).
pub fn draw_pairs(n_sub: usize, alpha0: f64, beta0: f64, n: usize, seed: u64) -> Result<Vec<(LameParams, LameParams)>> {
    let sampler = AdmissibleSampler::new(alpha0, beta0, n_sub);
    (0..n)
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            Ok((sampler.params(&mut rng)?, sampler.params(&mut rng)?))
        })
        .collect()
}

pub fn lipschitz_probe(
    domain: &PartitionedDomain,
    pairs: &[(LameParams, LameParams)],
    cfg: &LipschitzConfig,
    seed: u64,
    cg: CgOptions,
    exec: Exec,
) -> Result<StabilityReport> {
    let mut samples = Vec::new();
    let mut levels = Vec::new();
    let mut violations = 0;
    for &n in &cfg.mesh_levels {
        let mesh = generate_mesh(domain, n)?;
        let asm = DtnAssembler::new(&mesh, domain.r0, cg, exec)?;
        let mut ratios = Vec::with_capacity(pairs.len());
        for (i, (p, q)) in pairs.iter().enumerate() {
            let (e, eps) = evaluate_pair(&asm, p, q)?;
            if e > 0.0 && eps == 0.0 {
                violations += 1;
            }
            let r = ratio(e, eps);
            log::debug!("level {n} sample {i}: E {e:e} eps {eps:e} ratio {r:e}");
            ratios.push(r);
            samples.push(PairSample {
                sample: i,
                mesh_level: n,
                p: LameValues::of(p),
                q: LameValues::of(q),
                e: Num(e),
                eps: Num(eps),
                ratio: Num(r),
            });
        }
        let finite: Vec<usize> = (0..ratios.len()).filter(|&i| !ratios[i].is_nan()).collect();
        let mut order = finite.clone();
        order.sort_by(|&a, &b| ratios[b].total_cmp(&ratios[a]).then(a.cmp(&b)));
        order.truncate(cfg.top_k);
        let constant = finite.iter().map(|&i| ratios[i]).fold(f64::NAN, f64::max);
        levels.push(LevelSummary { mesh_level: n, m: asm.m(), empirical_constant: Num(constant), top_samples: order });
    }
    let level_change = levels
        .windows(2)
        .map(|w| {
            let (a, b) = (w[0].empirical_constant.0, w[1].empirical_constant.0);
            Num((b - a).abs() / a.abs())
        })
        .collect();
    Ok(StabilityReport {
        schema_version: SCHEMA_VERSION,
        n_sub: domain.n_sub(),
        r0: domain.r0,
        seed,
        levels,
        level_change,
        degenerate: pairs.iter().all(|(p, q)| p == q),
        injectivity_violations: violations,
        samples,
    })
}

impl StabilityReport {
    /// One row per (sample, mesh level). Columns: `sample, mesh_level, E,
    /// eps, ratio`, then `lambda_p_j, mu_p_j` and `lambda_q_j, mu_q_j` for
    /// `j = 1..N`.
    pub fn to_csv(&self) -> CsvTable {
        let mut header: Vec<String> = ["sample", "mesh_level", "E", "eps", "ratio"].map(String::from).to_vec();
        for side in ["p", "q"] {
            for j in 1..=self.n_sub {
                header.push(format!("lambda_{side}_{j}"));
                header.push(format!("mu_{side}_{j}"));
            }
        }
        let mut t = CsvTable { header, rows: Vec::new() };
        for s in &self.samples {
            let mut row = vec![Cell::from(s.sample), Cell::from(s.mesh_level), s.e.0.into(), s.eps.0.into(), s.ratio.0.into()];
            for v in [&s.p, &s.q] {
                for j in 0..self.n_sub {
                    row.push(v.lambda[j].into());
                    row.push(v.mu[j].into());
                }
            }
            t.push(row);
        }
        t
    }
}

/// Parameter error of a reconstruction from perturbed data, per noise level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRecord {
    /// Relative level `|D|_F / |L|_F`.
    pub level: Num,
    pub param_error: Num,
    /// `param_error / level`
    pub gain: Num,
    pub converged: bool,
    pub iterations: usize,
}

/// Reconstruct from `L(truth) + level |L|_F D` for one fixed random
/// symmetric direction `D` with `|D|_F = 1`.
pub fn noise_linearity_probe(
    asm: &DtnAssembler,
    truth: &LameParams,
    init: &LameParams,
    levels: &[f64],
    seed: u64,
) -> Result<Vec<NoiseRecord>> {
    let clean = asm.assemble(truth)?.l;
    let m = clean.nrows();
    let mut rng = sample_rng(seed, u64::MAX);
    let mut d = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    d = (&d + d.transpose()) * 0.5;
    d /= d.norm();
    let scale = clean.norm();
    levels
        .iter()
        .map(|&level| {
            let obs = &clean + &d * (level * scale);
            let rec = reconstruct(asm, &ReconstructionProblem::new(obs, init.clone()))?;
            let err = sup_distance(&rec.params, truth)?;
            Ok(NoiseRecord {
                level: Num(level),
                param_error: Num(err),
                gain: Num(err / level),
                converged: rec.converged,
                iterations: rec.iterations,
            })
        })
        .collect()
}
