//! Task execution and artifact export.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use super::config::{ExperimentConfig, MaterialSection, Task};
use crate::boundary::{read_dtn, relative_asymmetry, verify_mesh_hash, write_dtn, DtnAssembler, DtnHeader};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::forward::{energy, interpolate, Assembler, DirichletSolver};
use crate::geometry::{build_layered_partition, extend_with_d0, generate_mesh, ingest_mesh, write_msh_string, Mesh, PartitionedDomain};
use crate::inverse::{reconstruct, LameValues, ReconstructionProblem, ReconstructionReport};
use crate::material::{check_admissible, LameParams};
use crate::probes::lipschitz::draw_pairs;
use crate::probes::spheres::records_csv;
use crate::probes::{
    green_reciprocity_check, kelvin_decay_fit, kelvin_pde_residual, lipschitz_probe, noise_linearity_probe, sample_rng,
    three_spheres_check,
};
use crate::report::{write_json, Cell, CsvTable, Num, SCHEMA_VERSION};

/// Command-line overrides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mesh_level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub task: Task,
    /// One-line human summary.
    pub line: String,
    pub artifacts: Vec<PathBuf>,
    /// False when the task finished but flagged a numerical failure (for
    /// example a reconstruction that hit the iteration limit).
    pub ok: bool,
}

/// Load `config_path` and run its task.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let cfg = ExperimentConfig::load(config_path)?;
    let base = config_path.parent().unwrap_or(Path::new("."));
    run_config(&cfg, base, opts)
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    base: &'a Path,
    out: PathBuf,
    seed: u64,
    mesh_level: Option<usize>,
    exec: Exec,
    artifacts: Vec<PathBuf>,
}

impl Ctx<'_> {
    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.out.join(name);
        self.artifacts.push(p.clone());
        p
    }

    fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let p = self.path(name);
        write_json(&p, v)
    }

    fn csv(&mut self, name: &str, t: &CsvTable) -> Result<()> {
        let p = self.path(name);
        t.write(&p)
    }
}

pub fn run_config(cfg: &ExperimentConfig, base: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let out = match (&opts.out, &cfg.output) {
        (Some(o), _) => o.clone(),
        (None, Some(o)) => base.join(o),
        (None, None) => base.join("out"),
    };
    let exec = if cfg.solver.parallel { Exec::Parallel } else { Exec::Sequential };
    let mut ctx = Ctx {
        cfg,
        base,
        out,
        seed: opts.seed.unwrap_or(cfg.seed),
        mesh_level: opts.mesh_level,
        exec,
        artifacts: Vec::new(),
    };
    let (line, ok) = match cfg.task {
        Task::Forward => forward(&mut ctx)?,
        Task::Dtn => dtn(&mut ctx)?,
        Task::Reconstruct => reconstruct_task(&mut ctx)?,
        Task::ProbeLipschitz => lipschitz(&mut ctx)?,
        Task::ProbeThreeSpheres => spheres(&mut ctx)?,
        Task::ProbeKelvin => kelvin(&mut ctx)?,
        Task::ProbeReciprocity => reciprocity(&mut ctx)?,
    };
    Ok(RunSummary { task: cfg.task, line: format!("{} {}", cfg.task.name(), line), artifacts: ctx.artifacts, ok })
}

fn admissible(m: &MaterialSection) -> Result<LameParams> {
    let p = m.params()?;
    let rep = check_admissible(&p);
    if !rep.pass {
        return Err(Error::Config(format!("material is not admissible: {}", rep.violations.join("; "))));
    }
    Ok(p)
}

/// Validated domain, material and mesh; writes `mesh.msh` and returns its bytes.
fn prepare(ctx: &mut Ctx, allow_extension: bool) -> Result<(PartitionedDomain, LameParams, Mesh, Vec<u8>)> {
    let cfg = ctx.cfg;
    let domain = build_layered_partition(cfg.require_geometry()?)?;
    let p = admissible(cfg.require_material()?)?;
    if p.n_sub() != domain.n_sub() {
        return Err(Error::Config(format!("material has {} subdomains, geometry {}", p.n_sub(), domain.n_sub())));
    }
    let ms = cfg.require_mesh()?;
    let (domain, mesh) = match &ms.path {
        Some(path) => {
            let (mesh, rep) = ingest_mesh(&ctx.base.join(path))?;
            if rep.repaired_tets > 0 {
                log::warn!("{} tetrahedra were reoriented on input", rep.repaired_tets);
            }
            (domain, mesh)
        }
        None => {
            let n = ctx.mesh_level.or(ms.n).ok_or_else(|| Error::Config("mesh section needs `n` or `path`".into()))?;
            let mesh = generate_mesh(&domain, n)?;
            (domain, mesh)
        }
    };
    let (domain, mesh) = if ms.extend_d0 {
        if !allow_extension {
            return Err(Error::Config(format!("extend_d0 is not supported for task {}", cfg.task.name())));
        }
        extend_with_d0(&domain, &mesh)?
    } else {
        (domain, mesh)
    };
    if mesh.max_label() > p.n_sub() {
        return Err(Error::LabelOutOfRange { label: mesh.max_label(), len: p.n_sub() + 1 });
    }
    std::fs::create_dir_all(&ctx.out)?;
    let text = write_msh_string(&mesh);
    let mp = ctx.path("mesh.msh");
    std::fs::write(&mp, &text)?;
    Ok((domain, p, mesh, text.into_bytes()))
}

#[derive(Serialize)]
struct ForwardReport {
    schema_version: u32,
    n_vertices: usize,
    n_tets: usize,
    n_dofs: usize,
    energy: Num,
    /// `|K_II u_I + K_IB u_B| / |K_IB u_B|`
    interior_residual: Num,
}

fn forward(ctx: &mut Ctx) -> Result<(String, bool)> {
    let (domain, p, mesh, _) = prepare(ctx, true)?;
    let fs = ctx.cfg.forward.clone();
    let asm = Assembler::new(&mesh);
    let sys = asm.assemble(&p, ctx.exec)?;
    let solver = DirichletSolver::new(&sys, ctx.cfg.solver.cg());
    let psi = interpolate(&mesh, |x| {
        let m = fs.matrix;
        [0, 1, 2].map(|i| m[i][0] * x[0] + m[i][1] * x[1] + m[i][2] * x[2] + fs.offset[i])
    });
    let u = solver.solve(&psi)?;
    let ku = sys.k.mul_vec(&u);
    let ub: Vec<f64> = solver.boundary.iter().map(|&d| u[d]).collect();
    let kib = solver.k_ib.mul_vec(&ub);
    let num: f64 = solver.interior.iter().map(|&d| ku[d] * ku[d]).sum::<f64>().sqrt();
    let den: f64 = kib.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = if den > 0.0 { num / den } else { num };
    let e = energy(&u, &asm.cache, &p, domain.r0);

    let mut t = CsvTable::new(&["vertex", "x", "y", "z", "u1", "u2", "u3"]);
    for (v, x) in mesh.vertices.iter().enumerate() {
        t.push(vec![Cell::from(v), x[0].into(), x[1].into(), x[2].into(), u[3 * v].into(), u[3 * v + 1].into(), u[3 * v + 2].into()]);
    }
    ctx.csv("displacement.csv", &t)?;
    ctx.json(
        "forward.json",
        &ForwardReport {
            schema_version: SCHEMA_VERSION,
            n_vertices: mesh.n_vertices(),
            n_tets: mesh.tets.len(),
            n_dofs: mesh.n_dofs(),
            energy: Num(e),
            interior_residual: Num(residual),
        },
    )?;
    if fs.dump_stiffness {
        let path = ctx.path("stiffness.coo");
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        sys.k.write_coo(f)?;
    }
    Ok((format!("ok: {} dofs, energy {e:.6e}, residual {residual:.2e}", mesh.n_dofs()), true))
}

#[derive(Serialize)]
struct DtnSummary {
    schema_version: u32,
    m: usize,
    symmetry_error: Num,
    min_eigenvalue: Num,
    max_eigenvalue: Num,
}

fn dtn(ctx: &mut Ctx) -> Result<(String, bool)> {
    let (domain, p, mesh, bytes) = prepare(ctx, false)?;
    let asm = DtnAssembler::new(&mesh, domain.r0, ctx.cfg.solver.cg(), ctx.exec)?;
    let l = asm.assemble(&p)?;
    let header = DtnHeader::new(&l.l, domain.r0, "mesh.msh", &bytes, &p, &asm.basis.dofs);
    let bin = ctx.path("dtn.bin");
    ctx.artifacts.push(bin.with_extension("json"));
    write_dtn(&bin, &l.l, &header)?;
    // reload: checks size and symmetry of what was written
    let (back, _) = read_dtn(&bin)?;
    let eig = nalgebra::SymmetricEigen::new((&back + back.transpose()) * 0.5).eigenvalues;
    let sym = relative_asymmetry(&back);
    ctx.json(
        "dtn_summary.json",
        &DtnSummary {
            schema_version: SCHEMA_VERSION,
            m: back.nrows(),
            symmetry_error: Num(sym),
            min_eigenvalue: Num(eig.min()),
            max_eigenvalue: Num(eig.max()),
        },
    )?;
    Ok((format!("ok: m = {}, symmetry error {sym:.2e}", back.nrows()), true))
}

fn symmetric_noise(m: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = sample_rng(seed, 0);
    let d = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    let d = (&d + d.transpose()) * 0.5;
    let n = d.norm();
    d / n
}

fn reconstruct_task(ctx: &mut Ctx) -> Result<(String, bool)> {
    let cfg = ctx.cfg;
    let rs = cfg.reconstruct.clone().ok_or_else(|| Error::ConfigMissingSection("reconstruct".into()))?;
    let mat = cfg.require_material()?;
    let init = match &rs.init {
        Some(v) => mat.with_values(v)?,
        None => mat.params()?,
    };
    if !check_admissible(&init).pass {
        return Err(Error::InadmissibleInit);
    }
    let bin = ctx.base.join(&rs.observation);
    let (mut obs, header) = read_dtn(&bin)?;
    let mesh_path = verify_mesh_hash(&bin, &header)?;
    let (mesh, _) = ingest_mesh(&mesh_path)?;
    if mesh.max_label() > init.n_sub() {
        return Err(Error::LabelOutOfRange { label: mesh.max_label(), len: init.n_sub() + 1 });
    }
    let asm = DtnAssembler::new(&mesh, header.r0, cfg.solver.cg(), ctx.exec)?;
    if asm.basis.dofs != header.basis_dofs {
        return Err(Error::Artifact("patch basis of the mesh does not match the DtN header".into()));
    }
    if let Some(level) = rs.add_noise {
        obs += symmetric_noise(obs.nrows(), ctx.seed) * (level * obs.norm());
    }
    let truth = LameParams { lam: header.lambda.clone(), mu: header.mu.clone(), alpha0: init.alpha0, beta0: init.beta0 };
    let truth = (truth.lam.len() == init.lam.len()).then_some(truth);

    let mut prob = ReconstructionProblem::new(obs.clone(), init);
    prob.metric = rs.metric;
    prob.noise_level = rs.noise_level;
    if let Some(k) = rs.max_iter {
        prob.max_iter = k;
    }
    let rec = reconstruct(&asm, &prob)?;
    let report = ReconstructionReport::new(&asm, &rec, &obs, rs.metric, truth.as_ref())?;
    std::fs::create_dir_all(&ctx.out)?;
    ctx.json("reconstruction.json", &report)?;
    let mut t = CsvTable::new(&["iteration", "misfit", "step_norm", "tau", "accepted"]);
    for e in &rec.trace {
        t.push(vec![Cell::from(e.iteration), e.misfit.0.into(), e.step_norm.0.into(), e.tau.0.into(), e.accepted.into()]);
    }
    ctx.csv("trace.csv", &t)?;
    let vals = LameValues::of(&rec.params);
    let line = format!(
        "{}: {} iterations, misfit {:.3e}, lambda {:?}, mu {:?}",
        if rec.converged { "converged" } else { "NOT_CONVERGED" },
        rec.iterations,
        rec.misfit,
        vals.lambda,
        vals.mu
    );
    Ok((line, rec.converged))
}

/// Mean of the polytope corners, which is interior.
fn polytope_center(p: &LameParams) -> Vec<f64> {
    let v = p.admissible_set().vertices();
    let c = (v.iter().map(|x| x.0).sum::<f64>() / 4.0, v.iter().map(|x| x.1).sum::<f64>() / 4.0);
    (0..p.n_sub()).flat_map(|_| [c.0, c.1]).collect()
}

fn lipschitz(ctx: &mut Ctx) -> Result<(String, bool)> {
    let (domain, p, _, _) = prepare(ctx, false)?;
    let ls = ctx.cfg.lipschitz.clone();
    let cg = ctx.cfg.solver.cg();
    let pairs = draw_pairs(p.n_sub(), p.alpha0, p.beta0, ls.probe.n_samples, ctx.seed)?;
    let report = lipschitz_probe(&domain, &pairs, &ls.probe, ctx.seed, cg, ctx.exec)?;
    ctx.csv("stability.csv", &report.to_csv())?;
    ctx.json("stability.json", &report)?;
    let mut line = format!(
        "ok: constants {:?}, injectivity violations {}",
        report.levels.iter().map(|l| l.empirical_constant.0).collect::<Vec<_>>(),
        report.injectivity_violations
    );
    if !ls.noise_levels.is_empty() {
        let n = ls.probe.mesh_levels.first().copied().ok_or_else(|| Error::Config("lipschitz.mesh_levels is empty".into()))?;
        let mesh = generate_mesh(&domain, n)?;
        let asm = DtnAssembler::new(&mesh, domain.r0, cg, ctx.exec)?;
        let init = match &ls.noise_init {
            Some(v) => ctx.cfg.require_material()?.with_values(v)?,
            None => p.with_vec(&polytope_center(&p)),
        };
        let recs = noise_linearity_probe(&asm, &p, &init, &ls.noise_levels, ctx.seed)?;
        let mut t = CsvTable::new(&["level", "param_error", "gain", "converged", "iterations"]);
        for r in &recs {
            t.push(vec![r.level.0.into(), r.param_error.0.into(), r.gain.0.into(), r.converged.into(), Cell::from(r.iterations)]);
        }
        ctx.csv("noise.csv", &t)?;
        let gains: Vec<f64> = recs.iter().map(|r| r.gain.0).collect();
        let spread = gains.iter().cloned().fold(f64::MIN, f64::max) / gains.iter().cloned().fold(f64::MAX, f64::min);
        line.push_str(&format!(", noise gain spread {spread:.3}"));
    }
    Ok((line, report.injectivity_violations == 0))
}

fn spheres(ctx: &mut Ctx) -> Result<(String, bool)> {
    let mut sc = ctx.cfg.spheres.clone();
    if let Some(n) = ctx.mesh_level {
        sc.mesh_n = n;
    }
    std::fs::create_dir_all(&ctx.out)?;
    let (records, fit) = three_spheres_check(&sc, ctx.seed, ctx.cfg.solver.cg(), ctx.exec)?;
    ctx.csv("spheres.csv", &records_csv(&records))?;
    ctx.json("spheres.json", &fit)?;
    Ok((format!("ok: delta {:.2}, C {:.4}, violations {}", fit.delta.0, fit.c.0, fit.violations), fit.violations == 0))
}

#[derive(Serialize)]
struct KelvinReport {
    schema_version: u32,
    mu: f64,
    nu: f64,
    value_slope: Num,
    gradient_slope: Num,
    /// `max |residual| |x|^3` over the shell points.
    max_scaled_residual: Num,
}

fn kelvin(ctx: &mut Ctx) -> Result<(String, bool)> {
    let k = ctx.cfg.kelvin.clone();
    std::fs::create_dir_all(&ctx.out)?;
    let dirs = [[1.0, 0.0, 0.0], [1.0, 2.0, 3.0], [-2.0, 1.0, 0.5]];
    let decay = kelvin_decay_fit(k.mu, k.nu, &dirs, k.n_points)?;
    let mut rng = sample_rng(ctx.seed, 0);
    let mut t = CsvTable::new(&["x", "y", "z", "radius", "residual", "scaled_residual"]);
    let mut worst: f64 = 0.0;
    for _ in 0..k.shell_points {
        let d = loop {
            let v: [f64; 3] = [0; 3].map(|_| rng.random_range(-1.0..1.0));
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n > 1e-3 && n <= 1.0 {
                break v.map(|c| c / n);
            }
        };
        let r = rng.random_range(1.0..=2.0);
        let x = d.map(|c| c * r);
        let res = kelvin_pde_residual(k.mu, k.nu, x, k.fd_step)?;
        let scaled = res * r.powi(3);
        worst = worst.max(scaled);
        t.push(vec![x[0].into(), x[1].into(), x[2].into(), r.into(), res.into(), scaled.into()]);
    }
    ctx.csv("kelvin_residual.csv", &t)?;
    ctx.json(
        "kelvin.json",
        &KelvinReport {
            schema_version: SCHEMA_VERSION,
            mu: k.mu,
            nu: k.nu,
            value_slope: decay.value_slope,
            gradient_slope: decay.gradient_slope,
            max_scaled_residual: Num(worst),
        },
    )?;
    Ok((
        format!("ok: slopes {:.4} / {:.4}, scaled residual {worst:.2e}", decay.value_slope.0, decay.gradient_slope.0),
        true,
    ))
}

fn reciprocity(ctx: &mut Ctx) -> Result<(String, bool)> {
    let (_, p, mesh, _) = prepare(ctx, true)?;
    let sys = Assembler::new(&mesh).assemble(&p, ctx.exec)?;
    let cg = ctx.cfg.solver.cg();
    let solver = DirichletSolver::new(&sys, cg);
    let rep = green_reciprocity_check(&solver.k_ii, ctx.cfg.reciprocity.pairs, ctx.seed, &cg)?;
    let mut t = CsvTable::new(&["a", "b", "g_ab", "g_ba", "asymmetry"]);
    for r in &rep.pairs {
        t.push(vec![Cell::from(r.a), Cell::from(r.b), r.g_ab.0.into(), r.g_ba.0.into(), r.asymmetry.0.into()]);
    }
    ctx.csv("reciprocity.csv", &t)?;
    ctx.json("reciprocity.json", &rep)?;
    Ok((format!("ok: max asymmetry {:.2e} over {} pairs", rep.max_asymmetry.0, rep.pairs.len()), true))
}
