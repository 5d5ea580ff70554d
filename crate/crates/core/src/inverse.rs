//! Recovery of the subdomain moduli from an observed DtN matrix by projected
//! Gauss–Newton with Levenberg damping.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::boundary::{star_norm, DtnAssembler, DtnMatrix};
use crate::error::{Error, Result};
use crate::identity::sensitivity_from_solution;
use crate::material::{check_admissible, sup_distance, LameParams};
use crate::report::Num;

pub const DEFAULT_MAX_ITER: usize = 100;
/// Noiseless stopping level, relative to `r0 |L_obs|_F`.
pub const FIT_TOL_REL: f64 = 1e-12;
/// Step stopping level, relative to `1 + |x|`.
pub const STEP_TOL: f64 = 1e-10;
/// Discrepancy-principle safety factor.
pub const DISCREPANCY_FACTOR: f64 = 1.1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Metric {
    #[default]
    Frobenius,
    Star,
}

/// Everything the solver needs besides the forward machinery.
#[derive(Debug, Clone)]
pub struct ReconstructionProblem {
    pub observed: DMatrix<f64>,
    pub init: LameParams,
    /// Metric used for the reported misfit; the solver itself always
    /// minimizes the Frobenius residual.
    pub metric: Metric,
    /// Absolute noise level in the units of [`misfit`]; enables the
    /// discrepancy-principle stop.
    pub noise_level: Option<f64>,
    pub max_iter: usize,
}

impl ReconstructionProblem {
    pub fn new(observed: DMatrix<f64>, init: LameParams) -> Self {
        ReconstructionProblem { observed, init, metric: Metric::Frobenius, noise_level: None, max_iter: DEFAULT_MAX_ITER }
    }
}

/// `r0 |L(p) - L_obs|` in the requested metric.
pub fn misfit(asm: &DtnAssembler, p: &LameParams, observed: &DMatrix<f64>, metric: Metric) -> Result<f64> {
    let l = asm.assemble(p)?;
    misfit_of(&l, observed, metric)
}

fn misfit_of(l: &DtnMatrix, observed: &DMatrix<f64>, metric: Metric) -> Result<f64> {
    if l.l.shape() != observed.shape() {
        return Err(Error::DimMismatch(l.m(), observed.nrows()));
    }
    Ok(match metric {
        Metric::Frobenius => l.r0 * (&l.l - observed).norm(),
        Metric::Star => {
            let obs = DtnMatrix { l: observed.clone(), gram: l.gram.clone(), r0: l.r0 };
            l.r0 * star_norm(l, &obs)?
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    /// Frobenius misfit after the iteration.
    pub misfit: Num,
    pub step_norm: Num,
    pub tau: Num,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StopReason {
    Fit,
    Discrepancy,
    Step,
    NotConverged,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub params: LameParams,
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
    pub stop: StopReason,
    pub iterations: usize,
    /// Final Frobenius misfit.
    pub misfit: f64,
    /// Final misfit in the problem's metric.
    pub reported_misfit: f64,
}

fn project(p: &LameParams, x: &[f64]) -> Vec<f64> {
    let set = p.admissible_set();
    x.chunks(2).flat_map(|c| {
        let (l, m) = set.project(c[0], c[1]);
        [l, m]
    })
    .collect()
}

struct Eval {
    residual: DVector<f64>,
    jac: DMatrix<f64>,
    dtn: DtnMatrix,
}

fn evaluate(asm: &DtnAssembler, p: &LameParams, observed: &DMatrix<f64>, with_jac: bool) -> Result<Eval> {
    let r0 = asm.r0;
    let (dtn, jac) = if with_jac {
        let sol = asm.assemble_with_solutions(p)?;
        let j = sensitivity_from_solution(&asm.assembler.cache, &sol, p.n_sub(), asm.exec);
        (sol.dtn, j.flattened() * r0)
    } else {
        (asm.assemble(p)?, DMatrix::zeros(0, 0))
    };
    let diff = &dtn.l - observed;
    let residual = DVector::from_column_slice(diff.as_slice()) * r0;
    Ok(Eval { residual, jac, dtn })
}

/// Projected Levenberg–Marquardt iteration from `prob.init`.
pub fn reconstruct(asm: &DtnAssembler, prob: &ReconstructionProblem) -> Result<Reconstruction> {
    if !check_admissible(&prob.init).pass {
        return Err(Error::InadmissibleInit);
    }
    if prob.observed.nrows() != asm.m() || prob.observed.ncols() != asm.m() {
        return Err(Error::DimMismatch(asm.m(), prob.observed.nrows()));
    }
    let fit_tol = match prob.noise_level {
        Some(nl) => DISCREPANCY_FACTOR * nl,
        None => FIT_TOL_REL * asm.r0 * prob.observed.norm(),
    };
    let fit_stop = if prob.noise_level.is_some() { StopReason::Discrepancy } else { StopReason::Fit };

    let mut p = prob.init.clone();
    let mut x = p.to_vec();
    let mut cur = evaluate(asm, &p, &prob.observed, true)?;
    let mut f = cur.residual.norm();
    let mut trace = Vec::new();
    let mut stop = StopReason::NotConverged;
    let mut iterations = 0;
    let mut tau = -1.0;
    let mut nu = 2.0;

    if f <= fit_tol {
        stop = fit_stop;
    }
    while stop == StopReason::NotConverged && iterations < prob.max_iter {
        iterations += 1;
        let jtj = cur.jac.tr_mul(&cur.jac);
        let g = cur.jac.tr_mul(&cur.residual);
        if tau < 0.0 {
            tau = 1e-3 * jtj.diagonal().max();
        }
        let mut a = jtj.clone();
        for i in 0..a.nrows() {
            a[(i, i)] += tau;
        }
        let Some(chol) = a.cholesky() else {
            tau *= nu;
            nu *= 2.0;
            trace.push(TraceEntry { iteration: iterations, misfit: Num(f), step_norm: Num(f64::NAN), tau: Num(tau), accepted: false });
            continue;
        };
        let step = chol.solve(&(-&g));
        let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let trial = project(&p, &trial);
        let s = DVector::from_iterator(x.len(), trial.iter().zip(&x).map(|(a, b)| a - b));
        let step_norm = s.norm();
        let xnorm = DVector::from_column_slice(&x).norm();
        if step_norm < STEP_TOL * (1.0 + xnorm) {
            trace.push(TraceEntry { iteration: iterations, misfit: Num(f), step_norm: Num(step_norm), tau: Num(tau), accepted: false });
            stop = StopReason::Step;
            break;
        }
        let q = p.with_vec(&trial);
        let next = evaluate(asm, &q, &prob.observed, false)?;
        let f_new = next.residual.norm();
        let actual = 0.5 * (f * f - f_new * f_new);
        let pred = -(g.dot(&s) + 0.5 * s.dot(&(&jtj * &s)));
        let rho = if pred > 0.0 { actual / pred } else { -1.0 };
        let accepted = rho > 0.0 && actual > 0.0;
        if accepted {
            x = trial;
            p = q;
            cur = evaluate(asm, &p, &prob.observed, true)?;
            f = cur.residual.norm();
            tau *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
            nu = 2.0;
        } else {
            tau *= nu;
            nu *= 2.0;
        }
        log::debug!("iteration {iterations}: misfit {f:e}, step {step_norm:e}, tau {tau:e}, accepted {accepted}");
        trace.push(TraceEntry { iteration: iterations, misfit: Num(f), step_norm: Num(step_norm), tau: Num(tau), accepted });
        if f <= fit_tol {
            stop = fit_stop;
        }
    }
    let reported_misfit = match prob.metric {
        Metric::Frobenius => f,
        Metric::Star => misfit_of(&cur.dtn, &prob.observed, Metric::Star)?,
    };
    Ok(Reconstruction {
        params: p,
        trace,
        converged: stop != StopReason::NotConverged,
        stop,
        iterations,
        misfit: f,
        reported_misfit,
    })
}

/// Reconstruction report written by the experiment runner.
#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    pub schema_version: u32,
    pub truth: Option<LameValues>,
    pub recovered: LameValues,
    pub converged: bool,
    pub status: StopReason,
    pub iterations: usize,
    pub trace: Vec<TraceEntry>,
    pub metric: Metric,
    /// `r0 |L(recovered) - L_obs|_*`
    pub eps: Num,
    /// `max_j |C_j - C_true_j|`, when the truth is known.
    pub param_error: Option<Num>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LameValues {
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
}

impl LameValues {
    /// Subdomain values only (the frozen extension entry is dropped).
    pub fn of(p: &LameParams) -> Self {
        LameValues { lambda: p.lam[1..].to_vec(), mu: p.mu[1..].to_vec() }
    }
}

impl ReconstructionReport {
    pub fn new(asm: &DtnAssembler, rec: &Reconstruction, observed: &DMatrix<f64>, metric: Metric, truth: Option<&LameParams>) -> Result<Self> {
        let l = asm.assemble(&rec.params)?;
        let eps = misfit_of(&l, observed, Metric::Star)?;
        let param_error = match truth {
            Some(t) => Some(Num(sup_distance(&rec.params, t)?)),
            None => None,
        };
        Ok(ReconstructionReport {
            schema_version: crate::report::SCHEMA_VERSION,
            truth: truth.map(LameValues::of),
            recovered: LameValues::of(&rec.params),
            converged: rec.converged,
            status: rec.stop,
            iterations: rec.iterations,
            trace: rec.trace.clone(),
            metric,
            eps: Num(eps),
            param_error,
        })
    }
}
