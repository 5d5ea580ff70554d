mod common;

use common::*;
use lame_dtn::inverse::{misfit, reconstruct, Metric, ReconstructionProblem, ReconstructionReport, StopReason};
use lame_dtn::material::{sup_distance, LameParams};

#[test]
fn two_layer_noiseless_recovery() {
    let asm = dtn_assembler(&two_layer(), 4);
    let truth = two_layer_truth();
    let obs = asm.assemble(&truth).unwrap().l;
    let init = LameParams::new(&[1.5, 1.5], &[1.2, 1.2], ALPHA0, BETA0).unwrap();
    let mut prob = ReconstructionProblem::new(obs.clone(), init);
    prob.metric = Metric::Star;
    let rec = reconstruct(&asm, &prob).unwrap();
    assert!(rec.converged, "{:?}", rec.stop);
    assert!(rec.iterations <= 30);
    assert!(sup_distance(&rec.params, &truth).unwrap() < 1e-5);
    let accepted: Vec<f64> = rec.trace.iter().filter(|t| t.accepted).map(|t| t.misfit.0).collect();
    assert!(accepted.windows(2).all(|w| w[1] <= w[0]));

    let report = ReconstructionReport::new(&asm, &rec, &obs, Metric::Star, Some(&truth)).unwrap();
    assert!(report.param_error.unwrap().0 < 1e-5);
    let json = lame_dtn::report::to_json_string(&report).unwrap();
    assert!(json.starts_with("{\"schema_version\":1,"));
}

#[test]
fn iterates_stay_admissible_from_a_corner_start() {
    let asm = dtn_assembler(&cube(), 3);
    let truth = LameParams::homogeneous(1.2, 0.9, ALPHA0, BETA0);
    let obs = asm.assemble(&truth).unwrap().l;
    let corner = LameParams::homogeneous(2.0, 2.0, ALPHA0, BETA0);
    let rec = reconstruct(&asm, &ReconstructionProblem::new(obs, corner)).unwrap();
    assert!(lame_dtn::material::check_admissible(&rec.params).pass);
    assert!(sup_distance(&rec.params, &truth).unwrap() < 1e-6);
}

#[test]
fn discrepancy_principle_stops_early() {
    let asm = dtn_assembler(&cube(), 3);
    let truth = LameParams::homogeneous(1.2, 0.9, ALPHA0, BETA0);
    let obs = asm.assemble(&truth).unwrap().l;
    let init = LameParams::homogeneous(1.0, 1.0, ALPHA0, BETA0);
    let loose = 1e-2 * obs.norm();
    let mut prob = ReconstructionProblem::new(obs.clone(), init.clone());
    prob.noise_level = Some(loose);
    let rec = reconstruct(&asm, &prob).unwrap();
    assert_eq!(rec.stop, StopReason::Discrepancy);
    assert!(rec.misfit <= 1.1 * loose);
    let full = reconstruct(&asm, &ReconstructionProblem::new(obs, init)).unwrap();
    assert!(rec.iterations < full.iterations);
}

#[test]
fn misfit_metrics() {
    let asm = dtn_assembler(&two_layer(), 3);
    let truth = two_layer_truth();
    let obs = asm.assemble(&truth).unwrap().l;
    let q = LameParams::new(&[1.3, 1.8], &[1.1, 1.4], ALPHA0, BETA0).unwrap();
    for metric in [Metric::Frobenius, Metric::Star] {
        assert!(misfit(&asm, &truth, &obs, metric).unwrap() < 1e-10 * obs.norm());
        assert!(misfit(&asm, &q, &obs, metric).unwrap() > 0.0);
    }
}

#[test]
fn max_iter_limit_reports_not_converged() {
    let asm = dtn_assembler(&two_layer(), 3);
    let obs = asm.assemble(&two_layer_truth()).unwrap().l;
    let init = LameParams::new(&[1.5, 1.5], &[1.2, 1.2], ALPHA0, BETA0).unwrap();
    let mut prob = ReconstructionProblem::new(obs, init);
    prob.max_iter = 1;
    let rec = reconstruct(&asm, &prob).unwrap();
    assert!(!rec.converged);
    assert_eq!(rec.stop, StopReason::NotConverged);
    assert_eq!(rec.iterations, 1);
}
