mod common;

use common::*;
use lame_dtn::forward::rigid_motions;
use lame_dtn::identity::{alessandrini_from_solutions, sensitivity_from_solution, sensitivity_jacobian};
use lame_dtn::material::LameParams;
use lame_dtn::probes::{sample_rng, AdmissibleSampler};
use lame_dtn::Exec;
use nalgebra::DMatrix;
use rand::Rng;

#[test]
fn identity_holds_for_random_pairs() {
    let asm = dtn_assembler(&two_layer(), 4);
    let sampler = AdmissibleSampler::new(ALPHA0, BETA0, 2);
    for i in 0..5 {
        let mut rng = sample_rng(99, i);
        let p = sampler.params(&mut rng).unwrap();
        let q = sampler.params(&mut rng).unwrap();
        let sp = asm.assemble_with_solutions(&p).unwrap();
        let sq = asm.assemble_with_solutions(&q).unwrap();
        let (a, b) = (rng.random_range(0..asm.m()), rng.random_range(0..asm.m()));
        let c = alessandrini_from_solutions(&asm.assembler.cache, &sp, &sq, &p, &q, a, b);
        assert!(c.rel_residual < 1e-8, "{c:?}");
        // swapping both the slots and the moduli flips the sign only
        let s = alessandrini_from_solutions(&asm.assembler.cache, &sq, &sp, &q, &p, b, a);
        assert!((s.lhs + c.lhs).abs() <= 1e-10 * c.lhs.abs().max(1e-300));
    }
}

fn dtn_at(asm: &lame_dtn::boundary::DtnAssembler, p: &LameParams, x: &[f64]) -> DMatrix<f64> {
    asm.assemble(&p.with_vec(x)).unwrap().l
}

#[test]
fn jacobian_matches_central_differences() {
    let asm = dtn_assembler(&two_layer(), 4);
    let p = two_layer_truth();
    let (j, _) = sensitivity_jacobian(&asm, &p).unwrap();
    let x = p.to_vec();
    let delta = 1e-3;
    for k in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[k] += delta;
        xm[k] -= delta;
        let fd = (dtn_at(&asm, &p, &xp) - dtn_at(&asm, &p, &xm)) / (2.0 * delta);
        let err = (&fd - &j.slices[k]).norm() / j.slices[k].norm();
        assert!(err < 1e-3, "parameter {k}: {err:e}");
    }
}

#[test]
fn linearization_error_is_second_order() {
    let asm = dtn_assembler(&two_layer(), 4);
    let p = two_layer_truth();
    let (j, sol) = sensitivity_jacobian(&asm, &p).unwrap();
    let x = p.to_vec();
    let dir = [0.6, -0.3, 0.5, 0.55];
    let rem = |t: f64| {
        let xt: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + t * d).collect();
        let d: Vec<f64> = dir.iter().map(|d| t * d).collect();
        (dtn_at(&asm, &p, &xt) - &sol.dtn.l - j.apply(&d)).norm()
    };
    let r: Vec<f64> = [1e-3, 5e-4, 2.5e-4].iter().map(|&t| rem(t)).collect();
    assert!(r[0] / r[1] >= 3.5 && r[1] / r[2] >= 3.5, "{r:?}");
}

#[test]
fn rigid_columns_have_zero_sensitivity() {
    let m = mesh(&cube(), 3);
    let asm = dtn_assembler(&cube(), 3);
    let p = LameParams::homogeneous(1.0, 1.0, ALPHA0, BETA0);
    let rigid = rigid_motions(&m);
    let mut sol = asm.assemble_with_solutions(&p).unwrap();
    sol.solutions.column_mut(0).copy_from_slice(&rigid[4]);
    let j = sensitivity_from_solution(&asm.assembler.cache, &sol, 1, Exec::Sequential);
    for s in &j.slices {
        let scale = s.amax();
        assert!(s.row(0).amax() < 1e-12 * scale && s.column(0).amax() < 1e-12 * scale);
        assert_eq!(s, &s.transpose());
    }
}

#[test]
fn sequential_and_parallel_agree_bitwise() {
    let asm = dtn_assembler(&two_layer(), 3);
    let p = two_layer_truth();
    let sol = asm.assemble_with_solutions(&p).unwrap();
    let a = sensitivity_from_solution(&asm.assembler.cache, &sol, 2, Exec::Sequential);
    let b = sensitivity_from_solution(&asm.assembler.cache, &sol, 2, Exec::Parallel);
    assert_eq!(a, b);
    let mut seq = asm.clone();
    seq.exec = Exec::Sequential;
    assert_eq!(seq.assemble(&p).unwrap().l, sol.dtn.l);
}
