mod common;

use common::*;
use lame_dtn::forward::{assemble_stiffness, CgOptions, DirichletSolver, TOL_CG};
use lame_dtn::material::LameParams;
use lame_dtn::probes::lipschitz::evaluate_pair;
use lame_dtn::probes::{
    green_reciprocity_check, kelvin_decay_fit, kelvin_pde_residual, reciprocity_on_pairs, three_spheres_check,
    SpheresConfig,
};
use lame_dtn::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn kelvin_decay_exponents() {
    let d = kelvin_decay_fit(1.0, 0.3, &[[1.0, 0.0, 0.0], [0.3, -0.5, 0.8]], 30).unwrap();
    assert!((d.value_slope.0 + 1.0).abs() < 0.01);
    assert!((d.gradient_slope.0 + 2.0).abs() < 0.02);
}

#[test]
fn kelvin_residual_on_the_shell() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10 {
        let x: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
        let r = rng.random_range(1.0..2.0);
        let x = x.map(|c| c / n * r);
        let res = kelvin_pde_residual(0.7, -0.2, x, 1e-2).unwrap();
        assert!(res < 1e-6 / r.powi(3), "{res:e} at radius {r}");
    }
}

#[test]
fn reciprocity_holds_for_homogeneous_and_layered_moduli() {
    for (domain, p) in [(cube(), LameParams::homogeneous(1.0, 1.0, ALPHA0, BETA0)), (two_layer(), two_layer_truth())] {
        let sys = assemble_stiffness(&mesh(&domain, 5), &p).unwrap();
        let solver = DirichletSolver::new(&sys, CgOptions::default());
        let rep = green_reciprocity_check(&solver.k_ii, 20, 3, &CgOptions::default()).unwrap();
        assert_eq!(rep.pairs.len(), 20);
        assert!(rep.max_asymmetry.0 < 10.0 * TOL_CG, "{:e}", rep.max_asymmetry.0);
    }
}

#[test]
fn reciprocity_detects_an_unsymmetric_matrix() {
    let sys = assemble_stiffness(&mesh(&two_layer(), 4), &two_layer_truth()).unwrap();
    let solver = DirichletSolver::new(&sys, CgOptions::default());
    let mut k = solver.k_ii.clone();
    // perturb one off-diagonal entry only
    let (r, pos) = (0..k.n_rows)
        .find_map(|r| (k.row_ptr[r]..k.row_ptr[r + 1]).find(|&i| k.col_idx[i] != r).map(|i| (r, i)))
        .unwrap();
    let c = k.col_idx[pos];
    k.values[pos] *= 1.1;
    let rep = reciprocity_on_pairs(&k, &[(r, c)], &CgOptions::default()).unwrap();
    assert!(rep.max_asymmetry.0 > 1e3 * TOL_CG, "{:e}", rep.max_asymmetry.0);
}

#[test]
fn three_spheres_fit_is_feasible_and_monotone() {
    let mut deltas = Vec::new();
    for r2 in [0.4, 0.5, 0.7] {
        let cfg = SpheresConfig { mesh_n: 4, n_samples: 20, fractions: [0.25, r2, 1.0], c_cap: 2.0, ..SpheresConfig::default() };
        let (records, fit) = three_spheres_check(&cfg, 1, CgOptions::default(), Exec::default()).unwrap();
        assert_eq!(records.len(), 20);
        assert_eq!(fit.violations, 0);
        assert!(fit.delta.0 > 0.0 && fit.delta.0 < 1.0);
        deltas.push(fit.delta.0);
    }
    assert!(deltas.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{deltas:?}");
}

#[test]
fn stability_ratio_is_locally_linear() {
    let asm = dtn_assembler(&cube(), 4);
    let p = LameParams::homogeneous(1.0, 1.0, ALPHA0, BETA0);
    let ratios: Vec<(f64, f64)> = [0.1, 0.2]
        .iter()
        .map(|&t| {
            let q = LameParams::homogeneous(1.0, 1.0 + t, ALPHA0, BETA0);
            evaluate_pair(&asm, &p, &q).unwrap()
        })
        .collect();
    let (e1, eps1) = ratios[0];
    let (e2, eps2) = ratios[1];
    assert!((e2 - 2.0 * e1).abs() < 1e-15);
    assert!((eps2 / eps1 - 2.0).abs() < 0.2, "{}", eps2 / eps1);
    let (r1, r2) = (e1 / eps1, e2 / eps2);
    assert!((r1 - r2).abs() < 0.25 * r1, "{r1} vs {r2}");
}
