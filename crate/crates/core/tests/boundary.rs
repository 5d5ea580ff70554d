mod common;

use std::sync::Arc;

use common::*;
use lame_dtn::boundary::{
    build_sigma_basis, read_dtn, star_norm, verify_mesh_hash, whitened_norm, write_dtn, DtnHeader, DtnMatrix,
};
use lame_dtn::forward::TOL_CG;
use lame_dtn::geometry::{build_layered_partition, generate_mesh, write_msh_string, SigmaRegion};
use lame_dtn::material::LameParams;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn basis_counts_follow_the_grid() {
    let b4 = build_sigma_basis(&mesh(&cube(), 4)).unwrap();
    assert_eq!(b4.len(), 27);
    let b8 = build_sigma_basis(&mesh(&cube(), 8)).unwrap();
    let growth = b8.len() as f64 / b4.len() as f64;
    assert!((3.0..6.0).contains(&growth), "{growth}");
}

#[test]
fn thin_strip_has_no_basis() {
    let mut s = spec(vec![]);
    s.sigma = SigmaRegion { x: [0.0, 0.3], y: [0.0, 1.0] };
    let m = generate_mesh(&build_layered_partition(&s).unwrap(), 2).unwrap();
    assert_eq!(build_sigma_basis(&m).unwrap_err().code(), "EMPTY_BASIS");
}

#[test]
fn gram_interpolates_between_mass_and_h1() {
    let asm = dtn_assembler(&two_layer(), 6);
    let g = &asm.gram;
    let s = &g.scalar;
    assert_eq!(s, &s.transpose());
    let eig = s.clone().symmetric_eigen().eigenvalues;
    assert!(eig.min() > 0.0);
    // eigenvector consistency: v_i^T G v_i = sqrt(1 + theta_i) for M-orthonormal v_i
    for (i, th) in g.theta.iter().enumerate() {
        let v = g.modes.column(i);
        let mv = (v.transpose() * &g.mass * v)[(0, 0)];
        assert!((mv - 1.0).abs() < 1e-10);
        let gv = (v.transpose() * s * v)[(0, 0)];
        assert!((gv - (1.0 + th).sqrt()).abs() < 1e-9 * (1.0 + th).sqrt(), "{gv} vs {th}");
    }
    // |x|_M^2 <= |x|_G^2 <= |x|_M |x|_{M+S}
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h1 = &g.mass + &g.stiffness;
    for _ in 0..50 {
        let x = DVector::from_fn(s.nrows(), |_, _| rng.random_range(-1.0..1.0));
        let m = x.dot(&(&g.mass * &x));
        let gg = x.dot(&(s * &x));
        let a = x.dot(&(&h1 * &x));
        assert!(m <= gg * (1.0 + 1e-12));
        assert!(gg <= (m * a).sqrt() * (1.0 + 1e-12));
    }
}

#[test]
fn dtn_is_symmetric_deterministic_and_linear_in_the_moduli() {
    let asm = dtn_assembler(&two_layer(), 6);
    let p = two_layer_truth();
    let l = asm.assemble(&p).unwrap();
    assert!(l.symmetry_error() < 1e-8, "{}", l.symmetry_error());
    assert_eq!(l.l, asm.assemble(&p).unwrap().l);
    // positive semidefinite energy form
    assert!(l.l.clone().symmetric_eigen().eigenvalues.min() > -1e-10 * l.l.amax());

    let p1 = LameParams::new(&[0.0, 0.0], &[1.0, 0.8], ALPHA0, BETA0).unwrap();
    let mut p2 = p1.clone();
    p2.mu[1] = 2.0;
    p2.mu[2] = 1.6;
    // D0 is absent from the mesh, so scaling the subdomain moduli scales K
    let (l1, l2) = (asm.assemble(&p1).unwrap().l, asm.assemble(&p2).unwrap().l);
    let diff = (&l2 - &l1 * 2.0).amax() / l2.amax();
    assert!(diff < 1e-12, "{diff}");
}

#[test]
fn dtn_pairing_does_not_depend_on_the_lifting() {
    // phi^T L psi via the harmonic lifting of phi and via its nodal lifting
    let asm = dtn_assembler(&two_layer(), 4);
    let p = two_layer_truth();
    let (solver, u) = asm.solve_basis(&p).unwrap();
    let l = asm.assemble(&p).unwrap().l;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = asm.m();
    let phi = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    let psi = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0));
    let u_psi = &u * &psi;
    let k_u = DVector::from_vec(solver.k.mul_vec(u_psi.as_slice()));
    let mut nodal = DVector::zeros(asm.n_dofs());
    for (a, &d) in asm.basis.dofs.iter().enumerate() {
        nodal[d] = phi[a];
    }
    let harmonic = &u * &phi;
    let via_nodal = nodal.dot(&k_u);
    let via_harmonic = harmonic.dot(&k_u);
    let direct = phi.dot(&(&l * &psi));
    let scale = l.norm() * phi.norm() * psi.norm();
    assert!((via_nodal - via_harmonic).abs() < 10.0 * TOL_CG * scale);
    assert!((direct - via_harmonic).abs() < 10.0 * TOL_CG * scale);
}

#[test]
fn star_norm_basics() {
    let asm = dtn_assembler(&two_layer(), 4);
    let l1 = asm.assemble(&two_layer_truth()).unwrap();
    assert_eq!(star_norm(&l1, &l1).unwrap(), 0.0);
    let zero = DtnMatrix { l: DMatrix::zeros(asm.m(), asm.m()), gram: asm.gram.clone(), r0: 1.0 };
    let g = DtnMatrix { l: asm.gram.gram.clone(), gram: asm.gram.clone(), r0: 1.0 };
    assert!((star_norm(&g, &zero).unwrap() - 1.0).abs() < 1e-10);
    let s1 = star_norm(&l1, &zero).unwrap();
    let scaled = DtnMatrix { l: &l1.l * 3.5, ..l1.clone() };
    assert!((star_norm(&scaled, &zero).unwrap() - 3.5 * s1).abs() < 1e-12 * s1);

    let other = dtn_assembler(&two_layer(), 3);
    let l3 = other.assemble(&two_layer_truth()).unwrap();
    assert_eq!(star_norm(&l1, &l3).unwrap_err().code(), "GRAM_MISMATCH");
}

#[test]
fn star_norm_is_stable_under_refinement() {
    let p = two_layer_truth();
    let q = LameParams::new(&[1.4, 1.7], &[0.9, 1.3], ALPHA0, BETA0).unwrap();
    let norms: Vec<f64> = [4, 8]
        .iter()
        .map(|&n| {
            let asm = dtn_assembler(&two_layer(), n);
            star_norm(&asm.assemble(&p).unwrap(), &asm.assemble(&q).unwrap()).unwrap()
        })
        .collect();
    let change = (norms[1] - norms[0]).abs() / norms[0];
    assert!(change < 0.2, "{norms:?}");
}

#[test]
fn persisted_dtn_round_trips_and_checks_the_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let m = mesh(&two_layer(), 3);
    let text = write_msh_string(&m);
    std::fs::write(dir.path().join("mesh.msh"), &text).unwrap();
    let asm = dtn_assembler(&two_layer(), 3);
    let p = two_layer_truth();
    let l = asm.assemble(&p).unwrap().l;
    let header = DtnHeader::new(&l, 1.0, "mesh.msh", text.as_bytes(), &p, &asm.basis.dofs);
    let bin = dir.path().join("dtn.bin");
    write_dtn(&bin, &l, &header).unwrap();
    let (back, h) = read_dtn(&bin).unwrap();
    assert_eq!(back, l);
    assert_eq!(h, header);
    verify_mesh_hash(&bin, &h).unwrap();

    std::fs::write(dir.path().join("mesh.msh"), text.replace("$EndNodes", "$EndNodes\n")).unwrap();
    assert_eq!(verify_mesh_hash(&bin, &h).unwrap_err().code(), "HASH_MISMATCH");

    let mut skew = l.clone();
    skew[(0, 1)] += 1e-3 * l.amax();
    write_dtn(&bin, &skew, &header).unwrap();
    assert_eq!(read_dtn(&bin).unwrap_err().code(), "ARTIFACT_ERROR");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn star_norm_is_a_norm(seed in 0u64..10_000, c in -3.0f64..3.0) {
        static ASM: std::sync::OnceLock<lame_dtn::boundary::DtnAssembler> = std::sync::OnceLock::new();
        let asm = ASM.get_or_init(|| dtn_assembler(&two_layer(), 3));
        let m = asm.m();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sym = || {
            let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
            DtnMatrix { l: (&a + a.transpose()) * 0.5, gram: Arc::clone(&asm.gram), r0: 1.0 }
        };
        let (a, b, z) = (sym(), sym(), sym());
        let zero = DtnMatrix { l: DMatrix::zeros(m, m), ..z.clone() };
        let nab = star_norm(&a, &b).unwrap();
        let naz = star_norm(&a, &z).unwrap();
        let nzb = star_norm(&z, &b).unwrap();
        prop_assert!(nab <= naz + nzb + 1e-12 * (naz + nzb));
        let ca = DtnMatrix { l: &a.l * c, ..a.clone() };
        let na = star_norm(&a, &zero).unwrap();
        prop_assert!((star_norm(&ca, &zero).unwrap() - c.abs() * na).abs() <= 1e-12 * na.max(1.0));
        // sigma_max of the whitened difference never exceeds its Frobenius norm
        let w = &asm.gram.inv_sqrt * (&a.l - &b.l) * &asm.gram.inv_sqrt;
        prop_assert!(whitened_norm(&asm.gram, &(&a.l - &b.l)) <= w.norm() * (1.0 + 1e-12));
    }
}
