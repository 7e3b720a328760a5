mod common;

use std::collections::BTreeMap;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermal_cluster::clique::{CliqueSystem, LambdaDeformation};
use thermal_cluster::mbqc::*;
use thermal_cluster::parent::*;
use thermal_cluster::state::{LatticeGraph, SingleQubitOp, StateVector};

fn compiled(model: &thermal_cluster::spin_model::SpinModel) -> (CliqueSystem, ClusterLayout) {
    let sys = CliqueSystem::new(model);
    let c = compile_layout(&sys).unwrap();
    assert!(c.status.is_verified());
    (sys, c.layout)
}

fn op_matrix(op: &SingleQubitOp) -> DMatrix<C64> {
    let m = op.matrix();
    DMatrix::from_fn(2, 2, |i, j| m[i][j])
}

fn kron_over(support: &[usize], mut f: impl FnMut(usize) -> DMatrix<C64>) -> DMatrix<C64> {
    support
        .iter()
        .fold(DMatrix::identity(1, 1), |acc, &q| acc.kronecker(&f(q)))
}

fn random_state(n: usize, seed: u64) -> StateVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps = (0..1usize << n)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    StateVector::new(n, amps).unwrap().normalized().unwrap()
}

#[test]
fn gamma_energy_matches_two_by_two_diagonalization() {
    let mut worst = 0.0f64;
    for i in 0..=1000 {
        let x = -5.0 + 10.0 * i as f64 / 1000.0;
        let (gamma, energy) = gamma_energy(x).unwrap();
        let h = Matrix2::new(-gamma, -1.0, -1.0, gamma);
        let eig = SymmetricEigen::new(h);
        let k = if eig.eigenvalues[0] < eig.eigenvalues[1] { 0 } else { 1 };
        worst = worst.max((eig.eigenvalues[k] - energy).abs() / energy.abs());
        // the ground vector is the Lambda-deformed |+>
        let v = eig.eigenvectors.column(k);
        let lam = nalgebra::Vector2::new((-x / 2.0).exp(), (x / 2.0).exp()).normalize();
        worst = worst.max(1.0 - v.dot(&lam).abs());
    }
    assert!(worst <= 1e-12, "{worst}");
}

#[test]
fn gamma_energy_closed_form_values() {
    let (g, e) = gamma_energy(2f64.ln()).unwrap();
    assert!((g + 0.75).abs() < 1e-15 && (e + 1.25).abs() < 1e-15);
    let (g0, e0) = gamma_energy(0.0).unwrap();
    assert_eq!((g0, e0), (-0.0, -1.0));
    let (gm, em) = gamma_energy(-0.8).unwrap();
    let (gp, ep) = gamma_energy(0.8).unwrap();
    assert_eq!((gm, em), (-gp, ep));
    assert!(gamma_energy(f64::NAN).is_err());
    assert!(gamma_energy(301.0).is_err());
}

#[test]
fn cluster_stabilizer_shapes() {
    let lat = LatticeGraph::new(2, 2).unwrap();
    let k = build_K(&lat, 0).unwrap();
    assert_eq!(k.support, [0, 1, 2]);
    assert_eq!(k.pauli.to_string(), "+XZZI");
    let single = build_K(&LatticeGraph::new(1, 1).unwrap(), 0).unwrap();
    assert_eq!(single.pauli.to_string(), "+X");
    let mid = build_K(&LatticeGraph::new(3, 3).unwrap(), 4).unwrap();
    assert_eq!(mid.support, [1, 3, 4, 5, 7]);
    assert!(build_K(&lat, 4).is_err());
}

#[test]
fn cluster_stabilizers_fix_the_cluster_state() {
    let lat = LatticeGraph::new(2, 3).unwrap();
    let c = StateVector::cluster_state(&lat).unwrap();
    for a in 0..lat.n_qubits() {
        let k = build_K(&lat, a).unwrap();
        assert!((k.pauli.expectation(&c).unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn unsmoothed_p_terms_are_i_minus_k() {
    let (_, layout) = compiled(&common::pair());
    for i in layout.a_qubits() {
        let p = build_P(&layout, None, i).unwrap();
        let k = build_K(layout.lattice(), i).unwrap();
        let d = 1 << k.support.len();
        let want = DMatrix::<C64>::identity(d, d) - k.matrix();
        assert!((p.block() - want).camax() < 1e-14);
        assert_eq!(p.omega_factors, 0);
    }
    let out = layout.output_qubits()[0];
    assert!(build_P(&layout, None, out).is_err());
}

#[test]
fn undeformed_q_terms_are_i_minus_k_at_zero_coupling() {
    let (sys, layout) = compiled(&common::pair());
    let lambda = LambdaDeformation::new(&sys, 0.0).unwrap();
    for k in layout.output_qubits() {
        let q = build_Q(&layout, None, &lambda, k).unwrap();
        let stab = build_K(layout.lattice(), k).unwrap();
        let d = 1 << stab.support.len();
        let want = DMatrix::<C64>::identity(d, d) - stab.matrix();
        assert!((q.block() - want).camax() < 1e-14);
    }
}

#[test]
fn field_term_becomes_a_two_body_coupling_after_conjugation() {
    let (sys, layout) = compiled(&common::chain());
    let lambda = LambdaDeformation::new(&sys, 0.9).unwrap();
    let omega = smooth(&layout, 0.1).unwrap();
    for k in layout.output_qubits() {
        let q = build_Q(&layout, Some(&omega), &lambda, k).unwrap();
        let (gamma, energy) = gamma_energy(lambda.beta_j(layout.target(k).unwrap())).unwrap();
        let stab = build_K(layout.lattice(), k).unwrap();
        let w = kron_over(&stab.support, |b| match omega.inverse(b) {
            Some(inv) => op_matrix(inv),
            None => DMatrix::identity(2, 2),
        });
        let z = kron_over(&stab.support, |b| {
            if b == k {
                op_matrix(&SingleQubitOp::pauli_z())
            } else {
                DMatrix::identity(2, 2)
            }
        });
        let wtw = w.adjoint() * &w;
        let rest = q.block() + w.adjoint() * stab.matrix() * &w + &wtw * C64::new(energy, 0.0);
        let field = (&wtw * z) * C64::new(-gamma, 0.0);
        let scale = q.operator_norm();
        assert!((rest - field).camax() <= 1e-12 * scale, "qubit {k}");
    }
}

#[test]
fn terms_annihilate_the_deformed_cluster() {
    for (name, model) in common::fixtures() {
        let (sys, layout) = compiled(&model);
        for (beta, eps) in [(0.5, 0.05), (1.0, 0.1)] {
            let lambda = LambdaDeformation::new(&sys, beta).unwrap();
            let omega = smooth(&layout, eps).unwrap();
            let h = assemble(&layout, Some(&omega), &lambda).unwrap();
            let psi = build_deformed_cluster(&layout, &omega, &lambda).unwrap();
            for t in h.terms() {
                let r = t.apply(&psi).unwrap().norm() / t.operator_norm();
                assert!(r <= 1e-9, "{name} term at {}: {r:e}", t.center);
            }
            let ratio = h.expectation(&psi).unwrap().abs() / h.max_term_norm();
            assert!(ratio <= 1e-10, "{name}: {ratio:e}");
        }
    }
}

#[test]
fn terms_are_local_hermitian_and_psd() {
    for (name, model) in common::fixtures() {
        let (sys, layout) = compiled(&model);
        let lambda = LambdaDeformation::new(&sys, 1.0).unwrap();
        let omega = smooth(&layout, 0.05).unwrap();
        let h = assemble(&layout, Some(&omega), &lambda).unwrap();
        assert_eq!(h.terms().len(), layout.n_qubits());
        assert!(h.max_support() <= 5, "{name}");
        for t in h.terms() {
            let mut local = layout.lattice().neighbors(t.center);
            local.push(t.center);
            local.sort_unstable();
            assert_eq!(t.support, local);
            assert!(t.min_eigenvalue() >= -1e-10, "{name}");
            assert!(t.hermiticity_error() <= 1e-12 * t.operator_norm());
            assert!(t.factor_consistency() <= 1e-12, "{name}");
        }
    }
}

#[test]
fn p_term_spectrum_respects_the_inverse_omega_bound() {
    let (_, layout) = compiled(&common::pair());
    let eps = 0.1;
    let omega = smooth(&layout, eps).unwrap();
    for i in layout.a_qubits() {
        let p = build_P(&layout, Some(&omega), i).unwrap();
        let bound = 2.0 * (1.0 / eps).powi(2 * p.omega_factors as i32);
        assert!(p.operator_norm() <= bound * (1.0 + 1e-12));
    }
}

#[test]
fn sparse_and_matrix_free_agree() {
    let (sys, layout) = compiled(&common::chain());
    let lambda = LambdaDeformation::new(&sys, 1.0).unwrap();
    let omega = smooth(&layout, 0.2).unwrap();
    let h = assemble(&layout, Some(&omega), &lambda).unwrap();
    let x = random_state(h.n_qubits(), 3);
    let sparse = h.sparse();
    let free = h.matrix_free();
    let mut a = vec![C64::new(0.0, 0.0); h.dim()];
    let mut b = a.clone();
    sparse.apply(x.amplitudes(), &mut a);
    free.apply(x.amplitudes(), &mut b);
    let diff = a.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    assert!(diff <= 1e-12 * h.max_term_norm(), "{diff:e}");
    assert!(sparse.hermiticity_error() <= 1e-12 * h.max_term_norm());
    let diag = h.diagonal();
    for (i, d) in diag.iter().enumerate().step_by(37) {
        assert!((sparse.get(i, i).re - d).abs() <= 1e-12 * h.max_term_norm());
    }
}

#[test]
fn undeformed_lattices_have_gap_two() {
    let cfg = EigenConfig::default();
    for (r, c) in [(2, 3), (3, 3)] {
        let lat = LatticeGraph::new(r, c).unwrap();
        let h = ParentHamiltonian::undeformed(&lat).unwrap();
        let reference = StateVector::cluster_state(&lat).unwrap();
        let rep = ground_analysis(h.operator().as_ref(), &reference, &cfg).unwrap();
        assert!(rep.e0.abs() <= 1e-9);
        assert!((rep.gap - 2.0).abs() <= 1e-8);
        assert!(rep.fidelity >= 1.0 - 1e-9);
        assert!(!rep.degenerate);
    }
}

#[test]
fn lanczos_path_reproduces_the_cluster_ground_state() {
    let cfg = EigenConfig {
        dense_limit: 16,
        ..EigenConfig::default()
    };
    let lat = LatticeGraph::new(2, 4).unwrap();
    let h = ParentHamiltonian::undeformed(&lat).unwrap();
    let reference = StateVector::cluster_state(&lat).unwrap();
    let rep = ground_analysis(h.operator().as_ref(), &reference, &cfg).unwrap();
    assert_eq!(rep.method, "lanczos");
    assert!(rep.e0.abs() <= 1e-9);
    assert!((rep.gap - 2.0).abs() <= 1e-8);
    assert!(rep.fidelity >= 1.0 - 1e-9);
}

#[test]
fn single_site_hamiltonian_is_i_minus_x() {
    let lat = LatticeGraph::new(1, 1).unwrap();
    let h = ParentHamiltonian::undeformed(&lat).unwrap();
    let dense = to_dense(h.operator().as_ref());
    let want = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, -1.0, 1.0]).map(|x| C64::new(x, 0.0));
    assert!((dense - want).camax() < 1e-15);
    let plus = StateVector::plus_state(1).unwrap();
    let rep = ground_analysis(h.operator().as_ref(), &plus, &EigenConfig::default()).unwrap();
    assert!((rep.gap - 2.0).abs() < 1e-12 && rep.fidelity > 1.0 - 1e-12);
}

/// `H + c |v><v|` with `v` orthogonal to a reference.
struct Shifted<'a> {
    inner: &'a dyn LinearOperator,
    v: Vec<C64>,
    c: f64,
}

impl LinearOperator for Shifted<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.inner.apply(x, y);
        let overlap: C64 = self.v.iter().zip(x).map(|(a, b)| a.conj() * b).sum();
        for (yi, vi) in y.iter_mut().zip(&self.v) {
            *yi += vi * overlap * self.c;
        }
    }
}

#[test]
fn adding_a_projector_outside_the_kernel_keeps_the_ground_state() {
    let lat = LatticeGraph::new(2, 3).unwrap();
    let h = ParentHamiltonian::undeformed(&lat).unwrap();
    let op = h.operator();
    let reference = StateVector::cluster_state(&lat).unwrap();
    let mut v = random_state(6, 11);
    let o = reference.inner(&v).unwrap();
    for (vi, ri) in v.amplitudes_mut().iter_mut().zip(reference.amplitudes()) {
        *vi -= o * ri;
    }
    let v = v.normalized().unwrap();
    let cfg = EigenConfig::default();
    let base = ground_analysis(op.as_ref(), &reference, &cfg).unwrap();
    let shifted = Shifted {
        inner: op.as_ref(),
        v: v.into_amplitudes(),
        c: 3.5,
    };
    let rep = ground_analysis(&shifted, &reference, &cfg).unwrap();
    assert!((rep.e0 - base.e0).abs() < 1e-10);
    assert!(rep.fidelity > 1.0 - 1e-10);
}

#[test]
fn deformed_pair_has_a_unique_zero_energy_ground_state() {
    let (sys, layout) = compiled(&common::pair());
    let cfg = EigenConfig::default();
    for beta in [0.5, 1.0] {
        for eps in [0.05, 0.1] {
            let lambda = LambdaDeformation::new(&sys, beta).unwrap();
            let omega = smooth(&layout, eps).unwrap();
            let h = assemble(&layout, Some(&omega), &lambda).unwrap();
            let psi = build_deformed_cluster(&layout, &omega, &lambda).unwrap();
            let rep = analyze(&h, Some(&layout), &psi, &cfg).unwrap();
            assert!(rep.e0 <= 1e-8 * rep.norm, "{rep:?}");
            assert!(rep.gap >= 1e-6);
            assert!(rep.fidelity >= 1.0 - 1e-8);
        }
    }
}

#[test]
fn preconditioned_solver_matches_dense_on_the_chain() {
    let (sys, layout) = compiled(&common::chain());
    let lambda = LambdaDeformation::new(&sys, 1.0).unwrap();
    let omega = smooth(&layout, 0.1).unwrap();
    let h = assemble(&layout, Some(&omega), &lambda).unwrap();
    let psi = build_deformed_cluster(&layout, &omega, &lambda).unwrap();
    let dense = analyze(&h, Some(&layout), &psi, &EigenConfig::default()).unwrap();
    let cfg = EigenConfig {
        dense_limit: 64,
        ..EigenConfig::default()
    };
    let iterative = analyze(&h, Some(&layout), &psi, &cfg).unwrap();
    assert_eq!(dense.method, "dense");
    assert_eq!(iterative.method, "davidson");
    assert!((dense.e1 - iterative.e1).abs() <= 1e-6 * dense.e1);
    assert!(iterative.e0 <= 1e-8 * iterative.norm);
    assert!(iterative.fidelity >= 1.0 - 1e-8);
    let ground = StateVector::new(h.n_qubits(), iterative.ground_state).unwrap();
    assert!(thermal_cluster::state::fidelity(&ground, &psi).unwrap() >= 1.0 - 1e-8);
}

#[test]
fn term_norms_scale_with_the_number_of_omega_factors() {
    for model in [common::pair(), common::chain()] {
        let (sys, layout) = compiled(&model);
        let lambda = LambdaDeformation::new(&sys, 1.0).unwrap();
        let points = conditioning(&layout, &lambda, &[0.2, 0.1, 0.05, 0.02]).unwrap();
        let scaled: Vec<f64> = points.iter().map(|p| p.scaled_norm).collect();
        let (lo, hi) = scaled
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(l, h), &s| (l.min(s), h.max(s)));
        assert!(hi / lo <= 4.0, "{scaled:?}");
        assert!(points.windows(2).all(|w| w[1].max_term_norm > w[0].max_term_norm));
    }
}

#[test]
fn single_a_neighbour_layout_matches_the_single_factor_form() {
    // C - A on a 1x2 strip: projecting the A qubit onto |0> leaves |+> on C
    let lat = LatticeGraph::new(1, 2).unwrap();
    let omega_map = BTreeMap::from([(1, zero())]);
    let layout =
        ClusterLayout::new(lat, vec![Role::C, Role::A], omega_map, BTreeMap::from([(0, 0)])).unwrap();
    let (sys, _) = compiled(&common::lone_spin());
    assert!(verify_carving(&layout, &sys).is_ok());
    assert!(layout.one_a_neighbor());
    let lambda = LambdaDeformation::new(&sys, 0.7).unwrap();
    let omega = smooth(&layout, 0.1).unwrap();
    let q = build_Q(&layout, Some(&omega), &lambda, 0).unwrap();
    assert_eq!(q.omega_factors, 1);
    let (gamma, energy) = gamma_energy(lambda.beta_j(0)).unwrap();
    let h_k = DMatrix::from_row_slice(
        4,
        4,
        &[
            -gamma - energy, 0.0, -1.0, 0.0,
            0.0, -gamma - energy, 0.0, 1.0,
            -1.0, 0.0, gamma - energy, 0.0,
            0.0, 1.0, 0.0, gamma - energy,
        ],
    )
    .map(|x| C64::new(x, 0.0));
    let inv = DMatrix::<C64>::identity(2, 2).kronecker(&op_matrix(omega.inverse(1).unwrap()));
    let want = inv.adjoint() * h_k * &inv;
    assert!((q.block() - want).camax() <= 1e-12 * q.operator_norm());
}

#[test]
fn compact_layouts_report_their_a_neighbour_counts() {
    let (_, layout) = compiled(&common::pair());
    let counts = layout.a_neighbor_counts();
    assert_eq!(counts.len(), layout.output_qubits().len());
    assert_eq!(layout.one_a_neighbor(), counts.values().all(|&c| c == 1));
}
