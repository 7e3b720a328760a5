mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use thermal_cluster::clique::{apply_lambda, build_clique_state, CliqueSystem, LambdaDeformation};
use thermal_cluster::mbqc::*;
use thermal_cluster::spin_model::partition_function;
use thermal_cluster::state::{fidelity, LatticeGraph, StateVector};

fn compiled(model: &thermal_cluster::spin_model::SpinModel) -> (CliqueSystem, ClusterLayout) {
    let sys = CliqueSystem::new(model);
    let c = compile_layout(&sys).unwrap();
    assert!(c.status.is_verified());
    (sys, c.layout)
}

#[test]
fn lone_spin_is_a_single_site() {
    let (sys, layout) = compiled(&common::lone_spin());
    assert_eq!((layout.lattice().rows(), layout.lattice().cols()), (1, 1));
    assert_eq!(layout.roles(), [Role::C]);
    assert!(layout.a_qubits().is_empty());
    let cert = verify_carving(&layout, &sys).unwrap();
    assert_eq!(cert.branch_norm, 1.0);
    let census = branch_norm_census(&layout).unwrap();
    assert_eq!(census.len(), 1);
    assert!((census[0] - 1.0).abs() < 1e-12);
}

#[test]
fn pair_fits_three_by_three() {
    let (sys, layout) = compiled(&common::pair());
    let lat = layout.lattice();
    assert!(lat.rows() <= 3 && lat.cols() <= 3);
    assert!(layout.a_qubits().len() <= 6);
    let cert = verify_carving(&layout, &sys).unwrap();
    let n_a = layout.a_qubits().len() as f64;
    assert!(cert.achieved_fidelity >= 1.0 - 1e-10);
    assert!((cert.branch_norm - 0.5f64.powf(n_a / 2.0)).abs() < 1e-10);
    assert!(cert.local_corrections.chars().all(|c| c == 'I'));
}

#[test]
fn every_fixture_certifies_with_uniform_census() {
    for (name, model) in common::fixtures() {
        let (sys, layout) = compiled(&model);
        assert!(layout.is_all_pauli(), "{name}");
        let cert = verify_carving(&layout, &sys).unwrap();
        let n_a = layout.a_qubits().len();
        assert_eq!(cert.expected_branch_norm, Some(0.5f64.powf(n_a as f64 / 2.0)));
        let census = branch_norm_census(&layout).unwrap();
        assert_eq!(census.len(), 1 << n_a);
        let uniform = 0.5f64.powi(n_a as i32);
        assert!(census.iter().all(|p| (p - uniform).abs() < 1e-10), "{name}");
        assert!((census.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(structural_check(&layout, &sys).exact, "{name}");
    }
}

#[test]
fn flipped_projector_gives_an_orthogonal_branch() {
    let (sys, layout) = compiled(&common::pair());
    for q in layout.a_qubits() {
        let w = layout.omega(q).unwrap();
        let flipped = layout.with_omega(q, perp(w)).unwrap();
        let out = carve(&flipped, &sys).unwrap();
        assert!(out.fidelity < 1e-12, "qubit {q}: fidelity {}", out.fidelity);
        assert!(verify_carving(&flipped, &sys).is_err());
    }
}

#[test]
fn census_sums_to_one_for_arbitrary_omega() {
    let (_, layout) = compiled(&common::chain());
    let q = layout.a_qubits()[0];
    let odd = [
        num_complex::Complex64::new(0.6, 0.0),
        num_complex::Complex64::new(0.0, 0.8),
    ];
    let tilted = layout.with_omega(q, odd).unwrap();
    assert!(!tilted.is_all_pauli());
    let census = branch_norm_census(&tilted).unwrap();
    assert!((census.iter().sum::<f64>() - 1.0).abs() < 1e-10);
}

#[test]
fn smoothing_spectrum_and_inverse() {
    let (_, layout) = compiled(&common::pair());
    for eps in [0.01, 0.05, 0.1, 0.3] {
        let om = smooth(&layout, eps).unwrap();
        assert_eq!(om.eigenvalues(), (1.0 - eps, eps));
        for q in layout.a_qubits() {
            let op = om.op(q).unwrap();
            assert!(op.is_hermitian() && op.is_invertible());
            let w = layout.omega(q).unwrap();
            let image = op.apply(w);
            assert!((image[0] - w[0] * (1.0 - eps)).norm() < 1e-15);
            let p = perp(w);
            let image = op.apply(p);
            assert!((image[1] - p[1] * eps).norm() < 1e-15);
            let id = op.compose(om.inverse(q).unwrap());
            assert!(id.max_abs_diff(&thermal_cluster::state::SingleQubitOp::identity()) < 1e-12);
        }
    }
    for bad in [0.0, 0.5, -0.1, 0.7, f64::NAN] {
        assert!(smooth(&layout, bad).is_err());
    }
}

#[test]
fn fidelity_bound_holds_and_is_monotone() {
    for (name, model) in common::fixtures() {
        let (sys, layout) = compiled(&model);
        let (_, phi) = build_clique_state(&model).unwrap();
        let n_a = layout.a_qubits().len();
        for beta in [0.0, 1.0] {
            let (phi_l, _) = apply_lambda(&sys, &phi, beta).unwrap();
            let lambda = LambdaDeformation::new(&sys, beta).unwrap();
            let target = comparison_state(&layout, &phi_l).unwrap();
            let mut previous = 1.0 + 1e-12;
            for eps in [0.001, 0.01, 0.05, 0.1, 0.2, 0.3] {
                let om = smooth(&layout, eps).unwrap();
                let state = build_deformed_cluster(&layout, &om, &lambda).unwrap();
                let f = fidelity(&state, &target).unwrap();
                assert!(f >= fidelity_bound(eps, n_a) - 1e-10, "{name} beta {beta} eps {eps}: {f}");
                assert!(f <= previous + 1e-12, "{name}: fidelity rose at eps {eps}");
                previous = f;
            }
        }
    }
}

#[test]
fn fidelity_approaches_one_as_epsilon_vanishes() {
    let (sys, layout) = compiled(&common::triangle());
    let (_, phi) = build_clique_state(sys.model()).unwrap();
    let (phi_l, _) = apply_lambda(&sys, &phi, 0.8).unwrap();
    let lambda = LambdaDeformation::new(&sys, 0.8).unwrap();
    let target = comparison_state(&layout, &phi_l).unwrap();
    let om = smooth(&layout, 1e-6).unwrap();
    let state = build_deformed_cluster(&layout, &om, &lambda).unwrap();
    assert!(fidelity(&state, &target).unwrap() > 1.0 - 1e-9);
}

#[test]
fn exact_projection_reads_out_the_boltzmann_distribution() {
    for (name, model) in common::fixtures() {
        let (sys, layout) = compiled(&model);
        for beta in [0.0, 0.3, 1.0, 3.0] {
            let lambda = LambdaDeformation::new(&sys, beta).unwrap();
            let p = exact_thermal_readout(&layout, &sys, &lambda).unwrap();
            let oracle = partition_function(&model, beta).unwrap();
            for (a, b) in p.iter().zip(&oracle.probabilities) {
                assert!((a - b).abs() < 1e-9, "{name} beta {beta}");
            }
        }
    }
}

#[test]
fn comparison_state_matches_projection_at_zero_epsilon() {
    let (sys, layout) = compiled(&common::chain());
    let (_, phi) = build_clique_state(sys.model()).unwrap();
    let joint = comparison_state(&layout, &phi).unwrap();
    let cluster = StateVector::cluster_state(layout.lattice()).unwrap();
    let back = project_outputs(&layout, &joint).unwrap();
    assert!((back.norm() - 1.0).abs() < 1e-12);
    let carved = project_outputs(&layout, &cluster).unwrap().normalized().unwrap();
    assert!(fidelity(&back, &carved).unwrap() > 1.0 - 1e-12);
}

#[test]
fn layouts_are_deterministic() {
    let sys = CliqueSystem::new(&common::triangle());
    let a = compile_layout(&sys).unwrap().layout;
    let b = compile_layout(&sys).unwrap().layout;
    assert_eq!(a.to_json(None, None), b.to_json(None, None));
}

/// Pair-term clique system placed on random even cells of a 3x3 lattice with
/// a random set of kept cells.
fn random_pattern(outputs: [usize; 3], kept_bits: u16) -> ClusterLayout {
    let lattice = LatticeGraph::new(3, 3).unwrap();
    let even: Vec<usize> = (0..9).filter(|q| (q / 3 + q % 3) % 2 == 0).collect();
    let out: BTreeMap<usize, usize> = outputs
        .iter()
        .enumerate()
        .map(|(t, &i)| (even[i], t))
        .collect();
    let mut roles = vec![Role::A; 9];
    let mut omega = BTreeMap::new();
    for q in 0..9 {
        match out.get(&q) {
            Some(0) => roles[q] = Role::B,
            Some(_) => roles[q] = Role::C,
            None => {
                omega.insert(q, if kept_bits >> q & 1 == 1 { plus() } else { zero() });
            }
        }
    }
    ClusterLayout::new(lattice, roles, omega, out).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn parity_check_agrees_with_dense_projection(
        outputs in proptest::sample::subsequence((0..5usize).collect::<Vec<_>>(), 3).prop_shuffle(),
        kept_bits in 0u16..512,
    ) {
        let sys = CliqueSystem::new(&common::pair());
        let layout = random_pattern([outputs[0], outputs[1], outputs[2]], kept_bits);
        let report = structural_check(&layout, &sys);
        prop_assert!(report.applicable);
        let out = carve(&layout, &sys).unwrap();
        let n_a = layout.a_qubits().len() as f64;
        let dense_exact = out.fidelity > 1.0 - 1e-10
            && (out.branch_norm - 0.5f64.powf(n_a / 2.0)).abs() < 1e-10;
        prop_assert_eq!(report.exact, dense_exact, "{}", report.detail);
    }
}
