mod common;

use proptest::prelude::*;
use thermal_cluster::spin_model::*;

/// Energy straight from the definition, spin by spin.
fn naive_energy(model: &SpinModel, spins: &[u8]) -> f64 {
    model.offset()
        + model
            .terms()
            .iter()
            .map(|t| {
                let ones = t.sites.iter().filter(|&&i| spins[i] == 1).count();
                if ones % 2 == 0 { t.j } else { -t.j }
            })
            .sum::<f64>()
}

fn arb_model() -> impl Strategy<Value = SpinModel> {
    (1usize..=5).prop_flat_map(|n| {
        let term = (proptest::sample::subsequence((0..n).collect::<Vec<_>>(), 1..=n.min(3)), -2.0f64..2.0)
            .prop_map(|(sites, j)| ParityTerm::new(sites, j));
        (Just(n), proptest::collection::vec(term, 0..8), -1.0f64..1.0)
            .prop_map(|(n, terms, offset)| SpinModel::new(n, terms, offset).unwrap())
    })
}

proptest! {
    #[test]
    fn energy_matches_direct_parity_count(model in arb_model(), word in any::<u64>()) {
        let n = model.n_spins();
        let bits = word & ((1u64 << n) - 1);
        let s = SpinConfig::new(n, bits).unwrap();
        let spins: Vec<u8> = (0..n).map(|i| s.spin(i)).collect();
        prop_assert!((model.energy(&s).unwrap() - naive_energy(&model, &spins)).abs() < 1e-12);
    }

    #[test]
    fn probabilities_are_normalized_boltzmann_weights(model in arb_model(), beta in 0.0f64..3.0) {
        let t = partition_function(&model, beta).unwrap();
        prop_assert!((t.probabilities.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let z: f64 = SpinConfig::all(model.n_spins())
            .map(|s| (-beta * model.energy(&s).unwrap()).exp())
            .sum();
        prop_assert!((t.z - z).abs() <= 1e-12 * z);
        for s in SpinConfig::all(model.n_spins()) {
            let p = (-beta * model.energy(&s).unwrap()).exp() / z;
            prop_assert!((t.probability(&s) - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn offset_only_rescales_the_partition_function(model in arb_model(), beta in 0.0f64..2.0) {
        let with = partition_function(&model, beta).unwrap();
        let without = partition_function(&model.without_offset(), beta).unwrap();
        prop_assert!((with.ln_z - (without.ln_z - beta * model.offset())).abs() < 1e-12);
        for (a, b) in with.probabilities.iter().zip(&without.probabilities) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn json_round_trip(model in arb_model()) {
        let text = model.to_json();
        let back = SpinModel::from_json(&text, DEFAULT_MAX_ARITY).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn walsh_hadamard_is_self_inverse_up_to_length(values in proptest::collection::vec(-5.0f64..5.0, 8)) {
        let mut v = values.clone();
        walsh_hadamard(&mut v);
        walsh_hadamard(&mut v);
        for (a, b) in v.iter().zip(&values) {
            prop_assert!((a / 8.0 - b).abs() < 1e-12);
        }
    }
}

#[test]
fn ferromagnet_closed_forms() {
    let m = common::pair();
    let t = partition_function(&m, 1.0).unwrap();
    let e = 1f64.exp();
    assert!((t.z - (2.0 * e + 2.0 / e)).abs() < 1e-12);
    let energy = observable_expectation(&m, 1.0, |s| m.energy(s).unwrap()).unwrap();
    assert!((energy + 1f64.tanh()).abs() < 1e-12);
}

#[test]
fn four_level_pairs_encode_exactly() {
    for seed in 0..20 {
        let gm = common::random_general(seed, 2, 4);
        let m = encode_general(&gm, 4).unwrap();
        assert_eq!(m.n_spins(), 4);
        for digits in common::digit_configs(2, 4) {
            let s = SpinConfig::new(4, gm.encode_digits(&digits)).unwrap();
            let want = gm.energy(&digits);
            assert!((m.energy(&s).unwrap() - want).abs() <= 1e-10 * want.abs().max(1.0));
        }
        let z = common::general_partition_function(&gm, 1.0);
        let got = partition_function(&m, 1.0).unwrap().z;
        assert!((got - z).abs() <= 1e-10 * z, "seed {seed}");
    }
}

#[test]
fn two_level_tables_reduce_to_fields_and_couplings() {
    // E(0)=0, E(1)=2 is 1 - (-1)^s
    let gm = GeneralModel {
        n_sites: None,
        q: 2,
        interactions: vec![Interaction { sites: vec![0], table: vec![0.0, 2.0] }],
    };
    let m = encode_general(&gm, 3).unwrap();
    assert_eq!(m.offset(), 1.0);
    assert_eq!(m.terms(), &[ParityTerm::new([0], -1.0)]);
}

#[test]
fn encoding_refuses_non_power_of_two_levels() {
    let gm = GeneralModel { n_sites: Some(2), q: 3, interactions: vec![] };
    assert!(matches!(encode_general(&gm, 3), Err(thermal_cluster::Error::Unsupported(_))));
}
