#![allow(dead_code)]

use thermal_cluster::spin_model::{ParityTerm, SpinModel};

pub fn lone_spin() -> SpinModel {
    SpinModel::new(1, vec![ParityTerm::new([0], 0.4)], 0.0).unwrap()
}

pub fn pair() -> SpinModel {
    SpinModel::new(2, vec![ParityTerm::new([0, 1], -1.0)], 0.0).unwrap()
}

pub fn chain() -> SpinModel {
    SpinModel::new(
        3,
        vec![
            ParityTerm::new([0, 1], -1.0),
            ParityTerm::new([1, 2], 0.5),
            ParityTerm::new([1], 0.25),
        ],
        0.0,
    )
    .unwrap()
}

pub fn triangle() -> SpinModel {
    SpinModel::new(
        3,
        vec![
            ParityTerm::new([0, 1], 1.0),
            ParityTerm::new([1, 2], -0.7),
            ParityTerm::new([0, 2], 0.4),
        ],
        0.0,
    )
    .unwrap()
}

/// The carving fixtures, smallest first.
pub fn fixtures() -> Vec<(&'static str, SpinModel)> {
    vec![
        ("lone spin", lone_spin()),
        ("pair", pair()),
        ("chain", chain()),
        ("triangle", triangle()),
    ]
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermal_cluster::spin_model::{GeneralModel, Interaction};

/// Random `q`-level model on `n_sites` sites with every single site and
/// every pair carrying a table of energies uniform in `[-2, 2]`.
pub fn random_general(seed: u64, n_sites: usize, q: usize) -> GeneralModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut interactions = Vec::new();
    for a in 0..n_sites {
        interactions.push(Interaction {
            sites: vec![a],
            table: (0..q).map(|_| rng.random_range(-2.0..=2.0)).collect(),
        });
        for b in a + 1..n_sites {
            interactions.push(Interaction {
                sites: vec![b, a],
                table: (0..q * q).map(|_| rng.random_range(-2.0..=2.0)).collect(),
            });
        }
    }
    GeneralModel {
        n_sites: Some(n_sites),
        q,
        interactions,
    }
}

/// Every digit assignment of `n` sites with `q` levels, first site slowest.
pub fn digit_configs(n: usize, q: usize) -> Vec<Vec<usize>> {
    (0..q.pow(n as u32))
        .map(|mut x| {
            let mut d = vec![0; n];
            for slot in d.iter_mut().rev() {
                *slot = x % q;
                x /= q;
            }
            d
        })
        .collect()
}

/// Brute-force `Z` of a general model, summing digits directly.
pub fn general_partition_function(gm: &GeneralModel, beta: f64) -> f64 {
    digit_configs(gm.site_count(), gm.q)
        .iter()
        .map(|d| (-beta * gm.energy(d)).exp())
        .sum()
}
