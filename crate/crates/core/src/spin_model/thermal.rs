//! Brute-force thermal sums. These are the reference values every quantum
//! readout is compared against, so there is deliberately no sampling path.

use rayon::prelude::*;

use super::{energy_with_masks, SpinConfig, SpinModel};
use crate::error::{Error, Result};

/// Largest model summed exhaustively by default (2^24 configurations).
pub const BRUTE_FORCE_CAP: usize = 24;

const CHUNK: usize = 1 << 14;

#[derive(Clone, Debug)]
pub struct ThermalSummary {
    pub beta: f64,
    /// Partition function. May be `inf` for extreme `beta`; `ln_z` stays finite.
    pub z: f64,
    pub ln_z: f64,
    /// Boltzmann probabilities indexed by configuration word.
    pub probabilities: Vec<f64>,
}

impl ThermalSummary {
    pub fn probability(&self, s: &SpinConfig) -> f64 {
        self.probabilities[s.bits() as usize]
    }
}

pub fn partition_function(model: &SpinModel, beta: f64) -> Result<ThermalSummary> {
    partition_function_capped(model, beta, BRUTE_FORCE_CAP)
}

pub fn partition_function_capped(
    model: &SpinModel,
    beta: f64,
    cap: usize,
) -> Result<ThermalSummary> {
    if !beta.is_finite() {
        return Err(Error::input("beta must be finite"));
    }
    let n = model.n_spins();
    if n > cap {
        return Err(Error::resource("brute-force spins", n, cap));
    }
    let masks = model.masks();
    let offset = model.offset();
    let dim = 1usize << n;

    let mut log_weights = vec![0.0f64; dim];
    log_weights
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (k, w) in chunk.iter_mut().enumerate() {
                *w = -beta * energy_with_masks(&masks, offset, (base + k) as u64);
            }
        });
    let max_log = log_weights
        .par_iter()
        .copied()
        .reduce(|| f64::NEG_INFINITY, f64::max);

    let mut probabilities = log_weights;
    probabilities
        .par_iter_mut()
        .for_each(|w| *w = (*w - max_log).exp());
    let scaled_z = ordered_sum(&probabilities);
    let inv = 1.0 / scaled_z;
    probabilities.par_iter_mut().for_each(|p| *p *= inv);

    let ln_z = max_log + scaled_z.ln();
    Ok(ThermalSummary {
        beta,
        z: ln_z.exp(),
        ln_z,
        probabilities,
    })
}

/// `sum_s f(s) e^{-beta H(s)} / Z`.
pub fn observable_expectation<F>(model: &SpinModel, beta: f64, f: F) -> Result<f64>
where
    F: Fn(&SpinConfig) -> f64 + Sync,
{
    let summary = partition_function(model, beta)?;
    let n = model.n_spins();
    let partial: Vec<f64> = summary
        .probabilities
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let base = c * CHUNK;
            chunk
                .iter()
                .enumerate()
                .map(|(k, &p)| {
                    let s = SpinConfig::new(n, (base + k) as u64).expect("index fits");
                    p * f(&s)
                })
                .sum::<f64>()
        })
        .collect();
    Ok(partial.iter().sum())
}

/// Chunked sum with a fixed reduction order so parallel runs are reproducible.
fn ordered_sum(values: &[f64]) -> f64 {
    let partial: Vec<f64> = values
        .par_chunks(CHUNK)
        .map(|chunk| chunk.iter().sum::<f64>())
        .collect();
    partial.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::ParityTerm;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn single_spin_field() {
        let h = 0.7;
        let beta = 1.3;
        let m = SpinModel::new(1, vec![ParityTerm::new([0], h)], 0.0).unwrap();
        let t = partition_function(&m, beta).unwrap();
        assert!(close(t.z, (-beta * h).exp() + (beta * h).exp(), 1e-14));
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let m = SpinModel::new(
            3,
            vec![ParityTerm::new([0, 1, 2], 1.5), ParityTerm::new([1], -0.3)],
            2.0,
        )
        .unwrap();
        let t = partition_function(&m, 0.0).unwrap();
        assert!(close(t.z, 8.0, 1e-15));
        for p in &t.probabilities {
            assert!((p - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn ferromagnetic_pair() {
        let m = SpinModel::new(2, vec![ParityTerm::new([0, 1], -1.0)], 0.0).unwrap();
        let t = partition_function(&m, 1.0).unwrap();
        let e = std::f64::consts::E;
        assert!(close(t.z, 2.0 * e + 2.0 / e, 1e-14));
        let sum: f64 = t.probabilities.iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectations() {
        let m = SpinModel::new(2, vec![ParityTerm::new([0, 1], -1.0)], 0.0).unwrap();
        let one = observable_expectation(&m, 1.0, |_| 1.0).unwrap();
        assert!((one - 1.0).abs() < 1e-14);
        let parity = observable_expectation(&m, 1.0, |s| {
            if s.parity(&[0, 1]) == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .unwrap();
        assert!((parity - 1f64.tanh()).abs() < 1e-14);

        let m3 = SpinModel::new(
            3,
            vec![ParityTerm::new([0, 2], 0.4), ParityTerm::new([1], 1.1)],
            -0.5,
        )
        .unwrap();
        let mean = observable_expectation(&m3, 0.0, |s| m3.energy(s).unwrap()).unwrap();
        let brute: f64 = SpinConfig::all(3).map(|s| m3.energy(&s).unwrap()).sum::<f64>() / 8.0;
        assert!((mean - brute).abs() < 1e-14);
    }

    #[test]
    fn cap_is_enforced() {
        let m = SpinModel::new(5, vec![], 0.0).unwrap();
        assert!(matches!(
            partition_function_capped(&m, 1.0, 4),
            Err(Error::Resource { .. })
        ));
    }

    #[test]
    fn extreme_beta_keeps_log_partition_finite() {
        let m = SpinModel::new(2, vec![ParityTerm::new([0, 1], -1.0)], 0.0).unwrap();
        let t = partition_function(&m, 2000.0).unwrap();
        assert!(t.ln_z.is_finite());
        assert!((t.ln_z - (2000.0 + 2f64.ln())).abs() < 1e-9);
        assert!((t.probabilities[0] - 0.5).abs() < 1e-12);
    }
}
