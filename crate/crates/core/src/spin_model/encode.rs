//! Encoding of general q-level, k-body models into parity terms.
//!
//! Each q-level site becomes `log2(q)` spins (most significant digit bit
//! first). An energy table over `m` spins is expanded as
//! `E(x) = sum_S c_S (-1)^{|x & S|}`; the coefficients are one Walsh-Hadamard
//! transform away, `c = W E / 2^m`, since `W` is its own inverse up to `2^m`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ParityTerm, SpinModel, MAX_SPINS};
use crate::error::{Error, Result};

/// Coefficients below this magnitude are dropped.
pub const ZERO_COUPLING: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interaction {
    pub sites: Vec<usize>,
    /// Row-major energies, first listed site's digit most significant.
    pub table: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneralModel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_sites: Option<usize>,
    pub q: usize,
    pub interactions: Vec<Interaction>,
}

impl GeneralModel {
    pub fn site_count(&self) -> usize {
        self.n_sites.unwrap_or_else(|| {
            self.interactions
                .iter()
                .flat_map(|i| i.sites.iter())
                .max()
                .map_or(1, |&m| m + 1)
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.q < 2 || !self.q.is_power_of_two() {
            return Err(Error::Unsupported(format!(
                "q = {} is not a power of two; surplus encoded states are left unspecified",
                self.q
            )));
        }
        let n = self.site_count();
        for it in &self.interactions {
            let mut sorted = it.sites.clone();
            sorted.sort_unstable();
            if sorted.is_empty() || sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::input(format!("bad site list {:?}", it.sites)));
            }
            if let Some(&bad) = sorted.iter().find(|&&s| s >= n) {
                return Err(Error::input(format!("site {bad} out of range for {n} sites")));
            }
            let expected = self
                .q
                .checked_pow(it.sites.len() as u32)
                .ok_or_else(|| Error::input("energy table size overflows"))?;
            if it.table.len() != expected {
                return Err(Error::input(format!(
                    "table for {:?} has {} entries, expected {expected}",
                    it.sites,
                    it.table.len()
                )));
            }
            if it.table.iter().any(|e| !e.is_finite()) {
                return Err(Error::input(format!("non-finite energy in table for {:?}", it.sites)));
            }
        }
        Ok(())
    }

    /// Energy of a configuration given as one digit per site.
    pub fn energy(&self, digits: &[usize]) -> f64 {
        self.interactions
            .iter()
            .map(|it| {
                let idx = it.sites.iter().fold(0usize, |acc, &s| acc * self.q + digits[s]);
                it.table[idx]
            })
            .sum()
    }

    /// Spin configuration word for per-site digits under the encoding.
    pub fn encode_digits(&self, digits: &[usize]) -> u64 {
        let bits = self.q.trailing_zeros();
        digits
            .iter()
            .fold(0u64, |acc, &d| (acc << bits) | d as u64)
    }
}

/// In-place unnormalized Walsh-Hadamard transform; length must be a power of two.
pub fn walsh_hadamard(values: &mut [f64]) {
    let n = values.len();
    assert!(n.is_power_of_two(), "transform length {n} is not a power of two");
    let mut h = 1;
    while h < n {
        for block in values.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Exact parity-term encoding. Fails if a nonzero coefficient needs more than
/// `max_arity` spins.
pub fn encode_general(gm: &GeneralModel, max_arity: usize) -> Result<SpinModel> {
    gm.validate()?;
    let bits_per_site = gm.q.trailing_zeros() as usize;
    let n_spins = gm.site_count() * bits_per_site;
    if n_spins > MAX_SPINS {
        return Err(Error::input(format!(
            "encoding needs {n_spins} spins, more than {MAX_SPINS}"
        )));
    }

    let mut offset = 0.0;
    let mut couplings: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for it in &gm.interactions {
        let m = it.sites.len() * bits_per_site;
        if m >= 31 {
            return Err(Error::resource("interaction table bits", m, 30));
        }
        let spin_of = |t: usize| it.sites[t / bits_per_site] * bits_per_site + t % bits_per_site;
        let mut coeffs = it.table.clone();
        walsh_hadamard(&mut coeffs);
        let scale = 1.0 / (1u64 << m) as f64;
        for (mask, c) in coeffs.into_iter().enumerate() {
            let c = c * scale;
            if mask == 0 {
                offset += c;
                continue;
            }
            let mut sites: Vec<usize> = (0..m)
                .filter(|t| mask >> (m - 1 - t) & 1 == 1)
                .map(spin_of)
                .collect();
            sites.sort_unstable();
            *couplings.entry(sites).or_insert(0.0) += c;
        }
    }

    let mut terms = Vec::new();
    for (sites, j) in couplings {
        if j.abs() < ZERO_COUPLING {
            continue;
        }
        if sites.len() > max_arity {
            return Err(Error::input(format!(
                "encoded term on {sites:?} has arity {} above the cap {max_arity}",
                sites.len()
            )));
        }
        terms.push(ParityTerm { sites, j });
    }
    SpinModel::with_max_arity(n_spins, terms, offset, max_arity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::SpinConfig;

    /// Dense Gaussian elimination on the parity-character system, independent
    /// of the transform.
    fn solve_parity_system(table: &[f64]) -> Vec<f64> {
        let n = table.len();
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|x| {
                let mut row: Vec<f64> = (0..n)
                    .map(|s| if (x & s).count_ones() % 2 == 0 { 1.0 } else { -1.0 })
                    .collect();
                row.push(table[x]);
                row
            })
            .collect();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
                .unwrap();
            a.swap(col, piv);
            for r in 0..n {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        (0..n).map(|i| a[i][n] / a[i][i]).collect()
    }

    fn lcg(seed: &mut u64) -> f64 {
        *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((*seed >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
    }

    #[test]
    fn transform_matches_linear_solve() {
        let mut seed = 7;
        for m in 1..=5 {
            let table: Vec<f64> = (0..1 << m).map(|_| lcg(&mut seed)).collect();
            let oracle = solve_parity_system(&table);
            let mut fast = table.clone();
            walsh_hadamard(&mut fast);
            for (o, f) in oracle.iter().zip(&fast) {
                assert!((o - f / (1 << m) as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_binary_site() {
        let gm = GeneralModel {
            n_sites: None,
            q: 2,
            interactions: vec![Interaction {
                sites: vec![0],
                table: vec![0.0, 2.0],
            }],
        };
        let m = encode_general(&gm, 3).unwrap();
        assert_eq!(m.offset(), 1.0);
        // E(0) = 1 + J = 0 forces J = (E(0) - E(1)) / 2 = -1.
        assert_eq!(m.terms(), &[ParityTerm::new([0], -1.0)]);
    }

    #[test]
    fn zero_table_gives_empty_model() {
        let gm = GeneralModel {
            n_sites: Some(2),
            q: 4,
            interactions: vec![Interaction {
                sites: vec![0, 1],
                table: vec![0.0; 16],
            }],
        };
        let m = encode_general(&gm, 3).unwrap();
        assert!(m.terms().is_empty());
        assert_eq!(m.offset(), 0.0);
    }

    #[test]
    fn four_level_pair_round_trip() {
        let mut seed = 99;
        let table: Vec<f64> = (0..16).map(|_| lcg(&mut seed)).collect();
        let gm = GeneralModel {
            n_sites: None,
            q: 4,
            interactions: vec![Interaction {
                sites: vec![1, 0],
                table,
            }],
        };
        let m = encode_general(&gm, 4).unwrap();
        assert_eq!(m.n_spins(), 4);
        for d0 in 0..4 {
            for d1 in 0..4 {
                let digits = [d0, d1];
                let s = SpinConfig::new(4, gm.encode_digits(&digits)).unwrap();
                let e = m.energy(&s).unwrap();
                assert!((e - gm.energy(&digits)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unsupported_and_invalid() {
        let three = GeneralModel {
            n_sites: None,
            q: 3,
            interactions: vec![],
        };
        assert!(matches!(encode_general(&three, 3), Err(Error::Unsupported(_))));
        let short = GeneralModel {
            n_sites: None,
            q: 2,
            interactions: vec![Interaction {
                sites: vec![0, 1],
                table: vec![1.0, 2.0],
            }],
        };
        assert!(matches!(encode_general(&short, 3), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn arity_cap_applies_to_needed_terms() {
        let mut seed = 3;
        let gm = GeneralModel {
            n_sites: None,
            q: 4,
            interactions: vec![Interaction {
                sites: vec![0, 1],
                table: (0..16).map(|_| lcg(&mut seed)).collect(),
            }],
        };
        assert!(encode_general(&gm, 3).is_err());
        assert!(encode_general(&gm, 4).is_ok());
    }
}
