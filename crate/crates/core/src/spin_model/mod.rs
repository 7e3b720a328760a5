//! Classical Ising-type spin models.
//!
//! A model is a set of parity terms: each term couples a subset of spins
//! and contributes `J * (-1)^(xor of the subset)` to the energy. Local fields
//! are arity-1 terms, pair and plaquette couplings are arity 2 and 3.
//!
//! Spin configurations are binary words with spin 0 in the most significant
//! bit, so configuration index `x` lists spins left to right.

mod encode;
mod thermal;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use encode::{encode_general, walsh_hadamard, GeneralModel, Interaction};
pub use thermal::{
    observable_expectation, partition_function, partition_function_capped, ThermalSummary,
    BRUTE_FORCE_CAP,
};

/// Default bound on term arity.
pub const DEFAULT_MAX_ARITY: usize = 3;

/// Hard limit from the 64-bit configuration word.
pub const MAX_SPINS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityTerm {
    pub sites: Vec<usize>,
    #[serde(rename = "J")]
    pub j: f64,
}

impl ParityTerm {
    pub fn new(sites: impl Into<Vec<usize>>, j: f64) -> Self {
        ParityTerm {
            sites: sites.into(),
            j,
        }
    }

    pub fn arity(&self) -> usize {
        self.sites.len()
    }
}

/// A spin configuration `s = (s_0, ..., s_{n-1})`, `s_i` in {0, 1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    n: usize,
    bits: u64,
}

impl SpinConfig {
    pub fn new(n: usize, bits: u64) -> Result<Self> {
        if n > MAX_SPINS {
            return Err(Error::input(format!("{n} spins exceed the {MAX_SPINS}-bit word")));
        }
        if n < 64 && bits >> n != 0 {
            return Err(Error::input(format!("bits {bits:#b} do not fit {n} spins")));
        }
        Ok(SpinConfig { n, bits })
    }

    pub fn from_spins(spins: &[u8]) -> Result<Self> {
        let mut bits = 0u64;
        for &s in spins {
            if s > 1 {
                return Err(Error::input(format!("spin value {s} is not 0 or 1")));
            }
            bits = (bits << 1) | s as u64;
        }
        SpinConfig::new(spins.len(), bits)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Configuration word; also the index into probability tables.
    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn spin(&self, i: usize) -> u8 {
        assert!(i < self.n, "spin {i} out of range for {} spins", self.n);
        ((self.bits >> (self.n - 1 - i)) & 1) as u8
    }

    /// XOR of the spins in `sites`.
    pub fn parity(&self, sites: &[usize]) -> u8 {
        sites.iter().fold(0, |acc, &i| acc ^ self.spin(i))
    }

    pub fn all(n: usize) -> impl Iterator<Item = SpinConfig> {
        assert!(n < 64, "cannot enumerate {n} spins");
        (0..1u64 << n).map(move |bits| SpinConfig { n, bits })
    }
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n {
            write!(f, "{}", self.spin(i))?;
        }
        Ok(())
    }
}

/// Classical Hamiltonian `H(s) = offset + sum_T J_T (-1)^{xor_{i in T} s_i}`.
///
/// Terms are kept sorted by site list and never share a site set.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinModel {
    n_spins: usize,
    terms: Vec<ParityTerm>,
    offset: f64,
    max_arity: usize,
}

impl SpinModel {
    pub fn new(n_spins: usize, terms: Vec<ParityTerm>, offset: f64) -> Result<Self> {
        SpinModel::with_max_arity(n_spins, terms, offset, DEFAULT_MAX_ARITY)
    }

    /// Validates and canonicalizes: sites sorted, duplicate site sets merged by
    /// summing couplings.
    pub fn with_max_arity(
        n_spins: usize,
        terms: Vec<ParityTerm>,
        offset: f64,
        max_arity: usize,
    ) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::input("a model needs at least one spin"));
        }
        if n_spins > MAX_SPINS {
            return Err(Error::input(format!(
                "{n_spins} spins exceed the supported maximum of {MAX_SPINS}"
            )));
        }
        if !offset.is_finite() {
            return Err(Error::input("offset must be finite"));
        }
        let mut merged: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for term in terms {
            if term.sites.is_empty() {
                return Err(Error::input("term with an empty site set"));
            }
            if !term.j.is_finite() {
                return Err(Error::input(format!("coupling on {:?} is not finite", term.sites)));
            }
            let mut sites = term.sites.clone();
            sites.sort_unstable();
            if sites.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::input(format!("duplicate site in term {:?}", term.sites)));
            }
            if let Some(&bad) = sites.iter().find(|&&s| s >= n_spins) {
                return Err(Error::input(format!(
                    "site {bad} out of range for {n_spins} spins"
                )));
            }
            if sites.len() > max_arity {
                return Err(Error::input(format!(
                    "term {:?} has arity {} above the cap {max_arity}",
                    term.sites,
                    sites.len()
                )));
            }
            *merged.entry(sites).or_insert(0.0) += term.j;
        }
        let terms = merged
            .into_iter()
            .map(|(sites, j)| ParityTerm { sites, j })
            .collect();
        Ok(SpinModel {
            n_spins,
            terms,
            offset,
            max_arity,
        })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn terms(&self) -> &[ParityTerm] {
        &self.terms
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn max_arity(&self) -> usize {
        self.max_arity
    }

    /// Same couplings, zero offset.
    pub fn without_offset(&self) -> SpinModel {
        SpinModel {
            offset: 0.0,
            ..self.clone()
        }
    }

    /// Coupling of the arity-1 term on `site`, zero when absent.
    pub fn field(&self, site: usize) -> f64 {
        self.terms
            .iter()
            .find(|t| t.sites.len() == 1 && t.sites[0] == site)
            .map_or(0.0, |t| t.j)
    }

    pub fn energy(&self, s: &SpinConfig) -> Result<f64> {
        if s.len() != self.n_spins {
            return Err(Error::input(format!(
                "configuration has {} spins, model has {}",
                s.len(),
                self.n_spins
            )));
        }
        Ok(self.energy_of_bits(s.bits()))
    }

    pub(crate) fn masks(&self) -> Vec<(u64, f64)> {
        self.terms
            .iter()
            .map(|t| {
                let mask = t
                    .sites
                    .iter()
                    .fold(0u64, |m, &i| m | 1u64 << (self.n_spins - 1 - i));
                (mask, t.j)
            })
            .collect()
    }

    pub(crate) fn energy_of_bits(&self, bits: u64) -> f64 {
        energy_with_masks(&self.masks(), self.offset, bits)
    }
}

pub(crate) fn energy_with_masks(masks: &[(u64, f64)], offset: f64, bits: u64) -> f64 {
    masks.iter().fold(offset, |acc, &(mask, j)| {
        if (bits & mask).count_ones().is_multiple_of(2) {
            acc + j
        } else {
            acc - j
        }
    })
}

/// On-disk model representation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub n_spins: usize,
    pub offset: f64,
    pub terms: Vec<ParityTerm>,
}

impl From<&SpinModel> for ModelFile {
    fn from(m: &SpinModel) -> Self {
        ModelFile {
            n_spins: m.n_spins,
            offset: m.offset,
            terms: m.terms.clone(),
        }
    }
}

impl SpinModel {
    pub fn from_json(text: &str, max_arity: usize) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        SpinModel::with_max_arity(file.n_spins, file.terms, file.offset, max_arity)
    }

    /// Canonical serialization; parsing it back and re-serializing is
    /// byte-identical.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&ModelFile::from(self))
            .expect("model serialization cannot fail");
        s.push('\n');
        s
    }
}
