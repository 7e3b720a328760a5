//! Clique states of spin models and their Boltzmann deformation.
//!
//! The clique system assigns one qubit per coupling term of arity two or
//! more (interaction qubits) and one per spin (vertex qubits). Qubit order is
//! fixed: interaction qubits first, in the model's canonical term order,
//! then vertex qubits in spin order. The clique state is
//!
//! ```text
//! |phi> = 2^{-n/2} sum_s |p_T(s) for each interaction T> |s>
//! ```
//!
//! where `p_T(s)` is the parity of `s` on the sites of `T`.
//!
//! Deforming qubit `q` by `diag(e^{-beta J_q / 2}, e^{beta J_q / 2})` weights
//! branch `s` by `e^{-beta H(s) / 2}` (offset excluded), so
//! `||Lambda |phi>||^2 = Z / 2^n` and the vertex-qubit diagonal of the
//! normalized deformed state is the Boltzmann distribution. Arity-1 terms act
//! on the vertex qubit itself; a vertex without a field gets the identity.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::pauli::{independent, Pauli, PauliString};
use crate::spin_model::{SpinConfig, SpinModel};
use crate::state::{StateVector, SingleQubitOp, DENSE_CAP};

/// Largest `|beta * J|` accepted by any deformation.
pub const OVERFLOW_CAP: f64 = 300.0;

const STABILIZER_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CliqueQubit {
    /// Index into `SpinModel::terms`.
    Interaction { term: usize },
    Vertex { spin: usize },
}

#[derive(Clone, Debug)]
pub struct CliqueSystem {
    model: SpinModel,
    interaction_terms: Vec<usize>,
}

impl CliqueSystem {
    pub fn new(model: &SpinModel) -> Self {
        let interaction_terms = model
            .terms()
            .iter()
            .enumerate()
            .filter(|(_, t)| t.arity() >= 2)
            .map(|(i, _)| i)
            .collect();
        CliqueSystem {
            model: model.clone(),
            interaction_terms,
        }
    }

    pub fn model(&self) -> &SpinModel {
        &self.model
    }

    pub fn n_interactions(&self) -> usize {
        self.interaction_terms.len()
    }

    pub fn n_spins(&self) -> usize {
        self.model.n_spins()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_interactions() + self.n_spins()
    }

    pub fn vertex_qubit(&self, spin: usize) -> usize {
        self.n_interactions() + spin
    }

    pub fn vertex_qubits(&self) -> Vec<usize> {
        (0..self.n_spins()).map(|s| self.vertex_qubit(s)).collect()
    }

    /// Model term index of each interaction qubit, in qubit order.
    pub fn interaction_terms(&self) -> &[usize] {
        &self.interaction_terms
    }

    pub fn role(&self, q: usize) -> CliqueQubit {
        if q < self.n_interactions() {
            CliqueQubit::Interaction {
                term: self.interaction_terms[q],
            }
        } else {
            CliqueQubit::Vertex {
                spin: q - self.n_interactions(),
            }
        }
    }

    /// Spin sites of interaction qubit `e`.
    pub fn interaction_sites(&self, e: usize) -> &[usize] {
        &self.model.terms()[self.interaction_terms[e]].sites
    }

    /// Interaction qubits whose term contains `spin`.
    pub fn incident(&self, spin: usize) -> Vec<usize> {
        (0..self.n_interactions())
            .filter(|&e| self.interaction_sites(e).contains(&spin))
            .collect()
    }

    /// Coupling that deforms qubit `q`.
    pub fn coupling(&self, q: usize) -> f64 {
        match self.role(q) {
            CliqueQubit::Interaction { term } => self.model.terms()[term].j,
            CliqueQubit::Vertex { spin } => self.model.field(spin),
        }
    }

    /// Basis index of the branch for configuration bits `s`.
    pub fn branch_index(&self, s: u64) -> usize {
        let n = self.n_spins();
        let cfg = SpinConfig::new(n, s).expect("configuration fits");
        let parities = (0..self.n_interactions())
            .fold(0usize, |acc, e| (acc << 1) | cfg.parity(self.interaction_sites(e)) as usize);
        (parities << n) | s as usize
    }
}

pub fn build_clique_state(model: &SpinModel) -> Result<(CliqueSystem, StateVector)> {
    let sys = CliqueSystem::new(model);
    let n_q = sys.n_qubits();
    if n_q > DENSE_CAP {
        return Err(Error::resource("clique qubits", n_q, DENSE_CAP));
    }
    let n = sys.n_spins();
    let amp = C64::new((0.5f64).powf(n as f64 / 2.0), 0.0);
    let mut amps = vec![C64::new(0.0, 0.0); 1 << n_q];
    for s in 0..1u64 << n {
        amps[sys.branch_index(s)] = amp;
    }
    let state = StateVector::new(n_q, amps)?;
    Ok((sys, state))
}

#[derive(Clone, Debug)]
pub struct StabilizerGenerators {
    pub generators: Vec<PauliString>,
}

impl StabilizerGenerators {
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn mutually_commute(&self) -> bool {
        self.generators
            .iter()
            .enumerate()
            .all(|(i, a)| self.generators[i + 1..].iter().all(|b| a.commutes_with(b)))
    }

    pub fn independent(&self) -> bool {
        independent(&self.generators)
    }

    /// Largest deviation of `<g>` from +1 over all generators.
    pub fn max_deviation(&self, state: &StateVector) -> Result<f64> {
        self.generators
            .iter()
            .map(|g| g.expectation(state).map(|e| (e - 1.0).abs()))
            .try_fold(0.0, |acc, d| d.map(|d| f64::max(acc, d)))
    }
}

/// `Z_e prod_{a in T} Z_a` per interaction, then `X_a prod_{e incident} X_e`
/// per vertex. Checked algebraically always, and against the built state when
/// the clique fits the dense cap.
pub fn clique_stabilizers(sys: &CliqueSystem) -> Result<StabilizerGenerators> {
    let n_q = sys.n_qubits();
    let mut generators = Vec::with_capacity(n_q);
    for e in 0..sys.n_interactions() {
        let mut factors = vec![(e, Pauli::Z)];
        factors.extend(sys.interaction_sites(e).iter().map(|&a| (sys.vertex_qubit(a), Pauli::Z)));
        generators.push(PauliString::from_sparse(n_q, false, &factors)?);
    }
    for a in 0..sys.n_spins() {
        let mut factors = vec![(sys.vertex_qubit(a), Pauli::X)];
        factors.extend(sys.incident(a).into_iter().map(|e| (e, Pauli::X)));
        generators.push(PauliString::from_sparse(n_q, false, &factors)?);
    }
    let gens = StabilizerGenerators { generators };
    if !gens.mutually_commute() {
        return Err(Error::verification("clique stabilizers", "generators do not commute"));
    }
    if !gens.independent() {
        return Err(Error::verification("clique stabilizers", "generators are dependent"));
    }
    if n_q <= DENSE_CAP.min(20) {
        let (_, state) = build_clique_state(sys.model())?;
        let dev = gens.max_deviation(&state)?;
        if dev > STABILIZER_TOL {
            return Err(Error::verification(
                "clique stabilizers",
                format!("generator expectation off by {dev:.3e}"),
            ));
        }
    }
    Ok(gens)
}

/// Per-qubit diagonal deformation for one inverse temperature.
#[derive(Clone, Debug)]
pub struct LambdaDeformation {
    pub beta: f64,
    beta_j: Vec<f64>,
}

impl LambdaDeformation {
    pub fn new(sys: &CliqueSystem, beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::input("beta must be finite"));
        }
        let beta_j: Vec<f64> = (0..sys.n_qubits()).map(|q| beta * sys.coupling(q)).collect();
        if let Some(&x) = beta_j.iter().find(|x| x.abs() > OVERFLOW_CAP) {
            return Err(Error::Overflow {
                value: x.abs(),
                cap: OVERFLOW_CAP,
            });
        }
        Ok(LambdaDeformation { beta, beta_j })
    }

    /// No deformation on `n_qubits` qubits.
    pub fn identity(n_qubits: usize) -> Self {
        LambdaDeformation {
            beta: 0.0,
            beta_j: vec![0.0; n_qubits],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.beta_j.len()
    }

    /// `beta * J_q`.
    pub fn beta_j(&self, q: usize) -> f64 {
        self.beta_j[q]
    }

    /// `diag(e^{-beta J/2}, e^{beta J/2})`.
    pub fn factor(&self, q: usize) -> SingleQubitOp {
        let x = self.beta_j[q];
        SingleQubitOp::real_diag((-x / 2.0).exp(), (x / 2.0).exp())
    }

    /// `factor(q) * e^{-|beta J|/2}`, entries in (0, 1].
    pub fn scaled_factor(&self, q: usize) -> SingleQubitOp {
        let x = self.beta_j[q];
        SingleQubitOp::real_diag((-(x + x.abs()) / 2.0).exp(), ((x - x.abs()) / 2.0).exp())
    }

    /// Natural log of the scale removed by `scaled_factor`, summed over qubits.
    pub fn log_scale(&self) -> f64 {
        self.beta_j.iter().map(|x| x.abs() / 2.0).sum()
    }

    pub fn is_identity(&self) -> bool {
        self.beta_j.iter().all(|&x| x == 0.0)
    }
}

/// Partition function recovered from the deformed norm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Normalizer {
    pub z: f64,
    pub ln_z: f64,
}

/// Normalized `Lambda |phi>` and the offset-free partition function
/// `Z = 2^n ||Lambda |phi>||^2`; `state` must be the normalized clique state.
pub fn apply_lambda(
    sys: &CliqueSystem,
    state: &StateVector,
    beta: f64,
) -> Result<(StateVector, Normalizer)> {
    if state.n_qubits() != sys.n_qubits() {
        return Err(Error::input("state does not match the clique system"));
    }
    let lambda = LambdaDeformation::new(sys, beta)?;
    let mut out = state.clone();
    for q in 0..sys.n_qubits() {
        out.apply_local_mut(q, &lambda.scaled_factor(q))?;
    }
    let scaled_norm_sqr = out.norm_sqr();
    let ln_z = sys.n_spins() as f64 * std::f64::consts::LN_2
        + 2.0 * lambda.log_scale()
        + scaled_norm_sqr.ln();
    let normalized = out.scaled(1.0 / scaled_norm_sqr.sqrt());
    Ok((
        normalized,
        Normalizer {
            z: ln_z.exp(),
            ln_z,
        },
    ))
}

/// Vertex-qubit diagonal indexed by configuration word.
pub fn thermal_readout(sys: &CliqueSystem, deformed: &StateVector) -> Result<Vec<f64>> {
    if deformed.n_qubits() != sys.n_qubits() {
        return Err(Error::input("state does not match the clique system"));
    }
    deformed.basis_marginal(&sys.vertex_qubits())
}

pub fn readout_observable<F>(sys: &CliqueSystem, deformed: &StateVector, f: F) -> Result<f64>
where
    F: Fn(&SpinConfig) -> f64,
{
    let probs = thermal_readout(sys, deformed)?;
    let n = sys.n_spins();
    Ok(probs
        .iter()
        .enumerate()
        .map(|(bits, p)| p * f(&SpinConfig::new(n, bits as u64).expect("index fits")))
        .sum())
}
