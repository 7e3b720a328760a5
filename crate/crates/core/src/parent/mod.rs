//! Parent Hamiltonians of deformed cluster states.
//!
//! For an `A` qubit `i` the term is `P_i = W^dag (I - K_i) W`, for an output
//! qubit `k` it is `Q_k = W^dag (-K_k - gamma_k Z_k - E_k) W`, where
//! `K_a = X_a prod_{b ~ a} Z_b` and `W` is the product of `Omega_a^{-1}` over
//! the `A` qubits in the support of `K`. Each bracket annihilates
//! `Lambda |C>`: the diagonal `Lambda` commutes with the `Z` parts, and
//! `-X - gamma Z` has ground state `Lambda_k |+>` once
//! `gamma = -sinh(beta J)`, `E = -cosh(beta J)`. The `W` factors then undo
//! `Omega` locally.
//!
//! Both brackets are multiples of projectors, so every term is stored with
//! a factor `R` satisfying `term = R^dag R`; spectra of terms are read off
//! the singular values of `R`, which stays accurate when the term norms
//! grow like `eps^{-2f}` with `f` the number of `Omega` factors.

mod eigen;
mod operator;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::clique::{LambdaDeformation, OVERFLOW_CAP};
use crate::error::{Error, Result};
use crate::mbqc::{ClusterLayout, OmegaDeformation, Role};
use crate::pauli::{Pauli, PauliString};
use crate::state::{LatticeGraph, SingleQubitOp, StateVector};

pub use eigen::{ground_analysis, ground_analysis_preconditioned, EigenConfig, GroundReport};
pub use operator::{to_dense, LinearOperator, MatrixFreeOperator, SparseOperator};
use operator::EmbeddedTerm;

/// Largest register the Hamiltonian is assembled for.
pub const DIAG_QUBIT_CAP: usize = 24;

/// Above this many estimated stored entries the operator is applied
/// matrix-free.
pub const SPARSE_NNZ_CAP: usize = 1 << 22;

/// `(gamma, E)` with `gamma = -sinh(beta J)` and `E = -cosh(beta J)`: the
/// ground state of `-X - gamma Z` is proportional to
/// `(e^{-beta J / 2}, e^{beta J / 2})` with energy `E`.
pub fn gamma_energy(beta_j: f64) -> Result<(f64, f64)> {
    if !beta_j.is_finite() {
        return Err(Error::input("beta*J must be finite"));
    }
    if beta_j.abs() > OVERFLOW_CAP {
        return Err(Error::Overflow {
            value: beta_j.abs(),
            cap: OVERFLOW_CAP,
        });
    }
    Ok((-beta_j.sinh(), -beta_j.cosh()))
}

#[derive(Clone, Debug, Serialize)]
pub struct SingleQubitGroundData {
    /// Lattice qubit.
    pub qubit: usize,
    /// Clique qubit it carries.
    pub target: usize,
    pub beta_j: f64,
    pub gamma: f64,
    pub energy: f64,
}

pub fn ground_data(
    layout: &ClusterLayout,
    lambda: &LambdaDeformation,
) -> Result<Vec<SingleQubitGroundData>> {
    layout
        .target_map()
        .iter()
        .map(|(&qubit, &target)| {
            let beta_j = lambda.beta_j(target);
            let (gamma, energy) = gamma_energy(beta_j)?;
            Ok(SingleQubitGroundData {
                qubit,
                target,
                beta_j,
                gamma,
                energy,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterStabilizer {
    pub center: usize,
    /// `center` and its neighbours, ascending.
    pub support: Vec<usize>,
    pub pauli: PauliString,
}

impl ClusterStabilizer {
    /// Matrix on `support`, first support qubit most significant.
    pub fn matrix(&self) -> DMatrix<C64> {
        self.pauli.local_matrix(&self.support)
    }
}

/// `K_a = X_a prod_{b ~ a} Z_b`.
#[allow(non_snake_case)]
pub fn build_K(lattice: &LatticeGraph, a: usize) -> Result<ClusterStabilizer> {
    let n = lattice.n_qubits();
    if a >= n {
        return Err(Error::input(format!("qubit {a} is not on the lattice")));
    }
    let nbs = lattice.neighbors(a);
    let mut factors = vec![(a, Pauli::X)];
    factors.extend(nbs.iter().map(|&b| (b, Pauli::Z)));
    let mut support = nbs;
    support.push(a);
    support.sort_unstable();
    Ok(ClusterStabilizer {
        center: a,
        support,
        pauli: PauliString::from_sparse(n, false, &factors)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TermKind {
    P,
    Q,
}

#[derive(Clone, Debug)]
pub struct LocalTerm {
    pub kind: TermKind,
    pub center: usize,
    pub support: Vec<usize>,
    /// Number of `Omega^{-1}` factors in the conjugation.
    pub omega_factors: usize,
    block: DMatrix<C64>,
    factor: DMatrix<C64>,
}

impl LocalTerm {
    fn new(
        kind: TermKind,
        k: &ClusterStabilizer,
        omega_factors: usize,
        bracket: DMatrix<C64>,
        bracket_factor: DMatrix<C64>,
        w: &DMatrix<C64>,
    ) -> Self {
        let block = w.adjoint() * bracket * w;
        let block = (&block + block.adjoint()) * C64::new(0.5, 0.0);
        LocalTerm {
            kind,
            center: k.center,
            support: k.support.clone(),
            omega_factors,
            block,
            factor: bracket_factor * w,
        }
    }

    pub fn block(&self) -> &DMatrix<C64> {
        &self.block
    }

    /// `R` with `block = R^dag R`.
    pub fn factor(&self) -> &DMatrix<C64> {
        &self.factor
    }

    pub fn hermiticity_error(&self) -> f64 {
        (&self.block - self.block.adjoint()).camax()
    }

    fn singular_values(&self) -> Vec<f64> {
        self.factor.clone().singular_values().iter().copied().collect()
    }

    /// Smallest eigenvalue of the block, as the squared smallest singular
    /// value of its factor.
    pub fn min_eigenvalue(&self) -> f64 {
        self.singular_values().into_iter().fold(f64::INFINITY, f64::min).powi(2)
    }

    pub fn operator_norm(&self) -> f64 {
        self.singular_values().into_iter().fold(0.0, f64::max).powi(2)
    }

    /// Largest deviation between the stored block and `R^dag R`, relative
    /// to the operator norm.
    pub fn factor_consistency(&self) -> f64 {
        let rr = self.factor.adjoint() * &self.factor;
        (&rr - &self.block).camax() / self.operator_norm().max(1e-300)
    }

    pub(crate) fn embed(&self, n: usize) -> EmbeddedTerm {
        EmbeddedTerm::new(n, &self.support, &self.block)
    }

    /// The term applied to a full register state.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let n = state.n_qubits();
        let t = self.embed(n);
        let x = state.amplitudes();
        let amps = (0..state.dim()).map(|i| t.row_dot(i, x)).collect();
        StateVector::new(n, amps)
    }

    pub fn dump(&self) -> TermDump {
        TermDump {
            kind: self.kind,
            support: self.support.clone(),
            block: self
                .block
                .row_iter()
                .flat_map(|r| r.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
                .collect(),
        }
    }
}

/// One term in the optional JSON dump; `block` is row-major.
#[derive(Clone, Debug, Serialize)]
pub struct TermDump {
    pub kind: TermKind,
    pub support: Vec<usize>,
    pub block: Vec<[f64; 2]>,
}

fn kron_over(support: &[usize], mut f: impl FnMut(usize) -> DMatrix<C64>) -> DMatrix<C64> {
    support
        .iter()
        .fold(DMatrix::identity(1, 1), |acc, &q| acc.kronecker(&f(q)))
}

fn op_matrix(m: &[[C64; 2]; 2]) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |i, j| m[i][j])
}

/// `prod Omega_a^{-1}` over the `A` qubits of `support`, and their count.
fn omega_inverse(
    layout: &ClusterLayout,
    support: &[usize],
    omega: Option<&OmegaDeformation>,
) -> Result<(DMatrix<C64>, usize)> {
    let mut count = 0;
    let mut missing = None;
    let w = kron_over(support, |q| match (layout.role(q), omega) {
        (Role::A, Some(om)) => match om.inverse(q) {
            Some(inv) => {
                count += 1;
                op_matrix(inv.matrix())
            }
            None => {
                missing = Some(q);
                DMatrix::identity(2, 2)
            }
        },
        _ => DMatrix::identity(2, 2),
    });
    if let Some(q) = missing {
        return Err(Error::input(format!("no Omega on A qubit {q}")));
    }
    Ok((w, count))
}

fn check_sizes(layout: &ClusterLayout, lambda: &LambdaDeformation) -> Result<()> {
    if lambda.n_qubits() != layout.target_map().len() {
        return Err(Error::input(format!(
            "deformation covers {} clique qubits, layout has {} outputs",
            lambda.n_qubits(),
            layout.target_map().len()
        )));
    }
    Ok(())
}

/// `P_i = W^dag (I - K_i) W`; `omega = None` means no smoothing.
#[allow(non_snake_case)]
pub fn build_P(
    layout: &ClusterLayout,
    omega: Option<&OmegaDeformation>,
    i: usize,
) -> Result<LocalTerm> {
    if i >= layout.n_qubits() || layout.role(i) != Role::A {
        return Err(Error::input(format!("qubit {i} is not in group A")));
    }
    let k = build_K(layout.lattice(), i)?;
    let (w, count) = omega_inverse(layout, &k.support, omega)?;
    let dim = 1 << k.support.len();
    let proj = (DMatrix::identity(dim, dim) - k.matrix()) * C64::new(0.5, 0.0);
    let bracket = &proj * C64::new(2.0, 0.0);
    let factor = proj * C64::new(2f64.sqrt(), 0.0);
    Ok(LocalTerm::new(TermKind::P, &k, count, bracket, factor, &w))
}

/// `Q_k = W^dag (-K_k - gamma_k Z_k - E_k I) W`.
#[allow(non_snake_case)]
pub fn build_Q(
    layout: &ClusterLayout,
    omega: Option<&OmegaDeformation>,
    lambda: &LambdaDeformation,
    k: usize,
) -> Result<LocalTerm> {
    check_sizes(layout, lambda)?;
    let target = layout
        .target(k)
        .ok_or_else(|| Error::input(format!("qubit {k} is not an output")))?;
    let (gamma, energy) = gamma_energy(lambda.beta_j(target))?;
    let stab = build_K(layout.lattice(), k)?;
    let (w, count) = omega_inverse(layout, &stab.support, omega)?;
    let dim = 1 << stab.support.len();
    let z = kron_over(&stab.support, |q| {
        if q == k {
            op_matrix(&Pauli::Z.matrix())
        } else {
            DMatrix::identity(2, 2)
        }
    });
    let id = DMatrix::<C64>::identity(dim, dim);
    // -K - gamma Z has eigenvalues +-cosh, so the bracket is 2 cosh times
    // the projector onto its upper eigenspace.
    let a = -stab.matrix() - &z * C64::new(gamma, 0.0);
    let bracket = &a - &id * C64::new(energy, 0.0);
    let c = -energy;
    let proj = (&id + &a * C64::new(1.0 / c, 0.0)) * C64::new(0.5, 0.0);
    let factor = proj * C64::new((2.0 * c).sqrt(), 0.0);
    Ok(LocalTerm::new(TermKind::Q, &stab, count, bracket, factor, &w))
}

#[derive(Clone, Debug)]
pub struct ParentHamiltonian {
    n_qubits: usize,
    terms: Vec<LocalTerm>,
}

/// `sum_{i in A} P_i + sum_{k in B, C} Q_k`, terms in lattice order.
pub fn assemble(
    layout: &ClusterLayout,
    omega: Option<&OmegaDeformation>,
    lambda: &LambdaDeformation,
) -> Result<ParentHamiltonian> {
    check_sizes(layout, lambda)?;
    let n = layout.n_qubits();
    if n > DIAG_QUBIT_CAP {
        return Err(Error::resource("Hamiltonian qubits", n, DIAG_QUBIT_CAP));
    }
    let terms = (0..n)
        .map(|q| match layout.role(q) {
            Role::A => build_P(layout, omega, q),
            _ => build_Q(layout, omega, lambda, q),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ParentHamiltonian { n_qubits: n, terms })
}

impl ParentHamiltonian {
    /// `sum_a (I - K_a)` on a bare lattice.
    pub fn undeformed(lattice: &LatticeGraph) -> Result<Self> {
        let n = lattice.n_qubits();
        if n > DIAG_QUBIT_CAP {
            return Err(Error::resource("Hamiltonian qubits", n, DIAG_QUBIT_CAP));
        }
        let terms = (0..n)
            .map(|a| {
                let k = build_K(lattice, a)?;
                let dim = 1 << k.support.len();
                let proj = (DMatrix::identity(dim, dim) - k.matrix()) * C64::new(0.5, 0.0);
                let bracket = &proj * C64::new(2.0, 0.0);
                let factor = proj * C64::new(2f64.sqrt(), 0.0);
                Ok(LocalTerm::new(TermKind::P, &k, 0, bracket, factor, &DMatrix::identity(dim, dim)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ParentHamiltonian { n_qubits: n, terms })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    pub fn max_term_norm(&self) -> f64 {
        self.terms.iter().map(LocalTerm::operator_norm).fold(0.0, f64::max)
    }

    pub fn min_term_eigenvalue(&self) -> f64 {
        self.terms
            .iter()
            .map(LocalTerm::min_eigenvalue)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_support(&self) -> usize {
        self.terms.iter().map(|t| t.support.len()).max().unwrap_or(0)
    }

    fn embedded(&self) -> Vec<EmbeddedTerm> {
        self.terms.iter().map(|t| t.embed(self.n_qubits)).collect()
    }

    /// Upper bound on stored entries of the explicit matrix.
    pub fn nnz_estimate(&self) -> usize {
        let per_row: usize = self.embedded().iter().map(EmbeddedTerm::nonzeros_per_row).sum();
        per_row.saturating_mul(self.dim())
    }

    pub fn sparse(&self) -> SparseOperator {
        SparseOperator::from_terms(self.n_qubits, &self.embedded())
    }

    pub fn matrix_free(&self) -> MatrixFreeOperator {
        MatrixFreeOperator::new(self.n_qubits, self.embedded())
    }

    /// Explicit CSR when it fits `SPARSE_NNZ_CAP`, matrix-free otherwise.
    pub fn operator(&self) -> Box<dyn LinearOperator> {
        if self.nnz_estimate() <= SPARSE_NNZ_CAP {
            Box::new(self.sparse())
        } else {
            Box::new(self.matrix_free())
        }
    }

    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        if state.n_qubits() != self.n_qubits {
            return Err(Error::input("state does not match the Hamiltonian"));
        }
        let op = self.matrix_free();
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        op.apply(state.amplitudes(), &mut out);
        StateVector::new(self.n_qubits, out)
    }

    /// `<psi|H|psi> / <psi|psi>`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let h = self.apply(state)?;
        Ok(state.inner(&h)?.re / state.norm_sqr())
    }

    pub fn dump(&self) -> Vec<TermDump> {
        self.terms.iter().map(LocalTerm::dump).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConditioningPoint {
    pub epsilon: f64,
    pub max_term_norm: f64,
    /// Largest number of `Omega^{-1}` factors in one term.
    pub max_omega_factors: usize,
    /// `max_term_norm * eps^{2 f}` with `f = max_omega_factors`.
    pub scaled_norm: f64,
}

/// Largest term norm over an epsilon grid.
pub fn conditioning(
    layout: &ClusterLayout,
    lambda: &LambdaDeformation,
    epsilons: &[f64],
) -> Result<Vec<ConditioningPoint>> {
    epsilons
        .iter()
        .map(|&eps| {
            let om = crate::mbqc::smooth(layout, eps)?;
            let h = assemble(layout, Some(&om), lambda)?;
            let max_term_norm = h.max_term_norm();
            let f = h.terms.iter().map(|t| t.omega_factors).max().unwrap_or(0);
            Ok(ConditioningPoint {
                epsilon: eps,
                max_term_norm,
                max_omega_factors: f,
                scaled_norm: max_term_norm * eps.powi(2 * f as i32),
            })
        })
        .collect()
}

impl ParentHamiltonian {
    /// Diagonal in the computational basis.
    pub fn diagonal(&self) -> Vec<f64> {
        use rayon::prelude::*;
        let terms = self.embedded();
        (0..self.dim())
            .into_par_iter()
            .map(|i| terms.iter().map(|t| t.diagonal_entry(i).re).sum())
            .collect()
    }

    /// Same operator after the local unitary `U_q` on each listed qubit:
    /// every term becomes `U T U^dag`.
    pub fn conjugated(&self, unitaries: &BTreeMap<usize, SingleQubitOp>) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let u = kron_over(&t.support, |q| match unitaries.get(&q) {
                    Some(op) => op_matrix(op.matrix()),
                    None => DMatrix::identity(2, 2),
                });
                let block = &u * &t.block * u.adjoint();
                LocalTerm {
                    block: (&block + block.adjoint()) * C64::new(0.5, 0.0),
                    factor: &t.factor * u.adjoint(),
                    ..t.clone()
                }
            })
            .collect();
        ParentHamiltonian {
            n_qubits: self.n_qubits,
            terms,
        }
    }
}

/// Unitaries taking each `omega_a` to `|0>` and `omega_a^perp` to `|1>`.
pub fn omega_frame(layout: &ClusterLayout) -> Result<BTreeMap<usize, SingleQubitOp>> {
    layout
        .a_qubits()
        .into_iter()
        .map(|q| {
            let w = layout.omega(q).expect("A qubit has omega");
            let p = crate::mbqc::perp(w);
            let u = SingleQubitOp::new([[w[0].conj(), w[1].conj()], [p[0].conj(), p[1].conj()]])?;
            Ok((q, u))
        })
        .collect()
}

/// Ground-state analysis of a parent Hamiltonian against `reference`.
///
/// With a layout, the problem is solved in the frame where every `omega_a`
/// is `|0>`: there the `eps^{-1}` growth of the terms sits mostly on the
/// diagonal, which a diagonal preconditioner absorbs. The returned ground
/// state is rotated back to the lattice frame.
pub fn analyze(
    h: &ParentHamiltonian,
    layout: Option<&ClusterLayout>,
    reference: &StateVector,
    cfg: &EigenConfig,
) -> Result<GroundReport> {
    let Some(layout) = layout else {
        return ground_analysis(h.operator().as_ref(), reference, cfg);
    };
    if layout.n_qubits() != h.n_qubits() {
        return Err(Error::input("layout does not match the Hamiltonian"));
    }
    let frame = omega_frame(layout)?;
    let rotated = h.conjugated(&frame);
    let mut reference = reference.clone();
    for (&q, u) in &frame {
        reference.apply_local_mut(q, u)?;
    }
    let diag = rotated.diagonal();
    let mut report =
        ground_analysis_preconditioned(rotated.operator().as_ref(), &diag, &reference, cfg)?;
    let mut ground = StateVector::new(h.n_qubits(), std::mem::take(&mut report.ground_state))?;
    for (&q, u) in &frame {
        ground.apply_local_mut(q, &u.adjoint())?;
    }
    report.ground_state = ground.into_amplitudes();
    Ok(report)
}
