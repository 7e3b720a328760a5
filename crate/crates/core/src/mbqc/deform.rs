//! Smoothed projectors and the deformed cluster state.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

use super::{perp, project_outputs, ClusterLayout};
use crate::clique::{CliqueSystem, LambdaDeformation};
use crate::error::{Error, Result};
use crate::state::{SingleQubitOp, StateVector, DENSE_CAP};

/// `a |w><w| + b |w^perp><w^perp|`.
fn spectral(w: [C64; 2], a: f64, b: f64) -> Result<SingleQubitOp> {
    let p = perp(w);
    let mut m = [[C64::new(0.0, 0.0); 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = w[i] * w[j].conj() * a + p[i] * p[j].conj() * b;
        }
    }
    SingleQubitOp::new(m)
}

/// `Omega_a = (1 - eps) |omega_a><omega_a| + eps |omega_a^perp><omega_a^perp|`
/// on every `A` qubit, with inverses taken from the same eigenbasis.
#[derive(Clone, Debug)]
pub struct OmegaDeformation {
    epsilon: f64,
    ops: BTreeMap<usize, (SingleQubitOp, SingleQubitOp)>,
}

impl OmegaDeformation {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.ops.keys().copied()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.ops.contains_key(&q)
    }

    pub fn op(&self, q: usize) -> Option<&SingleQubitOp> {
        self.ops.get(&q).map(|(o, _)| o)
    }

    pub fn inverse(&self, q: usize) -> Option<&SingleQubitOp> {
        self.ops.get(&q).map(|(_, i)| i)
    }

    /// Eigenvalues of `Omega_a`, larger first.
    pub fn eigenvalues(&self) -> (f64, f64) {
        (1.0 - self.epsilon, self.epsilon)
    }
}

pub fn smooth(layout: &ClusterLayout, epsilon: f64) -> Result<OmegaDeformation> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::input(format!("epsilon {epsilon} must lie in (0, 1/2)")));
    }
    let ops = layout
        .a_qubits()
        .into_iter()
        .map(|q| {
            let w = layout.omega(q).expect("A qubit has omega");
            let op = spectral(w, 1.0 - epsilon, epsilon)?;
            let inv = spectral(w, 1.0 / (1.0 - epsilon), 1.0 / epsilon)?;
            Ok((q, (op, inv)))
        })
        .collect::<Result<_>>()?;
    Ok(OmegaDeformation { epsilon, ops })
}

fn check_lambda(layout: &ClusterLayout, lambda: &LambdaDeformation) -> Result<()> {
    if lambda.n_qubits() != layout.target_map().len() {
        return Err(Error::input(format!(
            "deformation covers {} clique qubits, layout has {} outputs",
            lambda.n_qubits(),
            layout.target_map().len()
        )));
    }
    Ok(())
}

/// Cluster state with `Lambda` routed onto the outputs, unnormalized up to
/// the scale removed by `LambdaDeformation::scaled_factor`.
fn lambda_cluster(layout: &ClusterLayout, lambda: &LambdaDeformation) -> Result<StateVector> {
    check_lambda(layout, lambda)?;
    if layout.n_qubits() > DENSE_CAP {
        return Err(Error::resource("lattice qubits", layout.n_qubits(), DENSE_CAP));
    }
    let mut state = StateVector::cluster_state(layout.lattice())?;
    for (&q, &t) in layout.target_map() {
        state.apply_local_mut(q, &lambda.scaled_factor(t))?;
    }
    Ok(state)
}

/// Normalized `Omega (x) Lambda |C>`.
pub fn build_deformed_cluster(
    layout: &ClusterLayout,
    omega: &OmegaDeformation,
    lambda: &LambdaDeformation,
) -> Result<StateVector> {
    let mut state = lambda_cluster(layout, lambda)?;
    for q in layout.a_qubits() {
        let op = omega
            .op(q)
            .ok_or_else(|| Error::input(format!("no Omega on A qubit {q}")))?;
        state.apply_local_mut(q, op)?;
    }
    state.normalized()
}

/// `(prod_A |omega_a>) (x) |target>` in lattice order, where `target` is a
/// clique-ordered state on the outputs.
pub fn comparison_state(layout: &ClusterLayout, target: &StateVector) -> Result<StateVector> {
    if target.n_qubits() != layout.target_map().len() {
        return Err(Error::input("target state does not match the layout outputs"));
    }
    let a = layout.a_qubits();
    let omegas: Vec<[C64; 2]> = a.iter().map(|&q| layout.omega(q).expect("A qubit")).collect();
    let joint = StateVector::product(&omegas)?.tensor(target)?;
    let order: Vec<usize> = (0..layout.n_qubits())
        .map(|q| match layout.target(q) {
            Some(t) => a.len() + t,
            None => a.binary_search(&q).expect("A qubit"),
        })
        .collect();
    joint.permute_qubits(&order)
}

/// `(1 - eps)^{|A|}`.
pub fn fidelity_bound(epsilon: f64, n_a: usize) -> f64 {
    (1.0 - epsilon).powi(n_a as i32)
}

/// Exact projection of the `Lambda`-deformed cluster state: the vertex-qubit
/// distribution of the normalized `omega` branch, indexed by configuration.
pub fn exact_thermal_readout(
    layout: &ClusterLayout,
    sys: &CliqueSystem,
    lambda: &LambdaDeformation,
) -> Result<Vec<f64>> {
    layout.check_system(sys)?;
    let state = lambda_cluster(layout, lambda)?;
    let branch = project_outputs(layout, &state)?.normalized()?;
    branch.basis_marginal(&sys.vertex_qubits())
}
