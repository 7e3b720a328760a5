//! Dense verification of carving patterns.

use serde::Serialize;

use super::{perp, ClusterLayout};
use crate::clique::{build_clique_state, CliqueSystem};
use crate::error::{Error, Result};
use crate::state::{fidelity, SingleQubitOp, StateVector, DENSE_CAP};

/// Largest `|A|` for which every projection branch is tabulated.
pub const CENSUS_CAP: usize = 20;

const FIDELITY_TOL: f64 = 1e-10;
const NORM_TOL: f64 = 1e-10;

/// Raw result of projecting a cluster state through a layout.
#[derive(Clone, Debug, PartialEq)]
pub struct CarvingOutcome {
    pub fidelity: f64,
    pub branch_norm: f64,
    pub all_pauli: bool,
    pub n_a: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CarvingCertificate {
    pub achieved_fidelity: f64,
    pub branch_norm: f64,
    /// `2^{-|A|/2}` for all-Pauli patterns.
    pub expected_branch_norm: Option<f64>,
    /// Pauli fix per output qubit in clique order; always identity here.
    pub local_corrections: String,
}

fn check_dense(layout: &ClusterLayout) -> Result<()> {
    if layout.n_qubits() > DENSE_CAP {
        return Err(Error::resource("lattice qubits", layout.n_qubits(), DENSE_CAP));
    }
    Ok(())
}

/// `(prod_A <omega_a|) |state>` with the outputs reordered into clique order.
/// The result is not normalized; its norm is the branch norm.
pub fn project_outputs(layout: &ClusterLayout, state: &StateVector) -> Result<StateVector> {
    if state.n_qubits() != layout.n_qubits() {
        return Err(Error::input("state does not match the layout"));
    }
    let mut out = state.clone();
    for q in layout.a_qubits().into_iter().rev() {
        out = out.contract_qubit(q, layout.omega(q).expect("A qubit has omega"))?;
    }
    let outputs = layout.output_qubits();
    let order: Vec<usize> = layout
        .lattice_of_targets()
        .iter()
        .map(|q| outputs.binary_search(q).expect("target is an output"))
        .collect();
    out.permute_qubits(&order)
}

/// Projects the bare cluster state and compares with the clique state.
pub fn carve(layout: &ClusterLayout, sys: &CliqueSystem) -> Result<CarvingOutcome> {
    layout.check_system(sys)?;
    check_dense(layout)?;
    let cluster = StateVector::cluster_state(layout.lattice())?;
    let projected = project_outputs(layout, &cluster)?;
    let (_, phi) = build_clique_state(sys.model())?;
    let branch_norm = projected.norm();
    let fid = if branch_norm > 1e-150 {
        fidelity(&projected.scaled(1.0 / branch_norm), &phi)?
    } else {
        0.0
    };
    Ok(CarvingOutcome {
        fidelity: fid,
        branch_norm,
        all_pauli: layout.is_all_pauli(),
        n_a: layout.a_qubits().len(),
    })
}

/// Certifies that the `omega` branch of the cluster state is the clique state.
pub fn verify_carving(layout: &ClusterLayout, sys: &CliqueSystem) -> Result<CarvingCertificate> {
    let out = carve(layout, sys)?;
    if out.fidelity < 1.0 - FIDELITY_TOL {
        return Err(Error::verification(
            "carving",
            format!("projected state has fidelity {:.3e} with the clique state", out.fidelity),
        ));
    }
    let expected = out.all_pauli.then(|| 0.5f64.powf(out.n_a as f64 / 2.0));
    if let Some(e) = expected {
        if (out.branch_norm - e).abs() > NORM_TOL {
            return Err(Error::verification(
                "carving",
                format!("branch norm {:.6e}, expected {e:.6e}", out.branch_norm),
            ));
        }
    }
    Ok(CarvingCertificate {
        achieved_fidelity: out.fidelity,
        branch_norm: out.branch_norm,
        expected_branch_norm: expected,
        local_corrections: "I".repeat(sys.n_qubits()),
    })
}

/// Squared norms of all `2^{|A|}` branches. Bit `j` of the index (most
/// significant first, `A` qubits ascending) selects `omega^perp` on the
/// `j`-th `A` qubit.
pub fn branch_norm_census(layout: &ClusterLayout) -> Result<Vec<f64>> {
    check_dense(layout)?;
    let a = layout.a_qubits();
    if a.len() > CENSUS_CAP {
        return Err(Error::resource("census A qubits", a.len(), CENSUS_CAP));
    }
    // Rotating omega to |0> and omega^perp to |1> turns the census into a
    // computational-basis marginal.
    let mut state = StateVector::cluster_state(layout.lattice())?;
    for &q in &a {
        let w = layout.omega(q).expect("A qubit has omega");
        let p = perp(w);
        let u = SingleQubitOp::new([[w[0].conj(), w[1].conj()], [p[0].conj(), p[1].conj()]])?;
        state.apply_local_mut(q, &u)?;
    }
    if a.is_empty() {
        return Ok(vec![state.norm_sqr()]);
    }
    state.basis_marginal(&a)
}

