//! Carving clique states out of 2D cluster states.
//!
//! A layout splits the lattice into three groups: `A` qubits are projected
//! onto single-qubit states `omega_a`, `B` qubits become the interaction
//! qubits and `C` qubits the vertex qubits of the clique state.
//!
//! The compiler emits checkerboard parity networks. Lattice cells of one
//! colour hold bits, cells of the other colour hold parity checks. Every
//! kept measured cell is projected onto `|+>`, every unused cell onto `|0>`.
//! Projecting a check cell onto `|+>` forces the xor of its kept neighbours
//! to vanish, so the surviving branch is the uniform superposition over the
//! solutions of the check system restricted to the output cells. Choosing
//! the checks so that this solution space is exactly
//! `{(p_T(s), s)}` reproduces the clique state with no corrections.

mod deform;
mod embed;
mod parity;
mod verify;
mod wires;

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::clique::CliqueSystem;
use crate::error::{Error, Result};
use crate::spin_model::{ModelFile, SpinModel, DEFAULT_MAX_ARITY};
use crate::state::LatticeGraph;

pub use deform::{
    build_deformed_cluster, comparison_state, exact_thermal_readout, fidelity_bound, smooth,
    OmegaDeformation,
};
pub use embed::SEARCH_CELL_LIMIT;
pub use parity::{structural_check, StructuralReport};
pub use verify::{
    branch_norm_census, carve, project_outputs, verify_carving, CarvingCertificate,
    CarvingOutcome, CENSUS_CAP,
};

const NORM_TOL: f64 = 1e-12;
const PAULI_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    A,
    B,
    C,
}

impl Role {
    fn as_char(self) -> char {
        match self {
            Role::A => 'A',
            Role::B => 'B',
            Role::C => 'C',
        }
    }
}

pub fn plus() -> [C64; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [C64::new(h, 0.0), C64::new(h, 0.0)]
}

pub fn zero() -> [C64; 2] {
    [C64::new(1.0, 0.0), C64::new(0.0, 0.0)]
}

/// The orthogonal complement `(-conj(b), conj(a))` of `(a, b)`.
pub fn perp(w: [C64; 2]) -> [C64; 2] {
    [-w[1].conj(), w[0].conj()]
}

/// True when `w` is, up to phase, an eigenvector of X, Y or Z.
pub fn is_pauli_eigenstate(w: [C64; 2]) -> bool {
    let (p0, p1) = (w[0].norm_sqr(), w[1].norm_sqr());
    if p0 < PAULI_TOL || p1 < PAULI_TOL {
        return true;
    }
    if (p0 - 0.5).abs() > PAULI_TOL {
        return false;
    }
    let ratio = w[1] / w[0];
    [C64::new(1.0, 0.0), C64::new(-1.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0)]
        .iter()
        .any(|r| (ratio - r).norm() < 1e-9)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterLayout {
    lattice: LatticeGraph,
    roles: Vec<Role>,
    omega: BTreeMap<usize, [C64; 2]>,
    target_map: BTreeMap<usize, usize>,
}

impl ClusterLayout {
    /// `omega` must cover exactly the `A` qubits with normalized states and
    /// `target_map` must map the `B` and `C` qubits bijectively onto
    /// `0..|B|+|C|`.
    pub fn new(
        lattice: LatticeGraph,
        roles: Vec<Role>,
        omega: BTreeMap<usize, [C64; 2]>,
        target_map: BTreeMap<usize, usize>,
    ) -> Result<Self> {
        let m = lattice.n_qubits();
        if roles.len() != m {
            return Err(Error::input(format!("{} roles for {m} lattice qubits", roles.len())));
        }
        for (q, role) in roles.iter().enumerate() {
            let has_omega = omega.contains_key(&q);
            let has_target = target_map.contains_key(&q);
            match role {
                Role::A if !has_omega || has_target => {
                    return Err(Error::input(format!("A qubit {q} needs omega and no target")))
                }
                Role::B | Role::C if has_omega || !has_target => {
                    return Err(Error::input(format!("output qubit {q} needs a target and no omega")))
                }
                _ => {}
            }
        }
        if omega.len() + target_map.len() != m {
            return Err(Error::input("omega or target_map names qubits outside the lattice"));
        }
        for (q, w) in &omega {
            let n = w[0].norm_sqr() + w[1].norm_sqr();
            if (n - 1.0).abs() > NORM_TOL || !n.is_finite() {
                return Err(Error::input(format!("omega on qubit {q} has norm^2 {n}")));
            }
        }
        let mut seen = vec![false; target_map.len()];
        for &t in target_map.values() {
            if t >= seen.len() || std::mem::replace(&mut seen[t], true) {
                return Err(Error::input("target_map is not a bijection onto the clique qubits"));
            }
        }
        Ok(ClusterLayout {
            lattice,
            roles,
            omega,
            target_map,
        })
    }

    /// Checks that the targets respect groups: `B` onto interaction qubits,
    /// `C` onto vertex qubits.
    pub fn check_system(&self, sys: &CliqueSystem) -> Result<()> {
        if self.target_map.len() != sys.n_qubits() {
            return Err(Error::input(format!(
                "layout has {} outputs, clique system has {} qubits",
                self.target_map.len(),
                sys.n_qubits()
            )));
        }
        for (&q, &t) in &self.target_map {
            let want = if t < sys.n_interactions() { Role::B } else { Role::C };
            if self.roles[q] != want {
                return Err(Error::input(format!(
                    "lattice qubit {q} has role {:?} but targets clique qubit {t}",
                    self.roles[q]
                )));
            }
        }
        Ok(())
    }

    pub fn lattice(&self) -> &LatticeGraph {
        &self.lattice
    }

    pub fn n_qubits(&self) -> usize {
        self.lattice.n_qubits()
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn role(&self, q: usize) -> Role {
        self.roles[q]
    }

    pub fn omega(&self, q: usize) -> Option<[C64; 2]> {
        self.omega.get(&q).copied()
    }

    pub fn target_map(&self) -> &BTreeMap<usize, usize> {
        &self.target_map
    }

    pub fn target(&self, q: usize) -> Option<usize> {
        self.target_map.get(&q).copied()
    }

    /// `A` qubits in ascending order.
    pub fn a_qubits(&self) -> Vec<usize> {
        self.omega.keys().copied().collect()
    }

    /// `B` and `C` qubits in ascending order.
    pub fn output_qubits(&self) -> Vec<usize> {
        self.target_map.keys().copied().collect()
    }

    /// Lattice qubit of each clique qubit, in clique order.
    pub fn lattice_of_targets(&self) -> Vec<usize> {
        let mut out = vec![0; self.target_map.len()];
        for (&q, &t) in &self.target_map {
            out[t] = q;
        }
        out
    }

    /// Replaces `omega_a`; used to probe other projection branches.
    pub fn with_omega(&self, q: usize, w: [C64; 2]) -> Result<Self> {
        let mut omega = self.omega.clone();
        if omega.insert(q, w).is_none() {
            return Err(Error::input(format!("qubit {q} is not in group A")));
        }
        ClusterLayout::new(self.lattice.clone(), self.roles.clone(), omega, self.target_map.clone())
    }

    pub fn is_all_pauli(&self) -> bool {
        self.omega.values().all(|&w| is_pauli_eigenstate(w))
    }

    /// Number of `A` qubits adjacent to each output qubit.
    pub fn a_neighbor_counts(&self) -> BTreeMap<usize, usize> {
        self.target_map
            .keys()
            .map(|&k| {
                let count = self
                    .lattice
                    .neighbors(k)
                    .into_iter()
                    .filter(|&b| self.roles[b] == Role::A)
                    .count();
                (k, count)
            })
            .collect()
    }

    /// Whether every output qubit has exactly one `A` neighbour.
    pub fn one_a_neighbor(&self) -> bool {
        self.a_neighbor_counts().values().all(|&c| c == 1)
    }

    pub fn to_file(&self, model: Option<&SpinModel>, epsilon: Option<f64>) -> LayoutFile {
        LayoutFile {
            rows: self.lattice.rows(),
            cols: self.lattice.cols(),
            roles: self.roles.iter().map(|r| r.as_char()).collect(),
            omega: self
                .omega
                .iter()
                .map(|(&qubit, w)| OmegaEntry {
                    qubit,
                    amplitudes: [[w[0].re, w[0].im], [w[1].re, w[1].im]],
                })
                .collect(),
            target_map: self
                .target_map
                .iter()
                .map(|(q, t)| (q.to_string(), *t))
                .collect(),
            model: model.map(ModelFile::from),
            epsilon,
        }
    }

    pub fn to_json(&self, model: Option<&SpinModel>, epsilon: Option<f64>) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file(model, epsilon))
            .expect("layout serialization cannot fail");
        s.push('\n');
        s
    }

    pub fn from_file(file: &LayoutFile) -> Result<Self> {
        let lattice = LatticeGraph::new(file.rows, file.cols)?;
        let roles = file
            .roles
            .chars()
            .map(|c| match c {
                'A' => Ok(Role::A),
                'B' => Ok(Role::B),
                'C' => Ok(Role::C),
                other => Err(Error::input(format!("unknown role '{other}'"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let omega = file
            .omega
            .iter()
            .map(|e| {
                let [[a, b], [c, d]] = e.amplitudes;
                (e.qubit, [C64::new(a, b), C64::new(c, d)])
            })
            .collect::<BTreeMap<_, _>>();
        if omega.len() != file.omega.len() {
            return Err(Error::input("omega lists a qubit twice"));
        }
        let target_map = file
            .target_map
            .iter()
            .map(|(k, &t)| {
                k.parse::<usize>()
                    .map(|q| (q, t))
                    .map_err(|_| Error::input(format!("target_map key '{k}' is not a qubit index")))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        ClusterLayout::new(lattice, roles, omega, target_map)
    }

    /// Parses a layout file, returning the embedded model and epsilon if present.
    pub fn from_json(text: &str) -> Result<(Self, Option<SpinModel>, Option<f64>)> {
        let file: LayoutFile = serde_json::from_str(text)?;
        let layout = ClusterLayout::from_file(&file)?;
        let model = match file.model {
            Some(m) => {
                // The layout was compiled from a valid model; keep its arity.
                let arity = m.terms.iter().map(|t| t.sites.len()).max().unwrap_or(0);
                let cap = arity.max(DEFAULT_MAX_ARITY);
                Some(SpinModel::with_max_arity(m.n_spins, m.terms, m.offset, cap)?)
            }
            None => None,
        };
        Ok((layout, model, file.epsilon))
    }
}

impl fmt::Display for ClusterLayout {
    /// One row per lattice row; `.` unused, `+` measured in X, digits for
    /// outputs are replaced by `B`/`C`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.lattice.rows() {
            for c in 0..self.lattice.cols() {
                let q = self.lattice.index(r, c);
                let ch = match self.roles[q] {
                    Role::A if self.omega[&q][1].norm_sqr() < PAULI_TOL => '.',
                    Role::A => '+',
                    other => other.as_char(),
                };
                write!(f, "{ch}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OmegaEntry {
    pub qubit: usize,
    pub amplitudes: [[f64; 2]; 2],
}

/// On-disk layout. `model` and `epsilon` are optional extras so a layout
/// file can be verified on its own.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayoutFile {
    pub rows: usize,
    pub cols: usize,
    pub roles: String,
    pub omega: Vec<OmegaEntry>,
    pub target_map: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

/// How far a compiled layout was checked.
#[derive(Clone, Debug, PartialEq)]
pub enum CarvingStatus {
    /// Dense projection confirmed the clique state.
    Verified(CarvingCertificate),
    /// Too large for dense projection; the parity structure was checked.
    Unverified(StructuralReport),
}

impl CarvingStatus {
    pub fn is_verified(&self) -> bool {
        matches!(self, CarvingStatus::Verified(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            CarvingStatus::Verified(_) => "verified",
            CarvingStatus::Unverified(_) => "unverified",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompiledLayout {
    pub layout: ClusterLayout,
    pub status: CarvingStatus,
    /// Which construction produced the layout.
    pub method: &'static str,
}

/// Dense verification is attempted up to this many lattice qubits.
pub const VERIFY_CAP: usize = 22;

/// Compiles a carving pattern for `sys`: a small exhaustive embedding when one
/// exists within `SEARCH_CELL_LIMIT` cells, otherwise a wire network. The parity
/// structure is always checked; dense verification runs when the lattice has
/// at most `verify_cap` qubits.
pub fn compile_layout(sys: &CliqueSystem) -> Result<CompiledLayout> {
    compile_layout_capped(sys, VERIFY_CAP)
}

pub fn compile_layout_capped(sys: &CliqueSystem, verify_cap: usize) -> Result<CompiledLayout> {
    let (layout, method) = match embed::search(sys)? {
        Some(layout) => (layout, "search"),
        None => (wires::route(sys)?, "wires"),
    };
    layout.check_system(sys)?;
    let report = structural_check(&layout, sys);
    if !report.exact {
        return Err(Error::NoEmbedding(format!(
            "{method} layout failed the parity check: {}",
            report.detail
        )));
    }
    let status = if layout.n_qubits() <= verify_cap.min(crate::state::DENSE_CAP) {
        CarvingStatus::Verified(verify_carving(&layout, sys)?)
    } else {
        CarvingStatus::Unverified(report)
    };
    Ok(CompiledLayout {
        layout,
        status,
        method,
    })
}

/// Builds a layout from a checkerboard cell assignment. `outputs` maps
/// lattice cells to clique qubits; kept cells are projected onto `|+>`,
/// everything else onto `|0>`.
pub(crate) fn assemble_layout(
    sys: &CliqueSystem,
    lattice: LatticeGraph,
    kept: &[bool],
    outputs: &BTreeMap<usize, usize>,
) -> Result<ClusterLayout> {
    let m = lattice.n_qubits();
    let mut roles = vec![Role::A; m];
    let mut omega = BTreeMap::new();
    for q in 0..m {
        match outputs.get(&q) {
            Some(&t) => {
                roles[q] = if t < sys.n_interactions() { Role::B } else { Role::C };
            }
            None => {
                omega.insert(q, if kept[q] { plus() } else { zero() });
            }
        }
    }
    ClusterLayout::new(lattice, roles, omega, outputs.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin_model::ParityTerm;

    #[test]
    fn pauli_eigenstates() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(is_pauli_eigenstate(plus()));
        assert!(is_pauli_eigenstate(zero()));
        assert!(is_pauli_eigenstate([C64::new(h, 0.0), C64::new(0.0, -h)]));
        assert!(is_pauli_eigenstate(perp(plus())));
        assert!(!is_pauli_eigenstate([C64::new(0.6, 0.0), C64::new(0.8, 0.0)]));
    }

    #[test]
    fn layout_validation() {
        let lat = LatticeGraph::new(1, 2).unwrap();
        let omega = BTreeMap::from([(1, zero())]);
        let targets = BTreeMap::from([(0, 0)]);
        assert!(ClusterLayout::new(lat.clone(), vec![Role::C, Role::A], omega.clone(), targets.clone()).is_ok());
        assert!(ClusterLayout::new(lat.clone(), vec![Role::C, Role::C], omega.clone(), targets.clone()).is_err());
        let bad = BTreeMap::from([(1, [C64::new(1.0, 0.0), C64::new(1.0, 0.0)])]);
        assert!(ClusterLayout::new(lat, vec![Role::C, Role::A], bad, targets).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = SpinModel::new(2, vec![ParityTerm::new([0, 1], -1.0)], 0.0).unwrap();
        let sys = CliqueSystem::new(&m);
        let c = compile_layout(&sys).unwrap();
        let text = c.layout.to_json(Some(&m), Some(0.05));
        let (back, model, eps) = ClusterLayout::from_json(&text).unwrap();
        assert_eq!(back, c.layout);
        assert_eq!(model.unwrap(), m);
        assert_eq!(eps, Some(0.05));
        assert_eq!(back.to_json(Some(&m), Some(0.05)), text);
    }

    #[test]
    fn groups_checked_against_system() {
        let m = SpinModel::new(2, vec![ParityTerm::new([0, 1], -1.0)], 0.0).unwrap();
        let c = compile_layout(&CliqueSystem::new(&m)).unwrap();
        let other = SpinModel::new(3, vec![], 0.0).unwrap();
        assert!(c.layout.check_system(&CliqueSystem::new(&other)).is_err());
    }
}
