//! Wire-network carving for models too large for the exhaustive search.
//!
//! Every clique qubit travels along a horizontal wire; wires sit on rows
//! `0, 3, 6, ...`. Along a wire, bit cells alternate with equality checks.
//! A CNOT between neighbouring wires is a vertical connector from a bit
//! cell of the control wire (equality check, then a bit copy) ending in a
//! check cell of the target wire, which then carries `target xor control`.
//! Non-neighbouring wires are brought together with three-CNOT swaps.
//!
//! Interaction wires start as copies of the wire above, which at start time
//! carries the term's first spin; the remaining spins are xored in after
//! moving the interaction wire next to them. The outputs are the last bit
//! cell of each wire. The construction is a reversible xor circuit, so all
//! checks are independent and the outputs determine every internal cell.

use std::collections::BTreeMap;

use super::{assemble_layout, ClusterLayout};
use crate::clique::CliqueSystem;
use crate::error::{Error, Result};
use crate::state::LatticeGraph;

/// Largest lattice the wire construction will emit.
pub const WIRE_CELL_LIMIT: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Value {
    Spin(usize),
    Term(usize),
}

#[derive(Clone, Copy, Debug)]
enum Gate {
    /// Wire `wire` starts at this gate as a copy of neighbouring `from`.
    Start { from: usize, wire: usize },
    Cnot { control: usize, target: usize },
}

struct Plan {
    /// Value on each wire position at the end.
    values: Vec<Value>,
    gates: Vec<Gate>,
}

fn plan(sys: &CliqueSystem) -> Plan {
    let n = sys.n_spins();
    let terms: Vec<&[usize]> = (0..sys.n_interactions()).map(|e| sys.interaction_sites(e)).collect();
    let mut values = Vec::new();
    let mut started = Vec::new();
    for a in 0..n {
        values.push(Value::Spin(a));
        started.push(true);
        for (e, t) in terms.iter().enumerate() {
            if t[0] == a {
                values.push(Value::Term(e));
                started.push(false);
            }
        }
    }
    let mut gates = Vec::new();
    for (w, s) in started.iter().enumerate() {
        if !s {
            gates.push(Gate::Start { from: w - 1, wire: w });
        }
    }
    let pos = |values: &[Value], v: Value| values.iter().position(|&x| x == v).expect("value on a wire");
    for (e, t) in terms.iter().enumerate() {
        for &b in &t[1..] {
            loop {
                let pe = pos(&values, Value::Term(e));
                let pb = pos(&values, Value::Spin(b));
                if pe.abs_diff(pb) == 1 {
                    gates.push(Gate::Cnot { control: pb, target: pe });
                    break;
                }
                let next = if pb > pe { pe + 1 } else { pe - 1 };
                gates.push(Gate::Cnot { control: pe, target: next });
                gates.push(Gate::Cnot { control: next, target: pe });
                gates.push(Gate::Cnot { control: pe, target: next });
                values.swap(pe, next);
            }
        }
    }
    Plan { values, gates }
}

pub(crate) fn route(sys: &CliqueSystem) -> Result<ClusterLayout> {
    let Plan { values, gates } = plan(sys);
    let n_wires = values.len();
    let row = |w: usize| 3 * w;

    // Column of every gate: the control (or source) cell must be a bit cell,
    // i.e. column parity equal to wire parity, and gates two columns apart.
    let mut cursor = 0;
    let mut columns = Vec::with_capacity(gates.len());
    for g in &gates {
        let src = match *g {
            Gate::Start { from, .. } => from,
            Gate::Cnot { control, .. } => control,
        };
        let x = if cursor % 2 == src % 2 { cursor } else { cursor + 1 };
        columns.push(x);
        cursor = x + 2;
    }
    let rows = row(n_wires - 1) + 1;
    let cols = cursor + 2;
    if rows.saturating_mul(cols) > WIRE_CELL_LIMIT {
        return Err(Error::NoEmbedding(format!(
            "wire network needs a {rows}x{cols} lattice, above {WIRE_CELL_LIMIT} cells"
        )));
    }
    let lattice = LatticeGraph::new(rows, cols)?;
    let mut kept = vec![false; lattice.n_qubits()];
    let mut keep = |r: usize, c: usize| kept[lattice.index(r, c)] = true;

    // Wire spans: bit cells have column parity equal to wire parity.
    let mut first = vec![usize::MAX; n_wires];
    for w in 0..n_wires {
        first[w] = w % 2;
    }
    for (g, &x) in gates.iter().zip(&columns) {
        if let Gate::Start { wire, .. } = *g {
            first[wire] = x;
        }
    }
    let mut last = vec![0; n_wires];
    for w in 0..n_wires {
        last[w] = if (cols - 1) % 2 == w % 2 { cols - 1 } else { cols - 2 };
        for c in first[w]..=last[w] {
            keep(row(w), c);
        }
    }
    // Connectors between neighbouring wires.
    for (g, &x) in gates.iter().zip(&columns) {
        let (src, dst) = match *g {
            Gate::Start { from, wire } => (from, wire),
            Gate::Cnot { control, target } => (control, target),
        };
        if dst > src {
            keep(row(src) + 1, x);
            keep(row(src) + 2, x);
        } else {
            keep(row(src) - 1, x);
            keep(row(src) - 2, x);
        }
    }

    let mut outputs = BTreeMap::new();
    for (w, v) in values.iter().enumerate() {
        let target = match *v {
            Value::Spin(a) => sys.vertex_qubit(a),
            Value::Term(e) => e,
        };
        outputs.insert(lattice.index(row(w), last[w]), target);
    }
    assemble_layout(sys, lattice, &kept, &outputs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mbqc::structural_check;
    use crate::spin_model::{ParityTerm, SpinModel};

    #[test]
    fn wire_networks_pass_the_parity_check() {
        let models = [
            SpinModel::new(1, vec![], 0.0).unwrap(),
            SpinModel::new(2, vec![ParityTerm::new([0, 1], 1.0)], 0.0).unwrap(),
            SpinModel::new(
                4,
                vec![
                    ParityTerm::new([0, 1], 1.0),
                    ParityTerm::new([0, 3], -1.0),
                    ParityTerm::new([1, 2, 3], 0.5),
                    ParityTerm::new([0, 2], 0.2),
                ],
                0.0,
            )
            .unwrap(),
        ];
        for m in models {
            let sys = CliqueSystem::new(&m);
            let layout = route(&sys).unwrap();
            layout.check_system(&sys).unwrap();
            let report = structural_check(&layout, &sys);
            assert!(report.exact, "{}", report.detail);
        }
    }

    #[test]
    fn free_spins_verify_densely() {
        let m = SpinModel::new(3, vec![ParityTerm::new([1], 0.3)], 0.0).unwrap();
        let sys = CliqueSystem::new(&m);
        let layout = route(&sys).unwrap();
        assert_eq!(layout.n_qubits(), 14);
        let cert = crate::mbqc::verify_carving(&layout, &sys).unwrap();
        assert!(cert.achieved_fidelity > 1.0 - 1e-10);
    }
}
