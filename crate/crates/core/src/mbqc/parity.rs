//! Exact GF(2) check of checkerboard carving patterns.
//!
//! Works at any lattice size since it never touches a state vector.

use num_complex::Complex64 as C64;
use serde::Serialize;

use super::{plus, zero, ClusterLayout};
use crate::clique::CliqueSystem;
use crate::pauli::gf2_rank;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StructuralReport {
    /// Every `omega_a` is `|0>` or `|+>` and all outputs share a colour.
    pub applicable: bool,
    /// The projected branch is the clique state with norm `2^{-|A|/2}`.
    pub exact: bool,
    pub variables: usize,
    pub checks: usize,
    pub rank: usize,
    pub solution_dim: usize,
    pub detail: String,
}

impl StructuralReport {
    fn not_applicable(detail: impl Into<String>) -> Self {
        StructuralReport {
            applicable: false,
            exact: false,
            variables: 0,
            checks: 0,
            rank: 0,
            solution_dim: 0,
            detail: detail.into(),
        }
    }
}

fn same_ray(a: [C64; 2], b: [C64; 2]) -> bool {
    let overlap = a[0].conj() * b[0] + a[1].conj() * b[1];
    (overlap.norm_sqr() - 1.0).abs() < 1e-12
}

/// Dense GF(2) rows packed into 64-bit words.
struct BitRows {
    words: usize,
    rows: Vec<Vec<u64>>,
}

impl BitRows {
    fn get(row: &[u64], j: usize) -> bool {
        row[j / 64] >> (j % 64) & 1 == 1
    }

    /// Reduces in place; returns the pivot column of each nonzero row.
    fn rref(&mut self, cols: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            let Some(p) = (r..self.rows.len()).find(|&i| BitRows::get(&self.rows[i], c)) else {
                continue;
            };
            self.rows.swap(r, p);
            let pivot = self.rows[r].clone();
            for (i, row) in self.rows.iter_mut().enumerate() {
                if i != r && BitRows::get(row, c) {
                    for w in 0..self.words {
                        row[w] ^= pivot[w];
                    }
                }
            }
            pivots.push(c);
            r += 1;
            if r == self.rows.len() {
                break;
            }
        }
        self.rows.truncate(r);
        pivots
    }
}

/// Checks the parity structure of `layout` against the clique code of `sys`.
pub fn structural_check(layout: &ClusterLayout, sys: &CliqueSystem) -> StructuralReport {
    let lattice = layout.lattice();
    let m = lattice.n_qubits();
    let mut kept = vec![true; m];
    for q in layout.a_qubits() {
        let w = layout.omega(q).expect("A qubit has omega");
        if same_ray(w, zero()) {
            kept[q] = false;
        } else if !same_ray(w, plus()) {
            return StructuralReport::not_applicable(format!("omega on qubit {q} is not |0> or |+>"));
        }
    }
    let colour = |q: usize| {
        let (r, c) = lattice.coords(q);
        (r + c) % 2
    };
    let outputs = layout.output_qubits();
    let var_colour = colour(outputs[0]);
    if outputs.iter().any(|&q| colour(q) != var_colour) {
        return StructuralReport::not_applicable("outputs sit on both colours");
    }

    let mut var_index = vec![usize::MAX; m];
    let mut n_vars = 0;
    for q in (0..m).filter(|&q| kept[q] && colour(q) == var_colour) {
        var_index[q] = n_vars;
        n_vars += 1;
    }
    let words = n_vars.div_ceil(64).max(1);
    let rows: Vec<Vec<u64>> = (0..m)
        .filter(|&q| kept[q] && colour(q) != var_colour)
        .map(|q| {
            let mut row = vec![0u64; words];
            for nb in lattice.neighbors(q).into_iter().filter(|&nb| kept[nb]) {
                let j = var_index[nb];
                row[j / 64] |= 1 << (j % 64);
            }
            row
        })
        .collect();
    let checks = rows.len();
    let mut mat = BitRows { words, rows };
    let pivots = mat.rref(n_vars);
    let rank = pivots.len();
    let solution_dim = n_vars - rank;

    let mut report = StructuralReport {
        applicable: true,
        exact: false,
        variables: n_vars,
        checks,
        rank,
        solution_dim,
        detail: String::new(),
    };
    if rank != checks {
        report.detail = format!("{} of {checks} checks are dependent", checks - rank);
        return report;
    }
    if solution_dim != sys.n_spins() {
        report.detail = format!(
            "solution space has dimension {solution_dim}, expected {}",
            sys.n_spins()
        );
        return report;
    }

    // Nullspace basis, one vector per free column.
    let mut is_pivot = vec![false; n_vars];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let basis: Vec<Vec<bool>> = (0..n_vars)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut x = vec![false; n_vars];
            x[f] = true;
            for (row, &p) in mat.rows.iter().zip(&pivots) {
                x[p] = BitRows::get(row, f);
            }
            x
        })
        .collect();

    let targets = layout.lattice_of_targets();
    let projected: Vec<Vec<bool>> = basis
        .iter()
        .map(|x| targets.iter().map(|&q| x[var_index[q]]).collect())
        .collect();
    if gf2_rank(&projected) != solution_dim {
        report.detail = "outputs do not determine the internal cells".into();
        return report;
    }
    for v in &projected {
        for e in 0..sys.n_interactions() {
            let parity = sys
                .interaction_sites(e)
                .iter()
                .fold(v[e], |acc, &a| acc ^ v[sys.vertex_qubit(a)]);
            if parity {
                report.detail = format!("interaction qubit {e} does not carry its parity");
                return report;
            }
        }
    }
    report.exact = true;
    report.detail = "checkerboard parity network reproduces the clique code".into();
    report
}
