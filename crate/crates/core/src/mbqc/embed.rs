//! Exhaustive search for small checkerboard carving patterns.
//!
//! Cells of one colour hold copies of clique qubits, cells of the other hold
//! either the parity check of one interaction or an equality check tying
//! copies of one qubit together. A labelling is accepted when
//!
//! - every check cell sees exactly one copy of each qubit in its term,
//! - equality cells see only copies of their qubit, at least two,
//! - every qubit has a copy and its copies form a tree under equality cells,
//! - every interaction has exactly one check cell.
//!
//! Such a labelling carves the clique state with all checks independent.
//! Shapes are tried in order of increasing area under a node budget.

use std::collections::BTreeMap;

use super::{assemble_layout, ClusterLayout};
use crate::clique::CliqueSystem;
use crate::error::Result;
use crate::state::LatticeGraph;

/// Largest lattice the search considers.
pub const SEARCH_CELL_LIMIT: usize = 20;

const SHAPE_BUDGET: usize = 300_000;
const TOTAL_BUDGET: usize = 3_000_000;
const MAX_COPIES: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Label {
    Unset,
    Empty,
    Var(usize),
    Check(usize),
    Eq(usize),
}

struct Problem {
    n_vars: usize,
    supports: Vec<Vec<usize>>,
}

impl Problem {
    fn new(sys: &CliqueSystem) -> Self {
        let supports = (0..sys.n_interactions())
            .map(|e| {
                let mut s: Vec<usize> = sys
                    .interaction_sites(e)
                    .iter()
                    .map(|&a| sys.vertex_qubit(a))
                    .collect();
                s.push(e);
                s.sort_unstable();
                s
            })
            .collect();
        Problem {
            n_vars: sys.n_qubits(),
            supports,
        }
    }
}

struct Search<'a> {
    prob: &'a Problem,
    neighbors: Vec<Vec<usize>>,
    var_cell: Vec<bool>,
    var_cells_from: Vec<usize>,
    check_cells_from: Vec<usize>,
    labels: Vec<Label>,
    check_used: Vec<bool>,
    copies: Vec<usize>,
    nodes: usize,
    budget: usize,
}

impl<'a> Search<'a> {
    fn new(prob: &'a Problem, lattice: &LatticeGraph, var_colour: usize, budget: usize) -> Self {
        let m = lattice.n_qubits();
        let var_cell: Vec<bool> = (0..m)
            .map(|q| {
                let (r, c) = lattice.coords(q);
                (r + c) % 2 == var_colour
            })
            .collect();
        let mut var_cells_from = vec![0; m + 1];
        let mut check_cells_from = vec![0; m + 1];
        for i in (0..m).rev() {
            var_cells_from[i] = var_cells_from[i + 1] + var_cell[i] as usize;
            check_cells_from[i] = check_cells_from[i + 1] + !var_cell[i] as usize;
        }
        Search {
            prob,
            neighbors: (0..m).map(|q| lattice.neighbors(q)).collect(),
            var_cell,
            var_cells_from,
            check_cells_from,
            labels: vec![Label::Unset; m],
            check_used: vec![false; prob.supports.len()],
            copies: vec![0; prob.n_vars],
            nodes: 0,
            budget,
        }
    }

    /// Consistency of check cell `j` given the cells placed so far.
    fn check_ok(&self, j: usize) -> bool {
        let mut kept = 0;
        let mut pending = 0;
        let mut seen = [usize::MAX; 4];
        for &nb in &self.neighbors[j] {
            match self.labels[nb] {
                Label::Unset => pending += 1,
                Label::Var(v) => {
                    match self.labels[j] {
                        Label::Eq(u) if u != v => return false,
                        Label::Check(c) => {
                            if self.prob.supports[c].binary_search(&v).is_err()
                                || seen[..kept].contains(&v)
                            {
                                return false;
                            }
                        }
                        _ => {}
                    }
                    seen[kept] = v;
                    kept += 1;
                }
                _ => {}
            }
        }
        let need = match self.labels[j] {
            Label::Eq(_) => 2,
            Label::Check(c) => self.prob.supports[c].len(),
            _ => return true,
        };
        match self.labels[j] {
            Label::Check(_) if pending == 0 => kept == need,
            _ => kept + pending >= need,
        }
    }

    fn locally_ok(&self, i: usize) -> bool {
        if !self.var_cell[i] {
            return self.check_ok(i);
        }
        self.neighbors[i]
            .iter()
            .filter(|&&nb| nb < i)
            .all(|&nb| self.check_ok(nb))
    }

    fn candidates(&self, i: usize) -> Vec<Label> {
        let mut out = Vec::new();
        if self.var_cell[i] {
            let mut wanted = Vec::new();
            for &nb in self.neighbors[i].iter().filter(|&&nb| nb < i) {
                match self.labels[nb] {
                    Label::Eq(v) => wanted.push(v),
                    Label::Check(c) => wanted.extend(&self.prob.supports[c]),
                    _ => {}
                }
            }
            wanted.sort_unstable();
            wanted.dedup();
            let usable = |v: &usize| self.copies[*v] < MAX_COPIES;
            out.extend(wanted.iter().copied().filter(usable).map(Label::Var));
            out.push(Label::Empty);
            out.extend(
                (0..self.prob.n_vars)
                    .filter(|v| !wanted.contains(v) && usable(v))
                    .map(Label::Var),
            );
        } else {
            let placed: Vec<usize> = self.neighbors[i]
                .iter()
                .filter(|&&nb| nb < i)
                .filter_map(|&nb| match self.labels[nb] {
                    Label::Var(v) => Some(v),
                    _ => None,
                })
                .collect();
            out.extend(
                (0..self.prob.supports.len())
                    .filter(|&c| !self.check_used[c])
                    .map(Label::Check),
            );
            match placed.first() {
                Some(&v) => out.push(Label::Eq(v)),
                None => out.extend((0..self.prob.n_vars).map(Label::Eq)),
            }
            out.push(Label::Empty);
        }
        out
    }

    fn set(&mut self, i: usize, label: Label) {
        match label {
            Label::Var(v) => self.copies[v] += 1,
            Label::Check(c) => self.check_used[c] = true,
            _ => {}
        }
        self.labels[i] = label;
    }

    fn unset(&mut self, i: usize) {
        match self.labels[i] {
            Label::Var(v) => self.copies[v] -= 1,
            Label::Check(c) => self.check_used[c] = false,
            _ => {}
        }
        self.labels[i] = Label::Unset;
    }

    fn dfs(&mut self, i: usize) -> bool {
        if i == self.labels.len() {
            return self.complete();
        }
        self.nodes += 1;
        if self.nodes > self.budget {
            return false;
        }
        let missing_vars = self.copies.iter().filter(|&&c| c == 0).count();
        let missing_checks = self.check_used.iter().filter(|&&u| !u).count();
        if missing_vars > self.var_cells_from[i] || missing_checks > self.check_cells_from[i] {
            return false;
        }
        for label in self.candidates(i) {
            self.set(i, label);
            if self.locally_ok(i) && self.dfs(i + 1) {
                return true;
            }
            self.unset(i);
        }
        false
    }

    /// Global conditions: coverage and tree-shaped copy sets.
    fn complete(&self) -> bool {
        if self.check_used.iter().any(|&u| !u) || self.copies.contains(&0) {
            return false;
        }
        let m = self.labels.len();
        let mut parent: Vec<usize> = (0..m).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for j in 0..m {
            if let Label::Eq(_) = self.labels[j] {
                let kept: Vec<usize> = self.neighbors[j]
                    .iter()
                    .copied()
                    .filter(|&nb| matches!(self.labels[nb], Label::Var(_)))
                    .collect();
                for w in kept.windows(2) {
                    let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                    if a == b {
                        return false;
                    }
                    parent[a] = b;
                }
            }
        }
        let mut root = vec![usize::MAX; self.prob.n_vars];
        for q in 0..m {
            if let Label::Var(v) = self.labels[q] {
                let r = find(&mut parent, q);
                if root[v] == usize::MAX {
                    root[v] = r;
                } else if root[v] != r {
                    return false;
                }
            }
        }
        true
    }
}

fn shapes(prob: &Problem) -> Vec<(usize, usize)> {
    let lower = prob.n_vars + prob.supports.len();
    let max_support = prob.supports.iter().map(Vec::len).max().unwrap_or(0);
    let mut out = Vec::new();
    for rows in 1..=SEARCH_CELL_LIMIT {
        for cols in rows..=SEARCH_CELL_LIMIT / rows {
            let area = rows * cols;
            let degree = match (rows, cols) {
                (1, 1) => 0,
                (1, _) => 2,
                (2, _) => 3,
                _ => 4,
            };
            if area >= lower && degree >= max_support {
                out.push((rows, cols));
            }
        }
    }
    out.sort_by_key(|&(r, c)| (r * c, c - r));
    out
}

/// Smallest labelling found within the budget, if any.
pub(crate) fn search(sys: &CliqueSystem) -> Result<Option<ClusterLayout>> {
    let prob = Problem::new(sys);
    let mut spent = 0;
    for (rows, cols) in shapes(&prob) {
        let lattice = LatticeGraph::new(rows, cols)?;
        for colour in 0..2 {
            if spent >= TOTAL_BUDGET {
                return Ok(None);
            }
            let budget = SHAPE_BUDGET.min(TOTAL_BUDGET - spent);
            let mut s = Search::new(&prob, &lattice, colour, budget);
            let found = s.dfs(0);
            spent += s.nodes;
            if found {
                return Ok(Some(to_layout(sys, lattice, &s.labels)?));
            }
        }
    }
    Ok(None)
}

fn to_layout(sys: &CliqueSystem, lattice: LatticeGraph, labels: &[Label]) -> Result<ClusterLayout> {
    let kept: Vec<bool> = labels.iter().map(|&l| l != Label::Empty).collect();
    let mut outputs = BTreeMap::new();
    let mut placed = vec![false; sys.n_qubits()];
    for (q, &l) in labels.iter().enumerate() {
        if let Label::Var(v) = l {
            if !std::mem::replace(&mut placed[v], true) {
                outputs.insert(q, v);
            }
        }
    }
    assemble_layout(sys, lattice, &kept, &outputs)
}
