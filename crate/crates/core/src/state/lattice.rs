use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rectangular nearest-neighbour lattice; qubit index is the row-major position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGraph {
    rows: usize,
    cols: usize,
}

impl LatticeGraph {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::input(format!("lattice {rows}x{cols} is empty")));
        }
        Ok(LatticeGraph { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_qubits(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn coords(&self, q: usize) -> (usize, usize) {
        (q / self.cols, q % self.cols)
    }

    /// Neighbours in ascending index order.
    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        let (r, c) = self.coords(q);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(self.index(r - 1, c));
        }
        if c > 0 {
            out.push(self.index(r, c - 1));
        }
        if c + 1 < self.cols {
            out.push(self.index(r, c + 1));
        }
        if r + 1 < self.rows {
            out.push(self.index(r + 1, c));
        }
        out
    }

    pub fn degree(&self, q: usize) -> usize {
        self.neighbors(q).len()
    }

    /// Edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for q in 0..self.n_qubits() {
            for nb in self.neighbors(q) {
                if q < nb {
                    out.push((q, nb));
                }
            }
        }
        out
    }
}
