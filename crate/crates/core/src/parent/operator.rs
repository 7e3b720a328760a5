//! Linear operators on the full register: explicit CSR and matrix-free.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::state::{bit, spread, sub_index};

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = H x`.
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

/// A local block acting on a few qubits of an `n`-qubit register.
#[derive(Clone, Debug)]
pub(crate) struct EmbeddedTerm {
    n: usize,
    support: Vec<usize>,
    mask: usize,
    /// Full-register offset of each local column index.
    offsets: Vec<usize>,
    /// Nonzero entries of each local row.
    rows: Vec<Vec<(usize, C64)>>,
}

impl EmbeddedTerm {
    pub(crate) fn new(n: usize, support: &[usize], block: &DMatrix<C64>) -> Self {
        let k = support.len();
        let offsets: Vec<usize> = (0..1usize << k).map(|c| spread(n, support, c)).collect();
        let rows = (0..1usize << k)
            .map(|r| {
                (0..1usize << k)
                    .filter(|&c| block[(r, c)] != C64::new(0.0, 0.0))
                    .map(|c| (c, block[(r, c)]))
                    .collect()
            })
            .collect();
        EmbeddedTerm {
            n,
            support: support.to_vec(),
            mask: support.iter().map(|&q| bit(n, q)).sum(),
            offsets,
            rows,
        }
    }

    /// `sum_j H[i, j] x[j]` restricted to this term.
    #[inline]
    pub(crate) fn row_dot(&self, i: usize, x: &[C64]) -> C64 {
        let base = i & !self.mask;
        let r = sub_index(self.n, &self.support, i);
        self.rows[r]
            .iter()
            .map(|&(c, v)| v * x[base | self.offsets[c]])
            .sum()
    }

    pub(crate) fn row_entries(&self, i: usize, out: &mut Vec<(usize, C64)>) {
        let base = i & !self.mask;
        let r = sub_index(self.n, &self.support, i);
        out.extend(self.rows[r].iter().map(|&(c, v)| (base | self.offsets[c], v)));
    }

    pub(crate) fn nonzeros_per_row(&self) -> usize {
        self.rows.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Sum of embedded terms, applied without storing the full matrix.
#[derive(Clone, Debug)]
pub struct MatrixFreeOperator {
    dim: usize,
    terms: Vec<EmbeddedTerm>,
}

impl MatrixFreeOperator {
    pub(crate) fn new(n: usize, terms: Vec<EmbeddedTerm>) -> Self {
        MatrixFreeOperator { dim: 1 << n, terms }
    }
}

impl LinearOperator for MatrixFreeOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = self.terms.iter().map(|t| t.row_dot(i, x)).sum();
        });
    }
}

/// Compressed sparse rows with columns sorted inside each row.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<C64>,
}

impl SparseOperator {
    pub(crate) fn from_terms(n: usize, terms: &[EmbeddedTerm]) -> Self {
        let dim = 1usize << n;
        let rows: Vec<Vec<(usize, C64)>> = (0..dim)
            .into_par_iter()
            .map(|i| {
                let mut entries = Vec::new();
                for t in terms {
                    t.row_entries(i, &mut entries);
                }
                entries.sort_by_key(|e| e.0);
                let mut merged: Vec<(usize, C64)> = Vec::with_capacity(entries.len());
                for (c, v) in entries {
                    match merged.last_mut() {
                        Some(last) if last.0 == c => last.1 += v,
                        _ => merged.push((c, v)),
                    }
                }
                merged.retain(|e| e.1 != C64::new(0.0, 0.0));
                merged
            })
            .collect();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let nnz: usize = rows.iter().map(Vec::len).sum();
        let mut cols = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                values.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseOperator {
            dim,
            row_ptr,
            cols,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Largest `|H[i,j] - conj(H[j,i])|`.
    pub fn hermiticity_error(&self) -> f64 {
        (0..self.dim)
            .into_par_iter()
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| (self.values[k] - self.get(self.cols[k], i).conj()).norm())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.values[k];
            }
        }
        m
    }
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            *yi = (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(|k| self.values[k] * x[self.cols[k]])
                .sum();
        });
    }
}

/// Dense matrix of any operator, column by column.
pub fn to_dense(op: &dyn LinearOperator) -> DMatrix<C64> {
    let d = op.dim();
    let mut m = DMatrix::zeros(d, d);
    let mut e = vec![C64::new(0.0, 0.0); d];
    let mut col = vec![C64::new(0.0, 0.0); d];
    for j in 0..d {
        e[j] = C64::new(1.0, 0.0);
        op.apply(&e, &mut col);
        m.column_mut(j).copy_from_slice(&col);
        e[j] = C64::new(0.0, 0.0);
    }
    m
}

impl EmbeddedTerm {
    pub(crate) fn diagonal_entry(&self, i: usize) -> C64 {
        let r = sub_index(self.n, &self.support, i);
        self.rows[r]
            .iter()
            .find(|&&(c, _)| c == r)
            .map_or(C64::new(0.0, 0.0), |&(_, v)| v)
    }
}
