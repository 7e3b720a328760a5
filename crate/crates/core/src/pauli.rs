//! Signed Pauli strings.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::state::{bit, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn xz(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn matrix(self) -> [[C64; 2]; 2] {
        let (o, l, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    negative: bool,
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        PauliString {
            negative: false,
            ops: vec![Pauli::I; n],
        }
    }

    /// Builds `±prod_q P_q` from `(qubit, Pauli)` pairs. Repeated qubits are
    /// rejected so the product stays Hermitian with a real sign.
    pub fn from_sparse(n: usize, negative: bool, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut ops = vec![Pauli::I; n];
        for &(q, p) in factors {
            if q >= n {
                return Err(Error::input(format!("qubit {q} out of range for {n}")));
            }
            if ops[q] != Pauli::I {
                return Err(Error::input(format!("qubit {q} appears twice")));
            }
            ops[q] = p;
        }
        Ok(PauliString { negative, ops })
    }

    pub fn n_qubits(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.ops.len()).filter(|&q| self.ops[q] != Pauli::I).collect()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .ops
            .iter()
            .zip(&other.ops)
            .filter(|(a, b)| **a != Pauli::I && **b != Pauli::I && a != b)
            .count();
        anti % 2 == 0
    }

    /// `P |psi>`.
    pub fn apply(&self, state: &StateVector) -> Result<StateVector> {
        let n = state.n_qubits();
        if n != self.ops.len() {
            return Err(Error::input("Pauli string and state sizes differ"));
        }
        let mut flip = 0usize;
        let mut zmask = 0usize;
        let mut y_count = 0u32;
        for (q, p) in self.ops.iter().enumerate() {
            let (x, z) = p.xz();
            if x {
                flip |= bit(n, q);
            }
            if z {
                zmask |= bit(n, q);
            }
            if *p == Pauli::Y {
                y_count += 1;
            }
        }
        // Y = i X Z, so each Y contributes a factor i and a Z applied before X.
        let global = C64::i().powu(y_count) * if self.negative { -1.0 } else { 1.0 };
        let src = state.amplitudes();
        let amps: Vec<C64> = (0..src.len())
            .into_par_iter()
            .map(|out| {
                let inp = out ^ flip;
                let sign = if (inp & zmask).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
                global * src[inp] * sign
            })
            .collect();
        StateVector::new(n, amps)
    }

    /// `<psi|P|psi> / <psi|psi>`.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        let applied = self.apply(state)?;
        Ok(state.inner(&applied)?.re / state.norm_sqr())
    }

    /// Dense matrix on the listed qubits, `qubits[0]` most significant.
    pub fn local_matrix(&self, qubits: &[usize]) -> DMatrix<C64> {
        let mut m = DMatrix::<C64>::identity(1, 1);
        for &q in qubits {
            let p = self.ops[q].matrix();
            let pm = DMatrix::from_fn(2, 2, |i, j| p[i][j]);
            m = m.kronecker(&pm);
        }
        if self.negative {
            m = -m;
        }
        m
    }

    /// Binary symplectic row `(x | z)`.
    fn symplectic(&self) -> Vec<bool> {
        let (xs, zs): (Vec<bool>, Vec<bool>) = self.ops.iter().map(|p| p.xz()).unzip();
        xs.into_iter().chain(zs).collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.negative { '-' } else { '+' })?;
        for p in &self.ops {
            write!(f, "{p:?}")?;
        }
        Ok(())
    }
}

/// GF(2) rank of boolean rows.
pub fn gf2_rank(rows: &[Vec<bool>]) -> usize {
    let mut rows: Vec<Vec<bool>> = rows.to_vec();
    let width = rows.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..width {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][col]) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && rows[r][col] {
                for c in col..width {
                    let v = rows[rank][c];
                    rows[r][c] ^= v;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Whether the strings are independent as elements of the Pauli group modulo phase.
pub fn independent(strings: &[PauliString]) -> bool {
    let rows: Vec<Vec<bool>> = strings.iter().map(|s| s.symplectic()).collect();
    gf2_rank(&rows) == strings.len()
}
