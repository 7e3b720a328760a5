//! Dense state vectors.
//!
//! Bit order: qubit 0 is the most significant bit of the amplitude index.
//! Every module in this crate uses that convention.

mod lattice;
mod op;

use std::io::{Read, Write};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub use lattice::LatticeGraph;
pub use op::SingleQubitOp;

/// Largest register held densely (2^26 amplitudes, 1 GiB).
pub const DENSE_CAP: usize = 26;

/// Largest reduced density matrix, in entries.
pub const DENSITY_ENTRY_CAP: usize = 1 << 24;

const NORMALIZED_TOL: f64 = 1e-10;

pub(crate) fn bit(n: usize, q: usize) -> usize {
    1usize << (n - 1 - q)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        check_cap(n_qubits)?;
        if amps.len() != 1usize << n_qubits {
            return Err(Error::input(format!(
                "{} amplitudes for {n_qubits} qubits",
                amps.len()
            )));
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn from_real(n_qubits: usize, amps: &[f64]) -> Result<Self> {
        Self::new(n_qubits, amps.iter().map(|&a| C64::new(a, 0.0)).collect())
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        check_cap(n_qubits)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n_qubits];
        *amps
            .get_mut(index)
            .ok_or_else(|| Error::input(format!("basis index {index} out of range")))? =
            C64::new(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// `|+>^{n}`.
    pub fn plus_state(n: usize) -> Result<Self> {
        check_cap(n)?;
        let a = (0.5f64).powf(n as f64 / 2.0);
        Ok(StateVector {
            n_qubits: n,
            amps: vec![C64::new(a, 0.0); 1 << n],
        })
    }

    /// `prod_{edges} CZ |+>^{M}` on the lattice.
    pub fn cluster_state(lattice: &LatticeGraph) -> Result<Self> {
        let mut state = Self::plus_state(lattice.n_qubits())?;
        for (a, b) in lattice.edges() {
            state.apply_cz_mut(a, b)?;
        }
        Ok(state)
    }

    /// Product state from one single-qubit vector per qubit.
    pub fn product(factors: &[[C64; 2]]) -> Result<Self> {
        check_cap(factors.len())?;
        let mut amps = vec![C64::new(1.0, 0.0)];
        for f in factors {
            amps = amps
                .iter()
                .flat_map(|&a| [a * f[0], a * f[1]])
                .collect();
        }
        Ok(StateVector {
            n_qubits: factors.len(),
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.par_iter().map(|a| a.norm_sqr()).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Explicit renormalization; no operation here renormalizes implicitly.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::input("cannot normalize a zero or non-finite vector"));
        }
        Ok(self.scaled(1.0 / n))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        StateVector {
            n_qubits: self.n_qubits,
            amps: self.amps.par_iter().map(|a| a * factor).collect(),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::input(format!(
                "inner product of {} and {} qubit states",
                self.n_qubits, other.n_qubits
            )));
        }
        Ok(self
            .amps
            .par_iter()
            .zip(other.amps.par_iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::input(format!(
                "qubit {q} out of range for {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    pub fn apply_cz(&self, a: usize, b: usize) -> Result<Self> {
        let mut out = self.clone();
        out.apply_cz_mut(a, b)?;
        Ok(out)
    }

    /// Negates every amplitude whose index has both qubit `a` and `b` set.
    pub fn apply_cz_mut(&mut self, a: usize, b: usize) -> Result<()> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(Error::input("controlled-phase needs two distinct qubits"));
        }
        let mask = bit(self.n_qubits, a) | bit(self.n_qubits, b);
        self.amps.par_iter_mut().enumerate().for_each(|(i, amp)| {
            if i & mask == mask {
                *amp = -*amp;
            }
        });
        Ok(())
    }

    pub fn apply_local(&self, q: usize, op: &SingleQubitOp) -> Result<Self> {
        let mut out = self.clone();
        out.apply_local_mut(q, op)?;
        Ok(out)
    }

    pub fn apply_local_mut(&mut self, q: usize, op: &SingleQubitOp) -> Result<()> {
        self.check_qubit(q)?;
        let stride = bit(self.n_qubits, q);
        let m = *op.matrix();
        if op.is_diagonal() {
            self.amps.par_iter_mut().enumerate().for_each(|(i, amp)| {
                *amp *= if i & stride == 0 { m[0][0] } else { m[1][1] };
            });
            return Ok(());
        }
        self.amps.par_chunks_mut(2 * stride).for_each(|block| {
            let (lo, hi) = block.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a0, *a1);
                *a0 = m[0][0] * x + m[0][1] * y;
                *a1 = m[1][0] * x + m[1][1] * y;
            }
        });
        Ok(())
    }

    /// `(<bra| on qubit q) |self>`, removing that qubit.
    pub fn contract_qubit(&self, q: usize, bra: [C64; 2]) -> Result<Self> {
        self.check_qubit(q)?;
        let n = self.n_qubits;
        let stride = bit(n, q);
        let (b0, b1) = (bra[0].conj(), bra[1].conj());
        let amps: Vec<C64> = (0..1usize << (n - 1))
            .into_par_iter()
            .map(|j| {
                let high = (j / stride) * 2 * stride;
                let i0 = high + j % stride;
                b0 * self.amps[i0] + b1 * self.amps[i0 + stride]
            })
            .collect();
        Ok(StateVector {
            n_qubits: n - 1,
            amps,
        })
    }

    /// Reorders qubits: qubit `i` of the result is qubit `order[i]` of `self`.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<Self> {
        let n = self.n_qubits;
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&q| q >= n || std::mem::replace(&mut seen[q], true)) {
            return Err(Error::input(format!("{order:?} is not a permutation of {n} qubits")));
        }
        let amps: Vec<C64> = (0..self.dim())
            .into_par_iter()
            .map(|new| {
                let old = order.iter().enumerate().fold(0usize, |acc, (i, &src)| {
                    if new & bit(n, i) != 0 {
                        acc | bit(n, src)
                    } else {
                        acc
                    }
                });
                self.amps[old]
            })
            .collect();
        Ok(StateVector { n_qubits: n, amps })
    }

    /// `self ⊗ other`, with `self` on the high-order qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<Self> {
        check_cap(self.n_qubits + other.n_qubits)?;
        let amps = self
            .amps
            .iter()
            .flat_map(|&a| other.amps.iter().map(move |&b| a * b))
            .collect();
        Ok(StateVector {
            n_qubits: self.n_qubits + other.n_qubits,
            amps,
        })
    }

    /// Computational-basis distribution of the kept qubits; `keep[0]` is the
    /// most significant bit of the result index.
    pub fn basis_marginal(&self, keep: &[usize]) -> Result<Vec<f64>> {
        self.check_keep(keep)?;
        self.check_normalized()?;
        let n = self.n_qubits;
        let mut out = vec![0.0; 1 << keep.len()];
        for (i, a) in self.amps.iter().enumerate() {
            out[sub_index(n, keep, i)] += a.norm_sqr();
        }
        Ok(out)
    }

    /// Reduced density matrix of the kept qubits.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DMatrix<C64>> {
        self.check_keep(keep)?;
        let k = keep.len();
        if 1usize << (2 * k) > DENSITY_ENTRY_CAP {
            return Err(Error::resource("density-matrix entries", 1 << (2 * k), DENSITY_ENTRY_CAP));
        }
        let n = self.n_qubits;
        let kept_mask: usize = keep.iter().map(|&q| bit(n, q)).sum();
        // Group amplitudes by the traced-out bits.
        let rest_bits: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
        let dk = 1usize << k;
        let mut rho = DMatrix::<C64>::zeros(dk, dk);
        for rest in 0..1usize << rest_bits.len() {
            let base = rest_bits.iter().enumerate().fold(0usize, |acc, (i, &q)| {
                if rest & bit(rest_bits.len(), i) != 0 {
                    acc | bit(n, q)
                } else {
                    acc
                }
            });
            debug_assert_eq!(base & kept_mask, 0);
            let column: Vec<C64> = (0..dk)
                .map(|x| self.amps[base | spread(n, keep, x)])
                .collect();
            for i in 0..dk {
                if column[i] == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..dk {
                    rho[(i, j)] += column[i] * column[j].conj();
                }
            }
        }
        Ok(rho)
    }

    fn check_keep(&self, keep: &[usize]) -> Result<()> {
        let mut seen = vec![false; self.n_qubits];
        for &q in keep {
            self.check_qubit(q)?;
            if std::mem::replace(&mut seen[q], true) {
                return Err(Error::input(format!("qubit {q} listed twice")));
            }
        }
        Ok(())
    }

    fn check_normalized(&self) -> Result<()> {
        let ns = self.norm_sqr();
        if (ns - 1.0).abs() > NORMALIZED_TOL {
            return Err(Error::input(format!("state is not normalized (norm^2 = {ns})")));
        }
        Ok(())
    }

    /// Little-endian dump: `u32` qubit count, then `(re, im)` doubles.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.n_qubits as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.to_le_bytes())?;
            w.write_all(&a.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 4];
        r.read_exact(&mut word)?;
        let n = u32::from_le_bytes(word) as usize;
        check_cap(n)?;
        let mut amps = Vec::with_capacity(1 << n);
        let mut buf = [0u8; 16];
        for _ in 0..1usize << n {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(buf[8..].try_into().expect("8 bytes"));
            amps.push(C64::new(re, im));
        }
        let mut probe = [0u8; 1];
        if r.read(&mut probe)? != 0 {
            return Err(Error::input("trailing bytes after state dump"));
        }
        StateVector::new(n, amps)
    }
}

/// `|<a|b>|^2 / (||a||^2 ||b||^2)`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    let (na, nb) = (a.norm_sqr(), b.norm_sqr());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::input("fidelity with a zero vector"));
    }
    Ok((a.inner(b)?.norm_sqr() / (na * nb)).clamp(0.0, 1.0))
}

fn check_cap(n: usize) -> Result<()> {
    if n > DENSE_CAP {
        return Err(Error::resource("dense qubits", n, DENSE_CAP));
    }
    Ok(())
}

/// Index over `keep` extracted from a full index.
pub(crate) fn sub_index(n: usize, keep: &[usize], full: usize) -> usize {
    keep.iter().fold(0usize, |acc, &q| (acc << 1) | ((full & bit(n, q)) != 0) as usize)
}

/// Full index with the `keep` bits set from `x` and all others zero.
pub(crate) fn spread(n: usize, keep: &[usize], x: usize) -> usize {
    let k = keep.len();
    keep.iter().enumerate().fold(0usize, |acc, (i, &q)| {
        if x & bit(k, i) != 0 {
            acc | bit(n, q)
        } else {
            acc
        }
    })
}
