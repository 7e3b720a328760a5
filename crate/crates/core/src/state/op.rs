use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

const INVERTIBLE_DET: f64 = 1e-14;
const FLAG_TOL: f64 = 1e-14;

/// A 2x2 complex operator acting on one tensor factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleQubitOp {
    m: [[C64; 2]; 2],
    diagonal: bool,
    invertible: bool,
    hermitian: bool,
}

impl SingleQubitOp {
    pub fn new(m: [[C64; 2]; 2]) -> Result<Self> {
        if m.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::input("operator entries must be finite"));
        }
        Ok(Self::from_matrix(m))
    }

    fn from_matrix(m: [[C64; 2]; 2]) -> Self {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let diagonal = m[0][1].norm() <= FLAG_TOL && m[1][0].norm() <= FLAG_TOL;
        let hermitian = m[0][0].im.abs() <= FLAG_TOL
            && m[1][1].im.abs() <= FLAG_TOL
            && (m[0][1] - m[1][0].conj()).norm() <= FLAG_TOL;
        SingleQubitOp {
            m,
            diagonal,
            invertible: det.norm() > INVERTIBLE_DET,
            hermitian,
        }
    }

    pub fn identity() -> Self {
        Self::diag(C64::new(1.0, 0.0), C64::new(1.0, 0.0))
    }

    pub fn diag(a: C64, b: C64) -> Self {
        Self::from_matrix([[a, C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), b]])
    }

    pub fn real_diag(a: f64, b: f64) -> Self {
        Self::diag(C64::new(a, 0.0), C64::new(b, 0.0))
    }

    pub fn pauli_x() -> Self {
        let (o, l) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0));
        Self::from_matrix([[o, l], [l, o]])
    }

    pub fn pauli_y() -> Self {
        let o = C64::new(0.0, 0.0);
        Self::from_matrix([[o, C64::new(0.0, -1.0)], [C64::new(0.0, 1.0), o]])
    }

    pub fn pauli_z() -> Self {
        Self::real_diag(1.0, -1.0)
    }

    pub fn hadamard() -> Self {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self::from_matrix([[h, h], [h, -h]])
    }

    /// `|v><v|` for a (not necessarily normalized) vector.
    pub fn outer(v: [C64; 2]) -> Self {
        Self::from_matrix([
            [v[0] * v[0].conj(), v[0] * v[1].conj()],
            [v[1] * v[0].conj(), v[1] * v[1].conj()],
        ])
    }

    pub fn matrix(&self) -> &[[C64; 2]; 2] {
        &self.m
    }

    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }

    pub fn is_invertible(&self) -> bool {
        self.invertible
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::from_matrix([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn inverse(&self) -> Result<Self> {
        if !self.invertible {
            return Err(Error::input("operator is singular"));
        }
        let m = &self.m;
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        Ok(Self::from_matrix([
            [m[1][1] / det, -m[0][1] / det],
            [-m[1][0] / det, m[0][0] / det],
        ]))
    }

    pub fn compose(&self, rhs: &SingleQubitOp) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        let mut out = [[C64::new(0.0, 0.0); 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Self::from_matrix(out)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let m = &self.m;
        let fro2: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum();
        let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        ((fro2 + disc) / 2.0).sqrt()
    }

    pub fn max_abs_diff(&self, other: &SingleQubitOp) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}
