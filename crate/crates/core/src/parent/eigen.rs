//! Extremal eigenpairs of Hermitian operators.
//!
//! Small operators are diagonalized densely. Larger ones use explicitly
//! restarted Lanczos with full reorthogonalization; the second eigenvalue is
//! found by deflating the converged ground vector.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::operator::{to_dense, LinearOperator};
use crate::error::{Error, Result};
use crate::state::StateVector;

#[derive(Clone, Debug)]
pub struct EigenConfig {
    /// Residual target relative to `max(1, ||H||)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub krylov_dim: usize,
    /// Operators up to this dimension are diagonalized densely.
    pub dense_limit: usize,
    /// Largest dimension for the dense fallback after Lanczos fails.
    pub dense_fallback: usize,
    pub degeneracy_tol: f64,
    pub seed: u64,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            tolerance: 1e-10,
            max_iterations: 5000,
            krylov_dim: 80,
            dense_limit: 1 << 10,
            dense_fallback: 1 << 12,
            degeneracy_tol: 1e-8,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundReport {
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "E1")]
    pub e1: f64,
    pub gap: f64,
    pub fidelity: f64,
    pub degenerate: bool,
    /// Largest eigenvalue, i.e. the operator norm of a PSD operator.
    pub norm: f64,
    pub iterations: usize,
    pub residual: f64,
    pub method: &'static str,
    #[serde(skip)]
    pub ground_state: Vec<C64>,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], a: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn orthogonalize(w: &mut [C64], basis: &[Vec<C64>]) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, w);
            axpy(w, -c, b);
        }
    }
}

struct Eigenpair {
    value: f64,
    vector: Vec<C64>,
    residual: f64,
    iterations: usize,
}

/// Lowest eigenpair of `sign * H` on the complement of `deflate`.
fn lanczos(
    op: &dyn LinearOperator,
    sign: f64,
    deflate: &[Vec<C64>],
    start: Vec<C64>,
    tol: impl Fn(f64) -> f64,
    cfg: &EigenConfig,
) -> Result<Eigenpair> {
    let d = op.dim();
    let m = cfg.krylov_dim.min(d - deflate.len()).max(1);
    let mut v = start;
    orthogonalize(&mut v, deflate);
    let nv = norm(&v);
    if nv == 0.0 {
        return Err(Error::input("start vector lies in the deflated space"));
    }
    v.iter_mut().for_each(|x| *x /= nv);

    let mut w = vec![C64::new(0.0, 0.0); d];
    let mut iterations = 0;
    let mut scale: f64 = 0.0;
    loop {
        let mut basis: Vec<Vec<C64>> = vec![v.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..m {
            op.apply(&basis[j], &mut w);
            iterations += 1;
            if sign < 0.0 {
                w.iter_mut().for_each(|x| *x = -*x);
            }
            let a = dot(&basis[j], &w).re;
            alpha.push(a);
            scale = scale.max(a.abs());
            orthogonalize(&mut w, &basis);
            orthogonalize(&mut w, deflate);
            let b = norm(&w);
            if j + 1 == m || b <= 1e-13 * scale.max(1.0) {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|x| x / b).collect());
        }
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (idx, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty tridiagonal");
        let y = eig.eigenvectors.column(idx);
        let mut ritz = vec![C64::new(0.0, 0.0); d];
        for (i, b) in basis.iter().enumerate() {
            axpy(&mut ritz, C64::new(y[i], 0.0), b);
        }
        orthogonalize(&mut ritz, deflate);
        let nr = norm(&ritz);
        ritz.iter_mut().for_each(|x| *x /= nr);

        op.apply(&ritz, &mut w);
        iterations += 1;
        orthogonalize(&mut w, deflate);
        let mut r2 = 0.0;
        for (wi, xi) in w.iter().zip(&ritz) {
            r2 += (sign * wi - theta * xi).norm_sqr();
        }
        let residual = r2.sqrt();
        if residual <= tol(scale) {
            return Ok(Eigenpair {
                value: sign * theta,
                vector: ritz,
                residual,
                iterations,
            });
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::Convergence {
                iterations,
                residual,
            });
        }
        v = ritz;
    }
}

fn random_start(d: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..d)
        .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect()
}

fn overlap_fidelity(v: &[C64], reference: &StateVector) -> f64 {
    let r = reference.amplitudes();
    let o = dot(r, v).norm_sqr();
    o / (reference.norm_sqr() * norm(v).powi(2))
}

fn dense_analysis(op: &dyn LinearOperator, reference: &StateVector, cfg: &EigenConfig) -> GroundReport {
    let h = to_dense(op);
    let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let e1 = order.get(1).map_or(f64::INFINITY, |&i| eig.eigenvalues[i]);
    let top = eig.eigenvalues[*order.last().expect("nonempty")];
    let v: DVector<C64> = eig.eigenvectors.column(order[0]).into_owned();
    let ground: Vec<C64> = v.iter().copied().collect();
    GroundReport {
        e0,
        e1,
        gap: e1 - e0,
        fidelity: overlap_fidelity(&ground, reference),
        degenerate: e1 - e0 < cfg.degeneracy_tol,
        norm: top.abs().max(e0.abs()),
        iterations: 0,
        residual: 0.0,
        method: "dense",
        ground_state: ground,
    }
}

/// Two lowest eigenvalues, ground-vector fidelity with `reference` and the
/// degeneracy flag.
pub fn ground_analysis(
    op: &dyn LinearOperator,
    reference: &StateVector,
    cfg: &EigenConfig,
) -> Result<GroundReport> {
    let d = op.dim();
    if reference.dim() != d {
        return Err(Error::input("reference state does not match the operator"));
    }
    if d <= cfg.dense_limit {
        return Ok(dense_analysis(op, reference, cfg));
    }
    match lanczos_analysis(op, reference, cfg) {
        Err(Error::Convergence { .. }) if d <= cfg.dense_fallback => {
            Ok(dense_analysis(op, reference, cfg))
        }
        other => other,
    }
}

fn lanczos_analysis(
    op: &dyn LinearOperator,
    reference: &StateVector,
    cfg: &EigenConfig,
) -> Result<GroundReport> {
    let d = op.dim();
    let top = lanczos(op, -1.0, &[], random_start(d, cfg.seed), |s| 1e-6 * s.max(1.0), cfg)?;
    let h_norm = top.value.abs();
    let tol = cfg.tolerance * h_norm.max(1.0);
    let ground = lanczos(op, 1.0, &[], random_start(d, cfg.seed + 1), |_| tol, cfg)?;
    let excited = lanczos(
        op,
        1.0,
        std::slice::from_ref(&ground.vector),
        random_start(d, cfg.seed + 2),
        |_| tol,
        cfg,
    )?;
    Ok(GroundReport {
        e0: ground.value,
        e1: excited.value,
        gap: excited.value - ground.value,
        fidelity: overlap_fidelity(&ground.vector, reference),
        degenerate: excited.value - ground.value < cfg.degeneracy_tol,
        norm: h_norm,
        iterations: top.iterations + ground.iterations + excited.iterations,
        residual: ground.residual.max(excited.residual),
        method: "lanczos",
        ground_state: ground.vector,
    })
}

/// Eigenvalues, eigenvectors, iterations and final residual.
type Eigenpairs = (Vec<f64>, Vec<Vec<C64>>, usize, f64);

/// Lowest `nev` eigenpairs by Davidson iteration with the diagonal
/// preconditioner `(diag - theta)^{-1}`. Suited to operators whose scale
/// varies strongly along the basis, where Lanczos stalls.
pub(crate) fn davidson(
    op: &dyn LinearOperator,
    diag: &[f64],
    nev: usize,
    tol: f64,
    cfg: &EigenConfig,
) -> Result<Eigenpairs> {
    let d = op.dim();
    let max_basis = (cfg.krylov_dim / 2).max(4 * nev).min(d);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut images: Vec<Vec<C64>> = Vec::new();
    let mut iterations = 0;
    let push = |v: Vec<C64>, basis: &mut Vec<Vec<C64>>, images: &mut Vec<Vec<C64>>, iterations: &mut usize| {
        let mut v = v;
        orthogonalize(&mut v, basis);
        let nv = norm(&v);
        if nv < 1e-10 {
            return false;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mut w = vec![C64::new(0.0, 0.0); d];
        op.apply(&v, &mut w);
        *iterations += 1;
        basis.push(v);
        images.push(w);
        true
    };
    // Start from the basis states with the smallest diagonal.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| diag[a].total_cmp(&diag[b]));
    let mut noise = random_start(d, cfg.seed);
    for &i in order.iter().take(2 * nev) {
        let mut v: Vec<C64> = noise.iter().map(|x| x * 1e-3).collect();
        v[i] += C64::new(1.0, 0.0);
        push(v, &mut basis, &mut images, &mut iterations);
        noise.rotate_left(1);
    }
    loop {
        let k = basis.len();
        let hs = DMatrix::from_fn(k, k, |i, j| dot(&basis[i], &images[j]));
        let hs = (&hs + hs.adjoint()) * C64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(hs);
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let ritz = |j: usize, src: &[Vec<C64>]| {
            let y = eig.eigenvectors.column(idx[j]);
            let mut x = vec![C64::new(0.0, 0.0); d];
            for (i, b) in src.iter().enumerate() {
                axpy(&mut x, y[i], b);
            }
            x
        };
        let mut values = Vec::with_capacity(nev);
        let mut vectors = Vec::with_capacity(nev);
        let mut residuals = Vec::with_capacity(nev);
        for j in 0..nev.min(k) {
            let theta = eig.eigenvalues[idx[j]];
            let x = ritz(j, &basis);
            let hx = ritz(j, &images);
            let r: Vec<C64> = hx.iter().zip(&x).map(|(h, x)| h - x * theta).collect();
            residuals.push(r);
            values.push(theta);
            vectors.push(x);
        }
        let res: Vec<f64> = residuals.iter().map(|r| norm(r)).collect();
        let worst = res.iter().copied().fold(0.0, f64::max);
        if values.len() == nev && worst <= tol {
            return Ok((values, vectors, iterations, worst));
        }
        if iterations >= cfg.max_iterations {
            return Err(Error::Convergence {
                iterations,
                residual: worst,
            });
        }
        if k + nev > max_basis {
            let keep = (2 * nev).min(k);
            let new_basis: Vec<Vec<C64>> = (0..keep).map(|j| ritz(j, &basis)).collect();
            let new_images: Vec<Vec<C64>> = (0..keep).map(|j| ritz(j, &images)).collect();
            basis = new_basis;
            images = new_images;
        }
        let mut added = false;
        for j in 0..values.len() {
            if res[j] <= tol {
                continue;
            }
            let theta = values[j];
            let floor = 1e-8 * theta.abs().max(1.0);
            let t: Vec<C64> = residuals[j]
                .iter()
                .zip(diag)
                .map(|(r, &dg)| {
                    let den = dg - theta;
                    let den = if den.abs() < floor { floor.copysign(den) } else { den };
                    r / den
                })
                .collect();
            added |= push(t, &mut basis, &mut images, &mut iterations);
        }
        if !added {
            let v = random_start(d, cfg.seed + iterations as u64);
            if !push(v, &mut basis, &mut images, &mut iterations) {
                return Err(Error::Convergence {
                    iterations,
                    residual: worst,
                });
            }
        }
    }
}

/// As `ground_analysis`, but iterating with preconditioned Davidson using
/// the supplied diagonal of `op`.
pub fn ground_analysis_preconditioned(
    op: &dyn LinearOperator,
    diag: &[f64],
    reference: &StateVector,
    cfg: &EigenConfig,
) -> Result<GroundReport> {
    let d = op.dim();
    if reference.dim() != d || diag.len() != d {
        return Err(Error::input("reference state or diagonal does not match the operator"));
    }
    if d <= cfg.dense_limit {
        return Ok(dense_analysis(op, reference, cfg));
    }
    let top = lanczos(op, -1.0, &[], random_start(d, cfg.seed), |s| 1e-6 * s.max(1.0), cfg)?;
    let h_norm = top.value.abs();
    let tol = cfg.tolerance * h_norm.max(1.0);
    let result = davidson(op, diag, 2, tol, cfg);
    let (values, vectors, iterations, residual) = match result {
        Err(Error::Convergence { .. }) if d <= cfg.dense_fallback => {
            return Ok(dense_analysis(op, reference, cfg));
        }
        other => other?,
    };
    let (e0, e1) = (values[0], values[1]);
    Ok(GroundReport {
        e0,
        e1,
        gap: e1 - e0,
        fidelity: overlap_fidelity(&vectors[0], reference),
        degenerate: e1 - e0 < cfg.degeneracy_tol,
        norm: h_norm,
        iterations: top.iterations + iterations,
        residual,
        method: "davidson",
        ground_state: vectors.into_iter().next().expect("two eigenpairs"),
    })
}
