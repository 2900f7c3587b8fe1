use nalgebra::{Schur, SymmetricEigen};

use super::{
    ensure_finite, ensure_square, fingerprint, hermiticity_defect, norm2_estimate, vec_norm, CMatrix, CVector,
    Tolerances, C64, ZERO,
};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 10_000;

/// Eigendecomposition of a Hermitian matrix: real ascending values,
/// orthonormal eigenvectors in the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermitianEig {
    pub fn reconstruct(&self) -> CMatrix {
        let d = CMatrix::from_diagonal(&CVector::from_iterator(
            self.values.len(),
            self.values.iter().map(|&x| C64::from(x)),
        ));
        &self.vectors * d * self.vectors.adjoint()
    }

    /// Transform an operator into the eigenbasis: `V† A V`.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        self.vectors.adjoint() * a * &self.vectors
    }

    pub fn from_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        &self.vectors * a * self.vectors.adjoint()
    }
}

/// Right eigenpairs of a general complex matrix; column `k` of `vectors`
/// belongs to `values[k]`.
#[derive(Clone, Debug)]
pub struct EigResult {
    pub values: Vec<C64>,
    pub vectors: CMatrix,
}

pub fn eig_hermitian(m: &CMatrix) -> Result<HermitianEig> {
    eig_hermitian_with(m, &Tolerances::default())
}

pub fn eig_hermitian_with(m: &CMatrix, tol: &Tolerances) -> Result<HermitianEig> {
    let n = ensure_square(m)?;
    ensure_finite(m)?;
    let scale = super::max_abs(m).max(1.0);
    let defect = hermiticity_defect(m);
    if defect > tol.hermitian_input * scale {
        return Err(Error::NotHermitian {
            defect,
            tolerance: tol.hermitian_input,
        });
    }
    // Symmetrize exactly so the solver sees a Hermitian input.
    let h = (m + m.adjoint()) * C64::from(0.5);
    let eig = SymmetricEigen::try_new(h.clone(), f64::EPSILON, MAX_SWEEPS).ok_or_else(|| Error::NoConvergence {
        fingerprint: fingerprint(m),
    })?;

    let canonical = C64::from(1.0 / (n as f64).sqrt());
    let overlap = |k: usize| {
        eig.eigenvectors
            .column(k)
            .iter()
            .map(|z| z * canonical)
            .sum::<C64>()
            .norm()
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    // Degenerate runs are ordered by overlap with the uniform vector.
    let tie = 1e-12 * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.eigenvalues[order[end]] - eig.eigenvalues[order[end - 1]] <= tie {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| overlap(a).total_cmp(&overlap(b)));
        start = end;
    }

    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let norm = norm2_estimate(&h).max(f64::MIN_POSITIVE);
    for (k, &lambda) in values.iter().enumerate() {
        let v = vectors.column(k).into_owned();
        let r = vec_norm(&(&h * &v - &v * C64::from(lambda)));
        if r > tol.hermitian_residual * norm {
            return Err(Error::Residual {
                residual: r,
                bound: tol.hermitian_residual * norm,
                fingerprint: fingerprint(m),
            });
        }
    }
    Ok(HermitianEig { values, vectors })
}

fn schur(m: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    ensure_square(m)?;
    ensure_finite(m)?;
    Schur::try_new(m.clone(), f64::EPSILON, MAX_SWEEPS)
        .map(Schur::unpack)
        .ok_or_else(|| Error::NoConvergence {
            fingerprint: fingerprint(m),
        })
}

/// Eigenvalues only (diagonal of the complex Schur form).
pub fn eigenvalues_general(m: &CMatrix) -> Result<Vec<C64>> {
    let (_, t) = schur(m)?;
    Ok(t.diagonal().iter().copied().collect())
}

pub fn eig_general(m: &CMatrix) -> Result<EigResult> {
    eig_general_with(m, &Tolerances::default())
}

pub fn eig_general_with(m: &CMatrix, tol: &Tolerances) -> Result<EigResult> {
    let n = ensure_square(m)?;
    let (q, t) = schur(m)?;
    let values: Vec<C64> = t.diagonal().iter().copied().collect();

    let tnorm = super::max_abs(&t).max(f64::MIN_POSITIVE);
    let smin = (f64::EPSILON * tnorm).max(f64::MIN_POSITIVE * 1e10);

    // Eigenvectors of the triangular factor by back substitution, then
    // rotated back with Q.
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = C64::from(1.0);
        for i in (0..k).rev() {
            let mut acc = ZERO;
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < smin {
                denom = C64::from(smin);
            }
            y[(i, k)] = -acc / denom;
        }
    }
    let mut vectors = q * y;
    for k in 0..n {
        let nv = vec_norm(&vectors.column(k).into_owned());
        if nv > 0.0 && nv.is_finite() {
            vectors.column_mut(k).unscale_mut(nv);
        }
    }

    let norm = norm2_estimate(m).max(f64::MIN_POSITIVE);
    let bound = tol.general_residual * norm;
    let mut worst = 0.0f64;
    for (k, &lambda) in values.iter().enumerate() {
        let v = vectors.column(k).into_owned();
        let r = vec_norm(&(m * &v - &v * lambda));
        worst = worst.max(if r.is_finite() { r } else { f64::INFINITY });
    }
    if worst > bound {
        return Err(Error::Residual {
            residual: worst,
            bound,
            fingerprint: fingerprint(m),
        });
    }
    Ok(EigResult { values, vectors })
}
