//! Dense complex linear algebra used throughout the simulator.
//!
//! Every routine is checked against a residual contract rather than tied to a
//! particular algorithm; the tolerances live in [`Tolerances`].

mod eig;
mod expm;
mod linsolve;

pub use eig::{eig_general, eig_hermitian, eigenvalues_general, EigResult, HermitianEig};
pub use expm::{expm_action, Propagator, PropagatorKind};
pub use linsolve::{solve_linear, LinearSolver};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);

/// Numerical tolerances. The defaults are the contract values; callers may
/// loosen or tighten them.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Maximum entrywise Hermiticity defect accepted by `eig_hermitian`.
    pub hermitian_input: f64,
    /// Hermitian eigenpair residual, relative to ‖M‖₂.
    pub hermitian_residual: f64,
    /// General eigenpair residual, relative to ‖M‖₂.
    pub general_residual: f64,
    /// Linear solve residual, relative to ‖A‖₂‖x‖₂ + ‖b‖₂.
    pub solve_residual: f64,
    /// Condition estimate above which a matrix is reported singular.
    pub max_condition: f64,
    /// Eigenvector-matrix condition number above which the matrix
    /// exponential falls back to scaling and squaring.
    pub spectral_condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermitian_input: 1e-12,
            hermitian_residual: 1e-10,
            general_residual: 1e-9,
            solve_residual: 1e-10,
            max_condition: 1e14,
            spectral_condition: 1e8,
        }
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::Contract(format!(
            "expected a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::Contract("matrix has non-finite entries".into()))
    }
}

/// Largest entrywise deviation `max |M_ij - conj(M_ji)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn vec_norm(v: &CVector) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Spectral norm estimate by power iteration on `M†M`.
///
/// Converges from below, so residual bounds scaled by it are never looser
/// than the exact ones. Deterministic start vector.
pub fn norm2_estimate(m: &CMatrix) -> f64 {
    let n = m.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut v = CVector::from_fn(n, |i, _| C64::new(1.0 + (i as f64 * 0.618).sin() * 0.5, 0.0));
    let mut sigma = 0.0;
    for _ in 0..40 {
        let nv = vec_norm(&v);
        if nv == 0.0 {
            return max_abs(m);
        }
        v /= C64::from(nv);
        let w = m * &v;
        let next = vec_norm(&w);
        let converged = (next - sigma).abs() <= 1e-6 * next;
        sigma = next;
        if converged {
            break;
        }
        v = m.adjoint() * w;
    }
    sigma.max(max_abs(m))
}

/// Short human-readable identity for a matrix, included in error messages.
pub fn fingerprint(m: &CMatrix) -> String {
    let fro = m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let sum: C64 = m.iter().sum();
    format!(
        "{}x{} fro={:.6e} sum={:.6e}{:+.6e}i",
        m.nrows(),
        m.ncols(),
        fro,
        sum.re,
        sum.im
    )
}

/// Column-stacking vectorization: `vec(X)[i + j*n] = X[i, j]`.
pub fn stack(m: &CMatrix) -> CVector {
    CVector::from_column_slice(m.as_slice())
}

pub fn unstack(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// Index sets of the connected components of the sparsity graph of `m`
/// (`i ~ j` when either `m[i,j]` or `m[j,i]` is exactly nonzero), each sorted
/// and ordered by smallest index. The span of each set is invariant under `m`.
pub fn sparsity_components(m: &CMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && m[(i, j)] != ZERO {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let root = find(&mut parent, i);
        if slot[root] == usize::MAX {
            slot[root] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[root]].push(i);
    }
    groups
}

/// `m[idx, idx]`
pub fn submatrix(m: &CMatrix, idx: &[usize]) -> CMatrix {
    CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

pub fn trace(m: &CMatrix) -> C64 {
    m.diagonal().iter().sum()
}
