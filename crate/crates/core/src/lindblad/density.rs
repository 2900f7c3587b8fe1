use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::BasisSet;
use crate::numerics::{eig_hermitian, hermiticity_defect, CMatrix, C64, ONE};

pub const HERMITIAN_TOLERANCE: f64 = 1e-10;
pub const TRACE_TOLERANCE: f64 = 1e-10;
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: CMatrix,
    basis: Arc<BasisSet>,
}

/// How far a matrix is from being a valid density matrix.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct StateDefects {
    pub hermiticity: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
}

impl Default for StateDefects {
    fn default() -> Self {
        Self {
            hermiticity: 0.0,
            trace_error: 0.0,
            min_eigenvalue: f64::INFINITY,
        }
    }
}

impl StateDefects {
    pub fn worst(&self, other: &Self) -> Self {
        Self {
            hermiticity: self.hermiticity.max(other.hermiticity),
            trace_error: self.trace_error.max(other.trace_error),
            min_eigenvalue: self.min_eigenvalue.min(other.min_eigenvalue),
        }
    }
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and numerical positivity.
    pub fn new(matrix: CMatrix, basis: Arc<BasisSet>) -> Result<Self> {
        let rho = Self::unchecked(matrix, basis);
        if rho.matrix.nrows() != rho.basis.dim() || rho.matrix.ncols() != rho.basis.dim() {
            return Err(Error::Dimension {
                expected: rho.basis.dim(),
                actual: rho.matrix.nrows(),
            });
        }
        let d = rho.defects();
        if d.hermiticity > HERMITIAN_TOLERANCE
            || d.trace_error > TRACE_TOLERANCE
            || d.min_eigenvalue < -POSITIVITY_TOLERANCE
        {
            return Err(Error::Contract(format!(
                "not a density matrix: hermiticity {:.2e}, trace error {:.2e}, min eigenvalue {:.2e}",
                d.hermiticity, d.trace_error, d.min_eigenvalue
            )));
        }
        Ok(rho)
    }

    pub(crate) fn unchecked(matrix: CMatrix, basis: Arc<BasisSet>) -> Self {
        Self { matrix, basis }
    }

    /// Pure state `|ψ⟩⟨ψ|` of a normalized amplitude vector.
    pub fn pure(amplitudes: &[C64], basis: Arc<BasisSet>) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if amplitudes.len() != basis.dim() || norm == 0.0 {
            return Err(Error::Contract("invalid pure-state amplitudes".into()));
        }
        let v = crate::numerics::CVector::from_iterator(amplitudes.len(), amplitudes.iter().map(|z| z / norm));
        Self::new(&v * v.adjoint(), basis)
    }

    pub fn basis_projector(basis: Arc<BasisSet>, index: usize) -> Result<Self> {
        let n = basis.dim();
        if index >= n {
            return Err(Error::Domain(format!("basis index {index} out of range {n}")));
        }
        let mut m = CMatrix::zeros(n, n);
        m[(index, index)] = ONE;
        Self::new(m, basis)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn expectation(&self, op: &CMatrix) -> C64 {
        (op * &self.matrix).trace()
    }

    pub fn defects(&self) -> StateDefects {
        let hermiticity = hermiticity_defect(&self.matrix);
        let trace_error = (self.matrix.trace() - ONE).norm();
        let h = (&self.matrix + self.matrix.adjoint()) * C64::from(0.5);
        let min_eigenvalue = eig_hermitian(&h).map(|e| e.values[0]).unwrap_or(f64::NEG_INFINITY);
        StateDefects {
            hermiticity,
            trace_error,
            min_eigenvalue,
        }
    }
}
