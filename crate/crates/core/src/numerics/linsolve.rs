use nalgebra::{Dyn, LU};

use super::{ensure_finite, ensure_square, norm2_estimate, vec_norm, CMatrix, CVector, Tolerances, C64};
use crate::error::{Error, Result};

/// LU factorization with partial pivoting, a 1-norm condition estimate and a
/// residual-checked solve.
pub struct LinearSolver {
    a: CMatrix,
    lu: LU<C64, Dyn, Dyn>,
    l: CMatrix,
    u: CMatrix,
    condition: f64,
    norm2: f64,
    tol: Tolerances,
}

impl LinearSolver {
    pub fn new(a: &CMatrix) -> Result<Self> {
        Self::with_tolerances(a, Tolerances::default())
    }

    pub fn with_tolerances(a: &CMatrix, tol: Tolerances) -> Result<Self> {
        ensure_square(a)?;
        ensure_finite(a)?;
        let lu = LU::new(a.clone());
        let l = lu.l();
        let u = lu.u();
        let mut solver = Self {
            a: a.clone(),
            lu,
            l,
            u,
            condition: f64::INFINITY,
            norm2: norm2_estimate(a),
            tol,
        };
        let pivots_ok = solver.u.diagonal().iter().all(|z| z.norm() > 0.0);
        if pivots_ok {
            solver.condition = norm1(a) * solver.inverse_norm1_estimate();
        }
        if !(solver.condition <= solver.tol.max_condition) {
            return Err(Error::Singular {
                condition: solver.condition,
            });
        }
        Ok(solver)
    }

    /// Estimated 1-norm condition number `‖A‖₁ ‖A⁻¹‖₁`.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn raw_solve(&self, b: &CVector) -> Option<CVector> {
        self.lu.solve(b)
    }

    /// Solves `A† x = b` with the same factorization.
    fn raw_solve_adjoint(&self, b: &CVector) -> Option<CVector> {
        // P A = L U  =>  A† = U† L† P
        let w = self.u.ad_solve_upper_triangular(b)?;
        let mut v = self.l.ad_solve_lower_triangular(&w)?;
        self.lu.p().inv_permute_rows(&mut v);
        Some(v)
    }

    /// Hager–Higham estimate of `‖A⁻¹‖₁`.
    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.dim();
        let mut x = CVector::from_element(n, C64::from(1.0 / n as f64));
        let mut estimate = 0.0;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let Some(y) = self.raw_solve(&x) else {
                return f64::INFINITY;
            };
            estimate = y.iter().map(|z| z.norm()).sum::<f64>();
            let xi = y.map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::from(1.0) });
            let Some(z) = self.raw_solve_adjoint(&xi) else {
                return f64::INFINITY;
            };
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |acc, it| if it.1 > acc.1 { it } else { acc });
            let ztx = z.dotc(&x).re;
            if zmax <= ztx || j == last_j {
                break;
            }
            last_j = j;
            x = CVector::zeros(n);
            x[j] = C64::from(1.0);
        }
        // Alternating-sign probe guards against underestimates.
        let alt = CVector::from_fn(n, |i, _| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            C64::from(sign * (1.0 + i as f64 / (n.max(2) - 1) as f64))
        });
        if let Some(y) = self.raw_solve(&alt) {
            let alt_est = 2.0 * y.iter().map(|z| z.norm()).sum::<f64>() / (3.0 * n as f64);
            estimate = estimate.max(alt_est);
        }
        estimate
    }

    /// Solve `A x = b`, with one step of iterative refinement, and enforce
    /// the residual contract.
    pub fn solve(&self, b: &CVector) -> Result<CVector> {
        if b.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                actual: b.len(),
            });
        }
        let mut x = self.raw_solve(b).ok_or(Error::Singular {
            condition: f64::INFINITY,
        })?;
        let r = b - &self.a * &x;
        if let Some(dx) = self.raw_solve(&r) {
            x += dx;
        }
        let residual = vec_norm(&(&self.a * &x - b));
        let bound = self.tol.solve_residual * (self.norm2 * vec_norm(&x) + vec_norm(b));
        if !(residual <= bound) {
            return Err(Error::Residual {
                residual,
                bound,
                fingerprint: super::fingerprint(&self.a),
            });
        }
        Ok(x)
    }
}

fn norm1(a: &CMatrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn solve_linear(a: &CMatrix, b: &CVector) -> Result<CVector> {
    LinearSolver::new(a)?.solve(b)
}
