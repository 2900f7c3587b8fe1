//! Reservoir dissipators, the Liouvillian superoperator and its steady
//! states, propagation and spectrum.
//!
//! Density matrices are vectorized by column stacking,
//! `vec(X)[i + j n] = X[i, j]`, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

mod density;

pub use density::{DensityMatrix, StateDefects};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{
    build_effective_hamiltonian, build_hamiltonian, build_mode_operators, BasisSet, ModeOperators, Operator,
    ParityBlock, Reservoir, SystemParams,
};
use crate::numerics::{
    eig_general, eig_hermitian, eigenvalues_general, identity, norm2_estimate, sparsity_components, stack, submatrix,
    unstack, vec_norm, CMatrix, CVector, HermitianEig, LinearSolver, Propagator, C64, I, ONE,
};

/// Reservoir occupation `1/(e^{(ε−μ)/T} + 1)`; at `T = 0` a step with value
/// ½ exactly at the edge.
pub fn fermi(eps: f64, mu: f64, temperature: f64) -> f64 {
    let x = eps - mu;
    if temperature == 0.0 {
        return if x < 0.0 {
            1.0
        } else if x > 0.0 {
            0.0
        } else {
            0.5
        };
    }
    let y = x / temperature;
    // Split by sign so the exponential never overflows.
    if y > 0.0 {
        let e = (-y).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + y.exp())
    }
}

/// Hole occupation `1 − f`.
pub fn fermi_hole(eps: f64, mu: f64, temperature: f64) -> f64 {
    fermi(-eps, -mu, temperature)
}

/// `D_j^(+)` and `D_j^(−)` for both reservoirs, in the computational basis.
#[derive(Clone, Debug)]
pub struct Dissipators {
    pub plus: [Operator; 2],
    pub minus: [Operator; 2],
}

impl Dissipators {
    pub fn plus(&self, r: Reservoir) -> &Operator {
        &self.plus[r.index() - 1]
    }

    pub fn minus(&self, r: Reservoir) -> &Operator {
        &self.minus[r.index() - 1]
    }
}

pub fn build_dissipators(h: &Operator, modes: &ModeOperators, params: &SystemParams) -> Result<Dissipators> {
    let eig = eig_blockwise(h)?;
    build_dissipators_in(&eig, h, modes, params)
}

/// Eigendecomposition of `H` carried out separately on each connected
/// component of its sparsity pattern (parity block and total charge).
///
/// Eigenvectors are then exactly confined to one sector, even where levels
/// of different sectors are degenerate. Values are grouped by sector, not
/// globally sorted.
pub fn eig_blockwise(h: &Operator) -> Result<HermitianEig> {
    let n = h.dim();
    let mut values = vec![0.0; n];
    let mut vectors = CMatrix::zeros(n, n);
    let mut col = 0;
    for idx in sparsity_components(h.matrix()) {
        let e = eig_hermitian(&submatrix(h.matrix(), &idx))?;
        for (k, &value) in e.values.iter().enumerate() {
            values[col] = value;
            for (r, &i) in idx.iter().enumerate() {
                vectors[(i, col)] = e.vectors[(r, k)];
            }
            col += 1;
        }
    }
    Ok(HermitianEig { values, vectors })
}

/// In the eigenbasis of `H`, `(D^±)_nm = Γ f^±(E_m − E_n) d_nm`.
fn build_dissipators_in(
    eig: &HermitianEig,
    h: &Operator,
    modes: &ModeOperators,
    params: &SystemParams,
) -> Result<Dissipators> {
    let n = h.dim();
    let basis = h.basis().clone();
    let build = |r: Reservoir, sign: Sign| -> Result<Operator> {
        let d = eig.to_eigenbasis(modes.d(r).matrix());
        let gamma = params.gamma(r);
        let mu = params.mu(r);
        let mut out = CMatrix::zeros(n, n);
        for m in 0..n {
            for k in 0..n {
                let omega = eig.values[m] - eig.values[k];
                let f = match sign {
                    Sign::Plus => fermi(omega, mu, params.temperature),
                    Sign::Minus => fermi_hole(omega, mu, params.temperature),
                };
                out[(k, m)] = d[(k, m)] * (gamma * f);
            }
        }
        Operator::new(eig.from_eigenbasis(&out), basis.clone())
    };
    Ok(Dissipators {
        plus: [build(Reservoir::One, Sign::Plus)?, build(Reservoir::Two, Sign::Plus)?],
        minus: [build(Reservoir::One, Sign::Minus)?, build(Reservoir::Two, Sign::Minus)?],
    })
}

#[derive(Clone, Copy)]
enum Sign {
    Plus,
    Minus,
}

/// Matrix `G` of the generator acting on column-stacked density matrices.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    g: CMatrix,
    basis: Arc<BasisSet>,
    params: SystemParams,
}

/// `vec(A X)`
fn left(a: &CMatrix) -> CMatrix {
    identity(a.nrows()).kronecker(a)
}

/// `vec(X B)`
fn right(b: &CMatrix) -> CMatrix {
    b.transpose().kronecker(&identity(b.nrows()))
}

/// `vec(A X B)`
fn sandwich(a: &CMatrix, b: &CMatrix) -> CMatrix {
    b.transpose().kronecker(a)
}

pub fn assemble_liouvillian(
    h: &Operator,
    modes: &ModeOperators,
    dissipators: &Dissipators,
    params: &SystemParams,
) -> Result<Liouvillian> {
    let hm = h.matrix();
    let mut g = (left(hm) - right(hm)) * (-I);
    for r in Reservoir::BOTH {
        let d = modes.d(r).matrix();
        let dd = d.adjoint();
        let dp = dissipators.plus(r).matrix();
        let dm = dissipators.minus(r).matrix();
        let dpa = dp.adjoint();
        let dma = dm.adjoint();
        // [d†, D⁻ρ − ρD⁺] + h.c., written so it is linear in ρ for any
        // (not necessarily Hermitian) argument.
        let term = left(&(&dd * dm)) - sandwich(&dd, dp) - sandwich(dm, &dd) + right(&(dp * &dd)) + right(&(&dma * d))
            - sandwich(&dpa, d)
            - sandwich(d, &dma)
            + left(&(d * &dpa));
        g -= term * C64::from(0.5);
    }
    Ok(Liouvillian {
        g,
        basis: h.basis().clone(),
        params: params.clone(),
    })
}

impl Liouvillian {
    pub fn matrix(&self) -> &CMatrix {
        &self.g
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    /// Hilbert-space dimension `n` (the superoperator is `n² × n²`).
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        unstack(&(&self.g * stack(rho)), self.dim())
    }

    pub fn norm2(&self) -> f64 {
        norm2_estimate(&self.g)
    }

    pub fn propagator(&self) -> Result<Propagator> {
        Propagator::new(&self.g)
    }

    /// Row vector of the trace functional, `Tr X = t · vec(X)`.
    pub fn trace_functional(&self) -> CVector {
        let n = self.dim();
        let mut t = CVector::zeros(n * n);
        for i in 0..n {
            t[i + i * n] = ONE;
        }
        t
    }
}

/// Zero-mode threshold relative to `‖G‖₂`.
pub const ZERO_MODE_THRESHOLD: f64 = 1e-10;

/// Steady state and its diagnostics.
#[derive(Clone, Debug)]
pub struct SteadyState {
    pub rho: DensityMatrix,
    /// `‖G vec(ρ)‖₂ / ‖G‖₂`.
    pub residual: f64,
    /// Lower bound on the separation of the zero mode from the rest of the
    /// spectrum, `1/‖A⁻¹‖₁` for the trace-bordered generator `A`.
    pub gap_estimate: f64,
    pub defects: StateDefects,
}

/// Null vector of `G` normalized to unit trace.
///
/// Solves `G x = 0` with one redundant population equation replaced by
/// `Tr x = 1`. A second zero mode makes that system singular, which is
/// reported as [`Error::AmbiguousSteadyState`].
pub fn steady_state(l: &Liouvillian) -> Result<SteadyState> {
    let n = l.dim();
    let mut a = l.g.clone();
    let t = l.trace_functional();
    a.set_row(0, &t.transpose());
    let solver = match LinearSolver::new(&a) {
        Ok(s) => s,
        Err(Error::Singular { .. }) => {
            return Err(Error::AmbiguousSteadyState {
                zero_modes: count_zero_modes(l)?,
            })
        }
        Err(e) => return Err(e),
    };
    let mut rhs = CVector::zeros(n * n);
    rhs[0] = ONE;
    let x = solver.solve(&rhs)?;
    let norm1: f64 = a
        .column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    finish_steady_state(l, &x, norm1 / solver.condition())
}

/// Steady state from the eigenvector of the smallest-modulus eigenvalue,
/// falling back to [`steady_state`] when the zero mode is not isolated.
///
/// Only the invariant sector of `G` holding the populations is diagonalized.
pub fn steady_state_spectral(l: &Liouvillian) -> Result<SteadyState> {
    let n = l.dim();
    let sectors: Vec<Vec<usize>> = sparsity_components(&l.g)
        .into_iter()
        .filter(|idx| idx.iter().any(|&k| k % n == k / n))
        .collect();
    if sectors.len() > 1 {
        // Each trace-carrying sector holds its own zero mode.
        return Err(Error::AmbiguousSteadyState {
            zero_modes: sectors.len(),
        });
    }
    let idx = &sectors[0];
    let eig = match eig_general(&submatrix(&l.g, idx)) {
        Ok(e) => e,
        Err(Error::Residual { .. }) | Err(Error::NoConvergence { .. }) => return steady_state(l),
        Err(e) => return Err(e),
    };
    let norm = l.norm2();
    let mut order: Vec<usize> = (0..eig.values.len()).collect();
    order.sort_by(|&a, &b| eig.values[a].norm().total_cmp(&eig.values[b].norm()));
    let zero_modes = order
        .iter()
        .filter(|&&k| eig.values[k].norm() < ZERO_MODE_THRESHOLD * norm)
        .count();
    if zero_modes > 1 {
        return Err(Error::AmbiguousSteadyState { zero_modes });
    }
    let gap = order.get(1).map_or(f64::INFINITY, |&k| eig.values[k].norm());
    if gap < 1e-12 {
        return steady_state(l);
    }
    let mut x = CVector::zeros(n * n);
    for (r, &k) in idx.iter().enumerate() {
        x[k] = eig.vectors[(r, order[0])];
    }
    finish_steady_state(l, &x, gap)
}

fn finish_steady_state(l: &Liouvillian, x: &CVector, gap_estimate: f64) -> Result<SteadyState> {
    let n = l.dim();
    let m = unstack(x, n);
    let m = (&m + m.adjoint()) * C64::from(0.5);
    let tr: C64 = m.trace();
    if tr.norm() == 0.0 {
        return Err(Error::Construction("steady-state candidate has zero trace".into()));
    }
    let m = m / tr;
    let norm = l.norm2().max(f64::MIN_POSITIVE);
    let residual = vec_norm(&(&l.g * stack(&m))) / norm;
    let rho = DensityMatrix::unchecked(m, l.basis.clone());
    if residual > 1e-9 {
        return Err(Error::Residual {
            residual,
            bound: 1e-9,
            fingerprint: crate::numerics::fingerprint(&l.g),
        });
    }
    let defects = rho.defects();
    Ok(SteadyState {
        rho,
        residual,
        gap_estimate,
        defects,
    })
}

fn count_zero_modes(l: &Liouvillian) -> Result<usize> {
    let norm = l.norm2();
    Ok(sector_eigenvalues(&l.g)?
        .iter()
        .filter(|z| z.norm() < ZERO_MODE_THRESHOLD * norm)
        .count())
}

/// Eigenvalues of `G` collected over its invariant sectors.
fn sector_eigenvalues(g: &CMatrix) -> Result<Vec<C64>> {
    let mut values = Vec::with_capacity(g.nrows());
    for idx in sparsity_components(g) {
        values.extend(eigenvalues_general(&submatrix(g, &idx))?);
    }
    Ok(values)
}

/// Full spectrum of `G` sorted by `|Re λ|`, ascending.
pub fn liouvillian_spectrum(l: &Liouvillian) -> Result<Vec<C64>> {
    let mut values = sector_eigenvalues(&l.g)?;
    values.sort_by(|a, b| a.re.abs().total_cmp(&b.re.abs()).then(a.im.total_cmp(&b.im)));
    if let Some(worst) = values.iter().map(|z| z.re).reduce(f64::max) {
        if worst > 1e-9 {
            return Err(Error::GrowingMode { real_part: worst });
        }
    }
    Ok(values)
}

/// Densities along a time grid with per-trajectory invariant diagnostics.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub worst: StateDefects,
    /// Positivity violations beyond 1e-6; diagnostic only.
    pub warnings: Vec<String>,
}

pub fn propagate(l: &Liouvillian, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    let propagator = l.propagator()?;
    propagate_with(&propagator, l, rho0, times)
}

pub fn propagate_with(
    propagator: &Propagator,
    l: &Liouvillian,
    rho0: &DensityMatrix,
    times: &[f64],
) -> Result<Trajectory> {
    if rho0.dim() != l.dim() {
        return Err(Error::Dimension {
            expected: l.dim(),
            actual: rho0.dim(),
        });
    }
    let n = l.dim();
    let vecs = propagator.apply_grid(&stack(rho0.matrix()), times)?;
    let mut worst = StateDefects::default();
    let mut warnings = Vec::new();
    let states: Vec<DensityMatrix> = vecs
        .iter()
        .zip(times)
        .map(|(v, &t)| {
            let rho = DensityMatrix::unchecked(unstack(v, n), l.basis.clone());
            let d = rho.defects();
            if d.min_eigenvalue < -1e-6 {
                let msg = format!(
                    "positivity violated at t = {t}: min eigenvalue {:.3e}",
                    d.min_eigenvalue
                );
                log::debug!("{msg}");
                warnings.push(msg);
            }
            worst = worst.worst(&d);
            rho
        })
        .collect();
    Ok(Trajectory {
        times: times.to_vec(),
        states,
        worst,
        warnings,
    })
}

/// Hamiltonian, operators, dissipators and Liouvillian for one parameter
/// point. The effective dot model runs through the same pipeline.
#[derive(Clone, Debug)]
pub struct OpenSystem {
    pub params: SystemParams,
    pub hamiltonian: Operator,
    pub modes: ModeOperators,
    pub eigen: HermitianEig,
    pub dissipators: Dissipators,
    pub liouvillian: Liouvillian,
}

impl OpenSystem {
    pub fn from_hamiltonian(params: &SystemParams, hamiltonian: Operator) -> Result<Self> {
        let modes = build_mode_operators(hamiltonian.basis());
        let eigen = eig_blockwise(&hamiltonian)?;
        let dissipators = build_dissipators_in(&eigen, &hamiltonian, &modes, params)?;
        let liouvillian = assemble_liouvillian(&hamiltonian, &modes, &dissipators, params)?;
        Ok(Self {
            params: params.clone(),
            hamiltonian,
            modes,
            eigen,
            dissipators,
            liouvillian,
        })
    }

    pub fn full(params: &SystemParams, basis: &Arc<BasisSet>) -> Result<Self> {
        Self::from_hamiltonian(params, build_hamiltonian(params, basis)?)
    }

    pub fn effective(params: &SystemParams, block: ParityBlock) -> Result<Self> {
        Self::from_hamiltonian(params, build_effective_hamiltonian(params, block)?)
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        self.hamiltonian.basis()
    }

    pub fn steady_state(&self) -> Result<SteadyState> {
        steady_state(&self.liouvillian)
    }

    /// Projector on the island ground state of `block` with empty dots.
    pub fn empty_dot_state(&self, block: ParityBlock) -> Result<DensityMatrix> {
        let idx = self
            .basis()
            .ground_empty_index(block)
            .ok_or_else(|| Error::Domain(format!("basis has no {block} block")))?;
        DensityMatrix::basis_projector(self.basis().clone(), idx)
    }
}

#[cfg(test)]
mod tests;
