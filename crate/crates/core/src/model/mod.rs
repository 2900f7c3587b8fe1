//! Basis, fermionic operators and Hamiltonians of the qubit–double-dot system.
//!
//! Jordan–Wigner mode order is `(d1, d2, f_R)`. The left fermion `f_L` has no
//! dynamics; its string is a constant sign inside a block and is dropped.

mod basis;
mod params;

pub use basis::{BasisSet, BasisState, BlockMode, ChargeMode, ParityBlock, DOT_STATES};
pub use params::{Reservoir, SystemParams};

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{eig_hermitian, hermiticity_defect, CMatrix, C64};

/// Dense operator bound to the basis it acts on.
#[derive(Clone, Debug)]
pub struct Operator {
    matrix: CMatrix,
    basis: Arc<BasisSet>,
}

impl Operator {
    pub fn new(matrix: CMatrix, basis: Arc<BasisSet>) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::Dimension {
                expected: basis.dim(),
                actual: matrix.nrows(),
            });
        }
        Ok(Self { matrix, basis })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn basis(&self) -> &Arc<BasisSet> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            matrix: self.matrix.adjoint(),
            basis: self.basis.clone(),
        }
    }
}

/// Annihilators of both dots and the two island raising operators.
#[derive(Clone, Debug)]
pub struct ModeOperators {
    pub d1: Operator,
    pub d2: Operator,
    /// `f_R†`: `p_R 0→1`, island charge `+1`, Cooper pairs unchanged.
    pub a_up: Operator,
    /// `e^{−iθ} f_R†`: `p_R 0→1`, island charge `−1`, one Cooper pair removed.
    pub b_up: Operator,
}

impl ModeOperators {
    pub fn d(&self, reservoir: Reservoir) -> &Operator {
        match reservoir {
            Reservoir::One => &self.d1,
            Reservoir::Two => &self.d2,
        }
    }
}

fn from_action(basis: &Arc<BasisSet>, action: impl Fn(&BasisState) -> Option<(BasisState, f64)>) -> Operator {
    let n = basis.dim();
    let mut m = CMatrix::zeros(n, n);
    for (col, state) in basis.states().iter().enumerate() {
        if let Some((target, sign)) = action(state) {
            // Transitions out of the truncated space are dropped.
            if let Some(row) = basis.index_of(&target) {
                m[(row, col)] = C64::from(sign);
            }
        }
    }
    Operator {
        matrix: m,
        basis: basis.clone(),
    }
}

fn jw_sign(occupied_before: u8) -> f64 {
    if occupied_before.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn build_mode_operators(basis: &Arc<BasisSet>) -> ModeOperators {
    let d1 = from_action(basis, |s| (s.dot1 == 1).then_some((BasisState { dot1: 0, ..*s }, 1.0)));
    let d2 = from_action(basis, |s| {
        (s.dot2 == 1).then(|| (BasisState { dot2: 0, ..*s }, jw_sign(s.dot1)))
    });
    let a_up = from_action(basis, |s| {
        (s.parity_r == 0).then(|| {
            let t = BasisState {
                parity_r: 1,
                dn: s.dn + 1,
                ..*s
            };
            (t, jw_sign(s.dot1 + s.dot2))
        })
    });
    let b_up = from_action(basis, |s| {
        (s.parity_r == 0).then(|| {
            let t = BasisState {
                parity_r: 1,
                dn: s.dn - 1,
                n_cp: s.n_cp - 1,
                ..*s
            };
            (t, jw_sign(s.dot1 + s.dot2))
        })
    });
    ModeOperators { d1, d2, a_up, b_up }
}

/// Diagonal operator from a function of the basis state.
pub fn diagonal_operator(basis: &Arc<BasisSet>, f: impl Fn(&BasisState) -> f64) -> Operator {
    let n = basis.dim();
    let mut m = CMatrix::zeros(n, n);
    for (k, s) in basis.states().iter().enumerate() {
        m[(k, k)] = C64::from(f(s));
    }
    Operator {
        matrix: m,
        basis: basis.clone(),
    }
}

/// Island charge plus both dot occupations.
pub fn total_charge_operator(basis: &Arc<BasisSet>) -> Operator {
    diagonal_operator(basis, |s| s.total_charge() as f64)
}

const HERMITICITY_TOLERANCE: f64 = 1e-12;

fn checked_hermitian(matrix: CMatrix, basis: &Arc<BasisSet>) -> Result<Operator> {
    let defect = hermiticity_defect(&matrix);
    if defect > HERMITICITY_TOLERANCE {
        return Err(Error::Construction(format!(
            "Hamiltonian is not Hermitian (defect {defect:.3e}); operator sign convention broken"
        )));
    }
    Operator::new(matrix, basis.clone())
}

/// Charging energy, dot levels and the dot–dot / dot–Majorana tunneling.
pub fn build_hamiltonian(params: &SystemParams, basis: &Arc<BasisSet>) -> Result<Operator> {
    params.validate()?;
    let ops = build_mode_operators(basis);
    let (_, delta) = params.gate_offset();
    let e_c = params.e_c;
    let diag = diagonal_operator(basis, |s| {
        let charge = s.dn as f64 - delta;
        e_c * charge * charge + params.eps1 * s.dot1 as f64 + params.eps2 * s.dot2 as f64
    });

    let d1 = ops.d1.matrix();
    let d2 = ops.d2.matrix();
    let d1d = d1.adjoint();
    let d2d = d2.adjoint();
    let a = ops.a_up.matrix();
    let b = ops.b_up.matrix();
    let ad = a.adjoint();
    let bd = b.adjoint();

    let flux = C64::from_polar(1.0, params.phi);
    let l0 = params.lambda0;
    let l1 = params.lambda1;
    let l2 = params.lambda2;

    let dot_dot = (&d2d * d1) * -(l0 * flux) - (&d1d * d2) * (l0.conj() * flux.conj());
    let dot1 = (d1 * a) * l1 + (d1 * &bd) * l1 - (&d1d * b) * l1.conj() - (&d1d * &ad) * l1.conj();
    let dot2 = (a * d2) * l2 - (&bd * d2) * l2 + (b * &d2d) * l2.conj() - (&ad * &d2d) * l2.conj();

    checked_hermitian(diag.into_matrix() + dot_dot + dot1 + dot2, basis)
}

/// Low-energy dot Hamiltonian `−(λ0 e^{iφ} − z 2λ1λ2*/E_C) d2†d1 + h.c.`
/// plus dot levels, on the four dot states of `block`, `z = block.z()`.
pub fn build_effective_hamiltonian(params: &SystemParams, block: ParityBlock) -> Result<Operator> {
    build_effective_hamiltonian_z(params, block.z(), block)
}

/// Same as [`build_effective_hamiltonian`] with an explicit qubit
/// eigenvalue `z ∈ {+1, −1}`.
pub fn build_effective_hamiltonian_z(params: &SystemParams, z: i8, block: ParityBlock) -> Result<Operator> {
    params.validate()?;
    if z != 1 && z != -1 {
        return Err(Error::Domain(format!("qubit eigenvalue must be ±1, got {z}")));
    }
    let basis = Arc::new(BasisSet::new(BlockMode::Single(block), ChargeMode::GroundOnly));
    let ops = build_mode_operators(&basis);
    let d1 = ops.d1.matrix();
    let d2 = ops.d2.matrix();
    let coupling = params.lambda0 * C64::from_polar(1.0, params.phi)
        - C64::from(z as f64 * 2.0 / params.e_c) * params.lambda1 * params.lambda2.conj();
    let hop = -(d2.adjoint() * d1) * coupling;
    let diag = diagonal_operator(&basis, |s| params.eps1 * s.dot1 as f64 + params.eps2 * s.dot2 as f64);
    checked_hermitian(&hop + hop.adjoint() + diag.into_matrix(), &basis)
}

impl ParityBlock {
    /// Eigenvalue of the qubit operator `ẑ` on this block, in the sign
    /// convention of [`build_hamiltonian`].
    pub fn z(self) -> i8 {
        match self {
            ParityBlock::Zero => 1,
            ParityBlock::One => -1,
        }
    }
}

/// Overall energy shift of the low-energy quartet relative to the
/// effective model, `−2|λ1λ2|/E_C`.
pub fn effective_shift(params: &SystemParams) -> f64 {
    -2.0 * (params.lambda1 * params.lambda2).norm() / params.e_c
}

/// Sorted spectra on a flux grid.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SpectrumResult {
    pub phis: Vec<f64>,
    pub energies: Vec<Vec<f64>>,
}

pub fn spectrum_vs_flux(params: &SystemParams, basis: &Arc<BasisSet>, phi_grid: &[f64]) -> Result<SpectrumResult> {
    if phi_grid.is_empty() {
        return Err(Error::Domain("flux grid is empty".into()));
    }
    let energies = phi_grid
        .iter()
        .map(|&phi| {
            let p = SystemParams { phi, ..params.clone() };
            let h = build_hamiltonian(&p, basis)?;
            Ok(eig_hermitian(h.matrix())?.values)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumResult {
        phis: phi_grid.to_vec(),
        energies,
    })
}

/// Sorted spectrum of the effective model on a flux grid, shifted by
/// [`effective_shift`] so it overlays the full low-energy quartet.
pub fn effective_spectrum_vs_flux(
    params: &SystemParams,
    block: ParityBlock,
    phi_grid: &[f64],
) -> Result<SpectrumResult> {
    if phi_grid.is_empty() {
        return Err(Error::Domain("flux grid is empty".into()));
    }
    let shift = effective_shift(params);
    let energies = phi_grid
        .iter()
        .map(|&phi| {
            let p = SystemParams { phi, ..params.clone() };
            let h = build_effective_hamiltonian(&p, block)?;
            Ok(eig_hermitian(h.matrix())?
                .values
                .into_iter()
                .map(|e| e + shift)
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumResult {
        phis: phi_grid.to_vec(),
        energies,
    })
}

/// Eigenstates within this distance of the block ground state (in units of
/// `E_C`) count as low-energy: four near even `n_g`, eight near half-integer.
pub const LOW_ENERGY_CUTOFF: f64 = 0.25;

/// Largest `|E_m − E_n|` over single-electron transitions (nonzero `d_j`
/// matrix element) among the low-energy states of either block.
pub fn low_energy_bandwidth(params: &SystemParams) -> Result<f64> {
    let mode = ChargeMode::four_for_offset(params.gate_offset().1);
    let mut width: f64 = 0.0;
    for block in ParityBlock::BOTH {
        let basis = single_block(block, mode);
        let e = eig_hermitian(build_hamiltonian(params, &basis)?.matrix())?;
        let low = e
            .values
            .iter()
            .take_while(|&&v| v - e.values[0] < LOW_ENERGY_CUTOFF * params.e_c)
            .count();
        let ops = build_mode_operators(&basis);
        for d in [&ops.d1, &ops.d2] {
            let de = e.to_eigenbasis(d.matrix());
            for m in 0..low {
                for n in 0..low {
                    if de[(n, m)].norm() > 1e-8 {
                        width = width.max((e.values[m] - e.values[n]).abs());
                    }
                }
            }
        }
    }
    Ok(width)
}

/// Margin of the wide bias window over the quartet bandwidth.
pub const WIDE_WINDOW_MARGIN: f64 = 1.25;

impl SystemParams {
    /// Widens `μ1, μ2` symmetrically about their midpoint until the window
    /// covers every transition inside the low-energy quartet with a margin
    /// of [`WIDE_WINDOW_MARGIN`]; an already wide window is left unchanged.
    pub fn with_wide_window(self) -> Result<Self> {
        let needed = WIDE_WINDOW_MARGIN * low_energy_bandwidth(&self)?;
        let center = 0.5 * (self.mu1 + self.mu2);
        let half = 0.5 * (self.mu1 - self.mu2).abs();
        if half >= needed {
            return Ok(self);
        }
        let sign = if self.mu1 >= self.mu2 { 1.0 } else { -1.0 };
        Ok(Self {
            mu1: center + sign * needed,
            mu2: center - sign * needed,
            ..self
        })
    }
}

pub(crate) fn single_block(block: ParityBlock, mode: ChargeMode) -> Arc<BasisSet> {
    Arc::new(BasisSet::new(BlockMode::Single(block), mode))
}

#[cfg(test)]
mod tests;
