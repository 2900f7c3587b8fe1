//! Currents, qubit coherences, current correlations and noise spectra.
//!
//! Currents are in units of `e E_C / ħ`; a positive `I₂` flows from dot 2
//! into reservoir 2.

mod fit;

pub use fit::{fit_decay_rates, fit_exponentials, fit_modes, DecayComponent, DecayFit, Mode};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lindblad::{propagate, DensityMatrix, Dissipators, Liouvillian, OpenSystem, StateDefects, SteadyState};
use crate::model::{BlockMode, ModeOperators, Operator, ParityBlock, Reservoir};
use crate::numerics::{
    eig_hermitian, hermiticity_defect, stack, submatrix, unstack, CMatrix, LinearSolver, Propagator, C64,
};
use crate::table::Table;

/// `Î_j = ½(d_j† D_j⁻ − D_j⁺ d_j†) + h.c.`
#[derive(Clone, Debug)]
pub struct CurrentOperator {
    pub reservoir: Reservoir,
    pub op: Operator,
}

impl CurrentOperator {
    pub fn matrix(&self) -> &CMatrix {
        self.op.matrix()
    }

    pub fn expectation(&self, rho: &DensityMatrix) -> C64 {
        rho.expectation(self.op.matrix())
    }
}

pub fn current_operator(r: Reservoir, modes: &ModeOperators, dissipators: &Dissipators) -> Result<CurrentOperator> {
    let d = modes.d(r).matrix();
    let dd = d.adjoint();
    let half = (&dd * dissipators.minus(r).matrix() - dissipators.plus(r).matrix() * &dd) * C64::from(0.5);
    let m = &half + half.adjoint();
    let defect = hermiticity_defect(&m);
    if defect > 1e-12 {
        return Err(Error::Construction(format!(
            "current operator not Hermitian (defect {defect:.3e})"
        )));
    }
    Ok(CurrentOperator {
        reservoir: r,
        op: Operator::new(m, modes.d(r).basis().clone())?,
    })
}

impl OpenSystem {
    pub fn current_operator(&self, r: Reservoir) -> Result<CurrentOperator> {
        current_operator(r, &self.modes, &self.dissipators)
    }
}

#[derive(Clone, Debug)]
pub struct Currents {
    pub i1: f64,
    pub i2: f64,
    /// Largest imaginary part of the two expectations.
    pub imag: f64,
    pub steady: SteadyState,
}

impl Currents {
    /// `I₁ + I₂`, zero in a steady state.
    pub fn imbalance(&self) -> f64 {
        self.i1 + self.i2
    }
}

/// Currents into both reservoirs in the unique steady state of `sys`.
pub fn steady_current(sys: &OpenSystem) -> Result<Currents> {
    let steady = sys.steady_state()?;
    let c1 = sys.current_operator(Reservoir::One)?.expectation(&steady.rho);
    let c2 = sys.current_operator(Reservoir::Two)?.expectation(&steady.rho);
    Ok(Currents {
        i1: c1.re,
        i2: c2.re,
        imag: c1.im.abs().max(c2.im.abs()),
        steady,
    })
}

/// Uniformly or irregularly sampled complex time series.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimeTrace {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<C64>,
}

impl TimeTrace {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: Vec<C64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Dimension {
                expected: times.len(),
                actual: values.len(),
            });
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] >= w[0])) {
            return Err(Error::Contract("trace times must be finite and ascending".into()));
        }
        Ok(Self {
            label: label.into(),
            times,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn real(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// Trace of `value − offset`.
    pub fn shifted(&self, offset: C64) -> Self {
        Self {
            label: self.label.clone(),
            times: self.times.clone(),
            values: self.values.iter().map(|v| v - offset).collect(),
        }
    }

    /// Columns `t,value_re,value_im`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t", "value_re", "value_im"]);
        for (time, v) in self.times.iter().zip(&self.values) {
            t.rows.push(vec![*time, v.re, v.im]);
        }
        t
    }
}

/// Real spectrum on a frequency grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Spectrum {
    pub label: String,
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
}

impl Spectrum {
    /// Columns `omega,S`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["omega", "S"]);
        for (w, s) in self.omegas.iter().zip(&self.values) {
            t.rows.push(vec![*w, *s]);
        }
        t
    }
}

#[derive(Clone, Debug)]
pub struct Transient {
    pub current: TimeTrace,
    pub worst: StateDefects,
    pub warnings: Vec<String>,
}

/// `I_j(t) = Tr[Î_j ρ(t)]`.
pub fn transient_current(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    times: &[f64],
    current: &CurrentOperator,
) -> Result<Transient> {
    let traj = propagate(l, rho0, times)?;
    let values = traj.states.iter().map(|r| current.expectation(r)).collect();
    Ok(Transient {
        current: TimeTrace::new(format!("I{}", current.reservoir.index()), times.to_vec(), values)?,
        worst: traj.worst,
        warnings: traj.warnings,
    })
}

fn require_both_blocks(rho: &DensityMatrix) -> Result<(std::ops::Range<usize>, std::ops::Range<usize>)> {
    let basis = rho.basis();
    if basis.block_mode() != BlockMode::Both {
        return Err(Error::Domain(
            "qubit coherence needs a basis containing both parity blocks".into(),
        ));
    }
    Ok((
        basis.block_range(ParityBlock::Zero).expect("both blocks"),
        basis.block_range(ParityBlock::One).expect("both blocks"),
    ))
}

/// `Σ_j ρ[0_L j, 1_L j]` over paired product states: the j-th state of each
/// block shares island charge and dot occupations.
pub fn qubit_coherence(rho: &DensityMatrix) -> Result<C64> {
    let (r0, r1) = require_both_blocks(rho)?;
    Ok(r0.zip(r1).map(|(i, j)| rho.matrix()[(i, j)]).sum())
}

/// Lowest `count` eigenvectors of `H` restricted to `block`, embedded in the
/// full basis and sorted by energy.
fn block_eigenvectors(sys: &OpenSystem, block: ParityBlock, count: usize) -> Result<(Vec<f64>, CMatrix)> {
    let basis = sys.basis();
    let range = basis
        .block_range(block)
        .ok_or_else(|| Error::Domain(format!("basis has no {block} block")))?;
    let idx: Vec<usize> = range.collect();
    let e = eig_hermitian(&submatrix(sys.hamiltonian.matrix(), &idx))?;
    let count = count.min(idx.len());
    let mut v = CMatrix::zeros(basis.dim(), count);
    for k in 0..count {
        for (r, &i) in idx.iter().enumerate() {
            v[(i, k)] = e.vectors[(r, k)];
        }
    }
    Ok((e.values[..count].to_vec(), v))
}

/// `Σ_k ⟨E_k^{0_L}|ρ|E_k^{1_L}⟩` over the four lowest eigenstates of each
/// block, paired by energy order.
pub fn qubit_coherence_eigen(sys: &OpenSystem, rho: &DensityMatrix) -> Result<C64> {
    require_both_blocks(rho)?;
    let (_, v0) = block_eigenvectors(sys, ParityBlock::Zero, 4)?;
    let (_, v1) = block_eigenvectors(sys, ParityBlock::One, 4)?;
    Ok((v0.adjoint() * rho.matrix() * v1).trace())
}

/// `⟨E_m|ρ|E_n⟩` for eigenstates of `block`; `m, n ∈ 1..=4` label the
/// low-energy quartet in ascending energy.
pub fn intra_block_coherence(
    sys: &OpenSystem,
    rho: &DensityMatrix,
    block: ParityBlock,
    m: usize,
    n: usize,
) -> Result<C64> {
    if !(1..=4).contains(&m) || !(1..=4).contains(&n) {
        return Err(Error::Domain(format!(
            "eigenstate labels must lie in 1..=4, got ({m}, {n})"
        )));
    }
    let (_, v) = block_eigenvectors(sys, block, 4)?;
    let bra = v.column(m - 1).adjoint();
    Ok((bra * rho.matrix() * v.column(n - 1))[(0, 0)])
}

/// `C(t) = Tr[Î e^{Gt}(Î ρ)] − ⟨Î⟩²` with a plain left multiplication.
/// The real part is the symmetrized correlator; the imaginary part is kept
/// as a diagnostic.
pub fn current_correlation(
    l: &Liouvillian,
    stat: &DensityMatrix,
    current: &CurrentOperator,
    times: &[f64],
) -> Result<TimeTrace> {
    current_correlation_with(&l.propagator()?, stat, current, times)
}

pub fn current_correlation_with(
    propagator: &Propagator,
    stat: &DensityMatrix,
    current: &CurrentOperator,
    times: &[f64],
) -> Result<TimeTrace> {
    let i = current.matrix();
    let mean = current.expectation(stat);
    let x = stack(&(i * stat.matrix()));
    let n = stat.dim();
    let values = propagator
        .apply_grid(&x, times)?
        .iter()
        .map(|v| (i * unstack(v, n)).trace() - mean * mean)
        .collect();
    TimeTrace::new(format!("C_I{}", current.reservoir.index()), times.to_vec(), values)
}

/// Above this resolvent condition number a frequency point is flagged.
pub const RESOLVENT_CONDITION_WARNING: f64 = 1e10;

#[derive(Clone, Debug)]
pub struct PowerSpectrum {
    pub spectrum: Spectrum,
    /// Largest resolvent condition estimate per frequency.
    pub conditions: Vec<f64>,
    pub notes: Vec<String>,
}

/// `S(ω) = 2 Re[C(ω) + C(−ω)]` with `C(ω) = Tr[Î (−G − iω)⁻¹ X]`, where
/// `X = Îρ − ⟨Î⟩ρ` has no zero-mode component.
///
/// The solve uses `−G − iω + |ρ⟩⟨Tr|`, which agrees with `−G − iω` on
/// traceless vectors and stays regular at `ω = 0`.
pub fn power_spectrum(
    l: &Liouvillian,
    stat: &DensityMatrix,
    current: &CurrentOperator,
    omegas: &[f64],
) -> Result<PowerSpectrum> {
    let n = stat.dim();
    let i = current.matrix();
    let mean = current.expectation(stat);
    let x = stack(&(i * stat.matrix() - stat.matrix() * mean));
    let rho = stack(stat.matrix());
    let t = l.trace_functional();
    let base = -l.matrix() + &rho * t.transpose();
    let resolvent = |w: f64| -> Result<(C64, f64)> {
        let mut a = base.clone();
        for k in 0..a.nrows() {
            a[(k, k)] -= C64::new(0.0, w);
        }
        let solver = LinearSolver::new(&a)?;
        let y = solver.solve(&x)?;
        Ok(((i * unstack(&y, n)).trace(), solver.condition()))
    };
    let mut values = Vec::with_capacity(omegas.len());
    let mut conditions = Vec::with_capacity(omegas.len());
    let mut notes = Vec::new();
    for &w in omegas {
        let (plus, c1) = resolvent(w)?;
        let (minus, c2) = if w == 0.0 { (plus, c1) } else { resolvent(-w)? };
        let cond = c1.max(c2);
        if cond > RESOLVENT_CONDITION_WARNING {
            notes.push(format!(
                "omega = {w}: resolvent condition {cond:.2e}, refine the grid near this slow mode"
            ));
        }
        values.push(2.0 * (plus + minus).re);
        conditions.push(cond);
    }
    Ok(PowerSpectrum {
        spectrum: Spectrum {
            label: format!("S_I{}", current.reservoir.index()),
            omegas: omegas.to_vec(),
            values,
        },
        conditions,
        notes,
    })
}

/// `F = S(0) / 2I`.
pub fn fano_factor(s0: f64, current: f64) -> Result<f64> {
    if current == 0.0 {
        return Err(Error::Domain("Fano factor undefined at zero current".into()));
    }
    Ok(s0 / (2.0 * current))
}

/// Time-domain evaluation `S(ω) = 4 ∫₀^∞ cos(ωt) Re C(t) dt` by the
/// trapezoidal rule over the trace, plus an exponential tail fitted to the
/// samples with `t ≥ tail_start`.
pub fn spectrum_from_correlation(trace: &TimeTrace, omegas: &[f64], tail_start: f64) -> Result<Vec<f64>> {
    if trace.len() < 2 {
        return Err(Error::Domain("correlation trace too short".into()));
    }
    let re = trace.real();
    let tail: Vec<(f64, f64)> = trace
        .times
        .iter()
        .zip(&re)
        .filter(|(t, _)| **t >= tail_start)
        .map(|(t, v)| (*t, *v))
        .collect();
    // A single signed exponential A e^{−κt}; no correction if the tail
    // changes sign or does not decay.
    let tail_fit = if tail.len() >= 3 && (tail.iter().all(|p| p.1 > 0.0) || tail.iter().all(|p| p.1 < 0.0)) {
        let sign = tail[0].1.signum();
        let (t, y): (Vec<f64>, Vec<f64>) = tail.iter().map(|(t, v)| (*t, v.abs())).unzip();
        fit_exponentials(&t, &y, 1)
            .ok()
            .map(|f| (sign * f.fastest().amplitude, f.fastest().rate))
            .filter(|(_, k)| *k > 0.0)
    } else {
        None
    };
    let t_end = *trace.times.last().expect("non-empty");
    Ok(omegas
        .iter()
        .map(|&w| {
            let mut s = 0.0;
            for k in 1..trace.len() {
                let (t0, t1) = (trace.times[k - 1], trace.times[k]);
                s += 0.5 * (t1 - t0) * ((w * t0).cos() * re[k - 1] + (w * t1).cos() * re[k]);
            }
            if let Some((a, kappa)) = tail_fit {
                // ∫_T^∞ cos(ωt) A e^{−κt} dt
                let z = C64::new(-kappa, w);
                s += (C64::from(a) * (z * t_end).exp() / -z).re;
            }
            4.0 * s
        })
        .collect())
}

/// Steady-state current reached from an initial state spread over both
/// blocks: the block populations weight the block-resolved currents.
pub fn weighted_block_current(rho0: &DensityMatrix, block_currents: [f64; 2]) -> Result<f64> {
    let (r0, r1) = require_both_blocks(rho0)?;
    let p0: f64 = r0.map(|k| rho0.matrix()[(k, k)].re).sum();
    let p1: f64 = r1.map(|k| rho0.matrix()[(k, k)].re).sum();
    Ok(p0 * block_currents[0] + p1 * block_currents[1])
}
