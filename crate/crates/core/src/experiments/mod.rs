//! Scenario runners: parameter sweeps, read-out transients, dephasing and
//! current noise, each producing plot-ready tables plus per-point
//! convergence diagnostics.
//!
//! Every point of a scan is independent. Points are evaluated in parallel
//! (with the `parallel` feature) and collected in grid order, so results do
//! not depend on the number of worker threads.

mod dynamics;
mod sweeps;

pub use dynamics::{
    run_correlation, run_dephasing, run_liouvillian_spectrum, run_psd, run_readout_transient, slowest_rate,
    superposition_state, NoiseVariant,
};
pub use sweeps::{
    run_dot_detuning, run_flux_sweep, run_iv_narrow, run_ng_flux_map, run_spectrum, run_temperature_sweep,
    transition_energies, DetuningPattern,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::{OpenSystem, StateDefects, SteadyState};
use crate::model::{BasisSet, BlockMode, ChargeMode, ParityBlock, SystemParams};
use crate::table::Table;

/// Evenly spaced grid including both end points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn new(start: f64, stop: f64, points: usize) -> Result<Self> {
        let g = Self { start, stop, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points == 0 || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(Error::Domain(format!(
                "invalid grid [{}, {}] with {} points",
                self.start, self.stop, self.points
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let last = self.points - 1;
        (0..self.points)
            .map(|k| {
                if k == last {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * k as f64 / last as f64
                }
            })
            .collect()
    }
}

/// Full truncated model or the four-state effective dot model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModelKind {
    Full,
    Effective,
}

impl ModelKind {
    pub const BOTH: [ModelKind; 2] = [ModelKind::Full, ModelKind::Effective];

    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Full => "full",
            ModelKind::Effective => "effective",
        }
    }
}

/// Limits a scan point must meet.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanTolerances {
    /// Steady-state residual `‖Gρ‖/‖G‖`.
    pub residual: f64,
    /// Smallest acceptable zero-mode separation estimate.
    pub min_gap: f64,
    pub trace: f64,
    pub hermiticity: f64,
    /// `|I₁ + I₂|` in a steady state.
    pub current_balance: f64,
    /// Eigenvalues below `−positivity` are counted as warnings, not failures.
    pub positivity: f64,
}

impl Default for ScanTolerances {
    fn default() -> Self {
        Self {
            residual: 1e-9,
            min_gap: 1e-12,
            trace: 1e-9,
            hermiticity: 1e-10,
            current_balance: 1e-9,
            positivity: 1e-8,
        }
    }
}

/// Convergence data for one scan point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Check {
    pub residual: Option<f64>,
    pub gap: Option<f64>,
    pub imbalance: Option<f64>,
    pub defects: StateDefects,
}

impl Check {
    pub fn steady(s: &SteadyState) -> Self {
        Self {
            residual: Some(s.residual),
            gap: Some(s.gap_estimate),
            imbalance: None,
            defects: s.defects,
        }
    }

    pub fn trajectory(worst: StateDefects) -> Self {
        Self {
            defects: worst,
            ..Self::default()
        }
    }

    pub fn merge(self, other: Check) -> Self {
        let max = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, None) => x,
            (None, y) => y,
        };
        let min = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, None) => x,
            (None, y) => y,
        };
        Self {
            residual: max(self.residual, other.residual),
            gap: min(self.gap, other.gap),
            imbalance: max(self.imbalance, other.imbalance),
            defects: self.defects.worst(&other.defects),
        }
    }
}

#[derive(Clone, Debug)]
struct PointRecord {
    label: String,
    check: Check,
}

/// Per-point diagnostics of a scan.
#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    records: Vec<PointRecord>,
    errors: Vec<String>,
    pub notes: Vec<String>,
}

/// Aggregated diagnostics, as written to the manifest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsSummary {
    pub points: usize,
    pub max_residual: Option<f64>,
    pub min_gap: Option<f64>,
    pub max_trace_error: f64,
    pub max_hermiticity: f64,
    pub max_current_imbalance: Option<f64>,
    pub min_eigenvalue: Option<f64>,
    pub positivity_warnings: usize,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

impl Diagnostics {
    pub fn record(&mut self, label: impl Into<String>, check: Check) {
        self.records.push(PointRecord {
            label: label.into(),
            check,
        });
    }

    pub fn error(&mut self, label: impl AsRef<str>, err: &Error) {
        self.errors.push(format!("{}: {err}", label.as_ref()));
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn extend(&mut self, other: Diagnostics) {
        self.records.extend(other.records);
        self.errors.extend(other.errors);
        self.notes.extend(other.notes);
    }

    pub fn points(&self) -> usize {
        self.records.len() + self.errors.len()
    }

    /// Aggregates and lists every point that violates `tol`.
    pub fn summarize(&self, tol: &ScanTolerances) -> DiagnosticsSummary {
        let mut failures = self.errors.clone();
        let mut s = DiagnosticsSummary {
            points: self.points(),
            max_residual: None,
            min_gap: None,
            max_trace_error: 0.0,
            max_hermiticity: 0.0,
            max_current_imbalance: None,
            min_eigenvalue: None,
            positivity_warnings: 0,
            failures: Vec::new(),
            notes: self.notes.clone(),
        };
        for r in &self.records {
            let c = &r.check;
            let mut bad = Vec::new();
            if let Some(x) = c.residual {
                s.max_residual = Some(s.max_residual.map_or(x, |m: f64| m.max(x)));
                if !(x <= tol.residual) {
                    bad.push(format!("residual {x:.2e}"));
                }
            }
            if let Some(x) = c.gap {
                s.min_gap = Some(s.min_gap.map_or(x, |m: f64| m.min(x)));
                if !(x >= tol.min_gap) {
                    bad.push(format!("zero-mode gap {x:.2e}"));
                }
            }
            if let Some(x) = c.imbalance {
                s.max_current_imbalance = Some(s.max_current_imbalance.map_or(x, |m: f64| m.max(x)));
                if !(x <= tol.current_balance) {
                    bad.push(format!("current imbalance {x:.2e}"));
                }
            }
            let d = &c.defects;
            s.max_trace_error = s.max_trace_error.max(d.trace_error);
            s.max_hermiticity = s.max_hermiticity.max(d.hermiticity);
            if !(d.trace_error <= tol.trace) {
                bad.push(format!("trace error {:.2e}", d.trace_error));
            }
            if !(d.hermiticity <= tol.hermiticity) {
                bad.push(format!("hermiticity defect {:.2e}", d.hermiticity));
            }
            if d.min_eigenvalue.is_finite() {
                s.min_eigenvalue = Some(
                    s.min_eigenvalue
                        .map_or(d.min_eigenvalue, |m: f64| m.min(d.min_eigenvalue)),
                );
                if d.min_eigenvalue < -tol.positivity {
                    s.positivity_warnings += 1;
                }
            }
            if !bad.is_empty() {
                failures.push(format!("{}: {}", r.label, bad.join(", ")));
            }
        }
        s.failures = failures;
        s
    }
}

/// A named output table, one per (block, model) unless stated otherwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub name: String,
    pub table: Table,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: &[f64]) -> Self {
        Self {
            name: name.into(),
            values: values.to_vec(),
        }
    }
}

/// Output of one scenario run.
#[derive(Clone, Debug)]
pub struct ScanResult {
    pub scenario: String,
    pub axes: Vec<Axis>,
    pub series: Vec<Series>,
    /// Scalar findings (fitted rates, Fano factors, symmetry deviations).
    pub summary: BTreeMap<String, f64>,
    pub diagnostics: Diagnostics,
    pub params: SystemParams,
}

impl ScanResult {
    fn new(scenario: &str, params: &SystemParams) -> Self {
        Self {
            scenario: scenario.into(),
            axes: Vec::new(),
            series: Vec::new(),
            summary: BTreeMap::new(),
            diagnostics: Diagnostics::default(),
            params: params.clone(),
        }
    }

    pub fn series(&self, name: &str) -> Option<&Table> {
        self.series.iter().find(|s| s.name == name).map(|s| &s.table)
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.summary.get(key).copied()
    }

    fn set(&mut self, key: impl Into<String>, value: f64) {
        self.summary.insert(key.into(), value);
    }
}

/// Order-preserving map over independent points.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

fn single_basis(block: ParityBlock, charge: ChargeMode) -> Arc<BasisSet> {
    Arc::new(BasisSet::new(BlockMode::Single(block), charge))
}

/// Charge window appropriate for the gate charge of `params`.
fn charge_mode_for(params: &SystemParams) -> ChargeMode {
    let delta = params.gate_offset().1;
    if delta == 0.0 {
        ChargeMode::Three
    } else {
        ChargeMode::four_for_offset(delta)
    }
}

fn open_system(params: &SystemParams, block: ParityBlock, model: ModelKind, charge: ChargeMode) -> Result<OpenSystem> {
    match model {
        ModelKind::Full => OpenSystem::full(params, &single_basis(block, charge)),
        ModelKind::Effective => OpenSystem::effective(params, block),
    }
}

fn series_name(scenario: &str, block: ParityBlock, model: ModelKind) -> String {
    format!("{scenario}_{}_{}", block.label(), model.label())
}

/// `key[a,b,...]` summary key.
fn key(name: &str, parts: &[&str]) -> String {
    format!("{name}[{}]", parts.join(","))
}

fn fmt(x: f64) -> String {
    crate::table::format_float(x)
}

#[cfg(test)]
mod tests;
