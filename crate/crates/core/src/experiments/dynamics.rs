//! Time-dependent scenarios: read-out transient, dephasing, current
//! correlations, noise spectra and Liouvillian spectra. The bias window is
//! widened per parameter point to cover the low-energy quartet.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{charge_mode_for, fmt, key, open_system, par_map, series_name, Axis, Check, ModelKind, ScanResult, Series};
use crate::error::{Error, Result};
use crate::lindblad::{liouvillian_spectrum, propagate, DensityMatrix, Liouvillian, OpenSystem, ZERO_MODE_THRESHOLD};
use crate::model::{BasisSet, BlockMode, ParityBlock, Reservoir, SystemParams};
use crate::numerics::{C64, ONE, ZERO};
use crate::observables::{
    current_correlation, fano_factor, fit_decay_rates, fit_modes, power_spectrum, qubit_coherence,
    qubit_coherence_eigen, steady_current, transient_current, TimeTrace,
};
use crate::table::Table;

/// Angular frequencies below this are counted as the slow (quartet)
/// oscillation, above it as charging-energy oscillations.
const SLOW_FREQUENCY_LIMIT: f64 = 0.5;

/// One `(λ0, Γ)` point of the noise scenarios; `Γ₁ = Γ₂ = Γ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseVariant {
    pub lambda0: f64,
    pub gamma: f64,
}

impl NoiseVariant {
    pub fn new(lambda0: f64, gamma: f64) -> Self {
        Self { lambda0, gamma }
    }

    pub fn label(&self) -> String {
        format!("lambda0={},gamma={}", fmt(self.lambda0), fmt(self.gamma))
    }

    /// `params` at this variant, bias window widened to cover the quartet.
    pub fn apply(&self, params: &SystemParams) -> Result<SystemParams> {
        params
            .clone()
            .with_lambda0(self.lambda0)
            .with_gamma(self.gamma)
            .with_wide_window()
    }
}

/// `E₄ − E₁` of the low-energy quartet of a single-block system.
fn quartet_span(sys: &OpenSystem) -> f64 {
    let mut e: Vec<f64> = sys.eigen.values.to_vec();
    e.sort_by(f64::total_cmp);
    e[3.min(e.len() - 1)] - e[0]
}

/// Smallest nonzero `|Re λ|` of `G`.
pub fn slowest_rate(l: &Liouvillian) -> Result<f64> {
    let floor = ZERO_MODE_THRESHOLD * l.norm2();
    liouvillian_spectrum(l)?
        .iter()
        .map(|z| z.re.abs())
        .find(|r| *r > floor)
        .ok_or_else(|| Error::Domain("Liouvillian has no decaying mode".into()))
}

/// Uniform grid `0, dt, …` up to `t_max`.
fn fine_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|k| k as f64 * dt).collect()
}

/// Last time at which `|trace|` still exceeds `floor`.
fn last_above(trace: &TimeTrace, floor: f64) -> Option<f64> {
    trace
        .times
        .iter()
        .zip(&trace.values)
        .filter(|(_, v)| v.norm() > floor)
        .map(|(t, _)| *t)
        .next_back()
}

/// Largest-amplitude mode inside the frequency band `lo < |ω| < hi`.
fn dominant_mode(trace: &TimeTrace, window: (f64, f64), order: usize, lo: f64, hi: f64) -> Option<(f64, f64)> {
    fit_modes(trace, window, order, 800)
        .ok()?
        .into_iter()
        .find(|m| m.frequency.abs() > lo && m.frequency.abs() < hi)
        .map(|m| (m.frequency.abs(), m.amplitude.norm()))
}

/// `I₂(t)` after switching on the coupling with block `0_L` and empty dots,
/// for the full and effective models.
///
/// Summary keys per model: `fast_rate` (fit on `[0, 5/Γ]`),
/// `oscillation_frequency` and `quartet_span`, `tail_rate` (fit of the
/// residual after `10/Γ`), `slowest_rate` (Liouvillian) and `steady_current`.
pub fn run_readout_transient(params: &SystemParams, times: &[f64]) -> Result<ScanResult> {
    let params = &params.clone().with_wide_window()?;
    let mut r = ScanResult::new("transient", params);
    r.axes.push(Axis::new("t", times));
    let block = ParityBlock::Zero;
    let gamma = params.gamma1.max(params.gamma2);
    let outcomes = par_map(&ModelKind::BOTH, |&model| -> Result<_> {
        let sys = open_system(params, block, model, charge_mode_for(params))?;
        let rho0 = sys.empty_dot_state(block)?;
        let cur = sys.current_operator(Reservoir::Two)?;
        let stat = steady_current(&sys)?;
        let export = transient_current(&sys.liouvillian, &rho0, times, &cur)?;
        let fine = transient_current(&sys.liouvillian, &rho0, &fine_grid(10.0 / gamma, 0.5), &cur)?;
        Ok((sys, stat, export, fine))
    });
    for (model, outcome) in ModelKind::BOTH.into_iter().zip(outcomes) {
        let tag = format!("transient {} {}", block.label(), model.label());
        let (sys, stat, export, fine) = match outcome {
            Ok(x) => x,
            Err(e) => {
                r.diagnostics.error(&tag, &e);
                continue;
            }
        };
        let mut check = Check::steady(&stat.steady).merge(Check::trajectory(export.worst.worst(&fine.worst)));
        check.imbalance = Some(stat.imbalance().abs());
        r.diagnostics.record(&tag, check);
        for w in export.warnings.iter().chain(&fine.warnings).take(3) {
            r.diagnostics.note(format!("{tag}: {w}"));
        }
        let i_stat = C64::from(stat.i2);
        let residual = export.current.shifted(i_stat);
        let fine_residual = fine.current.shifted(i_stat);

        let mut res = Table::new(["t", "abs_residual"]);
        for (t, v) in residual.times.iter().zip(&residual.values) {
            res.push(vec![*t, v.norm()])?;
        }
        r.series.push(Series {
            name: series_name("transient", block, model),
            table: export.current.to_table(),
        });
        r.series.push(Series {
            name: series_name("transient-residual", block, model),
            table: res,
        });

        let m = model.label();
        r.set(key("steady_current", &[m]), stat.i2);
        r.set(key("quartet_span", &[m]), quartet_span(&sys));
        match fit_decay_rates(&fine_residual, (0.0, 5.0 / gamma), 1) {
            Ok(f) => r.set(key("fast_rate", &[m]), f.fastest().rate),
            Err(e) => r.diagnostics.note(format!("{tag}: fast fit failed: {e}")),
        }
        let hi = if model == ModelKind::Full {
            SLOW_FREQUENCY_LIMIT
        } else {
            f64::INFINITY
        };
        if let Some((f, _)) = dominant_mode(&fine_residual, (0.0, 10.0 / gamma), 8, 0.5 * gamma, hi) {
            r.set(key("oscillation_frequency", &[m]), f);
        }
        if model == ModelKind::Full {
            if let Some((f, a)) = dominant_mode(
                &fine_residual,
                (0.0, 10.0 / gamma),
                8,
                SLOW_FREQUENCY_LIMIT,
                f64::INFINITY,
            ) {
                r.set(key("high_frequency", &[m]), f);
                r.set(key("high_frequency_amplitude", &[m]), a);
            }
        }
        let t0 = 10.0 / gamma;
        match last_above(&residual, 1e-8 * stat.i2.abs().max(f64::MIN_POSITIVE)) {
            Some(t1) if t1 > t0 => match fit_decay_rates(&residual, (t0, t1), 1) {
                Ok(f) => r.set(key("tail_rate", &[m]), f.fastest().rate),
                Err(e) => r.diagnostics.note(format!("{tag}: tail fit failed: {e}")),
            },
            _ => r.diagnostics.note(format!(
                "{tag}: residual below 1e-8 relative before t = 10/Gamma, no slow tail"
            )),
        }
        match slowest_rate(&sys.liouvillian) {
            Ok(x) => r.set(key("slowest_rate", &[m]), x),
            Err(e) => r.diagnostics.error(&tag, &e),
        }
    }
    Ok(r)
}

/// Equal superposition of the empty-dot ground states of both blocks.
pub fn superposition_state(basis: &Arc<BasisSet>) -> Result<DensityMatrix> {
    let mut a = vec![ZERO; basis.dim()];
    for block in ParityBlock::BOTH {
        let k = basis
            .ground_empty_index(block)
            .ok_or_else(|| Error::Domain(format!("basis has no {block} block")))?;
        a[k] = ONE;
    }
    DensityMatrix::pure(&a, basis.clone())
}

/// Qubit coherence `|ρ_{0_L,1_L}|(t)` in the two-block model for each `λ0`.
///
/// Columns `abs_coherence[λ0]` pair product states; `abs_coherence_eigen[λ0]`
/// pairs the low-energy eigenstates of both blocks by energy order.
/// Summary keys per `λ0`: `fast_rate`, `slow_rate`, `slow_rate_over_reference`
/// (reference `λ0²/Γ`) and `final_coherence`.
pub fn run_dephasing(params: &SystemParams, times: &[f64], lambda0s: &[f64]) -> Result<ScanResult> {
    let mut r = ScanResult::new("dephasing", params);
    r.axes.push(Axis::new("t", times));
    r.axes.push(Axis::new("lambda0", lambda0s));
    let basis = Arc::new(BasisSet::new(BlockMode::Both, charge_mode_for(params)));
    let gamma = params.gamma1.max(params.gamma2);
    let outcomes = par_map(lambda0s, |&l0| -> Result<_> {
        let p = params.clone().with_lambda0(l0).with_wide_window()?;
        let sys = OpenSystem::full(&p, &basis)?;
        let rho0 = superposition_state(&basis)?;
        let traj = propagate(&sys.liouvillian, &rho0, times)?;
        let product = traj.states.iter().map(qubit_coherence).collect::<Result<Vec<_>>>()?;
        let eigen = traj
            .states
            .iter()
            .map(|s| qubit_coherence_eigen(&sys, s))
            .collect::<Result<Vec<_>>>()?;
        Ok((traj.worst, traj.warnings, product, eigen))
    });
    let mut columns = vec!["t".to_string()];
    let mut data: Vec<Vec<f64>> = Vec::new();
    for (&l0, outcome) in lambda0s.iter().zip(outcomes) {
        let label = format!("lambda0={}", fmt(l0));
        let tag = format!("dephasing {label}");
        let (worst, warnings, product, eigen) = match outcome {
            Ok(x) => x,
            Err(e) => {
                r.diagnostics.error(&tag, &e);
                continue;
            }
        };
        r.diagnostics.record(&tag, Check::trajectory(worst));
        if let Some(w) = warnings.first() {
            r.diagnostics
                .note(format!("{tag}: {w} ({} such times)", warnings.len()));
        }
        columns.push(format!("abs_coherence[{label}]"));
        columns.push(format!("abs_coherence_eigen[{label}]"));
        data.push(product.iter().map(|c| c.norm()).collect());
        data.push(eigen.iter().map(|c| c.norm()).collect());

        let trace = TimeTrace::new("coherence", times.to_vec(), product)?;
        let final_value = trace.values.last().map_or(f64::NAN, |c| c.norm());
        r.set(key("final_coherence", &[&label]), final_value);
        match fit_decay_rates(&trace, (0.0, 5.0 / gamma), 1) {
            Ok(f) => r.set(key("fast_rate", &[&label]), f.fastest().rate),
            Err(e) => r.diagnostics.note(format!("{tag}: fast fit failed: {e}")),
        }
        let t0 = 10.0 / gamma;
        match last_above(&trace, 1e-12) {
            Some(t1) if t1 > t0 => match fit_decay_rates(&trace, (t0, t1), 1) {
                Ok(f) => {
                    let slow = f.fastest().rate;
                    r.set(key("slow_rate", &[&label]), slow);
                    if l0 != 0.0 {
                        r.set(key("slow_rate_over_reference", &[&label]), slow / (l0 * l0 / gamma));
                    }
                }
                Err(e) => r.diagnostics.note(format!("{tag}: slow fit failed: {e}")),
            },
            _ => r
                .diagnostics
                .note(format!("{tag}: coherence below 1e-12 before t = 10/Gamma")),
        }
    }
    let mut t = Table::new(columns);
    for (k, &time) in times.iter().enumerate() {
        t.push(std::iter::once(time).chain(data.iter().map(|c| c[k])).collect())?;
    }
    r.series.push(Series {
        name: "dephasing_both_full".into(),
        table: t,
    });
    Ok(r)
}

/// Jobs over variants × blocks × models, in output order.
fn noise_jobs(variants: &[NoiseVariant]) -> Vec<(NoiseVariant, ParityBlock, ModelKind)> {
    let mut jobs = Vec::new();
    for &v in variants {
        for block in ParityBlock::BOTH {
            for model in ModelKind::BOTH {
                jobs.push((v, block, model));
            }
        }
    }
    jobs
}

/// Named columns of one job, `None` if the job failed.
type JobColumns = Option<Vec<(String, Vec<f64>)>>;

/// Per-(block, model) tables assembled from per-job columns.
fn noise_tables(
    r: &mut ScanResult,
    scenario: &str,
    axis: &str,
    grid: &[f64],
    jobs: &[(NoiseVariant, ParityBlock, ModelKind)],
    columns: Vec<JobColumns>,
) -> Result<()> {
    for block in ParityBlock::BOTH {
        for model in ModelKind::BOTH {
            let mut names = vec![axis.to_string()];
            let mut data: Vec<&Vec<f64>> = Vec::new();
            for ((_, b, m), cols) in jobs.iter().zip(&columns) {
                if (*b, *m) != (block, model) {
                    continue;
                }
                for (name, values) in cols.iter().flatten() {
                    names.push(name.clone());
                    data.push(values);
                }
            }
            let mut t = Table::new(names);
            for (k, &x) in grid.iter().enumerate() {
                t.push(std::iter::once(x).chain(data.iter().map(|c| c[k])).collect())?;
            }
            r.series.push(Series {
                name: series_name(scenario, block, model),
                table: t,
            });
        }
    }
    Ok(())
}

/// Stationary current autocorrelation `C_I(t)` of `Î₂` per variant, block
/// and model.
///
/// Summary keys per job: `slow_frequency` against `quartet_span`,
/// `high_frequency` and `high_frequency_amplitude` (modes faster than
/// 0.5 E_C/ħ, fitted on the first 200 ħ/E_C), `c0` and `max_imag`.
pub fn run_correlation(params: &SystemParams, times: &[f64], variants: &[NoiseVariant]) -> Result<ScanResult> {
    let mut r = ScanResult::new("correlation", params);
    r.axes.push(Axis::new("t", times));
    let jobs = noise_jobs(variants);
    let outcomes = par_map(&jobs, |(v, block, model)| -> Result<_> {
        let p = v.apply(params)?;
        let sys = open_system(&p, *block, *model, charge_mode_for(&p))?;
        let stat = steady_current(&sys)?;
        let cur = sys.current_operator(Reservoir::Two)?;
        let c = current_correlation(&sys.liouvillian, &stat.steady.rho, &cur, times)?;
        Ok((quartet_span(&sys), stat, c))
    });
    let mut columns = Vec::with_capacity(jobs.len());
    for ((v, block, model), outcome) in jobs.iter().zip(outcomes) {
        let label = v.label();
        let tag = format!("correlation {} {} {label}", block.label(), model.label());
        let (span, stat, c) = match outcome {
            Ok(x) => x,
            Err(e) => {
                r.diagnostics.error(&tag, &e);
                columns.push(None);
                continue;
            }
        };
        let mut check = Check::steady(&stat.steady);
        check.imbalance = Some(stat.imbalance().abs());
        r.diagnostics.record(&tag, check);
        let parts = [label.as_str(), block.label(), model.label()];
        r.set(key("quartet_span", &parts), span);
        r.set(key("c0", &parts), c.values.first().map_or(f64::NAN, |z| z.re));
        r.set(
            key("max_imag", &parts),
            c.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max),
        );
        let t_end = times.last().copied().unwrap_or(0.0);
        if let Some((f, _)) = dominant_mode(&c, (0.0, t_end), 8, 0.5 * v.gamma, SLOW_FREQUENCY_LIMIT) {
            r.set(key("slow_frequency", &parts), f);
        }
        match dominant_mode(&c, (0.0, 200.0_f64.min(t_end)), 12, SLOW_FREQUENCY_LIMIT, f64::INFINITY) {
            Some((f, a)) => {
                r.set(key("high_frequency", &parts), f);
                r.set(key("high_frequency_amplitude", &parts), a);
            }
            None => r.set(key("high_frequency_amplitude", &parts), 0.0),
        }
        columns.push(Some(vec![
            (format!("re[{label}]"), c.values.iter().map(|z| z.re).collect()),
            (format!("im[{label}]"), c.values.iter().map(|z| z.im).collect()),
        ]));
    }
    noise_tables(&mut r, "correlation", "t", times, &jobs, columns)?;
    Ok(r)
}

/// Symmetrized noise spectrum `S_I(ω)` of `Î₂` from the resolvent, per
/// variant, block and model.
///
/// Summary keys per job: `fano` (`S(0)/2I`, no Schottky term added),
/// `s0`, `current`, and `symmetry_deviation` when the grid is mirror
/// symmetric.
pub fn run_psd(params: &SystemParams, omegas: &[f64], variants: &[NoiseVariant]) -> Result<ScanResult> {
    let mut r = ScanResult::new("psd", params);
    r.axes.push(Axis::new("omega", omegas));
    r.diagnostics
        .note("Fano factor S(0)/2I from the resolvent spectrum; no self-correlation (Schottky) term added");
    let jobs = noise_jobs(variants);
    let outcomes = par_map(&jobs, |(v, block, model)| -> Result<_> {
        let p = v.apply(params)?;
        let sys = open_system(&p, *block, *model, charge_mode_for(&p))?;
        let stat = steady_current(&sys)?;
        let cur = sys.current_operator(Reservoir::Two)?;
        let s = power_spectrum(&sys.liouvillian, &stat.steady.rho, &cur, omegas)?;
        let s0 = power_spectrum(&sys.liouvillian, &stat.steady.rho, &cur, &[0.0])?;
        Ok((stat, s, s0.spectrum.values[0]))
    });
    let symmetric = omegas
        .iter()
        .zip(omegas.iter().rev())
        .all(|(a, b)| (a + b).abs() <= 1e-12 * a.abs().max(1.0));
    let mut columns = Vec::with_capacity(jobs.len());
    for ((v, block, model), outcome) in jobs.iter().zip(outcomes) {
        let label = v.label();
        let tag = format!("psd {} {} {label}", block.label(), model.label());
        let (stat, s, s0) = match outcome {
            Ok(x) => x,
            Err(e) => {
                r.diagnostics.error(&tag, &e);
                columns.push(None);
                continue;
            }
        };
        let mut check = Check::steady(&stat.steady);
        check.imbalance = Some(stat.imbalance().abs());
        r.diagnostics.record(&tag, check);
        for n in &s.notes {
            r.diagnostics.note(format!("{tag}: {n}"));
        }
        let parts = [label.as_str(), block.label(), model.label()];
        r.set(key("s0", &parts), s0);
        r.set(key("current", &parts), stat.i2);
        match fano_factor(s0, stat.i2) {
            Ok(f) => r.set(key("fano", &parts), f),
            Err(e) => r.diagnostics.note(format!("{tag}: {e}")),
        }
        let values = &s.spectrum.values;
        if symmetric {
            let dev = values
                .iter()
                .zip(values.iter().rev())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            r.set(key("symmetry_deviation", &parts), dev);
        }
        columns.push(Some(vec![(format!("S[{label}]"), values.clone())]));
    }
    noise_tables(&mut r, "psd", "omega", omegas, &jobs, columns)?;
    Ok(r)
}

/// Eigenvalues of `G` per block and model, plus the two-block full model.
///
/// Tables have columns `k,re,im`, sorted by `|Re λ|`. Summary keys:
/// `zero_modes` and `slowest_rate`.
pub fn run_liouvillian_spectrum(params: &SystemParams) -> Result<ScanResult> {
    let params = &params.clone().with_wide_window()?;
    let mut r = ScanResult::new("liouvillian-spectrum", params);
    let charge = charge_mode_for(params);
    let mut jobs: Vec<(String, Option<(ParityBlock, ModelKind)>)> = Vec::new();
    for block in ParityBlock::BOTH {
        for model in ModelKind::BOTH {
            jobs.push((series_name("liouvillian-spectrum", block, model), Some((block, model))));
        }
    }
    jobs.push(("liouvillian-spectrum_both_full".into(), None));
    let outcomes = par_map(&jobs, |(_, which)| -> Result<_> {
        let sys = match which {
            Some((block, model)) => open_system(params, *block, *model, charge)?,
            None => OpenSystem::full(params, &Arc::new(BasisSet::new(BlockMode::Both, charge)))?,
        };
        let values = liouvillian_spectrum(&sys.liouvillian)?;
        Ok((values, ZERO_MODE_THRESHOLD * sys.liouvillian.norm2()))
    });
    for ((name, _), outcome) in jobs.iter().zip(outcomes) {
        let (values, floor) = match outcome {
            Ok(x) => x,
            Err(e) => {
                r.diagnostics.error(name, &e);
                continue;
            }
        };
        let mut t = Table::new(["k", "re", "im"]);
        for (k, z) in values.iter().enumerate() {
            t.push(vec![k as f64, z.re, z.im])?;
        }
        let id = name.trim_start_matches("liouvillian-spectrum_");
        r.set(
            key("zero_modes", &[id]),
            values.iter().filter(|z| z.norm() < floor).count() as f64,
        );
        if let Some(x) = values.iter().map(|z| z.re.abs()).find(|x| *x > floor) {
            r.set(key("slowest_rate", &[id]), x);
        }
        r.series.push(Series {
            name: name.clone(),
            table: t,
        });
    }
    Ok(r)
}
