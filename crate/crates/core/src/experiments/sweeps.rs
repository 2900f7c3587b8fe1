//! Steady-state sweeps: spectra, I–V, flux, temperature, gate charge and
//! dot detuning.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    charge_mode_for, fmt, key, open_system, par_map, series_name, Axis, Check, Diagnostics, ModelKind, ScanResult,
    Series,
};
use crate::error::Result;
use crate::model::{
    build_hamiltonian, build_mode_operators, effective_spectrum_vs_flux, spectrum_vs_flux, BasisSet, BlockMode,
    ChargeMode, ParityBlock, SystemParams, LOW_ENERGY_CUTOFF,
};
use crate::numerics::eig_hermitian;
use crate::observables::steady_current;
use crate::table::Table;

/// Steady `I₂` and its diagnostics.
fn steady_point(
    params: &SystemParams,
    block: ParityBlock,
    model: ModelKind,
    charge: ChargeMode,
) -> Result<(f64, Check)> {
    let sys = open_system(params, block, model, charge)?;
    let c = steady_current(&sys)?;
    let mut check = Check::steady(&c.steady);
    check.imbalance = Some(c.imbalance().abs());
    Ok((c.i2, check))
}

/// How the charge window is chosen per point.
#[derive(Clone, Copy)]
enum Charge {
    /// Three charges at even gate charge, four otherwise.
    Auto,
    /// Always four charges, mirrored below an even gate charge.
    Four,
    /// Always the three charges centred on the reference charge.
    Three,
}

impl Charge {
    fn mode(self, params: &SystemParams) -> ChargeMode {
        match self {
            Charge::Auto => charge_mode_for(params),
            Charge::Four => ChargeMode::four_for_offset(params.gate_offset().1),
            Charge::Three => ChargeMode::Three,
        }
    }
}

/// Parameter points of a scan, evaluated for every (block, model) pair.
struct Plan<'a> {
    scenario: &'a str,
    blocks: Vec<ParityBlock>,
    models: Vec<ModelKind>,
    /// Point labels and parameter sets, in output order.
    points: Vec<(String, SystemParams)>,
    wide: bool,
    charge: Charge,
}

/// `I₂` indexed by `[block][model][point]`.
struct Currents(Vec<Vec<Vec<f64>>>);

impl Currents {
    fn get(&self, b: usize, m: usize) -> &[f64] {
        &self.0[b][m]
    }
}

impl Plan<'_> {
    fn run(&self, diag: &mut Diagnostics) -> Currents {
        let mut jobs = Vec::new();
        for &block in &self.blocks {
            for &model in &self.models {
                for (label, p) in &self.points {
                    jobs.push((block, model, label, p));
                }
            }
        }
        let outcomes = par_map(&jobs, |(block, model, _, p)| {
            let p = if self.wide {
                (*p).clone().with_wide_window()?
            } else {
                (*p).clone()
            };
            steady_point(&p, *block, *model, self.charge.mode(&p))
        });
        let n = self.points.len();
        let mut out = vec![vec![Vec::with_capacity(n); self.models.len()]; self.blocks.len()];
        for (k, ((block, model, label, _), outcome)) in jobs.iter().zip(outcomes).enumerate() {
            let tag = format!("{} {} {} {label}", self.scenario, block.label(), model.label());
            let value = match outcome {
                Ok((i2, check)) => {
                    diag.record(tag, check);
                    i2
                }
                Err(e) => {
                    diag.error(tag, &e);
                    f64::NAN
                }
            };
            out[k / (n * self.models.len())][(k / n) % self.models.len()].push(value);
        }
        Currents(out)
    }
}

fn sweep_table(axis: &str, xs: &[f64], columns: &[String], values: &[&[f64]]) -> Table {
    let mut t = Table::new(std::iter::once(axis.to_string()).chain(columns.iter().cloned()));
    for (k, &x) in xs.iter().enumerate() {
        let row = std::iter::once(x).chain(values.iter().map(|v| v[k])).collect();
        t.push(row).expect("row width matches header");
    }
    t
}

/// Relative peak-to-peak modulation `(max − min)/(max + min)`.
fn relative_modulation(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min) / (max + min)
}

fn argmax(xs: &[f64], v: &[f64]) -> f64 {
    let k = (0..v.len()).max_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0);
    xs[k]
}

fn argmin(xs: &[f64], v: &[f64]) -> f64 {
    let k = (0..v.len()).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap_or(0);
    xs[k]
}

/// Index offset `s` with `xs[k + s] = xs[k] + π` on a uniform grid, if any.
fn pi_offset(xs: &[f64]) -> Option<usize> {
    if xs.len() < 3 {
        return None;
    }
    let dx = xs[1] - xs[0];
    let s = (PI / dx).round();
    if s < 1.0 || ((s * dx) - PI).abs() > 1e-9 || s as usize >= xs.len() {
        return None;
    }
    Some(s as usize)
}

/// Largest `|I_{1L}(φ) − I_{0L}(φ + π)|` over grid pairs.
fn pi_shift_deviation(xs: &[f64], i0: &[f64], i1: &[f64]) -> Option<f64> {
    let s = pi_offset(xs)?;
    Some((0..xs.len() - s).map(|k| (i1[k] - i0[k + s]).abs()).fold(0.0, f64::max))
}

/// Least-squares slope of `log |y|` against `log |x|`.
pub(crate) fn power_law_exponent(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x != 0.0 && *y != 0.0)
        .map(|(x, y)| (x.abs().ln(), y.abs().ln()))
        .collect();
    let n = logs.len() as f64;
    if n < 2.0 {
        return f64::NAN;
    }
    let (mx, my) = logs.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = logs.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Energies (`E_final − E_initial`) of single-electron transitions among the
/// low-energy eigenstates of `block`, sorted, duplicates removed.
pub fn transition_energies(params: &SystemParams, block: ParityBlock) -> Result<Vec<f64>> {
    let basis = std::sync::Arc::new(BasisSet::new(BlockMode::Single(block), charge_mode_for(params)));
    let e = eig_hermitian(build_hamiltonian(params, &basis)?.matrix())?;
    let low = e
        .values
        .iter()
        .take_while(|&&v| v - e.values[0] < LOW_ENERGY_CUTOFF * params.e_c)
        .count();
    let ops = build_mode_operators(&basis);
    let mut out: Vec<f64> = Vec::new();
    for d in [&ops.d1, &ops.d2] {
        let de = e.to_eigenbasis(d.matrix());
        for m in 0..low {
            for n in 0..low {
                // d_j takes |m⟩ to |n⟩; adding the electron back costs E_m − E_n.
                if de[(n, m)].norm() > 1e-8 {
                    out.push(e.values[m] - e.values[n]);
                }
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    Ok(out)
}

/// Sorted spectra versus flux: all levels of the full model and the shifted
/// effective quartet, per block.
pub fn run_spectrum(params: &SystemParams, phis: &[f64]) -> Result<ScanResult> {
    let mut r = ScanResult::new("spectrum", params);
    r.axes.push(Axis::new("phi", phis));
    for block in ParityBlock::BOTH {
        let basis = std::sync::Arc::new(BasisSet::new(BlockMode::Single(block), charge_mode_for(params)));
        let full = spectrum_vs_flux(params, &basis, phis)?;
        let eff = effective_spectrum_vs_flux(params, block, phis)?;
        for (model, s) in [(ModelKind::Full, full), (ModelKind::Effective, eff)] {
            let levels = s.energies.first().map_or(0, Vec::len);
            let mut t = Table::new(std::iter::once("phi".to_string()).chain((1..=levels).map(|k| format!("E{k}"))));
            for (phi, e) in s.phis.iter().zip(&s.energies) {
                t.push(std::iter::once(*phi).chain(e.iter().copied()).collect())?;
            }
            r.series.push(Series {
                name: series_name("spectrum", block, model),
                table: t,
            });
        }
    }
    Ok(r)
}

/// Steady current versus `μ₂` with the window `μ₁ − μ₂` held fixed.
pub fn run_iv_narrow(params: &SystemParams, mu2_grid: &[f64], window: f64) -> Result<ScanResult> {
    let mut r = ScanResult::new("iv", params);
    r.axes.push(Axis::new("mu2", mu2_grid));
    let plan = Plan {
        scenario: "iv",
        blocks: ParityBlock::BOTH.to_vec(),
        models: ModelKind::BOTH.to_vec(),
        points: mu2_grid
            .iter()
            .map(|&mu2| {
                let p = SystemParams {
                    mu1: mu2 + window,
                    mu2,
                    ..params.clone()
                };
                (format!("mu2={}", fmt(mu2)), p)
            })
            .collect(),
        wide: false,
        charge: Charge::Auto,
    };
    let currents = plan.run(&mut r.diagnostics);
    for (b, &block) in plan.blocks.iter().enumerate() {
        for (m, &model) in plan.models.iter().enumerate() {
            let v = currents.get(b, m);
            r.series.push(Series {
                name: series_name("iv", block, model),
                table: sweep_table("mu2", mu2_grid, &["I2".into()], &[v]),
            });
            if model == ModelKind::Full {
                // Steps: jumps larger than 5 % of the largest current.
                let scale = v.iter().map(|x| x.abs()).fold(0.0, f64::max);
                let mut n = 0;
                for k in 1..v.len() {
                    if (v[k] - v[k - 1]).abs() > 0.05 * scale {
                        r.set(
                            key("step_mu2", &[block.label(), &n.to_string()]),
                            0.5 * (mu2_grid[k] + mu2_grid[k - 1]),
                        );
                        n += 1;
                    }
                }
            }
        }
        for (k, e) in transition_energies(params, block)?.into_iter().enumerate() {
            r.set(key("transition", &[block.label(), &k.to_string()]), e);
        }
    }
    r.set("window", window);
    Ok(r)
}

/// Steady current versus flux for several `λ0`, wide bias window.
pub fn run_flux_sweep(params: &SystemParams, phis: &[f64], lambda0s: &[f64]) -> Result<ScanResult> {
    let variants: Vec<(String, SystemParams)> = lambda0s
        .iter()
        .map(|&l0| (format!("lambda0={}", fmt(l0)), params.clone().with_lambda0(l0)))
        .collect();
    flux_family("flux", params, phis, &variants)
}

/// Steady current versus flux for several temperatures, wide bias window.
pub fn run_temperature_sweep(params: &SystemParams, phis: &[f64], temperatures: &[f64]) -> Result<ScanResult> {
    let variants: Vec<(String, SystemParams)> = temperatures
        .iter()
        .map(|&t| {
            (
                format!("T={}", fmt(t)),
                SystemParams {
                    temperature: t,
                    ..params.clone()
                },
            )
        })
        .collect();
    flux_family("temperature", params, phis, &variants)
}

fn flux_family(
    scenario: &str,
    params: &SystemParams,
    phis: &[f64],
    variants: &[(String, SystemParams)],
) -> Result<ScanResult> {
    let mut r = ScanResult::new(scenario, params);
    r.axes.push(Axis::new("phi", phis));
    let mut points = Vec::new();
    for (label, p) in variants {
        for &phi in phis {
            points.push((format!("{label} phi={}", fmt(phi)), p.clone().with_phi(phi)));
        }
    }
    let plan = Plan {
        scenario,
        blocks: ParityBlock::BOTH.to_vec(),
        models: ModelKind::BOTH.to_vec(),
        points,
        wide: true,
        charge: Charge::Auto,
    };
    let currents = plan.run(&mut r.diagnostics);
    let n = phis.len();
    let slice = |b: usize, m: usize, v: usize| &currents.get(b, m)[v * n..(v + 1) * n];
    let columns: Vec<String> = variants.iter().map(|(l, _)| format!("I2[{l}]")).collect();
    for (b, &block) in plan.blocks.iter().enumerate() {
        for (m, &model) in plan.models.iter().enumerate() {
            let values: Vec<&[f64]> = (0..variants.len()).map(|v| slice(b, m, v)).collect();
            r.series.push(Series {
                name: series_name(scenario, block, model),
                table: sweep_table("phi", phis, &columns, &values),
            });
        }
    }
    let zero = phis
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(k, _)| k);
    for (v, (label, _)) in variants.iter().enumerate() {
        for (m, &model) in plan.models.iter().enumerate() {
            for (b, &block) in plan.blocks.iter().enumerate() {
                let i = slice(b, m, v);
                let parts = [label.as_str(), block.label(), model.label()];
                r.set(key("rel_modulation", &parts), relative_modulation(i));
                r.set(key("argmax_phi", &parts), argmax(phis, i));
                r.set(key("argmin_phi", &parts), argmin(phis, i));
            }
            if let Some(k) = zero {
                let (a, c) = (slice(0, m, v)[k], slice(1, m, v)[k]);
                r.set(
                    key("block_contrast_at_min_phi", &[label, model.label()]),
                    a.min(c) / a.max(c),
                );
            }
            if let Some(dev) = pi_shift_deviation(phis, slice(0, m, v), slice(1, m, v)) {
                r.set(key("pi_shift_deviation", &[label, model.label()]), dev);
            }
        }
        for (b, &block) in plan.blocks.iter().enumerate() {
            let (full, eff) = (slice(b, 0, v), slice(b, 1, v));
            let diff: Vec<f64> = full.iter().zip(eff).map(|(f, e)| f - e).collect();
            r.set(
                key("max_full_minus_effective", &[label, block.label()]),
                diff.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            );
            r.set(
                key("mean_effective_minus_full", &[label, block.label()]),
                -diff.iter().sum::<f64>() / n as f64,
            );
        }
    }
    Ok(r)
}

/// Ten equally spaced offsets up to `10 · step`, for power-law fits.
fn probe_offsets(step: f64) -> Vec<f64> {
    (1..=10).map(|k| step * k as f64).collect()
}

/// Detuning probe step: `|ε| ≤ 0.005`.
const DETUNING_STEP: f64 = 5e-4;

/// Gate-charge probe step: `δn_g ≤ 1e-4`. Near-degenerate charge-excited
/// levels of block `1_L` split by `~4δn_g`; once that exceeds `Γ` the
/// current crosses over to a different branch (`δn_g ≳ 5e-4`), so the
/// quadratic regime is probed well below it.
const GATE_STEP: f64 = 1e-5;
const GATE_STEP_WIDE: f64 = 5e-4;

/// 2-D current map over gate charge and flux (four-charge basis).
pub fn run_ng_flux_map(params: &SystemParams, ngs: &[f64], phis: &[f64]) -> Result<ScanResult> {
    let mut r = ScanResult::new("ng-map", params);
    r.axes.push(Axis::new("n_g", ngs));
    r.axes.push(Axis::new("phi", phis));
    let mut points = Vec::new();
    for &ng in ngs {
        for &phi in phis {
            points.push((
                format!("n_g={} phi={}", fmt(ng), fmt(phi)),
                SystemParams {
                    n_g: ng,
                    phi,
                    ..params.clone()
                },
            ));
        }
    }
    let plan = Plan {
        scenario: "ng-map",
        blocks: ParityBlock::BOTH.to_vec(),
        models: vec![ModelKind::Full],
        points,
        wide: true,
        charge: Charge::Four,
    };
    let currents = plan.run(&mut r.diagnostics);
    // Sweet-spot probe at the first flux value, n_g = N_ref + δ. The
    // three-charge window is symmetric about N_ref; the four-charge one
    // adds a small linear truncation term.
    let (n_ref, _) = params.gate_offset();
    let probe_phi = phis.first().copied().unwrap_or(params.phi);
    let probe_plan = Plan {
        scenario: "ng-map sweet-spot",
        points: std::iter::once(0.0)
            .chain(probe_offsets(GATE_STEP))
            .chain(probe_offsets(GATE_STEP_WIDE))
            .map(|d| {
                let p = SystemParams {
                    n_g: n_ref as f64 + d,
                    phi: probe_phi,
                    ..params.clone()
                };
                (format!("dn_g={}", fmt(d)), p)
            })
            .collect(),
        charge: Charge::Three,
        ..plan
    };
    let probes = probe_plan.run(&mut r.diagnostics);
    let (nn, np) = (ngs.len(), phis.len());
    for (b, &block) in probe_plan.blocks.iter().enumerate() {
        let map = currents.get(b, 0);
        let mut t = Table::new(["n_g", "phi", "I2"]);
        for (i, &ng) in ngs.iter().enumerate() {
            for (j, &phi) in phis.iter().enumerate() {
                t.push(vec![ng, phi, map[i * np + j]])?;
            }
        }
        r.series.push(Series {
            name: series_name("ng-map", block, ModelKind::Full),
            table: t,
        });
        let at = |i: usize, j: usize| map[i * np + j];
        // Period 2 in n_g, over grid rows that are exactly 2 apart.
        let mut period: Option<f64> = None;
        for i in 0..nn {
            for i2 in i + 1..nn {
                if (ngs[i2] - ngs[i] - 2.0).abs() < 1e-12 {
                    let dev = (0..np).map(|j| (at(i, j) - at(i2, j)).abs()).fold(0.0, f64::max);
                    period = Some(period.map_or(dev, |p| p.max(dev)));
                }
            }
        }
        if let Some(p) = period {
            r.set(key("period2_deviation", &[block.label()]), p);
        }
        for target in [0.5, 1.5] {
            if let Some(i) = ngs.iter().position(|&g| (g - target).abs() < 1e-9) {
                let row: Vec<f64> = (0..np).map(|j| at(i, j)).collect();
                r.set(
                    key("rel_modulation", &[block.label(), &format!("n_g={target}")]),
                    relative_modulation(&row),
                );
                r.set(
                    key("mean_current", &[block.label(), &format!("n_g={target}")]),
                    row.iter().sum::<f64>() / np as f64,
                );
            }
        }
        if let Some(s) = pi_offset(phis) {
            // Block crossover: I(n_g + 1, φ) against I(n_g, φ + π).
            let mut dev: Option<f64> = None;
            for i in 0..nn {
                for i1 in 0..nn {
                    if (ngs[i1] - ngs[i] - 1.0).abs() < 1e-12 {
                        let d = (0..np - s)
                            .map(|j| (at(i1, j) - at(i, j + s)).abs())
                            .fold(0.0, f64::max);
                        dev = Some(dev.map_or(d, |x| x.max(d)));
                    }
                }
            }
            if let Some(d) = dev {
                r.set(key("crossover_deviation", &[block.label()]), d);
            }
        }
        let probe = probes.get(b, 0);
        let fit = |step: f64, from: usize| {
            let pts: Vec<(f64, f64)> = probe_offsets(step)
                .into_iter()
                .zip(&probe[from..from + 10])
                .map(|(d, i)| (d, i - probe[0]))
                .collect();
            power_law_exponent(&pts)
        };
        r.set(key("sweet_spot_exponent", &[block.label()]), fit(GATE_STEP, 1));
        r.set(
            key("sweet_spot_exponent_wide", &[block.label()]),
            fit(GATE_STEP_WIDE, 11),
        );
    }
    Ok(r)
}

/// Grid symmetric under `x → −x`.
fn mirrored(xs: &[f64]) -> bool {
    xs.iter()
        .zip(xs.iter().rev())
        .all(|(a, b)| (a + b).abs() <= 1e-12 * a.abs().max(1.0))
}

/// Which dot levels a detuning sweep moves.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetuningPattern {
    /// `ε₁ = ε₂ = ε`.
    Joint,
    /// Independent `(ε₁, ε₂)` map on the same grid for both levels.
    Independent,
}

/// Steady current versus the dot levels, full model, wide window.
pub fn run_dot_detuning(params: &SystemParams, eps_grid: &[f64], pattern: DetuningPattern) -> Result<ScanResult> {
    let mut r = ScanResult::new("detuning", params);
    let mut points = Vec::new();
    match pattern {
        DetuningPattern::Joint => {
            r.axes.push(Axis::new("eps", eps_grid));
            for &e in eps_grid {
                points.push((
                    format!("eps={}", fmt(e)),
                    SystemParams {
                        eps1: e,
                        eps2: e,
                        ..params.clone()
                    },
                ));
            }
        }
        DetuningPattern::Independent => {
            r.axes.push(Axis::new("eps1", eps_grid));
            r.axes.push(Axis::new("eps2", eps_grid));
            for &e1 in eps_grid {
                for &e2 in eps_grid {
                    points.push((
                        format!("eps1={} eps2={}", fmt(e1), fmt(e2)),
                        SystemParams {
                            eps1: e1,
                            eps2: e2,
                            ..params.clone()
                        },
                    ));
                }
            }
        }
    }
    let main = points.len();
    // Small-detuning probe along the swept direction.
    for d in std::iter::once(0.0).chain(probe_offsets(DETUNING_STEP)) {
        let eps2 = if pattern == DetuningPattern::Joint { d } else { 0.0 };
        points.push((
            format!("probe eps1={}", fmt(d)),
            SystemParams {
                eps1: d,
                eps2,
                ..params.clone()
            },
        ));
    }
    let plan = Plan {
        scenario: "detuning",
        blocks: ParityBlock::BOTH.to_vec(),
        models: vec![ModelKind::Full],
        points,
        wide: true,
        charge: Charge::Auto,
    };
    let currents = plan.run(&mut r.diagnostics);
    let n = eps_grid.len();
    for (b, &block) in plan.blocks.iter().enumerate() {
        let all = currents.get(b, 0);
        let table = match pattern {
            DetuningPattern::Joint => sweep_table("eps", eps_grid, &["I2".into()], &[&all[..main]]),
            DetuningPattern::Independent => {
                let mut t = Table::new(["eps1", "eps2", "I2"]);
                for i in 0..n {
                    for j in 0..n {
                        t.push(vec![eps_grid[i], eps_grid[j], all[i * n + j]])?;
                    }
                }
                let pairs = || (0..n).flat_map(move |i| (0..n).map(move |j| (i, j)));
                let dev = pairs()
                    .map(|(i, j)| (all[i * n + j] - all[j * n + i]).abs())
                    .fold(0.0, f64::max);
                if mirrored(eps_grid) {
                    // Exchanging the dots also swaps source and drain; with
                    // ε → −ε this is an exact symmetry of the model.
                    let conj = pairs()
                        .map(|(i, j)| (all[i * n + j] - all[(n - 1 - j) * n + (n - 1 - i)]).abs())
                        .fold(0.0, f64::max);
                    r.set(key("exchange_conjugate_asymmetry", &[block.label()]), conj);
                }
                r.set(key("exchange_asymmetry", &[block.label()]), dev);
                t
            }
        };
        r.series.push(Series {
            name: series_name("detuning", block, ModelKind::Full),
            table,
        });
        let main_values = &all[..main];
        if let Some(k) = (0..main).max_by(|&a, &c| main_values[a].total_cmp(&main_values[c])) {
            match pattern {
                DetuningPattern::Joint => r.set(key("argmax_eps", &[block.label()]), eps_grid[k]),
                DetuningPattern::Independent => {
                    r.set(key("argmax_eps1", &[block.label()]), eps_grid[k / n]);
                    r.set(key("argmax_eps2", &[block.label()]), eps_grid[k % n]);
                }
            }
        }
        let probe = &all[main..];
        let pts: Vec<(f64, f64)> = probe_offsets(DETUNING_STEP)
            .into_iter()
            .zip(&probe[1..])
            .map(|(d, i)| (d, i - probe[0]))
            .collect();
        r.set(key("quadratic_exponent", &[block.label()]), power_law_exponent(&pts));
        r.set(key("current_at_zero", &[block.label()]), probe[0]);
    }
    Ok(r)
}
