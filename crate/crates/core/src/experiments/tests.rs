use std::f64::consts::PI;

use super::sweeps::power_law_exponent;
use super::*;
use crate::lindblad::StateDefects;

fn flux_grid(points: usize) -> Vec<f64> {
    Grid::new(0.0, 2.0 * PI, points).unwrap().values()
}

#[test]
fn grid_hits_both_end_points() {
    let v = Grid::new(-0.05, 0.05, 201).unwrap().values();
    assert_eq!(v.len(), 201);
    assert_eq!(v[0], -0.05);
    assert_eq!(v[200], 0.05);
    assert_eq!(v[100], 0.0);
    assert_eq!(Grid::new(1.0, 2.0, 1).unwrap().values(), vec![1.0]);
    assert!(Grid::new(0.0, 1.0, 0).is_err());
    assert!(Grid::new(0.0, f64::NAN, 3).is_err());
}

#[test]
fn power_law_recovers_exponent() {
    let pts: Vec<(f64, f64)> = (1..=10).map(|k| k as f64 * 1e-3).map(|x| (x, -3.0 * x * x)).collect();
    assert!((power_law_exponent(&pts) - 2.0).abs() < 1e-12);
}

#[test]
fn par_map_keeps_order() {
    let xs: Vec<u64> = (0..1000).collect();
    let ys = par_map(&xs, |x| x * x);
    assert!(ys.iter().enumerate().all(|(k, y)| *y == (k * k) as u64));
}

#[test]
fn diagnostics_flag_failures_but_only_warn_on_positivity() {
    let mut d = Diagnostics::default();
    let ok = Check {
        residual: Some(1e-14),
        gap: Some(1e-3),
        imbalance: Some(0.0),
        defects: StateDefects {
            hermiticity: 0.0,
            trace_error: 1e-15,
            min_eigenvalue: -1e-5,
        },
    };
    d.record("a", ok);
    d.record(
        "b",
        Check {
            residual: Some(1e-6),
            ..ok
        },
    );
    d.error("c", &crate::Error::Domain("boom".into()));
    let s = d.summarize(&ScanTolerances::default());
    assert_eq!(s.points, 3);
    assert_eq!(s.positivity_warnings, 2);
    assert_eq!(s.failures.len(), 2);
    assert!(s.failures.iter().any(|f| f.starts_with("b: residual")));
    assert_eq!(s.max_residual, Some(1e-6));
}

#[test]
fn spectrum_tables_have_level_columns() {
    let r = run_spectrum(&SystemParams::default(), &[0.0, PI]).unwrap();
    let full = r.series("spectrum_0L_full").unwrap();
    assert_eq!(full.columns.len(), 13);
    assert_eq!(full.columns[1], "E1");
    let eff = r.series("spectrum_1L_effective").unwrap();
    assert_eq!(eff.columns, ["phi", "E1", "E2", "E3", "E4"]);
    // −λ0 is a level of block 0_L at φ = 0, +λ0 at φ = π.
    assert!(full.rows[0][1..].iter().any(|e| (e + 0.01).abs() < 1e-12));
    assert!(full.rows[1][1..].iter().any(|e| (e - 0.01).abs() < 1e-12));
}

#[test]
fn transitions_come_in_pairs() {
    let t = transition_energies(&SystemParams::default(), ParityBlock::Zero).unwrap();
    assert!(!t.is_empty());
    for e in &t {
        assert!(t.iter().any(|x| (x + e).abs() < 1e-12));
    }
}

#[test]
fn iv_window_above_all_transitions_blocks_current() {
    let r = run_iv_narrow(&SystemParams::default(), &[0.035, 0.04], 0.01).unwrap();
    for block in ParityBlock::BOTH {
        let t = r.series(&series_name("iv", block, ModelKind::Full)).unwrap();
        assert!(t.rows.iter().all(|row| row[1].abs() < 1e-12), "{block}: {:?}", t.rows);
    }
    assert!(r.diagnostics.summarize(&ScanTolerances::default()).failures.is_empty());
}

#[test]
fn iv_steps_sit_at_transition_energies() {
    let p = SystemParams::default();
    let mu2 = Grid::new(-0.03, 0.02, 101).unwrap().values();
    let r = run_iv_narrow(&p, &mu2, 0.01).unwrap();
    let step = 0.05 / 100.0;
    let steps: Vec<f64> = r
        .summary
        .iter()
        .filter(|(k, _)| k.starts_with("step_mu2[0L"))
        .map(|(_, v)| *v)
        .collect();
    assert!(!steps.is_empty());
    let t = transition_energies(&p, ParityBlock::Zero).unwrap();
    for s in steps {
        // A step opens when μ₂ or μ₁ = μ₂ + w crosses a transition.
        let near = t.iter().any(|e| (s - e).abs() <= step || (s + 0.01 - e).abs() <= step);
        assert!(near, "step at {s} not near any of {t:?}");
    }
}

#[test]
fn flux_sweep_blocks_are_pi_shifted() {
    let r = run_flux_sweep(&SystemParams::default(), &flux_grid(9), &[0.02, 0.1]).unwrap();
    for m in ["full", "effective"] {
        for l in ["lambda0=0.02", "lambda0=0.1"] {
            assert!(r.value(&format!("pi_shift_deviation[{l},{m}]")).unwrap() < 1e-10);
        }
        assert!(
            r.value(&format!("block_contrast_at_min_phi[lambda0=0.02,{m}]"))
                .unwrap()
                < 0.05
        );
    }
    let t = r.series("flux_0L_full").unwrap();
    assert_eq!(t.columns, ["phi", "I2[lambda0=0.02]", "I2[lambda0=0.1]"]);
    assert!(r.diagnostics.summarize(&ScanTolerances::default()).failures.is_empty());
}

#[test]
fn temperature_sweep_at_zero_matches_flux_sweep() {
    let p = SystemParams::default().with_lambda0(0.1);
    let phis = flux_grid(5);
    let a = run_temperature_sweep(&p, &phis, &[0.0]).unwrap();
    let b = run_flux_sweep(&p, &phis, &[0.1]).unwrap();
    let ta = a.series("temperature_1L_full").unwrap();
    let tb = b.series("flux_1L_full").unwrap();
    for (x, y) in ta.rows.iter().zip(&tb.rows) {
        assert_eq!(x[1], y[1]);
    }
}

#[test]
fn gate_map_has_period_two() {
    let ngs = [0.0, 0.5, 1.0, 2.0, 2.5];
    let r = run_ng_flux_map(&SystemParams::default(), &ngs, &[0.0, PI / 2.0, PI]).unwrap();
    for b in ["0L", "1L"] {
        assert!(r.value(&format!("period2_deviation[{b}]")).unwrap() < 1e-8);
        assert!(r.value(&format!("rel_modulation[{b},n_g=0.5]")).unwrap() < 0.01);
        let e = r.value(&format!("sweet_spot_exponent[{b}]")).unwrap();
        assert!((e - 2.0).abs() < 0.2, "{b}: {e}");
    }
    let t = r.series("ng-map_0L_full").unwrap();
    assert_eq!(t.columns, ["n_g", "phi", "I2"]);
    assert_eq!(t.rows.len(), ngs.len() * 3);
}

#[test]
fn independent_detuning_is_exchange_symmetric() {
    let eps = [-0.01, 0.0, 0.01];
    let r = run_dot_detuning(&SystemParams::default(), &eps, DetuningPattern::Independent).unwrap();
    for b in ["0L", "1L"] {
        assert!(r.value(&format!("exchange_conjugate_asymmetry[{b}]")).unwrap() < 1e-8);
        // Plain exchange is not a symmetry: the bias has a direction.
        assert!(r.value(&format!("exchange_asymmetry[{b}]")).unwrap() > 1e-7);
        // Detuning a single dot lowers the current.
        let rows = &r.series(&format!("detuning_{b}_full")).unwrap().rows;
        let at = |e1: f64, e2: f64| rows.iter().find(|x| x[0] == e1 && x[1] == e2).unwrap()[2];
        for (e1, e2) in [(-0.01, 0.0), (0.01, 0.0), (0.0, -0.01), (0.0, 0.01)] {
            assert!(at(e1, e2) < at(0.0, 0.0));
        }
        let e = r.value(&format!("quadratic_exponent[{b}]")).unwrap();
        assert!((e - 2.0).abs() < 0.2, "{b}: {e}");
    }
    assert_eq!(r.series("detuning_1L_full").unwrap().rows.len(), 9);
}

#[test]
fn transient_exports_trace_and_residual() {
    let times = Grid::new(0.0, 2000.0, 41).unwrap().values();
    let r = run_readout_transient(&SystemParams::default(), &times).unwrap();
    let t = r.series("transient_0L_full").unwrap();
    assert_eq!(t.columns, ["t", "value_re", "value_im"]);
    assert_eq!(t.rows.len(), 41);
    assert_eq!(
        r.series("transient-residual_0L_effective").unwrap().columns,
        ["t", "abs_residual"]
    );
    let fast = r.value("fast_rate[full]").unwrap();
    assert!((0.005..0.02).contains(&fast), "{fast}");
    let span = r.value("quartet_span[full]").unwrap();
    let f = r.value("oscillation_frequency[full]").unwrap();
    assert!((f / span - 1.0).abs() < 0.05, "{f} vs {span}");
}

#[test]
fn dephasing_table_has_both_pairings() {
    let times = Grid::new(0.0, 500.0, 11).unwrap().values();
    let r = run_dephasing(&SystemParams::default(), &times, &[0.1]).unwrap();
    let t = r.series("dephasing_both_full").unwrap();
    assert_eq!(
        t.columns,
        ["t", "abs_coherence[lambda0=0.1]", "abs_coherence_eigen[lambda0=0.1]"]
    );
    assert!((t.rows[0][1] - 0.5).abs() < 1e-12);
}

#[test]
fn noise_spectra_are_symmetric_and_sub_poissonian() {
    let omegas = Grid::new(-0.05, 0.05, 11).unwrap().values();
    let v = [NoiseVariant::new(0.1, 0.01)];
    let r = run_psd(&SystemParams::default(), &omegas, &v).unwrap();
    for b in ["0L", "1L"] {
        for m in ["full", "effective"] {
            let parts = format!("{},{b},{m}", v[0].label());
            assert!(r.value(&format!("symmetry_deviation[{parts}]")).unwrap() < 1e-8);
            let f = r.value(&format!("fano[{parts}]")).unwrap();
            assert!(f > 0.0 && f < 1.0, "{parts}: {f}");
        }
    }
    assert_eq!(
        r.series("psd_0L_full").unwrap().columns,
        ["omega", "S[lambda0=0.1,gamma=0.01]"]
    );
}

#[test]
fn correlation_oscillates_at_quartet_span() {
    let times = Grid::new(0.0, 1000.0, 4001).unwrap().values();
    let r = run_correlation(&SystemParams::default(), &times, &[NoiseVariant::new(0.1, 0.01)]).unwrap();
    for b in ["0L", "1L"] {
        let parts = format!("lambda0=0.1,gamma=0.01,{b},full");
        let f = r.value(&format!("slow_frequency[{parts}]")).unwrap();
        let span = r.value(&format!("quartet_span[{parts}]")).unwrap();
        assert!((f / span - 1.0).abs() < 0.05);
        let c0 = r.value(&format!("c0[{parts}]")).unwrap();
        assert!(c0 > 0.0);
        let eff = format!("lambda0=0.1,gamma=0.01,{b},effective");
        let full_hf = r.value(&format!("high_frequency_amplitude[{parts}]")).unwrap();
        let eff_hf = r.value(&format!("high_frequency_amplitude[{eff}]")).unwrap();
        assert!(full_hf > 1e-3 * c0 && eff_hf < 1e-6 * c0, "{full_hf} {eff_hf}");
    }
}

#[test]
fn two_block_liouvillian_has_two_zero_modes() {
    let r = run_liouvillian_spectrum(&SystemParams::default()).unwrap();
    assert_eq!(r.value("zero_modes[both_full]"), Some(2.0));
    assert_eq!(r.value("zero_modes[0L_full]"), Some(1.0));
    assert_eq!(r.series("liouvillian-spectrum_both_full").unwrap().rows.len(), 24 * 24);
}
