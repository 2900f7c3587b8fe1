use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::numerics::{anticommutator, commutator, identity, max_abs};

fn block0() -> Arc<BasisSet> {
    single_block(ParityBlock::Zero, ChargeMode::Three)
}

fn spectrum(p: &SystemParams, basis: &Arc<BasisSet>) -> Vec<f64> {
    eig_hermitian(build_hamiltonian(p, basis).unwrap().matrix())
        .unwrap()
        .values
}

fn contains(values: &[f64], target: f64, tol: f64) -> bool {
    values.iter().any(|v| (v - target).abs() < tol)
}

#[test]
fn decoupled_limit_is_charging_only() {
    let p = SystemParams {
        lambda0: C64::from(0.0),
        lambda1: C64::from(0.0),
        lambda2: C64::from(0.0),
        ..SystemParams::default()
    };
    let e = spectrum(&p, &block0());
    assert!(e[..4].iter().all(|x| x.abs() < 1e-15));
    assert!(e[4..].iter().all(|x| (x - 1.0).abs() < 1e-15));
}

#[test]
fn decoupled_spectrum_is_union_of_diagonals() {
    let p = SystemParams {
        lambda0: C64::from(0.0),
        lambda1: C64::from(0.0),
        lambda2: C64::from(0.0),
        eps1: 0.013,
        eps2: -0.021,
        n_g: 0.3,
        ..SystemParams::default()
    };
    let basis = single_block(ParityBlock::Zero, ChargeMode::Four);
    let mut brute: Vec<f64> = Vec::new();
    for &dn in ChargeMode::Four.island_offsets() {
        for (n1, n2) in DOT_STATES {
            let q = dn as f64 - 0.3;
            brute.push(q * q + 0.013 * n1 as f64 - 0.021 * n2 as f64);
        }
    }
    brute.sort_by(f64::total_cmp);
    let e = spectrum(&p, &basis);
    for (a, b) in e.iter().zip(&brute) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn analytic_eigenvalues_at_zero_flux() {
    let p = SystemParams::default();
    let (ec, l0, l1): (f64, f64, f64) = (1.0, 0.01, 0.1);
    let e = spectrum(&p, &block0());
    let e23 = 0.5 * (ec - l0 - ((ec - l0) * (ec - l0) + 8.0 * l1 * l1).sqrt());
    let e4 = 0.5 * (ec + l0 - ((ec - l0) * (ec - l0) + 16.0 * l1 * l1).sqrt());
    assert!(contains(&e, -l0, 1e-12));
    assert!((e[1] - e23).abs() < 1e-12 && (e[2] - e23).abs() < 1e-12);
    assert!(contains(&e, e4, 1e-12));
    assert!((e23 + 0.019806).abs() < 1e-6);
    assert!((e4 + 0.028878).abs() < 1e-6);
}

#[test]
fn plus_lambda0_at_half_flux() {
    let p = SystemParams::default().with_phi(PI);
    assert!(contains(&spectrum(&p, &block0()), 0.01, 1e-12));
}

#[test]
fn middle_levels_are_even_dot_states() {
    let p = SystemParams::default();
    let basis = block0();
    let e = eig_hermitian(build_hamiltonian(&p, &basis).unwrap().matrix()).unwrap();
    for k in [1, 2] {
        let v = e.vectors.column(k);
        let mut even = 0.0;
        let mut odd_ground = 0.0;
        for (i, s) in basis.states().iter().enumerate() {
            if s.dn == 0 {
                if s.dot1 == s.dot2 {
                    even += v[i].norm_sqr();
                } else {
                    odd_ground += v[i].norm_sqr();
                }
            }
        }
        assert!(odd_ground < 1e-20, "{odd_ground}");
        assert!(even > 0.9, "{even}");
    }
}

#[test]
fn anticommutation_relations() {
    for mode in [ChargeMode::Three, ChargeMode::Four] {
        let basis = Arc::new(BasisSet::new(BlockMode::Both, mode));
        let ops = build_mode_operators(&basis);
        let n = basis.dim();
        let (d1, d2, a, b) = (ops.d1.matrix(), ops.d2.matrix(), ops.a_up.matrix(), ops.b_up.matrix());
        assert!(max_abs(&(anticommutator(d1, &d1.adjoint()) - identity(n))) == 0.0);
        assert!(max_abs(&(anticommutator(d2, &d2.adjoint()) - identity(n))) == 0.0);
        for (x, y) in [(d1, d2), (d1, a), (d2, a), (d1, b), (d2, b)] {
            assert!(max_abs(&anticommutator(x, y)) < 1e-15);
            assert!(max_abs(&anticommutator(x, &y.adjoint())) < 1e-15);
        }
    }
}

#[test]
fn island_raising_action() {
    let basis = block0();
    let ops = build_mode_operators(&basis);
    for (n1, n2) in DOT_STATES {
        let from = BasisState::island(ParityBlock::Zero, 0).with_dots(n1, n2);
        let to = BasisState::island(ParityBlock::Zero, 1).with_dots(n1, n2);
        let (i, j) = (basis.index_of(&from).unwrap(), basis.index_of(&to).unwrap());
        let sign = if (n1 + n2) % 2 == 0 { 1.0 } else { -1.0 };
        assert_eq!(ops.a_up.matrix()[(j, i)], C64::from(sign));
        let to_b = BasisState::island(ParityBlock::Zero, -1).with_dots(n1, n2);
        assert_eq!(ops.b_up.matrix()[(basis.index_of(&to_b).unwrap(), i)], C64::from(sign));
    }
    // Raising operators annihilate states with p_R = 1.
    for (k, s) in basis.states().iter().enumerate() {
        if s.parity_r == 1 {
            assert!(ops.a_up.matrix().column(k).iter().all(|z| z.norm() == 0.0));
            assert!(ops.b_up.matrix().column(k).iter().all(|z| z.norm() == 0.0));
        }
    }
}

#[test]
fn effective_model_limits() {
    let p = SystemParams::default().with_lambda0(0.02);
    let h = build_effective_hamiltonian(&p, ParityBlock::Zero).unwrap();
    assert!(max_abs(h.matrix()) < 1e-17);

    for (block, l0) in [
        (ParityBlock::Zero, 0.05),
        (ParityBlock::One, 0.05),
        (ParityBlock::Zero, 0.003),
    ] {
        let p = SystemParams::default().with_lambda0(l0);
        let e = eig_hermitian(build_effective_hamiltonian(&p, block).unwrap().matrix())
            .unwrap()
            .values;
        let c = (l0 - block.z() as f64 * 0.02).abs();
        let mut expect = vec![-c, 0.0, 0.0, c];
        expect.sort_by(f64::total_cmp);
        for (a, b) in e.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }
    assert!(build_effective_hamiltonian_z(&SystemParams::default(), 0, ParityBlock::Zero).is_err());
}

#[test]
fn effective_model_tracks_full_quartet() {
    let p = SystemParams::default();
    let grid: Vec<f64> = (0..41).map(|k| 2.0 * PI * k as f64 / 40.0).collect();
    for block in ParityBlock::BOTH {
        let full = spectrum_vs_flux(&p, &single_block(block, ChargeMode::Three), &grid).unwrap();
        let eff = effective_spectrum_vs_flux(&p, block, &grid).unwrap();
        for (f, e) in full.energies.iter().zip(&eff.energies) {
            for k in 0..4 {
                assert!((f[k] - e[k]).abs() < 5e-3, "{block}: {} vs {}", f[k], e[k]);
            }
        }
    }
}

#[test]
fn blocks_are_pi_shifted() {
    let p = SystemParams::default();
    let grid: Vec<f64> = (0..21).map(|k| 2.0 * PI * k as f64 / 20.0).collect();
    let shifted: Vec<f64> = grid.iter().map(|x| x + PI).collect();
    let one = spectrum_vs_flux(&p, &single_block(ParityBlock::One, ChargeMode::Three), &grid).unwrap();
    let zero = spectrum_vs_flux(&p, &block0(), &shifted).unwrap();
    for (a, b) in one.energies.iter().zip(&zero.energies) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn charging_diagonal_follows_gate_charge() {
    let basis = single_block(ParityBlock::Zero, ChargeMode::Four);
    for delta in [0.0, 0.25, 0.5, 0.8, 1.0] {
        let p = SystemParams {
            lambda0: C64::from(0.0),
            lambda1: C64::from(0.0),
            lambda2: C64::from(0.0),
            n_g: delta,
            ..SystemParams::default()
        };
        let h = build_hamiltonian(&p, &basis).unwrap();
        let expected = [
            delta * delta,
            (1.0 - delta).powi(2),
            (1.0 + delta).powi(2),
            (2.0 - delta).powi(2),
        ];
        for (k, s) in basis.states().iter().enumerate() {
            let idx = ChargeMode::Four
                .island_offsets()
                .iter()
                .position(|&d| d == s.dn)
                .unwrap();
            // n_g = 1 is referenced to N_ref = 2, i.e. the same energies relabeled.
            if delta < 1.0 {
                assert_eq!(h.matrix()[(k, k)].re, expected[idx]);
            }
        }
    }
}

#[test]
fn empty_flux_grid_rejected() {
    assert!(spectrum_vs_flux(&SystemParams::default(), &block0(), &[]).is_err());
}

fn arb_params() -> impl Strategy<Value = SystemParams> {
    (
        (-0.2..0.2f64, -0.2..0.2f64),
        (-0.3..0.3f64, -0.3..0.3f64),
        (-0.3..0.3f64, -0.3..0.3f64),
        -10.0..10.0f64,
        (-0.05..0.05f64, -0.05..0.05f64),
        -3.0..3.0f64,
    )
        .prop_map(|(l0, l1, l2, phi, (e1, e2), ng)| SystemParams {
            lambda0: C64::new(l0.0, l0.1),
            lambda1: C64::new(l1.0, l1.1),
            lambda2: C64::new(l2.0, l2.1),
            phi,
            eps1: e1,
            eps2: e2,
            n_g: ng,
            ..SystemParams::default()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonian_hermitian_and_charge_conserving(p in arb_params()) {
        for mode in [ChargeMode::Three, ChargeMode::Four] {
            let basis = Arc::new(BasisSet::new(BlockMode::Both, mode));
            let h = build_hamiltonian(&p, &basis).unwrap();
            prop_assert!(hermiticity_defect(h.matrix()) < 1e-12);
            let n = total_charge_operator(&basis);
            prop_assert!(max_abs(&commutator(h.matrix(), n.matrix())) < 1e-12);
        }
    }

    #[test]
    fn flux_period_and_block_shift(p in arb_params()) {
        let b0 = block0();
        let b1 = single_block(ParityBlock::One, ChargeMode::Three);
        let e = spectrum(&p, &b0);
        let e_wrapped = spectrum(&SystemParams { phi: p.phi + 2.0 * PI, ..p.clone() }, &b0);
        let e_one = spectrum(&p, &b1);
        let e_shift = spectrum(&SystemParams { phi: p.phi + PI, ..p.clone() }, &b0);
        for k in 0..e.len() {
            prop_assert!((e[k] - e_wrapped[k]).abs() < 1e-12);
            prop_assert!((e_one[k] - e_shift[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn gate_charge_period_two(p in arb_params()) {
        let mode = ChargeMode::four_for_offset(p.gate_offset().1);
        let basis = single_block(ParityBlock::Zero, mode);
        let e = spectrum(&p, &basis);
        let e2 = spectrum(&SystemParams { n_g: p.n_g + 2.0, ..p.clone() }, &basis);
        for k in 0..e.len() {
            prop_assert!((e[k] - e2[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn wide_window_covers_quartet() {
    let p = SystemParams::default();
    let w = low_energy_bandwidth(&p).unwrap();
    assert!(w > 0.02 && w < 0.04, "{w}");
    assert_eq!(p.clone().with_wide_window().unwrap(), p);
    let strong = SystemParams::default().with_lambda0(0.1).with_wide_window().unwrap();
    let w = low_energy_bandwidth(&strong).unwrap();
    assert!(strong.mu1 >= WIDE_WINDOW_MARGIN * w - 1e-15 && strong.mu2 <= -WIDE_WINDOW_MARGIN * w + 1e-15);
    assert!(strong.mu1 < 0.5);
}

#[test]
fn half_integer_gate_widens_to_eight_states() {
    let near = SystemParams {
        n_g: 0.02,
        ..SystemParams::default()
    };
    let half = SystemParams {
        n_g: 0.5,
        ..SystemParams::default()
    };
    let w_near = low_energy_bandwidth(&near).unwrap();
    let w_half = low_energy_bandwidth(&half).unwrap();
    assert!(w_near < 0.04, "{w_near}");
    // The N and N+1 charge states are degenerate, so direct dot–island
    // transitions of order λ1 enter the window.
    assert!(w_half > 0.1 && w_half < LOW_ENERGY_CUTOFF * 2.0, "{w_half}");
    assert_eq!(
        low_energy_bandwidth(&SystemParams { n_g: 2.5, ..half }).unwrap(),
        w_half
    );
}
