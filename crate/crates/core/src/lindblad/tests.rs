use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::{BasisState, BlockMode, ChargeMode};
use crate::numerics::{anticommutator, commutator, hermiticity_defect, max_abs};

fn block_basis(block: ParityBlock) -> Arc<BasisSet> {
    Arc::new(BasisSet::new(BlockMode::Single(block), ChargeMode::Three))
}

fn both_basis() -> Arc<BasisSet> {
    Arc::new(BasisSet::new(BlockMode::Both, ChargeMode::Three))
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    (&m + m.adjoint()) * C64::from(0.5)
}

/// Random density matrix supported on the index range `r`.
fn random_state(rng: &mut ChaCha8Rng, n: usize, r: std::ops::Range<usize>) -> CMatrix {
    let k = r.len();
    let a = CMatrix::from_fn(k, k, |_, _| {
        C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let p = &a * a.adjoint();
    let p = &p / p.trace();
    let mut m = CMatrix::zeros(n, n);
    m.view_mut((r.start, r.start), (k, k)).copy_from(&p);
    m
}

fn complex_params() -> SystemParams {
    SystemParams {
        lambda0: C64::new(0.012, -0.004),
        lambda1: C64::new(0.08, 0.03),
        lambda2: C64::new(0.1, -0.02),
        phi: 0.7,
        eps1: 0.003,
        eps2: -0.002,
        gamma1: 0.012,
        gamma2: 0.008,
        temperature: 0.02,
        ..SystemParams::default()
    }
}

/// Right-hand side of the master equation evaluated directly on matrices.
fn direct_generator(sys: &OpenSystem, rho: &CMatrix) -> CMatrix {
    let h = sys.hamiltonian.matrix();
    let mut out = commutator(h, rho) * (-I);
    for r in Reservoir::BOTH {
        let d = sys.modes.d(r).matrix();
        let dp = sys.dissipators.plus(r).matrix();
        let dm = sys.dissipators.minus(r).matrix();
        let x = dm * rho - rho * dp;
        let c = d.adjoint() * &x - &x * d.adjoint();
        out -= (&c + c.adjoint()) * C64::from(0.5);
    }
    out
}

#[test]
fn fermi_values() {
    assert_eq!(fermi(0.0, 0.0, 0.1), 0.5);
    assert_eq!(fermi(-1.0, 0.0, 0.0), 1.0);
    assert_eq!(fermi(1.0, 0.0, 0.0), 0.0);
    assert_eq!(fermi(0.3, 0.3, 0.0), 0.5);
    assert_eq!(fermi(1e3, 0.0, 1e-6), 0.0);
    assert_eq!(fermi(-1e3, 0.0, 1e-6), 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let (e, mu, t) = (
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.0..0.5),
        );
        let s = fermi(e, mu, t) + fermi_hole(e, mu, t);
        assert!((s - 1.0).abs() < 1e-15);
    }
}

#[test]
fn dissipator_limits() {
    let basis = block_basis(ParityBlock::Zero);
    let modes = build_mode_operators(&basis);
    let base = SystemParams::default();
    let h = build_hamiltonian(&base, &basis).unwrap();

    let closed = SystemParams {
        gamma1: 0.0,
        gamma2: 0.0,
        ..base.clone()
    };
    let d = build_dissipators(&h, &modes, &closed).unwrap();
    for k in 0..2 {
        assert_eq!(max_abs(d.plus[k].matrix()), 0.0);
        assert_eq!(max_abs(d.minus[k].matrix()), 0.0);
    }

    let hot = SystemParams {
        temperature: 1e12,
        ..base.clone()
    };
    let d = build_dissipators(&h, &modes, &hot).unwrap();
    for r in Reservoir::BOTH {
        let half = modes.d(r).matrix() * C64::from(0.5 * hot.gamma(r));
        assert!(max_abs(&(d.plus(r).matrix() - &half)) < 1e-12);
        assert!(max_abs(&(d.minus(r).matrix() - &half)) < 1e-12);
    }

    // Every transition energy lies above μ = −10.
    let empty = SystemParams {
        mu1: -10.0,
        mu2: -10.0,
        ..base
    };
    let d = build_dissipators(&h, &modes, &empty).unwrap();
    for r in Reservoir::BOTH {
        assert!(max_abs(d.plus(r).matrix()) < 1e-15);
        let full = modes.d(r).matrix() * C64::from(empty.gamma(r));
        assert!(max_abs(&(d.minus(r).matrix() - full)) < 1e-12);
    }
}

#[test]
fn closed_system_is_commutator() {
    let p = SystemParams {
        gamma1: 0.0,
        gamma2: 0.0,
        ..complex_params()
    };
    let sys = OpenSystem::full(&p, &block_basis(ParityBlock::Zero)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let rho = random_hermitian(&mut rng, 12);
    let expect = commutator(sys.hamiltonian.matrix(), &rho) * (-I);
    assert!(max_abs(&(sys.liouvillian.apply(&rho) - expect)) < 1e-15);
}

#[test]
fn stacking_lifts() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (a, b, x) = (
        random_hermitian(&mut rng, 5),
        random_hermitian(&mut rng, 5),
        random_hermitian(&mut rng, 5),
    );
    let b = &b * C64::new(0.3, 1.1);
    let expect = stack(&(&a * &x * &b));
    assert!((sandwich(&a, &b) * stack(&x) - expect).camax() < 1e-14);
    assert!((left(&a) * stack(&x) - stack(&(&a * &x))).camax() < 1e-14);
    assert!((right(&b) * stack(&x) - stack(&(&x * &b))).camax() < 1e-14);
}

#[test]
fn superoperator_matches_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (p, basis) in [
        (SystemParams::default(), block_basis(ParityBlock::Zero)),
        (complex_params(), block_basis(ParityBlock::One)),
        (
            complex_params(),
            Arc::new(BasisSet::new(BlockMode::Single(ParityBlock::Zero), ChargeMode::Four)),
        ),
    ] {
        let sys = OpenSystem::full(&p, &basis).unwrap();
        for _ in 0..20 {
            let rho = random_hermitian(&mut rng, basis.dim());
            let diff = sys.liouvillian.apply(&rho) - direct_generator(&sys, &rho);
            assert!(max_abs(&diff) < 1e-12, "{}", max_abs(&diff));
        }
    }
}

#[test]
fn trace_preserving_and_hermiticity_preserving() {
    let sys = OpenSystem::full(&complex_params(), &both_basis()).unwrap();
    let g = sys.liouvillian.matrix();
    let t = sys.liouvillian.trace_functional();
    let left_null = t.transpose() * g;
    assert!(left_null.camax() < 1e-10);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let rho = random_hermitian(&mut rng, 24);
        assert!(hermiticity_defect(&sys.liouvillian.apply(&rho)) < 1e-12);
    }
}

#[test]
fn blocks_never_mix() {
    let basis = both_basis();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for p in [
        SystemParams::default(),
        complex_params(),
        SystemParams::default().with_phi(std::f64::consts::FRAC_PI_2),
    ] {
        let sys = OpenSystem::full(&p, &basis).unwrap();
        let r0 = basis.block_range(ParityBlock::Zero).unwrap();
        let r1 = basis.block_range(ParityBlock::One).unwrap();
        for (rows, cols) in [
            (r0.clone(), r0.clone()),
            (r1.clone(), r1.clone()),
            (r0.clone(), r1.clone()),
        ] {
            let mut x = CMatrix::zeros(24, 24);
            for i in rows.clone() {
                for j in cols.clone() {
                    x[(i, j)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                }
            }
            let y = sys.liouvillian.apply(&x);
            let mut leak: f64 = 0.0;
            for i in 0..24 {
                for j in 0..24 {
                    if !(rows.contains(&i) && cols.contains(&j)) {
                        leak = leak.max(y[(i, j)].norm());
                    }
                }
            }
            assert!(leak < 1e-12, "leak {leak}");
        }
    }
}

#[test]
fn two_zero_modes_for_both_blocks() {
    let sys = OpenSystem::full(&SystemParams::default(), &both_basis()).unwrap();
    let spec = liouvillian_spectrum(&sys.liouvillian).unwrap();
    let norm = sys.liouvillian.norm2();
    let zeros = spec.iter().filter(|z| z.norm() < ZERO_MODE_THRESHOLD * norm).count();
    assert_eq!(zeros, 2);
    match sys.steady_state() {
        Err(Error::AmbiguousSteadyState { zero_modes }) => assert_eq!(zero_modes, 2),
        other => panic!("expected ambiguity, got {other:?}"),
    }
}

#[test]
fn single_block_spectrum() {
    let sys = OpenSystem::full(&SystemParams::default(), &block_basis(ParityBlock::Zero)).unwrap();
    let spec = liouvillian_spectrum(&sys.liouvillian).unwrap();
    assert_eq!(spec.iter().filter(|z| z.norm() < 1e-10).count(), 1);
    assert!(spec.iter().all(|z| z.re <= 1e-9));
    // Relaxation on the scale of Γ.
    let gamma = 0.01;
    let relaxing = spec
        .iter()
        .filter(|z| -z.re > 0.1 * gamma && -z.re < 10.0 * gamma)
        .count();
    assert!(relaxing > 20, "{relaxing}");
}

#[test]
fn zero_temperature_limit() {
    let basis = block_basis(ParityBlock::Zero);
    let p = SystemParams::default();
    let cold = OpenSystem::full(&p, &basis).unwrap();
    let warm = OpenSystem::full(&SystemParams { temperature: 1e-6, ..p }, &basis).unwrap();
    let diff = cold.liouvillian.matrix() - warm.liouvillian.matrix();
    assert!(diff.camax() < 1e-6);
}

#[test]
fn steady_state_routes_agree() {
    for (p, block) in [
        (SystemParams::default(), ParityBlock::Zero),
        (complex_params(), ParityBlock::One),
    ] {
        let sys = OpenSystem::full(&p, &block_basis(block)).unwrap();
        let a = steady_state(&sys.liouvillian).unwrap();
        let b = steady_state_spectral(&sys.liouvillian).unwrap();
        assert!(a.residual < 1e-9 && b.residual < 1e-9);
        assert!(max_abs(&(a.rho.matrix() - b.rho.matrix())) < 1e-9);
        assert!(a.gap_estimate > 0.0);
        assert!((a.defects.min_eigenvalue - b.defects.min_eigenvalue).abs() < 1e-9);
    }
}

#[test]
fn propagation_reaches_steady_state() {
    let basis = block_basis(ParityBlock::Zero);
    let p = complex_params();
    let sys = OpenSystem::full(&p, &basis).unwrap();
    let stat = sys.steady_state().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    // The slowest relaxation here is ~1.6e-4, so the last time is ~30 decay times.
    let times = [0.0, 1.0, 10.0, 100.0, 2e5];
    for _ in 0..5 {
        let rho0 = DensityMatrix::new(random_state(&mut rng, 12, 0..12), basis.clone()).unwrap();
        let traj = propagate(&sys.liouvillian, &rho0, &times).unwrap();
        assert!(max_abs(&(traj.states[0].matrix() - rho0.matrix())) < 1e-12);
        assert!(traj.worst.trace_error < 1e-9);
        assert!(traj.worst.hermiticity < 1e-10);
        assert!(traj.worst.min_eigenvalue > stat.defects.min_eigenvalue.min(0.0) - 1e-8);
        let last = traj.states.last().unwrap();
        assert!(max_abs(&(last.matrix() - stat.rho.matrix())) < 1e-7);
    }
}

#[test]
fn steady_state_positivity_defect_is_second_order_in_gamma() {
    // The eigenbasis dissipators do not guarantee complete positivity; the
    // negative weight sits on coherences with the charge-excited states and
    // shrinks as Γ².
    let basis = block_basis(ParityBlock::Zero);
    let min_eig = |gamma: f64| {
        let p = SystemParams::default().with_gamma(gamma);
        OpenSystem::full(&p, &basis)
            .unwrap()
            .steady_state()
            .unwrap()
            .defects
            .min_eigenvalue
    };
    let (a, b) = (min_eig(1e-2), min_eig(1e-3));
    assert!(a < 0.0 && b < 0.0);
    let order = (a / b).log10();
    assert!((1.7..2.3).contains(&order), "{order}");
    assert!(min_eig(1e-5) > -1e-8);
    let strong = SystemParams::default().with_lambda0(0.1);
    assert!(
        OpenSystem::full(&strong, &basis)
            .unwrap()
            .steady_state()
            .unwrap()
            .defects
            .min_eigenvalue
            > -1e-8
    );
}

#[test]
fn uncoupled_dots_equilibrate() {
    let p = SystemParams {
        lambda0: C64::from(0.0),
        lambda1: C64::from(0.0),
        lambda2: C64::from(0.0),
        ..SystemParams::default()
    };
    let basis = block_basis(ParityBlock::Zero);
    let sys = OpenSystem::full(&p, &basis).unwrap();
    // Disconnected island charge sectors leave the steady state undetermined.
    assert!(matches!(sys.steady_state(), Err(Error::AmbiguousSteadyState { .. })));
    let rho0 = sys.empty_dot_state(ParityBlock::Zero).unwrap();
    let traj = propagate(&sys.liouvillian, &rho0, &[100.0 / 0.01]).unwrap();
    let rho = traj.states[0].matrix();
    // Dot 1 (level 0 < μ1) fills; dot 2 (level 0 > μ2) stays empty.
    let target = basis
        .index_of(&BasisState::island(ParityBlock::Zero, 0).with_dots(1, 0))
        .unwrap();
    assert!((rho[(target, target)].re - 1.0).abs() < 1e-12);
}

#[test]
fn effective_model_shares_pipeline() {
    let sys = OpenSystem::effective(&SystemParams::default(), ParityBlock::Zero).unwrap();
    assert_eq!(sys.liouvillian.matrix().nrows(), 16);
    let ss = sys.steady_state().unwrap();
    assert!((ss.rho.trace() - ONE).norm() < 1e-12);
    let d1 = sys.modes.d1.matrix();
    assert!(max_abs(&(anticommutator(d1, &d1.adjoint()) - identity(4))) == 0.0);
}

#[test]
fn density_matrix_validation() {
    let basis = block_basis(ParityBlock::Zero);
    assert!(DensityMatrix::new(identity(12), basis.clone()).is_err());
    assert!(DensityMatrix::new(identity(4), basis.clone()).is_err());
    let mut m = CMatrix::zeros(12, 12);
    m[(0, 0)] = C64::from(1.5);
    m[(1, 1)] = C64::from(-0.5);
    assert!(DensityMatrix::new(m, basis.clone()).is_err());
    assert!(DensityMatrix::basis_projector(basis.clone(), 12).is_err());
    let amps: Vec<C64> = (0..12).map(|k| C64::new(k as f64, 1.0)).collect();
    let psi = DensityMatrix::pure(&amps, basis).unwrap();
    assert!((psi.trace() - ONE).norm() < 1e-14);
}

#[test]
fn negative_time_rejected() {
    let sys = OpenSystem::full(&SystemParams::default(), &block_basis(ParityBlock::Zero)).unwrap();
    let rho0 = sys.empty_dot_state(ParityBlock::Zero).unwrap();
    assert!(propagate(&sys.liouvillian, &rho0, &[-1.0]).is_err());
}
