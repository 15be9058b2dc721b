use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use luq::catalog::*;
use luq::decider::{classify_4, decide_lu, FourQubitLabel, FourQubitParams, Options};
use luq::linalg::c;
use luq::sample::{random_orbit_point, rng};
use luq::tensor::{conjugate_state, partial_trace};
use luq::{Density, LuError, State, C64};
use nalgebra::DMatrix;
use rand::Rng;

fn quarter() -> DMatrix<C64> {
    DMatrix::identity(4, 4) * c(0.25, 0.0)
}

#[test]
fn named_states() {
    let g = ghz(3).unwrap();
    let s = FRAC_1_SQRT_2;
    assert!(
        (g.amplitudes()[0] - c(s, 0.0)).norm() < 1e-15
            && (g.amplitudes()[7] - c(s, 0.0)).norm() < 1e-15
    );
    let singlet = bell(BellKind::PsiMinus);
    assert!((singlet.amplitudes()[1] + singlet.amplitudes()[2]).norm() < 1e-15);
    let w = partial_trace(&w_state(3).unwrap(), &[0])
        .unwrap()
        .spectrum()
        .values;
    assert!((w[0] - 2.0 / 3.0).abs() < 1e-12 && (w[1] - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn lme_and_cphase() {
    let flat = lme_phase_state(3, &[0.0; 8]).unwrap();
    assert!(flat
        .amplitudes()
        .iter()
        .all(|a| (a - c(8f64.sqrt().recip(), 0.0)).norm() < 1e-15));
    let mut phases = vec![0.0; 8];
    phases[7] = FRAC_PI_2;
    assert_eq!(
        lme_phase_state(3, &phases).unwrap(),
        controlled_phase_all(3, FRAC_PI_2).unwrap()
    );
    let mut r = rng(1);
    let ph: Vec<f64> = (0..16).map(|_| r.random_range(-PI..PI)).collect();
    assert!(lme_phase_state(4, &ph)
        .unwrap()
        .amplitudes()
        .iter()
        .all(|a| (a.norm() - 0.25).abs() < 1e-15));
    assert!(lme_phase_state(3, &[0.0; 4]).is_err());
    let zero = controlled_phase_all(4, 0.0).unwrap();
    assert!(zero
        .amplitudes()
        .iter()
        .all(|a| (a - c(0.25, 0.0)).norm() < 1e-15));
}

#[test]
fn cphase_marginal_closed_form() {
    for n in 3..=8 {
        let s = partial_trace(&controlled_phase_all(n, FRAC_PI_2).unwrap(), &[0])
            .unwrap()
            .spectrum()
            .values;
        let root = (8.0 - 2f64.powi(2 + n as i32) + 2f64.powi(2 * n as i32)).sqrt();
        assert!(
            (s[0] - 0.5 * (1.0 + root / 2f64.powi(n as i32))).abs() < 1e-10,
            "n={n}"
        );
    }
}

#[test]
fn bell_pair_family() {
    let psi = bell_pair_phase_state(0.35, 0.4, 1.3, 0.8).unwrap();
    // ρ₁₂ ∝ 𝟙 − λ|Ψ⁻⟩⟨Ψ⁻|.
    let rho = partial_trace(&psi, &[0, 1]).unwrap();
    let singlet = bell(BellKind::PsiMinus);
    let v = nalgebra::DVector::from_column_slice(singlet.amplitudes());
    let proj = &v * v.adjoint();
    let target = (DMatrix::identity(4, 4) - proj * c(0.35, 0.0)) * c(1.0 / (4.0 - 0.35), 0.0);
    assert!((rho.matrix() - target).norm() < 1e-10);
    assert!(bell_pair_phase_state(1.5, 0.0, 0.0, 0.0).is_err());
    let class = classify_4(&psi).unwrap();
    assert_eq!(class.label, FourQubitLabel::TwoA);
    match class.params {
        FourQubitParams::BellPair { lambda, .. } => assert!((lambda - 0.35).abs() < 1e-9),
        other => panic!("{other:?}"),
    }
    // λ = 0 with real phases: a maximally entangled 2|2 split.
    let flat = bell_pair_phase_state(0.0, 0.0, 0.0, 0.0).unwrap();
    assert!((partial_trace(&flat, &[0, 1]).unwrap().matrix() - quarter()).norm() < 1e-12);
}

#[test]
fn five_qubit_identities() {
    let mut r = rng(2);
    let xxx = DMatrix::from_fn(8, 8, |i, j| {
        c(((i == j) as u8 + (i ^ j == 7) as u8) as f64 / 8.0, 0.0)
    });
    for _ in 0..10 {
        let psi = five_qubit_all_pairs_mixed(r.random_range(0.0..2.0 * PI));
        for i in 0..5 {
            for j in i + 1..5 {
                assert!(
                    (partial_trace(&psi, &[i, j]).unwrap().matrix() - quarter()).norm() < 1e-12
                );
            }
        }
        assert!((partial_trace(&psi, &[0, 1, 2]).unwrap().matrix() - &xxx).norm() < 1e-12);
    }
    // α = 0 is real, so the state is its own conjugate.
    let real = five_qubit_all_pairs_mixed(0.0);
    assert_eq!(conjugate_state(&real), real);
    let (phi, _) = random_orbit_point(&real, &mut r);
    assert!(decide_lu(&real, &phi, &Options::default())
        .unwrap()
        .is_equivalent());
}

#[test]
fn werner_family() {
    let zero = werner_two_qubit(0.0).unwrap();
    assert!(zero.distance(&Density::maximally_mixed(2)) < 1e-15);
    let one = werner_two_qubit(1.0).unwrap();
    let s = one.spectrum().values;
    assert!((s[0] - 1.0).abs() < 1e-12 && s[1].abs() < 1e-12 && (one.trace() - 1.0).abs() < 1e-12);
    // Both single-qubit marginals of a Werner state are maximally mixed.
    let w = werner_two_qubit(0.4).unwrap();
    let m = w.matrix();
    let r0 = DMatrix::from_fn(2, 2, |i, j| m[(2 * i, 2 * j)] + m[(2 * i + 1, 2 * j + 1)]);
    assert!((r0 - DMatrix::identity(2, 2) * c(0.5, 0.0)).norm() < 1e-12);
    assert!(werner_two_qubit(-0.5).is_err());
}

#[test]
fn choi_family_round_trips_through_the_classifier() {
    let mut r = rng(3);
    let flat = choi([0.0, 0.0, 0.0]);
    // |Φ⁺⟩ on qubits (0, 2) and (1, 3).
    for (i, a) in flat.amplitudes().iter().enumerate() {
        let on = (i >> 3 & 1) == (i >> 1 & 1) && (i >> 2 & 1) == (i & 1);
        assert!((a - c(if on { 0.5 } else { 0.0 }, 0.0)).norm() < 1e-12);
    }
    for _ in 0..20 {
        let p1 = r.random_range(0.05..0.75);
        let p2 = r.random_range(0.02..p1);
        let p3 = r.random_range(-p2 + 0.01..p2);
        let class = classify_4(&choi([p1, p2, p3])).unwrap();
        match class.params {
            FourQubitParams::Nonlocal { content, .. } => {
                assert!(content
                    .phases
                    .iter()
                    .zip([p1, p2, p3])
                    .all(|(a, b)| (a - b).abs() < 1e-9));
            }
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn make_dispatches_by_name() {
    assert_eq!(make("ghz", &[3.0]).unwrap(), ghz(3).unwrap());
    assert_eq!(make("bell", &[3.0]).unwrap(), bell(BellKind::PsiMinus));
    assert_eq!(
        make("cphase", &[3.0, 0.5]).unwrap(),
        controlled_phase_all(3, 0.5).unwrap()
    );
    let b: State = make("basis", &[2.0, 3.0]).unwrap();
    assert_eq!(b.amplitudes()[3], c(1.0, 0.0));
    assert!(matches!(make("nope", &[]), Err(LuError::UnknownFamily(_))));
    assert!(make("ghz", &[]).is_err());
    assert!(make("ghz", &[2.5]).is_err());
}
