use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use luq::catalog::{
    bell_pair_phase_state, choi, controlled_phase_all, five_qubit_all_pairs_mixed, ghz, w_state,
};
use luq::decider::{
    classify_3, classify_4, conjugate_class, decide_lu, decide_lu_logged, decide_lu_mixed,
    locc_comparability, verify_certificate, ConjugateFlag, FourQubitLabel, FourQubitParams,
    LoccRelation, Options, ThreeQubitLabel,
};
use luq::linalg::c;
use luq::sample::{random_layer, random_orbit_point, random_state, random_unitary, rng};
use luq::tensor::{apply_local_layer, conjugate_state, PureState};
use luq::{Density, State, Verdict, Witness};
use proptest::prelude::*;

fn opts() -> Options {
    Options::default()
}

fn assert_certified(psi: &State, phi: &State, v: &Verdict) {
    let cert = v
        .certificate()
        .unwrap_or_else(|| panic!("expected Equivalent, got {v:?}"));
    let ov = verify_certificate(psi, phi, cert).unwrap();
    assert!(ov >= 1.0 - 1e-9, "overlap {ov}");
    // Global phase is fixed too: ⟨ψ|Lφ⟩ is real positive.
    let z = psi.inner(&apply_local_layer(phi, cert).unwrap());
    assert!(z.im.abs() < 1e-8 && z.re > 0.0, "{z}");
}

#[test]
fn single_qubit_states_are_always_equivalent() {
    let mut r = rng(3);
    for _ in 0..10 {
        let a = random_state(1, &mut r);
        let b = random_state(1, &mut r);
        assert_certified(&a, &b, &decide_lu(&a, &b, &opts()).unwrap());
    }
}

#[test]
fn two_qubit_schmidt_route() {
    let mut r = rng(4);
    let psi = random_state(2, &mut r);
    let (phi, _) = random_orbit_point(&psi, &mut r);
    assert_certified(&psi, &phi, &decide_lu(&psi, &phi, &opts()).unwrap());
    let other = random_state(2, &mut r);
    let v = decide_lu(&psi, &other, &opts()).unwrap();
    assert!(
        matches!(v.witness(), Some(Witness::SpectrumMismatch { .. })),
        "{v:?}"
    );
}

#[test]
fn bell_states_are_equivalent_to_each_other() {
    let a = luq::catalog::bell(luq::catalog::BellKind::PhiPlus);
    let b = luq::catalog::bell(luq::catalog::BellKind::PsiMinus);
    assert_certified(&a, &b, &decide_lu(&a, &b, &opts()).unwrap());
}

#[test]
fn generic_orbits_for_each_size() {
    let mut r = rng(10);
    for n in 2..=6 {
        for _ in 0..3 {
            let psi = random_state(n, &mut r);
            let (phi, _) = random_orbit_point(&psi, &mut r);
            let d = decide_lu_logged(&psi, &phi, &opts()).unwrap();
            assert_certified(&psi, &phi, &d.verdict);
            assert!(!d.log.used_fallback, "n={n}");
        }
    }
}

#[test]
fn conjugate_of_cphase_state_is_not_equivalent() {
    for n in 3..=6 {
        let psi = controlled_phase_all(n, FRAC_PI_2).unwrap();
        let v = decide_lu(&psi, &conjugate_state(&psi), &opts()).unwrap();
        assert!(v.is_not_equivalent(), "n={n}: {v:?}");
        let (flag, _) = conjugate_class(&psi, &opts()).unwrap();
        assert_eq!(flag, ConjugateFlag::One);
        let (rel, _) = locc_comparability(&psi, &conjugate_state(&psi), &opts()).unwrap();
        assert_eq!(rel, LoccRelation::LoccIncomparable);
    }
}

#[test]
fn real_states_are_conjugate_class_zero() {
    let mut r = rng(6);
    let amp: Vec<_> = (0..8)
        .map(|_| c(rand::Rng::random::<f64>(&mut r) - 0.5, 0.0))
        .collect();
    let psi = PureState::normalized(3, amp).unwrap();
    assert_eq!(
        conjugate_class(&psi, &opts()).unwrap().0,
        ConjugateFlag::Zero
    );
}

#[test]
fn ghz_orbit_logs_the_all_flip_branches() {
    let mut r = rng(31);
    let g = ghz(3).unwrap();
    let (phi, _) = random_orbit_point(&g, &mut r);
    let d = decide_lu_logged(&g, &phi, &opts()).unwrap();
    assert_certified(&g, &phi, &d.verdict);
    // Bits are relative to the pinned frames: the two survivors differ by
    // flipping every qubit, so k₁ ⊕ k₂ and k₂ ⊕ k₃ are fixed across them.
    let ks = &d.log.feasible_branches;
    assert_eq!(ks.len(), 2, "{:?}", d.log);
    assert!(ks[0].iter().zip(&ks[1]).all(|(a, b)| a != b), "{ks:?}");
}

#[test]
fn w_and_ghz_are_distinguished() {
    let v = decide_lu(&w_state(3).unwrap(), &ghz(3).unwrap(), &opts()).unwrap();
    assert!(v.is_not_equivalent());
}

#[test]
fn choi_states_compare_by_nonlocal_content() {
    let mut r = rng(12);
    let phases = [0.6, 0.35, 0.1];
    let a = apply_local_layer(&choi(phases), &random_layer(4, &mut r)).unwrap();
    let b = apply_local_layer(&choi(phases), &random_layer(4, &mut r)).unwrap();
    assert_certified(&a, &b, &decide_lu(&a, &b, &opts()).unwrap());
    let far = choi([0.61, 0.35, 0.1]);
    let v = decide_lu(&a, &far, &opts()).unwrap();
    assert!(
        matches!(v.witness(), Some(Witness::NonlocalContentMismatch { .. })),
        "{v:?}"
    );
}

#[test]
fn bell_pair_family_matches_and_separates() {
    let mut r = rng(13);
    let psi = bell_pair_phase_state(0.4, 0.7, 1.9, 0.3).unwrap();
    let (phi, _) = random_orbit_point(&psi, &mut r);
    assert_certified(&psi, &phi, &decide_lu(&psi, &phi, &opts()).unwrap());
    // Swapping γ₁ and γ₂ is an LU symmetry of the family.
    let swapped = bell_pair_phase_state(0.4, 1.9, 0.7, 0.3).unwrap();
    assert_certified(&psi, &swapped, &decide_lu(&psi, &swapped, &opts()).unwrap());
    let moved = bell_pair_phase_state(0.4, 0.7, 2.0, 0.3).unwrap();
    assert!(decide_lu(&psi, &moved, &opts())
        .unwrap()
        .is_not_equivalent());
}

#[test]
fn five_qubit_family_needs_no_fallback() {
    let mut r = rng(14);
    let psi = five_qubit_all_pairs_mixed(1.1);
    let (phi, _) = random_orbit_point(&psi, &mut r);
    let d = decide_lu_logged(&psi, &phi, &opts()).unwrap();
    assert_certified(&psi, &phi, &d.verdict);
    assert!(!d.log.used_fallback);
}

#[test]
fn product_qubits_are_factored_out() {
    let mut r = rng(15);
    let core = random_state(3, &mut r);
    let psi = random_state(1, &mut r).kron(&core).unwrap();
    let (phi, _) = random_orbit_point(&psi, &mut r);
    assert_certified(&psi, &phi, &decide_lu(&psi, &phi, &opts()).unwrap());
    let other = random_state(1, &mut r)
        .kron(&random_state(3, &mut r))
        .unwrap();
    match decide_lu(&psi, &other, &opts()).unwrap().witness() {
        Some(Witness::SpectrumMismatch { subset, .. }) => assert!(subset.iter().all(|&q| q < 4)),
        w => panic!("{w:?}"),
    }
}

#[test]
fn classes_of_three_qubit_states() {
    let mut r = rng(16);
    assert_eq!(
        classify_3(&ghz(3).unwrap()).unwrap().label,
        ThreeQubitLabel::One
    );
    let prod = random_state(1, &mut r)
        .kron(&random_state(2, &mut r))
        .unwrap();
    assert_eq!(classify_3(&prod).unwrap().label, ThreeQubitLabel::Two);
    assert_eq!(
        classify_3(&w_state(3).unwrap()).unwrap().label,
        ThreeQubitLabel::ThreeB
    );
    // √p|0⟩|Φ⁺⟩ + √(1−p)|1⟩|Ψ⁻⟩ splits into two maximally entangled branches.
    let (p, q) = (0.8f64.sqrt(), 0.2f64.sqrt());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut amp = vec![c(0.0, 0.0); 8];
    amp[0] = c(p * s, 0.0);
    amp[3] = c(p * s, 0.0);
    amp[5] = c(q * s, 0.0);
    amp[6] = c(-q * s, 0.0);
    let psi = PureState::normalized(3, amp).unwrap();
    let class = classify_3(&psi).unwrap();
    assert_eq!(class.label, ThreeQubitLabel::ThreeA);
    assert!((class.p.unwrap() - 0.8).abs() < 1e-12);
}

#[test]
fn classes_of_four_qubit_states() {
    let mut r = rng(17);
    let c4 = classify_4(&choi([0.5, 0.2, 0.1])).unwrap();
    assert_eq!(c4.label, FourQubitLabel::TwoB);
    match c4.params {
        FourQubitParams::Nonlocal { content, .. } => {
            for (a, b) in content.phases.iter().zip([0.5, 0.2, 0.1]) {
                assert!((a - b).abs() < 1e-9, "{:?}", content.phases);
            }
        }
        other => panic!("{other:?}"),
    }
    let bp = classify_4(&bell_pair_phase_state(0.3, 0.4, 1.2, 0.0).unwrap()).unwrap();
    assert_eq!(bp.label, FourQubitLabel::TwoA);
    assert_eq!(
        classify_4(&random_state(4, &mut r)).unwrap().label,
        FourQubitLabel::OneA
    );
    let two = random_state(2, &mut r);
    let bell = luq::catalog::bell(luq::catalog::BellKind::PhiPlus);
    // Qubits 0,1 random; 2,3 a private Bell pair: ρ₀₂ = ρ₀ ⊗ 𝟙/2 but ρ₀₁ is correlated.
    assert_eq!(
        classify_4(&two.kron(&bell).unwrap()).unwrap().label,
        FourQubitLabel::OneA
    );
}

#[test]
fn invalid_inputs_are_rejected() {
    let mut r = rng(18);
    let a = random_state(2, &mut r);
    let b = random_state(3, &mut r);
    assert!(decide_lu(&a, &b, &opts()).is_err());
    let raw = PureState::new(1, vec![c(1.0, 0.0), c(1.0, 0.0)]);
    if let Ok(bad) = raw {
        assert!(decide_lu(&bad, &bad, &opts()).is_err());
    }
}

fn random_density(n: usize, r: &mut rand_chacha::ChaCha8Rng) -> Density {
    let u = random_unitary(1 << n, r);
    let vals: Vec<f64> = (0..1usize << n)
        .map(|k| (k + 1) as f64 + rand::Rng::random::<f64>(r) * 0.5)
        .collect();
    let tot: f64 = vals.iter().sum();
    let d = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        1 << n,
        vals.iter().map(|v| c(v / tot, 0.0)),
    ));
    Density::new(&u * d * u.adjoint()).unwrap()
}

#[test]
fn mixed_three_qubit_orbits() {
    let mut r = rng(19);
    let rho = random_density(3, &mut r);
    let layer = random_layer(3, &mut r);
    let sigma = Density::new(luq::decider::conjugate_density(rho.matrix(), &layer)).unwrap();
    let v = decide_lu_mixed(&rho, &sigma, &opts()).unwrap();
    let cert = v.certificate().unwrap_or_else(|| panic!("{v:?}"));
    let back = luq::decider::conjugate_density(sigma.matrix(), cert);
    assert!((back - rho.matrix()).norm() < 1e-8);
    let other = random_density(3, &mut r);
    assert!(decide_lu_mixed(&rho, &other, &opts())
        .unwrap()
        .is_not_equivalent());
}

#[test]
fn cphase_angle_separates_states() {
    let a = controlled_phase_all(3, FRAC_PI_4).unwrap();
    let b = controlled_phase_all(3, PI - FRAC_PI_4).unwrap();
    assert!(decide_lu(&a, &b, &opts()).unwrap().is_not_equivalent());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decision_is_symmetric(seed in 0u64..10_000, n in 2usize..=4, orbit in any::<bool>()) {
        let mut r = rng(seed);
        let psi = random_state(n, &mut r);
        let phi = if orbit { random_orbit_point(&psi, &mut r).0 } else { random_state(n, &mut r) };
        let ab = decide_lu(&psi, &phi, &opts()).unwrap();
        let ba = decide_lu(&phi, &psi, &opts()).unwrap();
        prop_assert_eq!(ab.label(), ba.label());
        prop_assert_eq!(ab.is_equivalent(), orbit);
    }

    #[test]
    fn verdict_is_invariant_under_dressing(seed in 0u64..10_000, n in 3usize..=4) {
        let mut r = rng(seed);
        let psi = random_state(n, &mut r);
        let phi = random_state(n, &mut r);
        let v = decide_lu(&psi, &phi, &opts()).unwrap();
        let dressed = apply_local_layer(&phi, &random_layer(n, &mut r)).unwrap();
        prop_assert_eq!(v.label(), decide_lu(&psi, &dressed, &opts()).unwrap().label());
    }

    #[test]
    fn conjugation_commutes_with_the_decision(seed in 0u64..10_000, n in 2usize..=4) {
        let mut r = rng(seed);
        let psi = random_state(n, &mut r);
        let (phi, _) = random_orbit_point(&psi, &mut r);
        let v = decide_lu(&conjugate_state(&psi), &conjugate_state(&phi), &opts()).unwrap();
        prop_assert!(v.is_equivalent());
    }

    #[test]
    fn ghz_orbits_are_certified(seed in 0u64..10_000, n in 3usize..=5) {
        let mut r = rng(seed);
        let g = ghz(n).unwrap();
        let (phi, _) = random_orbit_point(&g, &mut r);
        let v = decide_lu(&g, &phi, &opts()).unwrap();
        let cert = v.certificate().cloned();
        prop_assert!(cert.is_some(), "{:?}", v);
        prop_assert!(verify_certificate(&g, &phi, &cert.unwrap()).unwrap() >= 1.0 - 1e-9);
    }
}

#[test]
fn fallback_recovers_an_orbit_without_constraints() {
    let mut r = rng(20);
    for n in 2..=4 {
        let psi = random_state(n, &mut r);
        let (phi, _) = random_orbit_point(&psi, &mut r);
        let cs = luq::pin::ConstraintSet::new(n);
        let layer = luq::decider::numeric_fallback(&psi, &phi, &cs, 32, 7).expect("orbit point");
        assert!(verify_certificate(&psi, &phi, &layer).unwrap() >= 1.0 - 1e-9);
    }
    // Different orbits never reach the acceptance overlap.
    let psi = random_state(3, &mut r);
    let phi = random_state(3, &mut r);
    assert!(
        luq::decider::numeric_fallback(&psi, &phi, &luq::pin::ConstraintSet::new(3), 8, 7)
            .is_none()
    );
}

#[test]
fn swapped_certificates_are_inverse() {
    let mut r = rng(22);
    for n in [2, 3, 5] {
        let psi = random_state(n, &mut r);
        let (phi, _) = random_orbit_point(&psi, &mut r);
        let ab = decide_lu(&psi, &phi, &opts()).unwrap();
        let ba = decide_lu(&phi, &psi, &opts()).unwrap();
        let round = ab.certificate().unwrap().compose(ba.certificate().unwrap());
        for u in round.units() {
            assert!(u.distance_up_to_phase(&luq::Unitary::identity()) < 1e-8);
        }
    }
}

#[test]
fn conjugate_pair_certificates_are_conjugate() {
    let mut r = rng(23);
    let psi = random_state(3, &mut r);
    let (phi, _) = random_orbit_point(&psi, &mut r);
    let a = decide_lu(&psi, &phi, &opts()).unwrap();
    let b = decide_lu(&conjugate_state(&psi), &conjugate_state(&phi), &opts()).unwrap();
    let (la, lb) = (a.certificate().unwrap(), b.certificate().unwrap());
    for (x, y) in la.conj().units().iter().zip(lb.units()) {
        assert!(x.distance_up_to_phase(y) < 1e-7);
    }
}

#[test]
fn highly_degenerate_mixed_states_are_undecided() {
    let mut r = rng(24);
    let vals = [0.15, 0.15, 0.15, 0.15, 0.1, 0.1, 0.1, 0.1];
    let u = random_unitary(8, &mut r);
    let d = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        8,
        vals.iter().map(|v| c(*v, 0.0)),
    ));
    let rho = Density::new(&u * d * u.adjoint()).unwrap();
    let sigma = Density::new(luq::decider::conjugate_density(
        rho.matrix(),
        &random_layer(3, &mut r),
    ))
    .unwrap();
    let v = decide_lu_mixed(&rho, &sigma, &opts()).unwrap();
    assert!(v.is_undecided(), "{v:?}");
}

#[test]
fn classification_is_an_orbit_invariant() {
    let mut r = rng(25);
    for psi in [
        choi([0.5, 0.3, -0.1]),
        bell_pair_phase_state(0.2, 0.5, 1.0, 0.7).unwrap(),
        random_state(4, &mut r),
    ] {
        let (phi, _) = random_orbit_point(&psi, &mut r);
        assert_eq!(
            classify_4(&psi).unwrap().label,
            classify_4(&phi).unwrap().label
        );
    }
}
