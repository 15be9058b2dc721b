use std::f64::consts::{FRAC_PI_4, PI};

use luq::linalg::{c, kron2, magic_basis, pauli, M2, M4};
use luq::sample::{random_unitary2, random_unitary4, rng};
use luq::tensor::{partial_trace, PureState};
use luq::two_qubit::*;
use luq::{Density, Pauli, C64};
use nalgebra::{DMatrix, Matrix3, Vector3};
use proptest::prelude::*;

fn cnot() -> M4 {
    let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
    M4::new(l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o)
}

fn swap() -> M4 {
    let (o, l) = (c(0.0, 0.0), c(1.0, 0.0));
    M4::new(l, o, o, o, o, o, l, o, o, l, o, o, o, o, o, l)
}

/// Sorted arguments of the eigenvalues of `ŨŨᵀ` after normalizing to SU(4);
/// a dressing-invariant fingerprint computed without any canonicalization.
fn gram_phases(u: &M4) -> Vec<f64> {
    let g = C64::from_polar(1.0, u.determinant().arg() / 4.0);
    let ut = magic_basis().adjoint() * (u / g) * magic_basis();
    let m = ut * ut.transpose();
    let mut v: Vec<f64> = m
        .schur()
        .eigenvalues()
        .expect("normal matrix")
        .iter()
        .map(|z| z.arg())
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

fn same_up_to_sign(a: &[f64], b: &[f64]) -> bool {
    // Dividing by a fourth root of unity permutes the sorted list; compare as sets on the circle.
    let close = |x: f64, y: f64| {
        let d = (x - y).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d) < 1e-7
    };
    for k in 0..4 {
        let shift = k as f64 * PI;
        let mut used = [false; 4];
        let ok = a.iter().all(|&x| {
            if let Some(j) = (0..4).find(|&j| !used[j] && close(x + shift, b[j])) {
                used[j] = true;
                true
            } else {
                false
            }
        });
        if ok {
            return true;
        }
    }
    false
}

#[test]
fn named_gates_have_expected_content() {
    let id = nonlocal_content(&M4::identity()).unwrap();
    assert!(id.content.phases.iter().all(|p| p.abs() < 1e-12));
    let cn = nonlocal_content(&cnot()).unwrap();
    assert!((cn.content.phases[0] - FRAC_PI_4).abs() < 1e-9);
    assert!(cn.content.phases[1].abs() < 1e-9 && cn.content.phases[2].abs() < 1e-9);
    assert!((cn.reconstruct() - cnot()).norm() < 1e-9);
    let sw = nonlocal_content(&swap()).unwrap();
    for p in sw.content.phases {
        assert!((p - FRAC_PI_4).abs() < 1e-9);
    }
    assert!((sw.reconstruct() - swap()).norm() < 1e-9);
}

#[test]
fn canonical_content_matches_gram_fingerprint() {
    let mut r = rng(11);
    for _ in 0..100 {
        let u = random_unitary4(&mut r);
        let cd = nonlocal_content(&u).unwrap();
        assert!(cd.content.is_canonical(1e-12));
        assert!((cd.reconstruct() - u).norm() < 1e-9);
        assert!(same_up_to_sign(
            &gram_phases(&u),
            &gram_phases(&u_d(&cd.content.phases))
        ));
    }
}

#[test]
fn content_is_invariant_under_dressing() {
    let mut r = rng(12);
    for _ in 0..50 {
        let u = random_unitary4(&mut r);
        let base = nonlocal_content(&u).unwrap().content;
        let l = kron2(
            random_unitary2(&mut r).matrix(),
            random_unitary2(&mut r).matrix(),
        );
        let rr = kron2(
            random_unitary2(&mut r).matrix(),
            random_unitary2(&mut r).matrix(),
        );
        let dressed = nonlocal_content(&(l * u * rr)).unwrap().content;
        assert!(
            base.max_difference(&dressed) < 1e-9,
            "{base:?} vs {dressed:?}"
        );
    }
}

#[test]
fn choi_state_has_mixed_input_marginal() {
    let nc = NonlocalContent::new([0.7, 0.3, -0.1]);
    let psi = choi_state(&nc);
    let rho = partial_trace(&psi, &[0, 1]).unwrap();
    assert!((rho.matrix() - DMatrix::identity(4, 4).map(|x: C64| x * 0.25)).norm() < 1e-12);
    let zero = choi_state(&NonlocalContent::new([0.0; 3]));
    // |Φ⁺⟩₁₃|Φ⁺⟩₂₄: amplitude 1/2 on |ijij⟩.
    for (i, a) in zero.amplitudes().iter().enumerate() {
        let expect = if i >> 2 == i & 3 { 0.5 } else { 0.0 };
        assert!((a - c(expect, 0.0)).norm() < 1e-12);
    }
}

#[test]
fn correlation_data_of_bell_state() {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phi = PureState::new(2, vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap();
    let cd = correlation_data(&Density::from_pure(&phi)).unwrap();
    // Direct Pauli traces: ⟨XX⟩ = 1, ⟨YY⟩ = −1, ⟨ZZ⟩ = 1.
    assert!((cd.lambda - Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0))).norm() < 1e-12);
    assert!(cd.r.norm() < 1e-12 && cd.s.norm() < 1e-12);
}

#[test]
fn rotation_of_named_gates() {
    let h = luq::Unitary::hadamard();
    let o = rotation_from_unitary(&h);
    let expect = Matrix3::new(0.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0, 0.0);
    assert!((o.matrix() - expect).norm() < 1e-12);
    let t = 0.7;
    let oz = rotation_from_unitary(&luq::Unitary::phase(t));
    let rz = Matrix3::new(t.cos(), -t.sin(), 0.0, t.sin(), t.cos(), 0.0, 0.0, 0.0, 1.0);
    assert!((oz.matrix() - rz).norm() < 1e-12);
}

fn werner(lambda: f64) -> Density {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v = [c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)];
    let m = DMatrix::from_fn(4, 4, |i, j| {
        let id = if i == j { 0.25 * (1.0 - lambda) } else { 0.0 };
        c(id, 0.0) + v[i] * v[j].conj() * lambda
    });
    Density::new(m).unwrap()
}

fn bell_diag_matrix(d: [f64; 3]) -> DMatrix<C64> {
    let mut m = M4::identity();
    for (k, p) in [Pauli::X, Pauli::Y, Pauli::Z].into_iter().enumerate() {
        m += kron2(&pauli(p), &pauli(p)) * c(d[k], 0.0);
    }
    DMatrix::from_fn(4, 4, |i, j| m[(i, j)] * 0.25)
}

#[test]
fn werner_state_diagonalizes_to_negative_isotropic() {
    let bd = bell_diagonalize(&werner(0.4), 1e-9).unwrap();
    for d in bd.d {
        assert!((d + 0.4).abs() < 1e-12);
    }
}

#[test]
fn mixed_two_qubit_cases() {
    let id = Density::maximally_mixed(2);
    assert!(lu_equiv_mixed2(&id, &id, 1e-9).unwrap().is_equivalent());
    assert!(lu_equiv_mixed2(&werner(0.3), &werner(0.5), 1e-9)
        .unwrap()
        .is_not_equivalent());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phi = Density::from_pure(
        &PureState::new(2, vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap(),
    );
    let psi = Density::from_pure(
        &PureState::new(2, vec![c(0.0, 0.0), c(s, 0.0), c(-s, 0.0), c(0.0, 0.0)]).unwrap(),
    );
    let v = lu_equiv_mixed2(&phi, &psi, 1e-9).unwrap();
    let cert = v
        .certificate()
        .expect("maximally entangled states are equivalent");
    let k = kron2(cert.unit(0).matrix(), cert.unit(1).matrix());
    let km = DMatrix::from_fn(4, 4, |i, j| k[(i, j)]);
    assert!((&km * psi.matrix() * km.adjoint() - phi.matrix()).norm() < 1e-8);
}

fn conj_local(m: &DMatrix<C64>, a: &M2, b: &M2) -> DMatrix<C64> {
    let k = kron2(a, b);
    let km = DMatrix::from_fn(4, 4, |i, j| k[(i, j)]);
    &km * m * km.adjoint()
}

#[test]
fn mixed2_recovers_general_orbits() {
    let mut r = rng(21);
    for _ in 0..30 {
        // Random full-rank two-qubit state.
        let g = luq::sample::random_unitary(4, &mut r);
        let w: Vec<f64> = vec![0.4, 0.3, 0.2, 0.1];
        let d = DMatrix::from_fn(4, 4, |i, j| if i == j { c(w[i], 0.0) } else { c(0.0, 0.0) });
        let sigma = &g * d * g.adjoint();
        let (a, b) = (random_unitary2(&mut r), random_unitary2(&mut r));
        let rho = conj_local(&sigma, a.matrix(), b.matrix());
        let v = lu_equiv_mixed2(
            &Density::new(rho.clone()).unwrap(),
            &Density::new(sigma.clone()).unwrap(),
            1e-9,
        )
        .unwrap();
        let cert = v.certificate().unwrap_or_else(|| panic!("{v:?}"));
        let back = conj_local(&sigma, cert.unit(0).matrix(), cert.unit(1).matrix());
        assert!((back - rho).norm() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bell_diagonal_reconstructs(d1 in -0.3f64..0.3, d2 in -0.3f64..0.3, d3 in -0.3f64..0.3, seed in 0u64..1000) {
        let mut r = rng(seed);
        let (a, b) = (random_unitary2(&mut r), random_unitary2(&mut r));
        let rho = conj_local(&bell_diag_matrix([d1, d2, d3]), a.matrix(), b.matrix());
        let bd = bell_diagonalize(&Density::new(rho.clone()).unwrap(), 1e-9).unwrap();
        let back = conj_local(&rho, bd.u1.matrix(), bd.u2.matrix());
        prop_assert!((back - bell_diag_matrix(bd.d)).norm() < 1e-9);
        prop_assert!(bd.d[0].abs() + 1e-12 >= bd.d[1].abs() && bd.d[1].abs() + 1e-12 >= bd.d[2].abs());
        prop_assert!(bd.d[0] >= 0.0 || bd.d.iter().all(|x| (x - bd.d[0]).abs() < 1e-9));
        // Singular values of Λ are the |d| entries.
        let mut sv: Vec<f64> = Matrix3::from_diagonal(&Vector3::new(d1, d2, d3)).singular_values().iter().copied().collect();
        sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
        for k in 0..3 { prop_assert!((sv[k] - bd.d[k].abs()).abs() < 1e-9); }
    }

    #[test]
    fn mixed_two_qubit_both_directions(d1 in -0.3f64..0.3, d2 in -0.3f64..0.3, d3 in -0.3f64..0.3, seed in 0u64..1000) {
        let mut r = rng(seed);
        let base = bell_diag_matrix([d1, d2, d3]);
        let rho = conj_local(&base, random_unitary2(&mut r).matrix(), random_unitary2(&mut r).matrix());
        let sigma = conj_local(&base, random_unitary2(&mut r).matrix(), random_unitary2(&mut r).matrix());
        let v = lu_equiv_mixed2(&Density::new(rho.clone()).unwrap(), &Density::new(sigma.clone()).unwrap(), 1e-9).unwrap();
        prop_assert!(v.is_equivalent(), "{:?}", v);
        let shifted = conj_local(&bell_diag_matrix([d1 + 0.01, d2, d3]), &M2::identity(), &M2::identity());
        let v = lu_equiv_mixed2(&Density::new(rho).unwrap(), &Density::new(shifted).unwrap(), 1e-9).unwrap();
        prop_assert!(v.is_not_equivalent());
    }

    #[test]
    fn basis_map_recovers_dressing(seed in 0u64..1000) {
        let mut r = rng(seed);
        let (a, b) = (random_unitary2(&mut r), random_unitary2(&mut r));
        let k = kron2(a.matrix(), b.matrix());
        let bell = luq::linalg::bell_vectors();
        let mut rotated = bell;
        for i in 0..4 {
            let v = k * nalgebra::Vector4::from_column_slice(&bell[i]);
            rotated[i] = [v[0], v[1], v[2], v[3]];
        }
        let (u1, u2, g) = max_entangled_basis_map(&rotated, &bell, 1e-9).unwrap();
        let kk = kron2(u1.matrix(), u2.matrix());
        for i in 0..4 {
            let v = kk * nalgebra::Vector4::from_column_slice(&bell[i]) * C64::from_polar(1.0, g[i]);
            for j in 0..4 { prop_assert!((v[j] - rotated[i][j]).norm() < 1e-9); }
        }
    }
}
