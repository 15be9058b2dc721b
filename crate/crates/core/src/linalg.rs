//! Small fixed-size helpers over `f64` shared by the two-qubit kit, the pin
//! engine and the decider.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, Matrix2, Matrix3, Matrix4, Vector3};

use crate::tensor::{eigh2, Pauli};
use crate::C64;

pub type M2 = Matrix2<C64>;
pub type M4 = Matrix4<C64>;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

pub fn pauli(p: Pauli) -> M2 {
    p.matrix::<f64>()
}

pub fn pauli_index(k: usize) -> M2 {
    match k {
        0 => M2::identity(),
        1 => pauli(Pauli::X),
        2 => pauli(Pauli::Y),
        3 => pauli(Pauli::Z),
        _ => panic!("Pauli index {k} out of range"),
    }
}

pub fn kron2(a: &M2, b: &M2) -> M4 {
    let mut out = M4::zeros();
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[(2 * i + k, 2 * j + l)] = a[(i, j)] * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn m4_to_dmatrix(m: &M4) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |i, j| m[(i, j)])
}

pub fn dmatrix_to_m4(m: &DMatrix<C64>) -> M4 {
    M4::from_fn(|i, j| m[(i, j)])
}

pub fn dmatrix_to_m2(m: &DMatrix<C64>) -> M2 {
    M2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// Bloch form of a 2×2 matrix: `H = h₀ 𝟙 + h·σ` (complex coefficients).
pub fn pauli_coefficients(h: &M2) -> [C64; 4] {
    let mut out = [C64::new(0.0, 0.0); 4];
    for (k, o) in out.iter_mut().enumerate() {
        *o = (pauli_index(k) * h).trace() * 0.5;
    }
    out
}

/// Real Bloch vector of the Hermitian part of `h`.
pub fn bloch_vector(h: &M2) -> Vector3<f64> {
    let p = pauli_coefficients(h);
    Vector3::new(p[1].re, p[2].re, p[3].re)
}

pub fn from_bloch(h0: f64, v: &Vector3<f64>) -> M2 {
    M2::identity() * c(h0, 0.0)
        + pauli(Pauli::X) * c(v.x, 0.0)
        + pauli(Pauli::Y) * c(v.y, 0.0)
        + pauli(Pauli::Z) * c(v.z, 0.0)
}

/// Unitary `W` with `W (n̂·σ) W† = Z`; `n` need not be normalized.
pub fn frame_for_axis(n: &Vector3<f64>) -> M2 {
    let (_, v) = eigh2(&from_bloch(0.0, n));
    v.adjoint()
}

/// Unitary diagonalizing a Hermitian 2×2 matrix with the larger eigenvalue first.
pub fn diagonalizer(h: &M2) -> ([f64; 2], M2) {
    let (vals, v) = eigh2(h);
    (vals, v.adjoint())
}

pub fn is_unitary2(m: &M2, tol: f64) -> bool {
    (m * m.adjoint() - M2::identity()).norm() <= tol
}

pub fn is_unitary4(m: &M4, tol: f64) -> bool {
    (m * m.adjoint() - M4::identity()).norm() <= tol
}

/// Splits a 4×4 product unitary into `phase · (A ⊗ B)` with `A`, `B` in SU(2).
pub fn factor_product(k: &M4) -> Option<(C64, M2, M2)> {
    let mut best = (0, 0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            let blk = k.fixed_view::<2, 2>(2 * i, 2 * j);
            let nrm = blk.norm();
            if nrm > best.2 {
                best = (i, j, nrm);
            }
        }
    }
    if best.2 < 1e-12 {
        return None;
    }
    let blk: M2 = k.fixed_view::<2, 2>(2 * best.0, 2 * best.1).into_owned();
    let b = to_su2(&blk)?;
    let mut a = M2::zeros();
    for i in 0..2 {
        for j in 0..2 {
            let sub: M2 = k.fixed_view::<2, 2>(2 * i, 2 * j).into_owned();
            a[(i, j)] = (b.adjoint() * sub).trace() * 0.5;
        }
    }
    let det = a.determinant();
    if det.norm() < 1e-12 {
        return None;
    }
    let phase = det.sqrt();
    let a = a / phase;
    let rebuilt = kron2(&a, &b) * phase;
    if (rebuilt - k).norm() > 1e-8 * (1.0 + k.norm()) {
        return None;
    }
    Some((phase, a, b))
}

/// Rescales a matrix proportional to a unitary into SU(2).
pub fn to_su2(m: &M2) -> Option<M2> {
    let det = m.determinant();
    if det.norm() < 1e-14 {
        return None;
    }
    Some(m / det.sqrt())
}

/// `U_mb` with `|00⟩→|Φ⁺⟩`, `|01⟩→−i|Φ⁻⟩`, `|10⟩→|Ψ⁻⟩`, `|11⟩→−i|Ψ⁺⟩`.
pub fn magic_basis() -> M4 {
    let s = FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    let r = c(s, 0.0);
    let i = c(0.0, s);
    // columns: Φ⁺, −iΦ⁻, Ψ⁻, −iΨ⁺
    M4::new(
        r, -i, z, z, //
        z, z, r, -i, //
        z, z, -r, -i, //
        r, i, z, z,
    )
}

/// The four Bell states in the order Φ⁺, Φ⁻, Ψ⁺, Ψ⁻.
pub fn bell_vectors() -> [[C64; 4]; 4] {
    let s = FRAC_1_SQRT_2;
    let z = c(0.0, 0.0);
    [
        [c(s, 0.0), z, z, c(s, 0.0)],
        [c(s, 0.0), z, z, c(-s, 0.0)],
        [z, c(s, 0.0), c(s, 0.0), z],
        [z, c(s, 0.0), c(-s, 0.0), z],
    ]
}

/// Reduces an angle into `(-π, π]`.
pub fn wrap_pi(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Determinant of a real 3×3 matrix.
pub fn det3(m: &Matrix3<f64>) -> f64 {
    m.determinant()
}

/// Symmetric eigen-decomposition of a real 3×3 matrix, descending.
pub fn sym_eigen3(m: &Matrix3<f64>) -> ([f64; 3], Matrix3<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let vals = [
        eig.eigenvalues[order[0]],
        eig.eigenvalues[order[1]],
        eig.eigenvalues[order[2]],
    ];
    let mut vecs = Matrix3::zeros();
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// `exp(-i θ/2 n̂·σ)` for a unit axis.
pub fn rotation_unitary(n: &Vector3<f64>, theta: f64) -> M2 {
    let (s, co) = (theta * 0.5).sin_cos();
    M2::identity() * c(co, 0.0)
        - (pauli(Pauli::X) * c(n.x, 0.0)
            + pauli(Pauli::Y) * c(n.y, 0.0)
            + pauli(Pauli::Z) * c(n.z, 0.0))
            * c(0.0, s)
}

/// Frobenius distance between `a` and `b` after optimal global phase.
pub fn phase_distance2(a: &M2, b: &M2) -> f64 {
    let ip = (a.adjoint() * b).trace();
    let ph = if ip.norm() > 0.0 {
        ip / ip.norm()
    } else {
        c(1.0, 0.0)
    };
    (a * ph - b).norm()
}
