//! Dense n-qubit states, reduced density matrices and single-qubit layers.
//!
//! Qubits are numbered from zero and qubit 0 is the most significant bit of
//! a basis index: for `n = 3` the index `0b100` is `|1⟩|0⟩|0⟩`.

use std::fmt;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex;
use num_traits::{Float, Zero};

use crate::error::{LuError, Result};
use crate::scalar::Real;

/// Norm tolerance accepted by [`PureState::new`].
pub const TOL_NORM: f64 = 1e-9;
/// Hermiticity, trace and eigenvalue-floor tolerance for density matrices.
pub const TOL_DENSITY: f64 = 1e-10;

/// Largest supported register.
pub const MAX_QUBITS: usize = 12;

/// Tolerance widened to the resolution of `T`.
pub fn tol_for<T: Real>(tol: f64) -> T {
    let eps: T = Float::epsilon();
    let floor: T = eps * T::lit(256.0);
    Float::max(T::lit(tol), floor)
}

/// Value (0 or 1) of qubit `q` in basis index `i` of an `n`-qubit register.
#[inline]
pub fn bit(i: usize, q: usize, n: usize) -> usize {
    (i >> (n - 1 - q)) & 1
}

/// Bit mask selecting qubit `q` in an `n`-qubit index.
#[inline]
pub fn mask(q: usize, n: usize) -> usize {
    1 << (n - 1 - q)
}

/// A normalized pure state of `n` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState<T: Real> {
    n: usize,
    amp: Vec<Complex<T>>,
}

impl<T: Real> PureState<T> {
    /// Builds a state, requiring unit norm within [`TOL_NORM`].
    pub fn new(n: usize, amp: Vec<Complex<T>>) -> Result<Self> {
        check_register(n, amp.len())?;
        let norm = norm_sqr(&amp).to_f64_lossy().sqrt();
        if (norm - 1.0).abs() > tol_for::<T>(TOL_NORM).to_f64_lossy() {
            return Err(LuError::NotNormalized { norm });
        }
        Ok(Self { n, amp })
    }

    /// Builds a state after dividing by the norm.
    pub fn normalized(n: usize, mut amp: Vec<Complex<T>>) -> Result<Self> {
        check_register(n, amp.len())?;
        let norm = Float::sqrt(norm_sqr(&amp));
        if norm <= T::zero() || !Float::is_finite(norm) {
            return Err(LuError::NotNormalized {
                norm: norm.to_f64_lossy(),
            });
        }
        for a in &mut amp {
            *a = *a / norm;
        }
        Ok(Self { n, amp })
    }

    /// The computational basis state `|index⟩`.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n;
        if index >= dim {
            return Err(LuError::IndexOutOfRange { index, len: dim });
        }
        let mut amp = vec![Complex::zero(); dim];
        amp[index] = Complex::new(T::one(), T::zero());
        Self::new(n, amp)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amp.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amp
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amp
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amp
            .iter()
            .zip(&other.amp)
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    /// Tensor product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Result<Self> {
        let mut amp = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amp {
            for b in &other.amp {
                amp.push(a * b);
            }
        }
        Self::normalized(self.n + other.n, amp)
    }

    /// Converts the scalar type.
    pub fn cast<U: Real>(&self) -> PureState<U> {
        PureState {
            n: self.n,
            amp: self
                .amp
                .iter()
                .map(|a| Complex::new(U::lit(a.re.to_f64_lossy()), U::lit(a.im.to_f64_lossy())))
                .collect(),
        }
    }

    /// Multiplies every amplitude by `e^{iθ}`.
    pub fn with_phase(&self, theta: T) -> Self {
        let p = Complex::from_polar(T::one(), theta);
        Self {
            n: self.n,
            amp: self.amp.iter().map(|a| a * p).collect(),
        }
    }
}

fn check_register(n: usize, len: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(LuError::UnsupportedQubitCount(n));
    }
    if len != 1usize << n {
        return Err(LuError::DimensionMismatch {
            expected: 1 << n,
            found: len,
        });
    }
    Ok(())
}

fn norm_sqr<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().fold(T::zero(), |acc, a| acc + a.norm_sqr())
}

/// Reduced or full density matrix of `k` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    mat: DMatrix<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates Hermiticity, unit trace and the eigenvalue floor.
    pub fn new(mat: DMatrix<Complex<T>>) -> Result<Self> {
        let dim = mat.nrows();
        if dim != mat.ncols() || !dim.is_power_of_two() || dim < 2 {
            return Err(LuError::WrongDimension {
                expected: "square power of two",
                found: dim,
            });
        }
        let tol = tol_for::<T>(TOL_DENSITY).to_f64_lossy();
        let herm = (&mat - mat.adjoint()).norm().to_f64_lossy();
        if herm > tol {
            return Err(LuError::NotHermitian { residual: herm });
        }
        let rho = Self { mat };
        let tr = rho.trace().to_f64_lossy();
        if (tr - 1.0).abs() > tol {
            return Err(LuError::NotNormalized { norm: tr });
        }
        let min = rho
            .spectrum()
            .values
            .last()
            .copied()
            .unwrap_or_else(T::zero);
        if min.to_f64_lossy() < -tol {
            return Err(LuError::NotPositive {
                eigenvalue: min.to_f64_lossy(),
            });
        }
        Ok(rho)
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(psi: &PureState<T>) -> Self {
        let v = nalgebra::DVector::from_column_slice(psi.amplitudes());
        Self {
            mat: &v * v.adjoint(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn qubits(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &DMatrix<Complex<T>> {
        &self.mat
    }

    pub fn trace(&self) -> T {
        (0..self.dim()).fold(T::zero(), |acc, i| acc + self.mat[(i, i)].re)
    }

    /// Eigenvalues, sorted descending.
    pub fn spectrum(&self) -> Spectrum<T> {
        Spectrum {
            values: hermitian_eigen(&self.mat).0,
        }
    }

    /// Eigenvalues (descending) with matching orthonormal eigenvector columns.
    pub fn eigen(&self) -> (Vec<T>, DMatrix<Complex<T>>) {
        hermitian_eigen(&self.mat)
    }

    /// Frobenius distance to another matrix of the same size.
    pub fn distance(&self, other: &Self) -> T {
        (&self.mat - &other.mat).norm()
    }

    /// `U ρ U†` for a unitary on the full space.
    pub fn conjugated(&self, u: &DMatrix<Complex<T>>) -> Self {
        Self {
            mat: u * &self.mat * u.adjoint(),
        }
    }

    /// Maximally mixed state on `k` qubits.
    pub fn maximally_mixed(k: usize) -> Self {
        let dim = 1usize << k;
        let v = Complex::new(T::one() / T::lit(dim as f64), T::zero());
        Self {
            mat: DMatrix::from_diagonal_element(dim, dim, v),
        }
    }
}

/// Eigenvalues sorted descending, as returned by [`marginal_spectrum`].
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T: Real> {
    pub values: Vec<T>,
}

impl<T: Real> Spectrum<T> {
    /// Largest entrywise gap after zero-padding the shorter spectrum.
    pub fn max_difference(&self, other: &Self) -> T {
        let len = self.values.len().max(other.values.len());
        (0..len)
            .map(|i| {
                let a = self.values.get(i).copied().unwrap_or_else(T::zero);
                let b = other.values.get(i).copied().unwrap_or_else(T::zero);
                Float::abs(a - b)
            })
            .fold(T::zero(), Float::max)
    }
}

impl<T: Real> fmt::Display for Spectrum<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.values.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v:.12}")?;
        }
        write!(f, ")")
    }
}

/// Hermitian eigendecomposition with descending eigenvalues.
///
/// 2×2 inputs use the closed form; larger ones go through nalgebra after
/// re-symmetrizing.
pub fn hermitian_eigen<T: Real>(m: &DMatrix<Complex<T>>) -> (Vec<T>, DMatrix<Complex<T>>) {
    let dim = m.nrows();
    if dim == 2 {
        let h = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let (vals, vecs) = eigh2(&h);
        let mut out = DMatrix::zeros(2, 2);
        out.copy_from(&vecs);
        return (vals.to_vec(), out);
    }
    let sym = (m + m.adjoint()).map(|z| z * T::lit(0.5));
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(dim, dim);
    for (c, &i) in order.iter().enumerate() {
        vecs.set_column(c, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Closed-form eigensystem of a 2×2 Hermitian matrix.
///
/// Returns `[λ₊, λ₋]` and a unitary whose columns are the eigenvectors.
pub fn eigh2<T: Real>(h: &Matrix2<Complex<T>>) -> ([T; 2], Matrix2<Complex<T>>) {
    let half = T::lit(0.5);
    let a = h[(0, 0)].re;
    let d = h[(1, 1)].re;
    let b = (h[(0, 1)] + h[(1, 0)].conj()) * half;
    let mean = (a + d) * half;
    let nz = (a - d) * half;
    let nx = b.re;
    let ny = -b.im;
    let r = Float::sqrt(nx * nx + ny * ny + nz * nz);
    if r <= T::zero() {
        return ([mean, mean], Matrix2::identity());
    }
    let (ux, uy, uz) = (nx / r, ny / r, nz / r);
    // +1 eigenvector of n·σ, branch chosen away from the pole.
    let v = if uz >= T::zero() {
        let c = Float::sqrt(T::lit(2.0) * (T::one() + uz));
        [
            Complex::new((T::one() + uz) / c, T::zero()),
            Complex::new(ux / c, uy / c),
        ]
    } else {
        let c = Float::sqrt(T::lit(2.0) * (T::one() - uz));
        [
            Complex::new(ux / c, -uy / c),
            Complex::new((T::one() - uz) / c, T::zero()),
        ]
    };
    let w = [-v[1].conj(), v[0].conj()];
    ([mean + r, mean - r], Matrix2::new(v[0], w[0], v[1], w[1]))
}

/// Reduced state on the qubits in `keep` (strictly increasing, zero-based).
pub fn partial_trace<T: Real>(state: &PureState<T>, keep: &[usize]) -> Result<DensityMatrix<T>> {
    let m = split_matrix(state, keep)?;
    Ok(DensityMatrix {
        mat: &m * m.adjoint(),
    })
}

/// Reshapes the amplitudes into a `2^|keep| × 2^(n-|keep|)` matrix whose
/// rows are indexed by the kept qubits (in order) and columns by the rest.
pub fn split_matrix<T: Real>(state: &PureState<T>, keep: &[usize]) -> Result<DMatrix<Complex<T>>> {
    let n = state.n();
    validate_subset(keep, n)?;
    let rest: Vec<usize> = (0..n).filter(|q| !keep.contains(q)).collect();
    let k = keep.len();
    let mut m = DMatrix::zeros(1 << k, 1 << (n - k));
    for (i, a) in state.amplitudes().iter().enumerate() {
        let row = gather(i, keep, n);
        let col = gather(i, &rest, n);
        m[(row, col)] = *a;
    }
    Ok(m)
}

/// Packs the bits of `i` at positions `qs` into a new index (first = MSB).
#[inline]
pub fn gather(i: usize, qs: &[usize], n: usize) -> usize {
    qs.iter().fold(0, |acc, &q| (acc << 1) | bit(i, q, n))
}

pub(crate) fn validate_subset(keep: &[usize], n: usize) -> Result<()> {
    let ok =
        !keep.is_empty() && keep.windows(2).all(|w| w[0] < w[1]) && keep.iter().all(|&q| q < n);
    if ok {
        Ok(())
    } else {
        Err(LuError::InvalidSubset {
            subset: keep.to_vec(),
            n,
        })
    }
}

/// Spectrum of the reduced state on `keep`.
pub fn marginal_spectrum<T: Real>(state: &PureState<T>, keep: &[usize]) -> Result<Spectrum<T>> {
    Ok(partial_trace(state, keep)?.spectrum())
}

/// Von Neumann entropy in bits.
pub fn entropy<T: Real>(rho: &DensityMatrix<T>) -> T {
    rho.spectrum()
        .values
        .into_iter()
        .filter(|&l| l > T::zero())
        .fold(T::zero(), |acc, l| acc - l * Float::log2(l))
}

/// Pauli axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix<T: Real>(self) -> Matrix2<Complex<T>> {
        let o = Complex::new(T::zero(), T::zero());
        let l = Complex::new(T::one(), T::zero());
        let i = Complex::new(T::zero(), T::one());
        match self {
            Pauli::X => Matrix2::new(o, l, l, o),
            Pauli::Y => Matrix2::new(o, -i, i, o),
            Pauli::Z => Matrix2::new(l, o, o, -l),
        }
    }
}

/// `⟨ψ|σ_axis^(qubit)|ψ⟩`.
pub fn pauli_expectation<T: Real>(state: &PureState<T>, qubit: usize, axis: Pauli) -> Result<T> {
    let n = state.n();
    if qubit >= n {
        return Err(LuError::IndexOutOfRange {
            index: qubit,
            len: n,
        });
    }
    let amp = state.amplitudes();
    let m = mask(qubit, n);
    let mut acc = Complex::zero();
    for i0 in (0..amp.len()).filter(|i| i & m == 0) {
        let (a0, a1) = (amp[i0], amp[i0 | m]);
        acc = acc
            + match axis {
                Pauli::X => a0.conj() * a1 + a1.conj() * a0,
                Pauli::Y => (a0.conj() * a1 - a1.conj() * a0) * Complex::new(T::zero(), -T::one()),
                Pauli::Z => Complex::new(a0.norm_sqr() - a1.norm_sqr(), T::zero()),
            };
    }
    Ok(acc.re)
}

/// Entrywise complex conjugate `|ψ*⟩`.
pub fn conjugate_state<T: Real>(state: &PureState<T>) -> PureState<T> {
    PureState {
        n: state.n,
        amp: state.amp.iter().map(|a| a.conj()).collect(),
    }
}

/// True when `1 - |⟨ψ|φ⟩| ≤ tol`.
pub fn state_equal_up_to_phase<T: Real>(
    psi: &PureState<T>,
    phi: &PureState<T>,
    tol: T,
) -> Result<bool> {
    if psi.n() != phi.n() {
        return Err(LuError::DimensionMismatch {
            expected: psi.dim(),
            found: phi.dim(),
        });
    }
    Ok(T::one() - psi.inner(phi).norm() <= tol)
}

/// A 2×2 unitary acting on one qubit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Unitary2<T: Real> {
    m: Matrix2<Complex<T>>,
}

/// Unitarity tolerance for [`Unitary2::new`].
pub const TOL_UNITARY: f64 = 1e-10;

impl<T: Real> Unitary2<T> {
    pub fn new(m: Matrix2<Complex<T>>) -> Result<Self> {
        let res = (m * m.adjoint() - Matrix2::identity())
            .norm()
            .to_f64_lossy();
        if res > tol_for::<T>(TOL_UNITARY).to_f64_lossy() {
            return Err(LuError::NotUnitary { residual: res });
        }
        Ok(Self { m })
    }

    /// Wraps a matrix already known to be unitary.
    pub fn new_unchecked(m: Matrix2<Complex<T>>) -> Self {
        Self { m }
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix2::identity(),
        }
    }

    pub fn pauli(p: Pauli) -> Self {
        Self { m: p.matrix() }
    }

    pub fn hadamard() -> Self {
        let s = Complex::new(T::one() / Float::sqrt(T::lit(2.0)), T::zero());
        Self {
            m: Matrix2::new(s, s, s, -s),
        }
    }

    /// Phase gate `Z(α) = diag(1, e^{iα})`.
    pub fn phase(alpha: T) -> Self {
        let o = Complex::new(T::zero(), T::zero());
        Self {
            m: Matrix2::new(
                Complex::new(T::one(), T::zero()),
                o,
                o,
                Complex::from_polar(T::one(), alpha),
            ),
        }
    }

    pub fn matrix(&self) -> &Matrix2<Complex<T>> {
        &self.m
    }

    pub fn dagger(&self) -> Self {
        Self {
            m: self.m.adjoint(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            m: self.m.map(|z| z.conj()),
        }
    }

    /// Matrix product `self · rhs`.
    pub fn then_after(&self, rhs: &Self) -> Self {
        Self { m: self.m * rhs.m }
    }

    /// Distance to `other` after removing the best global phase.
    pub fn distance_up_to_phase(&self, other: &Self) -> T {
        let ip = (self.m.adjoint() * other.m).trace();
        let phase = if ip.norm() > T::zero() {
            ip / ip.norm()
        } else {
            Complex::new(T::one(), T::zero())
        };
        (self.m * phase - other.m).norm()
    }
}

impl<T: Real> std::ops::Mul for Unitary2<T> {
    type Output = Unitary2<T>;
    fn mul(self, rhs: Self) -> Self {
        self.then_after(&rhs)
    }
}

/// A global phase and one single-qubit unitary per qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalLayer<T: Real> {
    global_phase: T,
    units: Vec<Unitary2<T>>,
}

impl<T: Real> LocalLayer<T> {
    /// The global phase is reduced into `[0, 2π)`.
    pub fn new(global_phase: T, units: Vec<Unitary2<T>>) -> Self {
        Self {
            global_phase: wrap_angle(global_phase),
            units,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(T::zero(), vec![Unitary2::identity(); n])
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn global_phase(&self) -> T {
        self.global_phase
    }

    pub fn units(&self) -> &[Unitary2<T>] {
        &self.units
    }

    pub fn unit(&self, q: usize) -> &Unitary2<T> {
        &self.units[q]
    }

    pub fn set_unit(&mut self, q: usize, u: Unitary2<T>) {
        self.units[q] = u;
    }

    /// The layer undoing this one.
    pub fn inverse(&self) -> Self {
        Self::new(
            -self.global_phase,
            self.units.iter().map(Unitary2::dagger).collect(),
        )
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Self) -> Self {
        let units = self
            .units
            .iter()
            .zip(&other.units)
            .map(|(a, b)| *a * *b)
            .collect();
        Self::new(self.global_phase + other.global_phase, units)
    }

    /// Entrywise conjugate of every factor (and negated phase).
    pub fn conj(&self) -> Self {
        Self::new(
            -self.global_phase,
            self.units.iter().map(Unitary2::conj).collect(),
        )
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let tau = T::two_pi();
    let r = a % tau;
    let r = if r < T::zero() { r + tau } else { r };
    if r >= tau {
        T::zero()
    } else {
        r
    }
}

/// Applies a single 2×2 matrix to qubit `q` in place.
pub fn apply_single<T: Real>(amp: &mut [Complex<T>], n: usize, q: usize, u: &Matrix2<Complex<T>>) {
    let m = mask(q, n);
    for i0 in 0..amp.len() {
        if i0 & m != 0 {
            continue;
        }
        let (a0, a1) = (amp[i0], amp[i0 | m]);
        amp[i0] = u[(0, 0)] * a0 + u[(0, 1)] * a1;
        amp[i0 | m] = u[(1, 0)] * a0 + u[(1, 1)] * a1;
    }
}

/// `e^{iθ} (U₀ ⊗ … ⊗ U_{n-1}) |ψ⟩`.
pub fn apply_local_layer<T: Real>(
    state: &PureState<T>,
    layer: &LocalLayer<T>,
) -> Result<PureState<T>> {
    if layer.len() != state.n() {
        return Err(LuError::DimensionMismatch {
            expected: state.n(),
            found: layer.len(),
        });
    }
    let n = state.n();
    let mut amp = state.amp.clone();
    for (q, u) in layer.units.iter().enumerate() {
        apply_single(&mut amp, n, q, &u.m);
    }
    let p = Complex::from_polar(T::one(), layer.global_phase);
    for a in &mut amp {
        *a = *a * p;
    }
    Ok(PureState { n, amp })
}
