//! Local-unitary (LU) equivalence of multi-qubit pure states.
//!
//! Given two n-qubit states the decider either returns a product of
//! single-qubit unitaries mapping one onto the other (checked before it is
//! returned), a witness that no such product exists, or an explicit
//! "undecided" outcome. Around it sit the usual two-qubit tools (Bell
//! diagonalization, Schmidt splits, Cartan phases of two-qubit gates),
//! class labels for two to four qubits and constructors for the standard
//! example states.
//!
//! The dense state types are generic over [`Real`] (`f32` or `f64`); the
//! decision procedures work on `f64`, exposed through the aliases below.

pub mod canonical;
pub mod catalog;
pub mod decider;
pub mod error;
pub mod linalg;
pub mod phase;
pub mod pin;
pub mod sample;
pub mod scalar;
pub mod tensor;
pub mod two_qubit;
pub mod verdict;

pub use error::{LuError, Result};
pub use scalar::Real;
pub use tensor::Pauli;
pub use verdict::{Verdict, Witness};

/// Complex double.
pub type C64 = num_complex::Complex<f64>;
/// Pure state over `f64`.
pub type State = tensor::PureState<f64>;
/// Density matrix over `f64`.
pub type Density = tensor::DensityMatrix<f64>;
/// Single-qubit unitary over `f64`.
pub type Unitary = tensor::Unitary2<f64>;
/// Product layer over `f64`.
pub type Layer = tensor::LocalLayer<f64>;
/// Spectrum over `f64`.
pub type Spectrum = tensor::Spectrum<f64>;

/// Single-precision variants of the dense types.
pub mod f32 {
    pub type State = crate::tensor::PureState<f32>;
    pub type Density = crate::tensor::DensityMatrix<f32>;
    pub type Unitary = crate::tensor::Unitary2<f32>;
    pub type Layer = crate::tensor::LocalLayer<f32>;
}
