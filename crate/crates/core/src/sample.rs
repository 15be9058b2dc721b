//! Haar-random states and unitaries from a seedable generator.

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{dmatrix_to_m2, dmatrix_to_m4, M4};
use crate::tensor::{apply_local_layer, PureState};
use crate::{Layer, State, Unitary, C64};

/// Deterministic generator used throughout the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-random pure state on `n` qubits.
pub fn random_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> State {
    let amp = (0..1usize << n).map(|_| gaussian(rng)).collect();
    PureState::normalized(n, amp).expect("nonzero gaussian vector")
}

/// Haar-random `d × d` unitary (QR of a Ginibre matrix with phase fix).
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<C64> {
    let g = DMatrix::from_fn(d, d, |_, _| gaussian(rng));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let rjj = r[(j, j)];
        let ph = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= ph;
        }
    }
    q
}

pub fn random_unitary2<R: Rng + ?Sized>(rng: &mut R) -> Unitary {
    Unitary::new_unchecked(dmatrix_to_m2(&random_unitary(2, rng)))
}

pub fn random_unitary4<R: Rng + ?Sized>(rng: &mut R) -> M4 {
    dmatrix_to_m4(&random_unitary(4, rng))
}

/// Random product layer with a random global phase.
pub fn random_layer<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Layer {
    let phase = rng.random::<f64>() * std::f64::consts::TAU;
    Layer::new(phase, (0..n).map(|_| random_unitary2(rng)).collect())
}

/// `(layer · ψ, layer)` for a fresh random layer.
pub fn random_orbit_point<R: Rng + ?Sized>(psi: &State, rng: &mut R) -> (State, Layer) {
    let layer = random_layer(psi.n(), rng);
    (
        apply_local_layer(psi, &layer).expect("matching size"),
        layer,
    )
}
