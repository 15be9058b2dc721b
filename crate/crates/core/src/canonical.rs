//! Trace decomposition and the standard form of generic states.

use crate::error::{LuError, Result};
use crate::linalg::{bloch_vector, diagonalizer, dmatrix_to_m2};
use crate::phase::{zero_support, AngleSystem, PhaseAssignment, TOL_ZERO_REL};
use crate::tensor::{apply_local_layer, bit, partial_trace, pauli_expectation};
use crate::{Layer, Pauli, State, Unitary};

/// Default eigenvalue-gap threshold below which `ρᵢ` counts as maximally mixed.
pub const DEGENERACY: f64 = 1e-9;

/// A state whose single-qubit marginals are diagonal, with the layer that
/// produced it (`state = layer · original`).
#[derive(Clone, Debug)]
pub struct TraceDecomposition {
    pub state: State,
    pub layer: Layer,
    /// Diagonal entries of every marginal are in descending order.
    pub sorted: bool,
    /// No marginal is maximally mixed.
    pub generic: bool,
    /// Qubits whose marginal is maximally mixed (left untouched).
    pub degenerate: Vec<usize>,
}

/// Diagonalizes every single-qubit marginal, larger eigenvalue first.
pub fn trace_decompose(psi: &State) -> Result<TraceDecomposition> {
    trace_decompose_with(psi, DEGENERACY)
}

pub fn trace_decompose_with(psi: &State, degeneracy: f64) -> Result<TraceDecomposition> {
    let n = psi.n();
    let mut units = Vec::with_capacity(n);
    let mut degenerate = Vec::new();
    for q in 0..n {
        let rho = dmatrix_to_m2(partial_trace(psi, &[q])?.matrix());
        let (vals, w) = diagonalizer(&rho);
        if vals[0] - vals[1] <= degeneracy {
            degenerate.push(q);
            units.push(Unitary::identity());
        } else {
            units.push(Unitary::new_unchecked(w));
        }
    }
    let layer = Layer::new(0.0, units);
    let state = apply_local_layer(psi, &layer)?;
    Ok(TraceDecomposition {
        state,
        layer,
        sorted: true,
        generic: degenerate.is_empty(),
        degenerate,
    })
}

/// Azimuth `φ` of the Bloch vector of `ρ_q`, so `cot φ = ⟨X⟩/⟨Y⟩`.
pub fn marginal_azimuth(psi: &State, q: usize) -> Result<f64> {
    let x = pauli_expectation(psi, q, Pauli::X)?;
    let y = pauli_expectation(psi, q, Pauli::Y)?;
    Ok(y.atan2(x))
}

/// Azimuth of the axis a trace decomposition rotated onto `z` for qubit `q`.
pub fn decomposition_azimuth(td: &TraceDecomposition, q: usize) -> f64 {
    // ρ_q ∝ 𝟙 + r W†ZW, so the axis is the Bloch vector of W†ZW.
    let w = td.layer.unit(q).matrix();
    let axis = bloch_vector(&(w.adjoint() * crate::linalg::pauli(Pauli::Z) * w));
    axis.y.atan2(axis.x)
}

/// Sorted trace decomposition with fixed phases: the unique representative
/// of the LU orbit of a generic state.
///
/// Phases: basis indices are visited in increasing order and each nonzero
/// amplitude is made real and positive unless an earlier choice already
/// forces its phase.
pub fn standard_form(psi: &State) -> Result<(State, Layer)> {
    let td = trace_decompose(psi)?;
    if let Some(&q) = td.degenerate.first() {
        return Err(LuError::NonGenericState(q));
    }
    let n = psi.n();
    let amp = td.state.amplitudes();
    let zeros = zero_support(amp, TOL_ZERO_REL);
    let mut sys = AngleSystem::new(n + 1);
    for (i, a) in amp.iter().enumerate() {
        if zeros.contains(i) {
            continue;
        }
        let mut coef = vec![1i64; n + 1];
        for k in 0..n {
            coef[k + 1] = bit(i, k, n) as i64;
        }
        let mut trial = sys.clone();
        if trial.insert(coef, -a.arg(), 1e-9 / a.norm().max(1e-300)) {
            sys = trial;
        }
    }
    let x = sys.solve();
    let pa = PhaseAssignment {
        alpha0: x[0],
        alphas: x[1..].to_vec(),
    };
    let z = pa.as_layer();
    let layer = z.compose(&td.layer);
    let state = apply_local_layer(psi, &layer)?;
    Ok((state, layer))
}
