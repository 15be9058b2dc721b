//! Named states and families. Every constructor returns a normalized state.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;

use crate::error::{LuError, Result};
use crate::linalg::{bell_vectors, c, cis};
use crate::tensor::PureState;
use crate::two_qubit::{choi_state, NonlocalContent};
use crate::{Density, State, C64};

/// The four Bell states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    fn index(self) -> usize {
        match self {
            BellKind::PhiPlus => 0,
            BellKind::PhiMinus => 1,
            BellKind::PsiPlus => 2,
            BellKind::PsiMinus => 3,
        }
    }
}

fn zeros(n: usize) -> Vec<C64> {
    vec![c(0.0, 0.0); 1 << n]
}

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz(n: usize) -> Result<State> {
    let mut amp = zeros(n);
    amp[0] = c(1.0, 0.0);
    *amp.last_mut().expect("nonempty") = c(1.0, 0.0);
    PureState::normalized(n, amp)
}

pub fn bell(kind: BellKind) -> State {
    PureState::normalized(2, bell_vectors()[kind.index()].to_vec()).expect("unit vector")
}

/// Equal superposition of the weight-one strings.
pub fn w_state(n: usize) -> Result<State> {
    let mut amp = zeros(n);
    for q in 0..n {
        amp[1 << q] = c(1.0, 0.0);
    }
    PureState::normalized(n, amp)
}

/// `2^{-n/2} Σᵢ e^{iαᵢ}|i⟩`.
pub fn lme_phase_state(n: usize, phases: &[f64]) -> Result<State> {
    if phases.len() != 1 << n {
        return Err(LuError::DimensionMismatch {
            expected: 1 << n,
            found: phases.len(),
        });
    }
    PureState::normalized(n, phases.iter().map(|&a| cis(a)).collect())
}

/// `U(φ)|+⟩^{⊗n}` with `U(φ) = 𝟙 − (1 − e^{iφ})|1…1⟩⟨1…1|`.
pub fn controlled_phase_all(n: usize, phi: f64) -> Result<State> {
    let mut phases = vec![0.0; 1 << n];
    *phases.last_mut().expect("nonempty") = phi;
    lme_phase_state(n, &phases)
}

/// `|Φ⁺Φ⁺⟩ + e^{iγ₁}|Φ⁻Φ⁻⟩ + e^{iγ₂}|Ψ⁺Ψ⁺⟩ + √(1−λ) e^{iγ₃}|Ψ⁻Ψ⁻⟩`, pairs on
/// qubits (0,1) and (2,3). The reduced state of qubits 0,1 is
/// proportional to `𝟙 − λ|Ψ⁻⟩⟨Ψ⁻|`.
pub fn bell_pair_phase_state(lambda: f64, g1: f64, g2: f64, g3: f64) -> Result<State> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(LuError::InvalidParameter(format!(
            "lambda = {lambda} outside [0, 1]"
        )));
    }
    let coeffs = [
        c(1.0, 0.0),
        cis(g1),
        cis(g2),
        cis(g3) * (1.0 - lambda).sqrt(),
    ];
    PureState::normalized(4, bell_pair_sum(&coeffs))
}

/// `Σ_k c_k |B_k⟩|B_k⟩` over the Bell basis (Φ⁺, Φ⁻, Ψ⁺, Ψ⁻).
pub(crate) fn bell_pair_sum(coeffs: &[C64; 4]) -> Vec<C64> {
    let b = bell_vectors();
    let mut amp = zeros(4);
    for (k, ck) in coeffs.iter().enumerate() {
        for i in 0..4 {
            for j in 0..4 {
                amp[(i << 2) | j] += ck * b[k][i] * b[k][j];
            }
        }
    }
    amp
}

/// Five-qubit state with every two-qubit marginal maximally mixed:
/// `|+⟩(|Φ⁺Φ⁺⟩ + |Ψ⁺Ψ⁻⟩) + e^{iα}|−⟩(|Φ⁻Φ⁻⟩ + |Ψ⁻Ψ⁺⟩)`, Bell pairs on
/// qubits (1,2) and (3,4).
pub fn five_qubit_all_pairs_mixed(alpha: f64) -> State {
    let b = bell_vectors();
    let pair =
        |x: usize, y: usize| -> Vec<C64> { (0..16).map(|i| b[x][i >> 2] * b[y][i & 3]).collect() };
    let (pp, pm, sp, sm) = (0, 1, 2, 3);
    let a: Vec<C64> = pair(pp, pp)
        .iter()
        .zip(pair(sp, sm))
        .map(|(x, y)| x + y)
        .collect();
    let m: Vec<C64> = pair(pm, pm)
        .iter()
        .zip(pair(sm, sp))
        .map(|(x, y)| x + y)
        .collect();
    let s = FRAC_1_SQRT_2;
    let ph = cis(alpha);
    let mut amp = Vec::with_capacity(32);
    for sign in [1.0, -1.0] {
        for i in 0..16 {
            amp.push(a[i] * s + m[i] * ph * (s * sign));
        }
    }
    PureState::normalized(5, amp).expect("nonzero")
}

/// `(1−λ)𝟙/4 + λ|Ψ⁻⟩⟨Ψ⁻|`, i.e. `𝟙 − λ'|Ψ⁻⟩⟨Ψ⁻|` after normalization.
pub fn werner_two_qubit(lambda: f64) -> Result<Density> {
    if !(-1.0 / 3.0..=1.0).contains(&lambda) {
        return Err(LuError::InvalidParameter(format!(
            "lambda = {lambda} outside [-1/3, 1]"
        )));
    }
    let v = bell_vectors()[3];
    let m = DMatrix::from_fn(4, 4, |i, j| {
        let id = if i == j { (1.0 - lambda) * 0.25 } else { 0.0 };
        c(id, 0.0) + v[i] * v[j].conj() * lambda
    });
    Density::new(m)
}

/// Choi state of the canonical two-qubit gate with the given phases.
pub fn choi(phases: [f64; 3]) -> State {
    choi_state(&NonlocalContent::new(phases))
}

/// Family names accepted by [`make`].
pub const FAMILIES: &[&str] = &[
    "ghz",
    "w",
    "bell",
    "lme",
    "cphase",
    "bell-pair",
    "five-qubit",
    "choi",
    "basis",
];

/// Builds a state from a family name and numeric parameters.
///
/// | family       | params                      |
/// |--------------|-----------------------------|
/// | `ghz`, `w`   | `n`                         |
/// | `bell`       | `k` (0 Φ⁺, 1 Φ⁻, 2 Ψ⁺, 3 Ψ⁻) |
/// | `lme`        | `n`, then `2^n` phases      |
/// | `cphase`     | `n`, `φ`                    |
/// | `bell-pair`  | `λ, γ₁, γ₂, γ₃`             |
/// | `five-qubit` | `α`                         |
/// | `choi`       | `φ₁, φ₂, φ₃`                |
/// | `basis`      | `n`, index                  |
pub fn make(family: &str, params: &[f64]) -> Result<State> {
    let need = |k: usize| -> Result<()> {
        if params.len() < k {
            Err(LuError::InvalidParameter(format!(
                "{family} needs {k} parameter(s), got {}",
                params.len()
            )))
        } else {
            Ok(())
        }
    };
    let as_n = |x: f64| -> Result<usize> {
        if x.fract() != 0.0 || !(1.0..=crate::tensor::MAX_QUBITS as f64).contains(&x) {
            Err(LuError::InvalidParameter(format!("qubit count {x}")))
        } else {
            Ok(x as usize)
        }
    };
    match family {
        "ghz" => {
            need(1)?;
            ghz(as_n(params[0])?)
        }
        "w" => {
            need(1)?;
            w_state(as_n(params[0])?)
        }
        "bell" => {
            need(1)?;
            let kind = match params[0] as i64 {
                0 => BellKind::PhiPlus,
                1 => BellKind::PhiMinus,
                2 => BellKind::PsiPlus,
                3 => BellKind::PsiMinus,
                k => return Err(LuError::InvalidParameter(format!("Bell index {k}"))),
            };
            Ok(bell(kind))
        }
        "lme" => {
            need(1)?;
            let n = as_n(params[0])?;
            lme_phase_state(n, &params[1..])
        }
        "cphase" => {
            need(2)?;
            controlled_phase_all(as_n(params[0])?, params[1])
        }
        "bell-pair" => {
            need(4)?;
            bell_pair_phase_state(params[0], params[1], params[2], params[3])
        }
        "five-qubit" => {
            need(1)?;
            Ok(five_qubit_all_pairs_mixed(params[0]))
        }
        "choi" => {
            need(3)?;
            Ok(choi([params[0], params[1], params[2]]))
        }
        "basis" => {
            need(2)?;
            PureState::basis(as_n(params[0])?, params[1] as usize)
        }
        other => Err(LuError::UnknownFamily(other.to_string())),
    }
}
