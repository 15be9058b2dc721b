//! Local phase-gate equivalence: does `ψ = e^{iα₀} ⊗ᵢ Z(αᵢ) φ` hold for some
//! angles, and which ones.
//!
//! Two independent routes are provided. [`phase_gate_feasible`] solves the
//! linear system `arg(ψᵢ/φᵢ) = α₀ + Σₖ αₖ iₖ (mod 2π)` over the common support
//! by integer row reduction. [`phase_gate_feasible_quotient`] instead tests
//! whether the componentwise quotient `ψ ./ φ` (after padding vanishing
//! entries) factorizes as a product vector.

use std::f64::consts::PI;

use crate::linalg::{cis, wrap_pi};
use crate::tensor::{bit, PureState};
use crate::{Layer, State, Unitary, C64};

/// Relative threshold below which an amplitude counts as zero.
pub const TOL_ZERO_REL: f64 = 1e-9;

/// `α₀` and one phase-gate angle per qubit, all in `[0, 2π)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseAssignment {
    pub alpha0: f64,
    pub alphas: Vec<f64>,
}

impl PhaseAssignment {
    pub fn zero(n: usize) -> Self {
        Self {
            alpha0: 0.0,
            alphas: vec![0.0; n],
        }
    }

    /// Phase `α₀ + Σₖ αₖ iₖ` picked up by basis index `i`.
    pub fn phase_of(&self, i: usize) -> f64 {
        let n = self.alphas.len();
        self.alpha0
            + (0..n)
                .filter(|&k| bit(i, k, n) == 1)
                .map(|k| self.alphas[k])
                .sum::<f64>()
    }

    /// `e^{iα₀} ⊗ Z(αₖ)` applied to raw amplitudes.
    pub fn apply_raw(&self, amp: &[C64]) -> Vec<C64> {
        amp.iter()
            .enumerate()
            .map(|(i, a)| a * cis(self.phase_of(i)))
            .collect()
    }

    pub fn apply(&self, phi: &State) -> State {
        PureState::normalized(phi.n(), self.apply_raw(phi.amplitudes()))
            .expect("phase gates preserve the norm")
    }

    pub fn as_layer(&self) -> Layer {
        Layer::new(
            self.alpha0,
            self.alphas.iter().map(|&a| Unitary::phase(a)).collect(),
        )
    }

    fn wrapped(mut self) -> Self {
        self.alpha0 = crate::tensor::wrap_angle(self.alpha0);
        for a in &mut self.alphas {
            *a = crate::tensor::wrap_angle(*a);
        }
        self
    }
}

/// Indices whose amplitude is (numerically) zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSupport {
    pub zeros: Vec<usize>,
    /// Nonzero entries within a factor 10 of the threshold.
    pub fragile: Vec<usize>,
    pub threshold: f64,
}

impl ZeroSupport {
    pub fn contains(&self, i: usize) -> bool {
        self.zeros.binary_search(&i).is_ok()
    }
}

/// Classifies amplitudes against `rel · max|amp|`.
pub fn zero_support(amp: &[C64], rel: f64) -> ZeroSupport {
    let max = amp.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let threshold = rel * max;
    let mut zeros = Vec::new();
    let mut fragile = Vec::new();
    for (i, a) in amp.iter().enumerate() {
        let m = a.norm();
        if m <= threshold {
            zeros.push(i);
        } else if m <= 10.0 * threshold {
            fragile.push(i);
        }
    }
    ZeroSupport {
        zeros,
        fragile,
        threshold,
    }
}

/// `|ψ⟩ + 2 Σ_{k∈K_ψ} |k⟩`, with the zero entries cleared first.
pub fn pad_state(amp: &[C64]) -> Vec<C64> {
    let k = zero_support(amp, TOL_ZERO_REL);
    let mut out = amp.to_vec();
    for &i in &k.zeros {
        out[i] = C64::new(2.0, 0.0);
    }
    out
}

/// `|φ⟩ + 2 e^{-iᾱ₀} Σ_{k∈K_φ} e^{-i Σᵢ ᾱᵢ kᵢ} |k⟩`.
pub fn pad_state_with_phases(amp: &[C64], bar: &PhaseAssignment) -> Vec<C64> {
    let k = zero_support(amp, TOL_ZERO_REL);
    let mut out = amp.to_vec();
    for &i in &k.zeros {
        out[i] = cis(-bar.phase_of(i)) * 2.0;
    }
    out
}

/// Componentwise ratio `ψ ./ φ`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuotientVector {
    pub n: usize,
    pub values: Vec<C64>,
}

/// `ψ ./ φ`; `None` when some `φᵢ` vanishes.
pub fn hadamard_quotient(psi: &[C64], phi: &[C64], n: usize) -> Option<QuotientVector> {
    if phi.iter().any(|b| b.norm() == 0.0) || psi.len() != phi.len() {
        return None;
    }
    Some(QuotientVector {
        n,
        values: psi.iter().zip(phi).map(|(a, b)| a / b).collect(),
    })
}

/// Factors `v` into `n` single-qubit vectors by successive rank-1 splits of
/// the `2 × 2^{m-1}` reshapings. The overall scale sits in the last factor.
pub fn is_product_state(v: &[C64], n: usize, tol: f64) -> Option<Vec<[C64; 2]>> {
    let scale = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 || v.len() != 1 << n {
        return None;
    }
    let mut factors = Vec::with_capacity(n);
    let mut rest: Vec<C64> = v.to_vec();
    for m in (1..=n).rev() {
        if m == 1 {
            factors.push([rest[0], rest[1]]);
            break;
        }
        let half = 1usize << (m - 1);
        // Column j of the reshaping is (rest[j], rest[half + j]).
        let (mut jbest, mut best) = (0, -1.0);
        for j in 0..half {
            let w = rest[j].norm_sqr() + rest[half + j].norm_sqr();
            if w > best {
                best = w;
                jbest = j;
            }
        }
        let norm = best.sqrt();
        let f = [rest[jbest] / norm, rest[half + jbest] / norm];
        let next: Vec<C64> = (0..half)
            .map(|j| f[0].conj() * rest[j] + f[1].conj() * rest[half + j])
            .collect();
        factors.push(f);
        rest = next;
    }
    let rebuilt = kron_factors(&factors);
    let err = rebuilt
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    (err <= tol * scale.max(1.0)).then_some(factors)
}

/// `f₀ ⊗ f₁ ⊗ …` with `f₀` the most significant qubit.
pub fn kron_factors(factors: &[[C64; 2]]) -> Vec<C64> {
    let mut out = vec![C64::new(1.0, 0.0)];
    for f in factors {
        let mut next = Vec::with_capacity(out.len() * 2);
        for a in &out {
            next.push(a * f[0]);
            next.push(a * f[1]);
        }
        out = next;
    }
    out
}

/// Reads phases off a product quotient `e^{iα₀} ⊗ Z(αₖ)|+⟩^{⊗n}` (up to scale).
pub fn extract_phases(q: &QuotientVector, tol: f64) -> Option<PhaseAssignment> {
    let factors = is_product_state(&q.values, q.n, tol)?;
    let mut alpha0 = 0.0;
    let mut alphas = Vec::with_capacity(q.n);
    for f in &factors {
        if f[0].norm() == 0.0 || f[1].norm() == 0.0 {
            return None;
        }
        alphas.push((f[1] / f[0]).arg());
        alpha0 += f[0].arg();
    }
    let pa = PhaseAssignment { alpha0, alphas }.wrapped();
    let scale = q.values[0].norm();
    let ok = q
        .values
        .iter()
        .enumerate()
        .all(|(i, v)| (v - cis(pa.phase_of(i)) * scale).norm() <= tol * scale.max(1.0));
    ok.then_some(pa)
}

/// One row `Σ coef·x ≡ rhs (mod 2π)` with its own consistency tolerance.
#[derive(Clone, Debug)]
struct Row {
    coef: Vec<i64>,
    rhs: f64,
    tol: f64,
}

impl Row {
    fn sub_scaled(&mut self, other: &Row, q: i64) {
        for (a, b) in self.coef.iter_mut().zip(&other.coef) {
            *a -= q * b;
        }
        self.rhs = wrap_pi(self.rhs - q as f64 * other.rhs);
        self.tol += q.unsigned_abs() as f64 * other.tol;
    }
}

/// Linear congruences over angles, kept in integer echelon form.
///
/// Rows are reduced with the Euclidean algorithm so no division happens
/// until back substitution, where every pivot equation is solvable for any
/// right-hand side.
#[derive(Clone, Debug)]
pub(crate) struct AngleSystem {
    nvars: usize,
    pivots: Vec<Option<Row>>,
}

impl AngleSystem {
    pub(crate) fn new(nvars: usize) -> Self {
        Self {
            nvars,
            pivots: vec![None; nvars],
        }
    }

    /// Adds a congruence; returns `false` if it contradicts earlier ones.
    pub(crate) fn insert(&mut self, coef: Vec<i64>, rhs: f64, tol: f64) -> bool {
        let mut row = Row {
            coef,
            rhs: wrap_pi(rhs),
            tol,
        };
        for col in 0..self.nvars {
            if row.coef[col] == 0 {
                continue;
            }
            match self.pivots[col].take() {
                None => {
                    self.pivots[col] = Some(row);
                    return true;
                }
                Some(mut piv) => {
                    while row.coef[col] != 0 {
                        let q = piv.coef[col].div_euclid(row.coef[col]);
                        piv.sub_scaled(&row, q);
                        std::mem::swap(&mut piv, &mut row);
                    }
                    self.pivots[col] = Some(piv);
                }
            }
        }
        wrap_pi(row.rhs).abs() <= row.tol
    }

    /// One solution; unconstrained variables are set to zero.
    pub(crate) fn solve(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.nvars];
        for col in (0..self.nvars).rev() {
            if let Some(r) = &self.pivots[col] {
                let acc: f64 = (col + 1..self.nvars).map(|c| r.coef[c] as f64 * x[c]).sum();
                x[col] = wrap_pi(r.rhs - acc) / r.coef[col] as f64;
            }
        }
        x
    }
}

/// Phase tolerance for an equation read off an amplitude of modulus `m`.
fn phase_tol(tol: f64, m: f64) -> f64 {
    (tol / m.max(1e-300)).min(PI / 4.0) + 1e-12
}

/// Support sets and moduli agree within `tol`.
pub fn moduli_match(psi: &[C64], phi: &[C64], tol: f64) -> bool {
    if psi.len() != phi.len() {
        return false;
    }
    let kp = zero_support(psi, TOL_ZERO_REL);
    let kf = zero_support(phi, TOL_ZERO_REL);
    if kp.zeros != kf.zeros {
        // Entries that straddle the threshold are tolerated if both sides are tiny.
        let near = |i: &usize| psi[*i].norm() <= tol && phi[*i].norm() <= tol;
        let diff = kp
            .zeros
            .iter()
            .filter(|i| !kf.contains(**i))
            .chain(kf.zeros.iter().filter(|i| !kp.contains(**i)));
        if !diff.clone().all(near) {
            return false;
        }
    }
    psi.iter()
        .zip(phi)
        .all(|(a, b)| (a.norm() - b.norm()).abs() <= tol)
}

/// Direct route: solve the phase system over the common support.
///
/// `None` means no assignment exists (checked moduli, then an exact integer
/// reduction of the congruences). A returned assignment always reproduces
/// `ψ` from `φ` within `tol` per amplitude.
pub fn phase_gate_feasible(
    psi: &[C64],
    phi: &[C64],
    n: usize,
    tol: f64,
) -> Option<PhaseAssignment> {
    if psi.len() != 1 << n || !moduli_match(psi, phi, tol) {
        return None;
    }
    let support = zero_support(phi, TOL_ZERO_REL);
    let mut order: Vec<usize> = (0..psi.len())
        .filter(|&i| !support.contains(i) && psi[i].norm() > tol)
        .collect();
    order.sort_by(|&a, &b| phi[b].norm().partial_cmp(&phi[a].norm()).unwrap());
    let mut sys = AngleSystem::new(n + 1);
    for &i in &order {
        let mut coef = vec![1i64; n + 1];
        for k in 0..n {
            coef[k + 1] = bit(i, k, n) as i64;
        }
        let rhs = (psi[i] / phi[i]).arg();
        let m = phi[i].norm().min(psi[i].norm());
        if !sys.insert(coef, rhs, phase_tol(tol, m)) {
            return None;
        }
    }
    let x = sys.solve();
    let pa = PhaseAssignment {
        alpha0: x[0],
        alphas: x[1..].to_vec(),
    }
    .wrapped();
    let applied = pa.apply_raw(phi);
    applied
        .iter()
        .zip(psi)
        .all(|(a, b)| (a - b).norm() <= tol)
        .then_some(pa)
}

/// Quotient route: moduli, padding, then a product test of `ψ₀ ./ φ_ᾱ`.
///
/// With vanishing amplitudes the trial phases `ᾱ` on the padded entries
/// come from the support system, since padding only adds constraints.
pub fn phase_gate_feasible_quotient(
    psi: &[C64],
    phi: &[C64],
    n: usize,
    tol: f64,
) -> Option<PhaseAssignment> {
    if psi.len() != 1 << n || !moduli_match(psi, phi, tol) {
        return None;
    }
    let support = zero_support(phi, TOL_ZERO_REL);
    let (padded_psi, padded_phi) = if support.zeros.is_empty() {
        (psi.to_vec(), phi.to_vec())
    } else {
        let bar = phase_gate_feasible(psi, phi, n, tol)?;
        (pad_state(psi), pad_state_with_phases(phi, &bar))
    };
    let q = hadamard_quotient(&padded_psi, &padded_phi, n)?;
    let min_phi = padded_phi
        .iter()
        .map(|b| b.norm())
        .fold(f64::INFINITY, f64::min);
    let pa = extract_phases(&q, tol / min_phi.max(1e-300))?;
    let applied = pa.apply_raw(phi);
    applied
        .iter()
        .zip(psi)
        .all(|(a, b)| (a - b).norm() <= tol)
        .then_some(pa)
}

/// The product condition `⟨0k|ψ⟩⟨1l|ψ⟩⟨1k|φ⟩⟨0l|φ⟩ = ⟨1k|ψ⟩⟨0l|ψ⟩⟨0k|φ⟩⟨1l|φ⟩`
/// for every qubit and every pair of rest strings, up to `tol`.
pub fn product_condition_holds(psi: &[C64], phi: &[C64], n: usize, tol: f64) -> bool {
    let dim = 1usize << n;
    for q in 0..n {
        let m = 1usize << (n - 1 - q);
        for k in (0..dim).filter(|i| i & m == 0) {
            for l in (0..dim).filter(|i| i & m == 0) {
                let lhs = psi[k] * psi[l | m] * phi[k | m] * phi[l];
                let rhs = psi[k | m] * psi[l] * phi[k] * phi[l | m];
                if (lhs - rhs).norm() > tol {
                    return false;
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angle_system_handles_non_unimodular_pivots() {
        // Even-parity support of three qubits: determinant 2 over the integers.
        let mut sys = AngleSystem::new(4);
        let rows = [[1, 0, 0, 0], [1, 0, 1, 1], [1, 1, 0, 1], [1, 1, 1, 0]];
        let target = [0.3, -1.2, 2.9, 0.4];
        let rhs: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&target).map(|(c, t)| *c as f64 * t).sum())
            .collect();
        for (r, b) in rows.iter().zip(&rhs) {
            assert!(sys.insert(r.to_vec(), *b, 1e-12));
        }
        let x = sys.solve();
        for (r, b) in rows.iter().zip(&rhs) {
            let got: f64 = r.iter().zip(&x).map(|(c, t)| *c as f64 * t).sum();
            assert!(wrap_pi(got - b).abs() < 1e-12);
        }
    }

    #[test]
    fn angle_system_detects_contradiction() {
        let mut sys = AngleSystem::new(2);
        assert!(sys.insert(vec![1, 0], 0.5, 1e-12));
        assert!(sys.insert(vec![1, 1], 1.0, 1e-12));
        assert!(!sys.insert(vec![0, 1], 0.7, 1e-12));
    }
}
