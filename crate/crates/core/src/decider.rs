//! The LU-equivalence decision procedure and the class taxonomies for
//! small registers.
//!
//! `decide_lu` returns `Equivalent` only with a certificate that has been
//! applied and checked, and `NotEquivalent` only from an invariant that
//! differs, from a complete branch enumeration with every qubit pinned, or
//! from a class parameter on the four-qubit fast paths.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use nalgebra::{DMatrix, Matrix3, Matrix4};
use serde::Serialize;

use crate::canonical::DEGENERACY;
use crate::error::{LuError, Result};
use crate::linalg::{
    c, cis, diagonalizer, dmatrix_to_m2, dmatrix_to_m4, factor_product, magic_basis, pauli,
    sym_eigen3, wrap_pi, M2, M4,
};
use crate::phase::{moduli_match, phase_gate_feasible};
use crate::pin::{propagate, propagate_from, ConstraintSet, Firing, PinOptions, QubitConstraint};
use crate::sample::{random_unitary2, rng};
use crate::tensor::{
    apply_local_layer, apply_single, bit, conjugate_state, entropy, mask, partial_trace,
    split_matrix, PureState,
};
use crate::two_qubit::{
    bell_diagonalize, lu_equiv_mixed2, nonlocal_content, remove_bit, schmidt_split, NonlocalContent,
};
use crate::{Density, Layer, Pauli, State, Unitary, Verdict, Witness, C64};

/// Largest `1 − |⟨ψ|Lφ⟩|` an emitted certificate may have.
pub const CERTIFICATE_TOL: f64 = 1e-8;
/// Overlap the numeric fallback must reach before its layer is checked.
pub const FALLBACK_ACCEPT: f64 = 1.0 - 1e-9;
/// Below this smallest pin gap a refuted branch search is not trusted.
pub const CONDITIONING: f64 = 1e-3;
/// Largest eigenvalue counted as zero when factoring out product qubits.
const PRODUCT_TOL: f64 = 1e-10;
/// Open bits enumerated exhaustively (and logged) up to this count.
const LOGGED_BITS: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct Options {
    /// Spectrum and parameter comparisons.
    pub tol: f64,
    /// Eigenvalue gap under which a marginal counts as maximally mixed.
    pub degeneracy: f64,
    pub fallback_starts: usize,
    pub seed: u64,
    pub pin: PinOptions,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            degeneracy: DEGENERACY,
            fallback_starts: 32,
            seed: 0x5eed,
            pin: PinOptions::default(),
        }
    }
}

/// What the decider did on the way to its verdict.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DecisionLog {
    /// Route that produced the verdict.
    pub route: String,
    pub firings: Vec<Firing>,
    pub branches_total: usize,
    /// Bit-flip vectors (over all qubits) that admitted a phase solution.
    pub feasible_branches: Vec<Vec<u8>>,
    pub used_fallback: bool,
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub verdict: Verdict,
    pub log: DecisionLog,
}

/// `|⟨ψ|layer·φ⟩|`.
pub fn verify_certificate(psi: &State, phi: &State, layer: &Layer) -> Result<f64> {
    if psi.n() != phi.n() {
        return Err(LuError::DimensionMismatch {
            expected: psi.n(),
            found: phi.n(),
        });
    }
    Ok(psi.inner(&apply_local_layer(phi, layer)?).norm())
}

pub fn decide_lu(psi: &State, phi: &State, opts: &Options) -> Result<Verdict> {
    Ok(decide_lu_logged(psi, phi, opts)?.verdict)
}

/// [`decide_lu`] plus the record of rules, branches and fallback use.
pub fn decide_lu_logged(psi: &State, phi: &State, opts: &Options) -> Result<Decision> {
    if psi.n() != phi.n() {
        return Err(LuError::DimensionMismatch {
            expected: psi.n(),
            found: phi.n(),
        });
    }
    for s in [psi, phi] {
        let norm = s.inner(s).re.sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(LuError::NotNormalized { norm });
        }
    }
    let mut run = Run {
        opts,
        log: DecisionLog::default(),
    };
    // Two states in the maximally-entangled 2|2 class are compared by
    // their nonlocal content, which subsumes the pair spectra.
    let both_2b = psi.n() == 4
        && [psi, phi].iter().all(|s| {
            (0..4).all(|q| maximally_mixed(s, q, opts.degeneracy))
                && (1..4).any(|j| pair_maximally_mixed(s, j, opts.degeneracy))
        });
    let pairs = !both_2b;
    if let Some(w) = spectra_precheck(psi, phi, opts.tol, pairs)? {
        run.log.route = "marginal spectra".into();
        return Ok(Decision {
            verdict: Verdict::NotEquivalent { witness: w },
            log: run.log,
        });
    }
    let verdict = run.core(psi, phi);
    Ok(Decision {
        verdict,
        log: run.log,
    })
}

pub fn decide_lu_2(psi: &State, phi: &State) -> Result<Verdict> {
    fixed_size(psi, 2)?;
    decide_lu(psi, phi, &Options::default())
}

pub fn decide_lu_3(psi: &State, phi: &State) -> Result<Verdict> {
    fixed_size(psi, 3)?;
    decide_lu(psi, phi, &Options::default())
}

pub fn decide_lu_4(psi: &State, phi: &State) -> Result<Verdict> {
    fixed_size(psi, 4)?;
    decide_lu(psi, phi, &Options::default())
}

fn fixed_size(psi: &State, n: usize) -> Result<()> {
    if psi.n() == n {
        Ok(())
    } else {
        Err(LuError::UnsupportedQubitCount(psi.n()))
    }
}

/// Singleton and pair marginal spectra.
fn spectra_precheck(psi: &State, phi: &State, tol: f64, pairs: bool) -> Result<Option<Witness>> {
    let n = psi.n();
    let mut subsets: Vec<Vec<usize>> = (0..n).map(|q| vec![q]).collect();
    if n > 2 && pairs {
        for i in 0..n {
            for j in i + 1..n {
                subsets.push(vec![i, j]);
            }
        }
    }
    for s in subsets {
        let a = partial_trace(psi, &s)?.spectrum();
        let b = partial_trace(phi, &s)?.spectrum();
        if a.max_difference(&b) > tol {
            return Ok(Some(Witness::SpectrumMismatch {
                subset: s,
                left: a.values,
                right: b.values,
            }));
        }
    }
    Ok(None)
}

struct Run<'a> {
    opts: &'a Options,
    log: DecisionLog,
}

enum Search {
    Found(Layer),
    Refuted(usize),
    Open,
}

impl Run<'_> {
    fn core(&mut self, psi: &State, phi: &State) -> Verdict {
        let n = psi.n();
        if n == 1 {
            self.log.route = "single qubit".into();
            let u = map_unit(amp2(psi.amplitudes()), amp2(phi.amplitudes()));
            return self
                .emit(psi, phi, Layer::new(0.0, vec![Unitary::new_unchecked(u)]))
                .expect("exact rotation");
        }
        if let Some(v) = self.factor_product_qubit(psi, phi) {
            return v;
        }
        if n == 2 {
            return self.two_qubit(psi, phi);
        }
        if n == 4 {
            if let Some(v) = self.four_qubit(psi, phi) {
                return v;
            }
        }
        self.engine(psi, phi)
    }

    /// Checks a candidate and fixes its global phase so `⟨ψ|Lφ⟩ > 0`.
    fn emit(&self, psi: &State, phi: &State, layer: Layer) -> Option<Verdict> {
        let ov = psi.inner(&apply_local_layer(phi, &layer).ok()?);
        if 1.0 - ov.norm() > CERTIFICATE_TOL {
            return None;
        }
        let certificate = Layer::new(
            wrap_pi(layer.global_phase() - ov.arg()),
            layer.units().to_vec(),
        );
        Some(Verdict::Equivalent {
            certificate,
            overlap: ov.norm().min(1.0),
        })
    }

    fn factor_product_qubit(&mut self, psi: &State, phi: &State) -> Option<Verdict> {
        let n = psi.n();
        let q = (0..n).find(|&q| {
            let low = |s: &State| {
                partial_trace(s, &[q])
                    .map(|r| r.spectrum().values[1])
                    .unwrap_or(1.0)
            };
            low(psi) <= PRODUCT_TOL && low(phi) <= PRODUCT_TOL
        })?;
        let (a, psi_rest) = peel(psi, q);
        let (b, phi_rest) = peel(phi, q);
        let rest: Vec<usize> = (0..n).filter(|&p| p != q).collect();
        let sub = self.core(&psi_rest, &phi_rest);
        Some(match sub {
            Verdict::Equivalent { certificate, .. } => {
                let mut units = certificate.units().to_vec();
                units.insert(q, Unitary::new_unchecked(map_unit(a, b)));
                let layer = Layer::new(certificate.global_phase(), units);
                match self.emit(psi, phi, layer) {
                    Some(v) => v,
                    None => Verdict::Undecided {
                        reason: "product-factor certificate failed verification".into(),
                        best_overlap: 0.0,
                    },
                }
            }
            Verdict::NotEquivalent { witness } => Verdict::NotEquivalent {
                witness: relabel(witness, &rest),
            },
            other => other,
        })
    }

    fn two_qubit(&mut self, psi: &State, phi: &State) -> Verdict {
        self.log.route = "Schmidt decomposition".into();
        let mat = |s: &State| nalgebra::Matrix2::from_row_slice(s.amplitudes());
        let (mp, mf) = (mat(psi), mat(phi));
        let (sp, sf) = (mp.svd(true, true), mf.svd(true, true));
        let sorted = |v: &nalgebra::Vector2<f64>| {
            let mut x = vec![v[0], v[1]];
            x.sort_by(|a, b| b.partial_cmp(a).unwrap());
            x
        };
        let (cp, cf) = (sorted(&sp.singular_values), sorted(&sf.singular_values));
        if cp
            .iter()
            .zip(&cf)
            .any(|(a, b)| (a * a - b * b).abs() > self.opts.tol)
        {
            return Verdict::NotEquivalent {
                witness: Witness::SchmidtMismatch {
                    left: cp.iter().map(|x| x * x).collect(),
                    right: cf.iter().map(|x| x * x).collect(),
                },
            };
        }
        // Align singular-value order before combining the bases.
        let order = |s: &nalgebra::Vector2<f64>| if s[0] >= s[1] { [0, 1] } else { [1, 0] };
        let perm = |m: &M2, o: [usize; 2]| {
            M2::from_columns(&[m.column(o[0]).into_owned(), m.column(o[1]).into_owned()])
        };
        let (op, of) = (order(&sp.singular_values), order(&sf.singular_values));
        let up = perm(&sp.u.unwrap(), op);
        let uf = perm(&sf.u.unwrap(), of);
        let vp = perm(&sp.v_t.unwrap().adjoint(), op);
        let vf = perm(&sf.v_t.unwrap().adjoint(), of);
        // M = U S V†, ψ = Σ sₖ |uₖ⟩|vₖ*⟩: A = Uψ Uφ†, B = Vψ* Vφᵀ.
        let a = up * uf.adjoint();
        let b = vp.conjugate() * vf.transpose();
        let layer = Layer::new(
            0.0,
            vec![Unitary::new_unchecked(a), Unitary::new_unchecked(b)],
        );
        self.emit(psi, phi, layer)
            .unwrap_or_else(|| Verdict::Undecided {
                reason: "Schmidt certificate failed verification".into(),
                best_overlap: 0.0,
            })
    }

    fn four_qubit(&mut self, psi: &State, phi: &State) -> Option<Verdict> {
        if !(0..4).all(|q| maximally_mixed(psi, q, self.opts.degeneracy)) {
            return None;
        }
        if let Some(j) = (1..4).find(|&j| pair_maximally_mixed(psi, j, self.opts.degeneracy)) {
            self.log.route = "maximally entangled 2|2 split".into();
            return self.choi_path(psi, phi, j);
        }
        if let Some(w) = magic_gram_precheck(psi, phi, 1e-7) {
            self.log.route = "magic-basis Gram invariants".into();
            return Some(Verdict::NotEquivalent { witness: w });
        }
        for j in 1..4 {
            if let (Some(wp), Some(wf)) = (werner_split(psi, j), werner_split(phi, j)) {
                self.log.route = "Werner pair canonical form".into();
                if let Some(v) = self.werner_path(psi, phi, &wp, &wf) {
                    return Some(v);
                }
            }
        }
        None
    }

    /// `ψ = (𝟙 ⊗ U)|Φ⁺⟩|Φ⁺⟩` across `(0, j) | rest`; equivalence iff the
    /// Cartan phases of the two `U` agree.
    fn choi_path(&mut self, psi: &State, phi: &State, j: usize) -> Option<Verdict> {
        let (lp, np) = choi_frame(psi, j)?;
        let (lf, nf) = choi_frame(phi, j)?;
        if np.max_difference(&nf) > 1e-7 {
            return Some(Verdict::NotEquivalent {
                witness: Witness::NonlocalContentMismatch {
                    left: np.phases,
                    right: nf.phases,
                },
            });
        }
        self.emit(psi, phi, lp.compose(&lf.inverse()))
    }

    fn werner_path(
        &mut self,
        psi: &State,
        phi: &State,
        wp: &WernerSplit,
        wf: &WernerSplit,
    ) -> Option<Verdict> {
        let tol = 1e-7;
        let scale = |w: &WernerSplit| w.mu.sqrt();
        if (wp.mu - wf.mu).abs() > tol || (wp.s.norm() - wf.s.norm()).abs() > tol {
            return Some(Verdict::NotEquivalent {
                witness: Witness::BellPairParamMismatch {
                    left: wp.params().to_vec(),
                    right: wf.params().to_vec(),
                },
            });
        }
        let (dp, dq) = (wp.d.map(|z| z / scale(wp)), wf.d.map(|z| z / scale(wf)));
        let has_s = wp.s.norm() > 1e-6;
        for perm in PERMUTATIONS {
            for signs in EVEN_SIGNS {
                let chi = if has_s {
                    wp.s / wf.s
                } else {
                    dp[0] / (dq[perm[0]] * signs[0])
                };
                if (0..3).any(|k| (dp[k] - chi * signs[k] * dq[perm[k]]).norm() > tol) {
                    continue;
                }
                let p = permutation_matrix(&perm);
                let e =
                    Matrix3::from_diagonal(&nalgebra::Vector3::new(signs[0], signs[1], signs[2]));
                let p = if p.determinant() < 0.0 { -p } else { p };
                let o1 = wp.oa * e * p * wf.oa.transpose();
                let o2 = wp.ob * p * wf.ob.transpose();
                let k1 = local_from_triplet_rotation(&o1)?;
                let k2 = local_from_triplet_rotation(&o2)?;
                let mut units = vec![Unitary::identity(); 4];
                units[wp.pair.0] = Unitary::new_unchecked(k1.1);
                units[wp.pair.1] = Unitary::new_unchecked(k1.2);
                units[wp.rest.0] = Unitary::new_unchecked(k2.1);
                units[wp.rest.1] = Unitary::new_unchecked(k2.2);
                let k = Layer::new((chi * k1.0 * k2.0).arg(), units);
                let layer = wp.frame.inverse().compose(&k.compose(&wf.frame));
                if let Some(v) = self.emit(psi, phi, layer) {
                    return Some(v);
                }
            }
        }
        Some(Verdict::NotEquivalent {
            witness: Witness::BellPairParamMismatch {
                left: wp.params().to_vec(),
                right: wf.params().to_vec(),
            },
        })
    }

    fn engine(&mut self, psi: &State, phi: &State) -> Verdict {
        self.log.route = "pin engine".into();
        let cs = match propagate(psi, phi, &self.opts.pin) {
            Ok(cs) => cs,
            Err(witness) => return Verdict::NotEquivalent { witness },
        };
        self.log.firings = cs.log.clone();
        match self.search(psi, phi, &cs, 0, true) {
            Search::Found(layer) => match self.emit(psi, phi, layer) {
                Some(v) => v,
                None => self.fallback(psi, phi, &cs),
            },
            Search::Refuted(branches) => Verdict::NotEquivalent {
                witness: Witness::PhaseInfeasibleAllBranches { branches },
            },
            Search::Open => self.fallback(psi, phi, &cs),
        }
    }

    /// Splits on the open bits of Axis-pinned qubits until every qubit is
    /// determined, then runs the phase solver on each branch.
    fn search(
        &mut self,
        psi: &State,
        phi: &State,
        cs: &ConstraintSet,
        depth: usize,
        top: bool,
    ) -> Search {
        if cs.all_determined() {
            return self.enumerate(psi, phi, cs, top);
        }
        let open = cs.open_bits();
        if open.is_empty() || open.len() > 10 || depth >= 2 {
            return Search::Open;
        }
        let mut refuted = 0;
        let mut any_open = false;
        for m in 0..1u32 << open.len() {
            let bits: Vec<(usize, u8)> = open
                .iter()
                .enumerate()
                .map(|(k, &q)| (q, ((m >> k) & 1) as u8))
                .collect();
            match propagate_from(psi, phi, cs.with_branch(&bits), &self.opts.pin) {
                Err(_) => refuted += 1,
                Ok(next) => match self.search(psi, phi, &next, depth + 1, false) {
                    Search::Found(l) => return Search::Found(l),
                    Search::Refuted(b) => refuted += b,
                    Search::Open => any_open = true,
                },
            }
        }
        if any_open {
            Search::Open
        } else {
            Search::Refuted(refuted)
        }
    }

    fn enumerate(&mut self, psi: &State, phi: &State, cs: &ConstraintSet, top: bool) -> Search {
        let n = psi.n();
        let open = cs.open_bits();
        if open.len() > 20 {
            return Search::Open;
        }
        let total = 1usize << open.len();
        let tol = (self.opts.tol * 10.0).max(1e-8);
        let psi_t = apply_local_layer(psi, &cs.source_layer()).expect("matching size");
        let mut found = None;
        for m in 0..total {
            let bits: Vec<(usize, u8)> = open
                .iter()
                .enumerate()
                .map(|(k, &q)| (q, ((m >> k) & 1) as u8))
                .collect();
            let branch = cs.with_branch(&bits);
            let phi_t = apply_local_layer(phi, &branch.target_layer()).expect("matching size");
            if !moduli_match(psi_t.amplitudes(), phi_t.amplitudes(), tol) {
                continue;
            }
            let Some(pa) = phase_gate_feasible(psi_t.amplitudes(), phi_t.amplitudes(), n, tol)
            else {
                continue;
            };
            let layer = branch
                .source_layer()
                .inverse()
                .compose(&pa.as_layer().compose(&branch.target_layer()));
            if self.emit(psi, phi, layer.clone()).is_none() {
                continue;
            }
            if top {
                let mut k = vec![0u8; n];
                for &(q, b) in &bits {
                    k[q] = b;
                }
                self.log.feasible_branches.push(k);
            }
            found.get_or_insert(layer);
            if open.len() > LOGGED_BITS {
                break;
            }
        }
        self.log.branches_total += total;
        match found {
            Some(l) => Search::Found(l),
            None if cs.min_gap() >= CONDITIONING => Search::Refuted(total),
            None => Search::Open,
        }
    }

    fn fallback(&mut self, psi: &State, phi: &State, cs: &ConstraintSet) -> Verdict {
        self.log.used_fallback = true;
        self.log.route = format!("{} + numeric fallback", self.log.route);
        let starts = self.opts.fallback_starts;
        match fallback_search(psi, phi, cs, starts, self.opts.seed) {
            (Some(layer), _) => match self.emit(psi, phi, layer) {
                Some(v) => v,
                None => Verdict::Undecided {
                    reason: format!(
                        "numeric fallback ({starts} starts): candidate failed verification"
                    ),
                    best_overlap: 0.0,
                },
            },
            (None, best) => Verdict::Undecided {
                reason: format!("numeric fallback ({starts} starts) reached overlap {best:.12}"),
                best_overlap: best,
            },
        }
    }
}

fn amp2(a: &[C64]) -> [C64; 2] {
    [a[0], a[1]]
}

/// Unitary sending `b` to `a` (and `b⊥` to `a⊥`).
fn map_unit(a: [C64; 2], b: [C64; 2]) -> M2 {
    let perp = |x: [C64; 2]| [-x[1].conj(), x[0].conj()];
    let (ap, bp) = (perp(a), perp(b));
    M2::from_fn(|r, s| a[r] * b[s].conj() + ap[r] * bp[s].conj())
}

/// `ψ = |a⟩_q ⊗ ψ'` for a product qubit.
fn peel(psi: &State, q: usize) -> ([C64; 2], State) {
    let n = psi.n();
    let rho = dmatrix_to_m2(partial_trace(psi, &[q]).expect("valid qubit").matrix());
    let (_, w) = diagonalizer(&rho);
    // Rows of `w` are eigenvectors conjugated: w ρ w† is diagonal.
    let a = [w[(0, 0)].conj(), w[(0, 1)].conj()];
    let mut rest = vec![c(0.0, 0.0); 1 << (n - 1)];
    for (idx, amp) in psi.amplitudes().iter().enumerate() {
        rest[remove_bit(idx, q, n)] += a[bit(idx, q, n)].conj() * amp;
    }
    (
        a,
        PureState::normalized(n - 1, rest).expect("nonzero branch"),
    )
}

/// Maps qubit indices of a sub-register back to the full one.
fn relabel(w: Witness, map: &[usize]) -> Witness {
    match w {
        Witness::SpectrumMismatch {
            subset,
            left,
            right,
        } => Witness::SpectrumMismatch {
            subset: subset.iter().map(|&q| map[q]).collect(),
            left,
            right,
        },
        Witness::InvariantMismatch { name, left, right } => {
            let ones: Vec<String> = map.iter().map(|q| (q + 1).to_string()).collect();
            Witness::InvariantMismatch {
                name: format!("{name} (on qubits {} of the full register)", ones.join(",")),
                left,
                right,
            }
        }
        other => other,
    }
}

fn maximally_mixed(psi: &State, q: usize, degeneracy: f64) -> bool {
    let s = partial_trace(psi, &[q]).expect("valid qubit").spectrum();
    s.values[0] - s.values[1] <= degeneracy
}

fn pair_maximally_mixed(psi: &State, j: usize, degeneracy: f64) -> bool {
    let s = partial_trace(psi, &[0, j]).expect("valid pair").spectrum();
    s.values.iter().all(|v| (v - 0.25).abs() <= degeneracy)
}

fn pair_rest(j: usize) -> (usize, usize) {
    let rest: Vec<usize> = (1..4).filter(|&q| q != j).collect();
    (rest[0], rest[1])
}

/// Frame `L` and Cartan phases with `ψ = L · choi(U_d)` on `(0, j, k, l)`.
fn choi_frame(psi: &State, j: usize) -> Option<(Layer, NonlocalContent)> {
    let (k, l) = pair_rest(j);
    let m = split_matrix(psi, &[0, j]).ok()?;
    let u = dmatrix_to_m4(&m).transpose() * c(2.0, 0.0);
    let cartan = nonlocal_content(&u).ok()?;
    let mut units = vec![Unitary::identity(); 4];
    units[0] = Unitary::new_unchecked(cartan.c.matrix().transpose());
    units[j] = Unitary::new_unchecked(cartan.d.matrix().transpose());
    units[k] = cartan.a;
    units[l] = cartan.b;
    Some((Layer::new(cartan.phase, units), cartan.content))
}

/// Coefficients of `ψ` in the magic basis across `(0, j) | (k, l)`.
fn magic_coefficients(psi: &State, j: usize) -> M4 {
    let mc = dmatrix_to_m4(&split_matrix(psi, &[0, j]).expect("valid pair"));
    let mb = magic_basis();
    mb.adjoint() * mc * mb.conjugate()
}

/// Local unitaries act on the magic coefficients as `M → e^{iθ} O₁ M O₂ᵀ`
/// with real orthogonal `O`, so the spectrum of `MᵀM` is fixed up to a
/// common phase. Compares moduli and phase-free power-trace products.
fn magic_gram_precheck(psi: &State, phi: &State, tol: f64) -> Option<Witness> {
    for j in 1..4 {
        let inv = |s: &State| -> Vec<f64> {
            let m = magic_coefficients(s, j);
            let g = m.transpose() * m;
            let t: Vec<C64> = (1..=4).map(|p| g.pow(p as u32 - 1).trace()).collect();
            let g2 = g * g;
            let (t1, t2) = ((g).trace(), g2.trace());
            let _ = t;
            let mixed = t1 * t1 * t2.conj();
            vec![
                t1.norm(),
                t2.norm(),
                (g2 * g).trace().norm(),
                (g2 * g2).trace().norm(),
                mixed.re,
                mixed.im,
            ]
        };
        let (a, b) = (inv(psi), inv(phi));
        if a.iter().zip(&b).any(|(x, y)| (x - y).abs() > tol) {
            return Some(Witness::InvariantMismatch {
                name: format!("magic-basis Gram invariants across (1,{})", j + 1),
                left: a,
                right: b,
            });
        }
    }
    None
}

/// A 2|2 split whose pair marginals are both Werner states, brought to the
/// magic-basis block form `T ⊕ s` with `T = √μ O_a D O_bᵀ`.
#[derive(Clone, Debug)]
struct WernerSplit {
    pair: (usize, usize),
    rest: (usize, usize),
    /// Bell-diagonalizing layer applied to the input state.
    frame: Layer,
    mu: f64,
    d: [C64; 3],
    s: C64,
    oa: Matrix3<f64>,
    ob: Matrix3<f64>,
}

/// Magic-basis indices of the triplet.
const TRIPLET: [usize; 3] = [0, 1, 3];
const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];
const EVEN_SIGNS: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

fn werner_split(psi: &State, j: usize) -> Option<WernerSplit> {
    let (k, l) = pair_rest(j);
    let bp = bell_diagonalize(&partial_trace(psi, &[0, j]).ok()?, 1e-8).ok()?;
    let bq = bell_diagonalize(&partial_trace(psi, &[k, l]).ok()?, 1e-8).ok()?;
    let werner = |d: &[f64; 3]| {
        (d[0] - d[1]).abs() <= 1e-8 && (d[0] - d[2]).abs() <= 1e-8 && d[0].abs() > 1e-8
    };
    if !werner(&bp.d) || !werner(&bq.d) {
        return None;
    }
    let mut units = vec![Unitary::identity(); 4];
    units[0] = bp.u1;
    units[j] = bp.u2;
    units[k] = bq.u1;
    units[l] = bq.u2;
    let frame = Layer::new(0.0, units);
    let framed = apply_local_layer(psi, &frame).ok()?;
    let m = magic_coefficients(&framed, j);
    for x in TRIPLET {
        if m[(2, x)].norm() > 1e-8 || m[(x, 2)].norm() > 1e-8 {
            return None;
        }
    }
    let t = Matrix3::from_fn(|a, b| m[(TRIPLET[a], TRIPLET[b])]);
    let mu = t.norm_squared() / 3.0;
    let (oa, d, ob) = takagi3(&(t / c(mu.sqrt(), 0.0)))?;
    Some(WernerSplit {
        pair: (0, j),
        rest: (k, l),
        frame,
        mu,
        d: d.map(|z| z * mu.sqrt()),
        s: m[(2, 2)],
        oa,
        ob,
    })
}

impl WernerSplit {
    /// `(λ, γ₁, γ₂, γ₃)` of the form
    /// `|Φ⁺Φ⁺⟩ + e^{iγ₁}|Φ⁻Φ⁻⟩ + e^{iγ₂}|Ψ⁺Ψ⁺⟩ + √(1−λ) e^{iγ₃}|Ψ⁻Ψ⁻⟩`,
    /// the lexicographically smallest choice with `γ₁, γ₂ ∈ [0, π)`.
    fn params(&self) -> [f64; 4] {
        let r = self.mu.sqrt();
        let d = self.d.map(|z| z / r);
        let s = self.s / r;
        let lambda = 1.0 - s.norm_sqr();
        // Φ⁻Φ⁻ and Ψ⁺Ψ⁺ carry a factor −1 in the magic basis.
        let canon = |e: C64| -> (f64, f64) {
            let g = (-e).arg();
            if g < 0.0 {
                (g + PI, -1.0)
            } else {
                (g, 1.0)
            }
        };
        let mut best: Option<[f64; 3]> = None;
        for k0 in 0..3 {
            for (j1, j2) in [((k0 + 1) % 3, (k0 + 2) % 3), ((k0 + 2) % 3, (k0 + 1) % 3)] {
                let (g1, f1) = canon(d[j1] / d[k0]);
                let (g2, f2) = canon(d[j2] / d[k0]);
                let sp = s * (f1 * f2) / d[k0];
                let g3 = if sp.norm() < 1e-9 {
                    0.0
                } else {
                    wrap_pi(sp.arg())
                };
                let cand = [g1.min(PI - 1e-15), g2.min(PI - 1e-15), g3];
                if best.is_none_or(|b| cand.partial_cmp(&b) == Some(std::cmp::Ordering::Less)) {
                    best = Some(cand);
                }
            }
        }
        let g = best.expect("six variants");
        [lambda, g[0], g[1], g[2]]
    }
}

/// `U = O_a D O_bᵀ` for a unitary `U` with `O_a, O_b ∈ SO(3)`, `D` diagonal.
fn takagi3(u: &Matrix3<C64>) -> Option<(Matrix3<f64>, [C64; 3], Matrix3<f64>)> {
    let s = u * u.transpose();
    let (re, im) = (s.map(|z| z.re), s.map(|z| z.im));
    for mix in [0.618_033_988_7, -1.324_717_957_2, 2.718_281_828_4] {
        let (_, mut oa) = sym_eigen3(&(re + im * mix));
        let diag = oa.transpose().map(|x| c(x, 0.0)) * s * oa.map(|x| c(x, 0.0));
        let off: f64 = (0..3)
            .flat_map(|a| (0..3).map(move |b| (a, b)))
            .filter(|(a, b)| a != b)
            .map(|ab| diag[ab].norm_sqr())
            .sum();
        if off.sqrt() > 1e-8 {
            continue;
        }
        let y = oa.transpose().map(|x| c(x, 0.0)) * u;
        let mut d = [c(1.0, 0.0); 3];
        let mut ob = Matrix3::zeros();
        for k in 0..3 {
            let row = y.row(k);
            let big = row
                .iter()
                .copied()
                .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())?;
            let ph = big / big.norm();
            let r = row.map(|z| (z / ph).re);
            let nr = r.norm();
            d[k] = ph * nr;
            for x in 0..3 {
                ob[(x, k)] = r[x] / nr;
            }
        }
        if (ob.transpose() * ob - Matrix3::identity()).norm() > 1e-7 {
            continue;
        }
        if oa.determinant() < 0.0 {
            oa.column_mut(0).neg_mut();
            d[0] = -d[0];
        }
        if ob.determinant() < 0.0 {
            ob.column_mut(0).neg_mut();
            d[0] = -d[0];
        }
        return Some((oa, d, ob));
    }
    None
}

fn permutation_matrix(p: &[usize; 3]) -> Matrix3<f64> {
    // (P D Pᵀ)_kk = D_{p[k]}.
    Matrix3::from_fn(|r, s| if p[r] == s { 1.0 } else { 0.0 })
}

/// `U_mb (Õ ⊕ 1) U_mb† = phase · A ⊗ B` for `Õ ∈ SO(3)` on the triplet.
fn local_from_triplet_rotation(o: &Matrix3<f64>) -> Option<(C64, M2, M2)> {
    let mut o4 = Matrix4::<f64>::zeros();
    o4[(2, 2)] = 1.0;
    for a in 0..3 {
        for b in 0..3 {
            o4[(TRIPLET[a], TRIPLET[b])] = o[(a, b)];
        }
    }
    let mb = magic_basis();
    factor_product(&(mb * o4.map(|x| c(x, 0.0)) * mb.adjoint()))
}

// ---- numeric fallback ----

#[derive(Clone, Copy)]
enum Slot {
    Free,
    Restricted { w: M2, v: M2, ks: &'static [u8] },
}

fn slots(cs: &ConstraintSet) -> Vec<Slot> {
    (0..cs.n())
        .map(|q| match &cs.constraints[q] {
            QubitConstraint::Determined(d) => Slot::Restricted {
                w: *d.w.matrix(),
                v: *d.v.matrix(),
                ks: d.k_set.values(),
            },
            _ => Slot::Free,
        })
        .collect()
}

fn apply_units(phi: &[C64], n: usize, units: &[M2], skip: Option<usize>) -> Vec<C64> {
    let mut amp = phi.to_vec();
    for (q, u) in units.iter().enumerate() {
        if Some(q) != skip {
            apply_single(&mut amp, n, q, u);
        }
    }
    amp
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `E` with `⟨ψ|(⊗U)φ⟩ = tr(U_q E)`.
fn environment(psi: &[C64], phi: &[C64], n: usize, units: &[M2], q: usize) -> M2 {
    let chi = apply_units(phi, n, units, Some(q));
    let m = mask(q, n);
    let mut e = M2::zeros();
    for idx in (0..psi.len()).filter(|i| i & m == 0) {
        let pair = [idx, idx | m];
        for (b, &ib) in pair.iter().enumerate() {
            for (a, &ia) in pair.iter().enumerate() {
                e[(b, a)] += chi[ib] * psi[ia].conj();
            }
        }
    }
    e
}

fn best_unit(slot: Slot, e: &M2) -> M2 {
    match slot {
        Slot::Free => {
            let svd = e.svd(true, true);
            svd.v_t.expect("requested").adjoint() * svd.u.expect("requested").adjoint()
        }
        Slot::Restricted { w, v, ks } => {
            let x = pauli(Pauli::X);
            let mut best = (f64::NEG_INFINITY, M2::identity());
            for &k in ks {
                let xk = if k == 1 { x } else { M2::identity() };
                let f = xk * v * e * w.adjoint();
                let val = f[(0, 0)].norm() + f[(1, 1)].norm();
                if val > best.0 {
                    let alpha = f[(0, 0)].arg() - f[(1, 1)].arg();
                    let z = M2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), cis(alpha));
                    best = (val, w.adjoint() * z * xk * v);
                }
            }
            best.1
        }
    }
}

fn sweep_until_stalled(
    psi: &[C64],
    phi: &[C64],
    n: usize,
    units: &mut [M2],
    slots: &[Slot],
    max_sweeps: usize,
) -> f64 {
    let mut last = inner(psi, &apply_units(phi, n, units, None)).norm();
    for _ in 0..max_sweeps {
        for q in 0..n {
            let e = environment(psi, phi, n, units, q);
            units[q] = best_unit(slots[q], &e);
        }
        let now = inner(psi, &apply_units(phi, n, units, None)).norm();
        if now - last < 1e-15 {
            return now;
        }
        last = now;
    }
    last
}

/// Multistart alternating maximization of `|⟨ψ|(⊗U)φ⟩|`: free qubits over
/// U(2), determined ones over `W† Z(α) Xᵏ V`. Returns a layer only when the
/// overlap reaches [`FALLBACK_ACCEPT`], together with the best overlap seen.
pub fn numeric_fallback(
    psi: &State,
    phi: &State,
    cs: &ConstraintSet,
    starts: usize,
    seed: u64,
) -> Option<Layer> {
    fallback_search(psi, phi, cs, starts, seed).0
}

fn fallback_search(
    psi: &State,
    phi: &State,
    cs: &ConstraintSet,
    starts: usize,
    seed: u64,
) -> (Option<Layer>, f64) {
    let n = psi.n();
    let (pa, fa) = (psi.amplitudes(), phi.amplitudes());
    let restricted = slots(cs);
    let free = vec![Slot::Free; n];
    let mut r = rng(seed);
    let mut best = 0.0f64;
    for start in 0..starts {
        let mut units: Vec<M2> = restricted
            .iter()
            .map(|s| match *s {
                Slot::Free if start == 0 => M2::identity(),
                Slot::Free => *random_unitary2(&mut r).matrix(),
                Slot::Restricted { w, v, ks } => {
                    let k = ks[(r.random::<f64>() * ks.len() as f64) as usize % ks.len()];
                    let xk = if k == 1 {
                        pauli(Pauli::X)
                    } else {
                        M2::identity()
                    };
                    let z = M2::new(
                        c(1.0, 0.0),
                        c(0.0, 0.0),
                        c(0.0, 0.0),
                        cis(r.random::<f64>() * 2.0 * PI),
                    );
                    w.adjoint() * z * xk * v
                }
            })
            .collect();
        sweep_until_stalled(pa, fa, n, &mut units, &restricted, 400);
        let ov = sweep_until_stalled(pa, fa, n, &mut units, &free, 400);
        best = best.max(ov);
        if ov >= FALLBACK_ACCEPT {
            let layer = Layer::new(0.0, units.into_iter().map(Unitary::new_unchecked).collect());
            return (Some(layer), ov);
        }
    }
    (None, best)
}

use rand::Rng;

// ---- classes ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ThreeQubitLabel {
    /// Every single-qubit marginal maximally mixed.
    One,
    /// Some qubit in a product with the rest.
    Two,
    /// Some partially entangled qubit whose Schmidt branches are both
    /// maximally entangled.
    ThreeA,
    ThreeB,
}

impl fmt::Display for ThreeQubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThreeQubitLabel::One => "3-1",
            ThreeQubitLabel::Two => "3-2",
            ThreeQubitLabel::ThreeA => "3-3a",
            ThreeQubitLabel::ThreeB => "3-3b",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThreeQubitClass {
    pub label: ThreeQubitLabel,
    /// Single-qubit entropies in bits.
    pub entropies: [f64; 3],
    /// Larger Schmidt weight of the splitting qubit (classes 3-3a/3-3b).
    pub p: Option<f64>,
    pub split_qubit: Option<usize>,
}

pub fn classify_3(psi: &State) -> Result<ThreeQubitClass> {
    fixed_size(psi, 3)?;
    let deg = DEGENERACY;
    let entropies = [0, 1, 2].map(|q| entropy(&partial_trace(psi, &[q]).expect("valid")));
    let spectra: Vec<Vec<f64>> = (0..3)
        .map(|q| partial_trace(psi, &[q]).expect("valid").spectrum().values)
        .collect();
    let mixed = |q: usize| spectra[q][0] - spectra[q][1] <= deg;
    let product = |q: usize| spectra[q][1] <= PRODUCT_TOL;
    if (0..3).all(mixed) {
        return Ok(ThreeQubitClass {
            label: ThreeQubitLabel::One,
            entropies,
            p: None,
            split_qubit: None,
        });
    }
    if (0..3).any(product) {
        return Ok(ThreeQubitClass {
            label: ThreeQubitLabel::Two,
            entropies,
            p: None,
            split_qubit: None,
        });
    }
    let candidates: Vec<usize> = (0..3).filter(|&q| !mixed(q)).collect();
    let maximally = |s: &State| maximally_mixed(s, 0, 1e-8);
    for &i in &candidates {
        let split = schmidt_split(psi, i, deg)?;
        if let Some(b1) = &split.branch1 {
            if maximally(&split.branch0) && maximally(b1) {
                return Ok(ThreeQubitClass {
                    label: ThreeQubitLabel::ThreeA,
                    entropies,
                    p: Some(split.p),
                    split_qubit: Some(i),
                });
            }
        }
    }
    let i = candidates[0];
    Ok(ThreeQubitClass {
        label: ThreeQubitLabel::ThreeB,
        entropies,
        p: Some(spectra[i][0]),
        split_qubit: Some(i),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FourQubitLabel {
    OneA,
    OneB,
    TwoA,
    TwoB,
}

impl fmt::Display for FourQubitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FourQubitLabel::OneA => "4-1a",
            FourQubitLabel::OneB => "4-1b",
            FourQubitLabel::TwoA => "4-2a",
            FourQubitLabel::TwoB => "4-2b",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FourQubitParams {
    Entropies([f64; 4]),
    /// Werner pair marginals on `pair` and its complement.
    BellPair {
        pair: (usize, usize),
        lambda: f64,
        gammas: [f64; 3],
    },
    /// Maximally entangled across `pair` and its complement.
    Nonlocal {
        pair: (usize, usize),
        content: NonlocalContent,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FourQubitClass {
    pub label: FourQubitLabel,
    pub params: FourQubitParams,
}

pub fn classify_4(psi: &State) -> Result<FourQubitClass> {
    fixed_size(psi, 4)?;
    let deg = DEGENERACY;
    let entropies = [0, 1, 2, 3].map(|q| entropy(&partial_trace(psi, &[q]).expect("valid")));
    let mixed: Vec<bool> = (0..4).map(|q| maximally_mixed(psi, q, deg)).collect();
    if mixed.iter().any(|m| !m) {
        let correlated = (0..4)
            .filter(|&i| !mixed[i])
            .any(|i| (0..4).any(|j| j != i && !factorizes_with_mixed(psi, i, j)));
        let label = if correlated {
            FourQubitLabel::OneA
        } else {
            FourQubitLabel::OneB
        };
        return Ok(FourQubitClass {
            label,
            params: FourQubitParams::Entropies(entropies),
        });
    }
    if let Some(j) = (1..4).find(|&j| pair_maximally_mixed(psi, j, deg)) {
        let (_, content) = choi_frame(psi, j).ok_or_else(|| {
            LuError::InvalidParameter("Cartan decomposition of the 2|2 split failed".into())
        })?;
        return Ok(FourQubitClass {
            label: FourQubitLabel::TwoB,
            params: FourQubitParams::Nonlocal {
                pair: (0, j),
                content,
            },
        });
    }
    for j in 1..4 {
        if let Some(w) = werner_split(psi, j) {
            let p = w.params();
            return Ok(FourQubitClass {
                label: FourQubitLabel::TwoA,
                params: FourQubitParams::BellPair {
                    pair: (0, j),
                    lambda: p[0],
                    gammas: [p[1], p[2], p[3]],
                },
            });
        }
    }
    Ok(FourQubitClass {
        label: FourQubitLabel::TwoA,
        params: FourQubitParams::Entropies(entropies),
    })
}

/// `ρ_{ij} = ρ_i ⊗ 𝟙/2`.
fn factorizes_with_mixed(psi: &State, i: usize, j: usize) -> bool {
    let (lo, hi) = (i.min(j), i.max(j));
    let joint = partial_trace(psi, &[lo, hi]).expect("valid pair");
    let ri = dmatrix_to_m2(partial_trace(psi, &[i]).expect("valid").matrix());
    let m = joint.matrix();
    for x in 0..4 {
        for y in 0..4 {
            let (xi, xj, yi, yj) = if i < j {
                (x >> 1, x & 1, y >> 1, y & 1)
            } else {
                (x & 1, x >> 1, y & 1, y >> 1)
            };
            let want = if xj == yj {
                ri[(xi, yi)] * 0.5
            } else {
                c(0.0, 0.0)
            };
            if (m[(x, y)] - want).norm() > 1e-9 {
                return false;
            }
        }
    }
    true
}

// ---- flags derived from the decision ----

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConjugateFlag {
    /// `ψ ≃ ψ*`.
    Zero,
    One,
    Unknown,
}

/// The `I₁` flag: whether `ψ` is LU-equivalent to its complex conjugate.
pub fn conjugate_class(psi: &State, opts: &Options) -> Result<(ConjugateFlag, Verdict)> {
    let v = decide_lu(psi, &conjugate_state(psi), opts)?;
    let flag = match &v {
        Verdict::Equivalent { .. } => ConjugateFlag::Zero,
        Verdict::NotEquivalent { .. } => ConjugateFlag::One,
        Verdict::Undecided { .. } => ConjugateFlag::Unknown,
    };
    Ok((flag, v))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LoccRelation {
    Equivalent,
    LoccIncomparable,
    Unknown,
}

/// States with equal single-qubit spectra are either LU-equivalent or
/// cannot be converted into each other by LOCC in either direction.
pub fn locc_comparability(
    psi: &State,
    phi: &State,
    opts: &Options,
) -> Result<(LoccRelation, Verdict)> {
    if psi.n() != phi.n() {
        return Err(LuError::DimensionMismatch {
            expected: psi.n(),
            found: phi.n(),
        });
    }
    let v = decide_lu(psi, phi, opts)?;
    for q in 0..psi.n() {
        let a = partial_trace(psi, &[q])?.spectrum();
        let b = partial_trace(phi, &[q])?.spectrum();
        if a.max_difference(&b) > opts.tol {
            return Ok((LoccRelation::Unknown, v));
        }
    }
    let rel = match &v {
        Verdict::Equivalent { .. } => LoccRelation::Equivalent,
        Verdict::NotEquivalent { .. } => LoccRelation::LoccIncomparable,
        Verdict::Undecided { .. } => LoccRelation::Unknown,
    };
    Ok((rel, v))
}

// ---- mixed states ----

/// Eigenvalues closer than this are treated as one degenerate level.
pub const MIXED_DEGENERACY: f64 = 1e-8;

/// `L σ L†` for a product layer.
pub fn conjugate_density(sigma: &DMatrix<C64>, layer: &Layer) -> DMatrix<C64> {
    let n = layer.len();
    let dim = 1usize << n;
    let apply_cols = |m: &DMatrix<C64>| {
        let mut out = m.clone();
        for col in 0..dim {
            let mut v: Vec<C64> = out.column(col).iter().copied().collect();
            for (q, u) in layer.units().iter().enumerate() {
                apply_single(&mut v, n, q, u.matrix());
            }
            out.set_column(col, &nalgebra::DVector::from_vec(v));
        }
        out
    };
    let left = apply_cols(sigma);
    apply_cols(&left.adjoint()).adjoint()
}

/// Mixed-state equivalence via the eigenvectors of a nondegenerate level,
/// or via the lifted `(n+1)`-qubit state of a two-fold degenerate level.
pub fn decide_lu_mixed(rho: &Density, sigma: &Density, opts: &Options) -> Result<Verdict> {
    if rho.dim() != sigma.dim() {
        return Err(LuError::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    let n = rho.qubits();
    let (vr, er) = rho.eigen();
    let (vs, es) = sigma.eigen();
    let diff = vr
        .iter()
        .zip(&vs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if diff > opts.tol {
        return Ok(Verdict::NotEquivalent {
            witness: Witness::SpectrumMismatch {
                subset: (0..n).collect(),
                left: vr,
                right: vs,
            },
        });
    }
    if n == 2 {
        return lu_equiv_mixed2(rho, sigma, opts.tol);
    }
    let levels = cluster(&vr);
    let check = |layer: &Layer| -> Option<Verdict> {
        let img = conjugate_density(sigma.matrix(), layer);
        let err = (img - rho.matrix()).norm();
        (err <= 1e-8).then(|| Verdict::Equivalent {
            certificate: layer.clone(),
            overlap: 1.0 - err,
        })
    };
    let column = |e: &DMatrix<C64>, k: usize| {
        PureState::normalized(n, e.column(k).iter().copied().collect()).expect("unit eigenvector")
    };
    let mut single: Vec<&Level> = levels.iter().filter(|l| l.members.len() == 1).collect();
    single.sort_by(|a, b| b.isolation.partial_cmp(&a.isolation).unwrap());
    for level in &single {
        let k = level.members[0];
        match decide_lu(&column(&er, k), &column(&es, k), opts)? {
            Verdict::NotEquivalent { witness } if level.isolation >= 1e-6 => {
                return Ok(Verdict::NotEquivalent { witness })
            }
            Verdict::Equivalent { certificate, .. } => {
                if let Some(v) = check(&certificate) {
                    return Ok(v);
                }
            }
            _ => {}
        }
    }
    for level in levels.iter().filter(|l| l.members.len() == 2) {
        let lift = |e: &DMatrix<C64>| {
            let mut amp: Vec<C64> = e
                .column(level.members[0])
                .iter()
                .map(|z| z * FRAC_1_SQRT_2)
                .collect();
            amp.extend(e.column(level.members[1]).iter().map(|z| z * FRAC_1_SQRT_2));
            PureState::normalized(n + 1, amp).expect("orthonormal pair")
        };
        match decide_lu(&lift(&er), &lift(&es), opts)? {
            Verdict::NotEquivalent { witness } if level.isolation >= 1e-6 => {
                return Ok(Verdict::NotEquivalent { witness })
            }
            Verdict::Equivalent { certificate, .. } => {
                let layer = Layer::new(0.0, certificate.units()[1..].to_vec());
                if let Some(v) = check(&layer) {
                    return Ok(v);
                }
            }
            _ => {}
        }
    }
    let reason = if single.is_empty() && !levels.iter().any(|l| l.members.len() == 2) {
        "UnimplementedDegeneracy: no eigenvalue of multiplicity one or two".to_string()
    } else {
        "no eigenvector certificate maps σ onto ρ".to_string()
    };
    Ok(Verdict::Undecided {
        reason,
        best_overlap: 0.0,
    })
}

struct Level {
    members: Vec<usize>,
    /// Distance to the nearest other eigenvalue.
    isolation: f64,
}

fn cluster(vals: &[f64]) -> Vec<Level> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, v) in vals.iter().enumerate() {
        match groups.last_mut() {
            Some(g) if (vals[*g.last().unwrap()] - v).abs() <= MIXED_DEGENERACY => g.push(k),
            _ => groups.push(vec![k]),
        }
    }
    groups
        .iter()
        .map(|g| {
            let inside = |k: usize| g.contains(&k);
            let isolation = (0..vals.len())
                .filter(|&k| !inside(k))
                .map(|k| {
                    g.iter()
                        .map(|&m| (vals[m] - vals[k]).abs())
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(f64::INFINITY, f64::min);
            Level {
                members: g.clone(),
                isolation,
            }
        })
        .collect()
}
