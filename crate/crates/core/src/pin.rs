//! Pinning single-qubit unitaries from covariant reduced quantities.
//!
//! For `ψ = e^{iθ} ⊗ᵢ Uᵢ φ` a qubit is *determined* once unitaries `W`, `V`
//! are known with `W U V† = e^{iβ} Z(α) Xᵏ` for an unknown angle `α` and a
//! bit `k` from a known set. Every rule computes a quantity from both states
//! (in the frames fixed so far) that transforms by conjugation with the
//! unknown `U`, and reads `W`, `V` off its eigenvectors. When the two sides
//! disagree on a conjugation invariant the states cannot be equivalent and
//! the rule reports a [`Witness`] instead.
//!
//! Rules only use quantities that are unaffected (or only rephased) by the
//! residual `Z(α)Xᵏ` freedom of qubits pinned earlier, so no dependent
//! unitaries are ever carried around.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, Matrix3, Matrix4, Vector3};
use serde::Serialize;

use crate::linalg::{c, diagonalizer, frame_for_axis, pauli, pauli_index, sym_eigen3, M2};
use crate::tensor::{apply_local_layer, apply_single, gather, partial_trace, PureState};
use crate::two_qubit::lift_rotation;
use crate::{Layer, Pauli, State, Unitary, Witness, C64};

/// A witness matrix counts as proportional to `𝟙` below this distance.
pub const WITNESS_DEGENERACY: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PinOptions {
    /// Smallest eigenvalue gap or vector norm a rule fires on.
    pub gap: f64,
    /// Largest tolerated difference of a conjugation invariant.
    pub invariant_tol: f64,
    /// Largest context size for the correlation-Gram rule.
    pub max_context: usize,
}

impl Default for PinOptions {
    fn default() -> Self {
        Self {
            gap: 1e-6,
            invariant_tol: 1e-6,
            max_context: 3,
        }
    }
}

/// Allowed values of the bit-flip exponent `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum KSet {
    Zero,
    Both,
}

impl KSet {
    pub fn values(self) -> &'static [u8] {
        match self {
            KSet::Zero => &[0],
            KSet::Both => &[0, 1],
        }
    }

    pub fn is_singleton(self) -> bool {
        self == KSet::Zero
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WitnessKind {
    /// `tr_{¬k}[(|i⟩⟨j| + h.c.) ρ]`
    B,
    /// `tr_{¬k}[(i|i⟩⟨j| − i|j⟩⟨i|) ρ]`
    C,
}

/// Which rule fixed a qubit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Rule {
    SingleMarginal,
    WeightedMarginal {
        anchor: usize,
    },
    OrthogonalPair {
        anchor: usize,
    },
    PairWitness {
        fixed: Vec<usize>,
        i: usize,
        j: usize,
    },
    Triple {
        traced: usize,
        kept: usize,
    },
    CorrelationGram {
        context: Vec<usize>,
    },
    WernerLink {
        other: usize,
    },
    SingletProjection {
        pair: (usize, usize),
        inner: Box<Rule>,
    },
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let one = |v: &[usize]| {
            v.iter()
                .map(|q| (q + 1).to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            Rule::SingleMarginal => write!(f, "single marginal"),
            Rule::WeightedMarginal { anchor } => {
                write!(f, "weighted marginal (anchor {})", anchor + 1)
            }
            Rule::OrthogonalPair { anchor } => write!(f, "orthogonal pair (anchor {})", anchor + 1),
            Rule::PairWitness { fixed, i, j } => {
                write!(f, "pair witness S={{{}}} ({i:b},{j:b})", one(fixed))
            }
            Rule::Triple { traced, kept } => {
                write!(f, "triple (traced {}, kept {})", traced + 1, kept + 1)
            }
            Rule::CorrelationGram { context } => {
                write!(f, "correlation Gram on {{{}}}", one(context))
            }
            Rule::WernerLink { other } => write!(f, "Werner link to {}", other + 1),
            Rule::SingletProjection { pair, inner } => {
                write!(
                    f,
                    "singlet projection on ({},{}) then {inner}",
                    pair.0 + 1,
                    pair.1 + 1
                )
            }
        }
    }
}

/// `W U V† = e^{iβ} Z(α) Xᵏ` with `k ∈ k_set`.
#[derive(Clone, Debug, PartialEq)]
pub struct Determination {
    pub w: Unitary,
    pub v: Unitary,
    pub k_set: KSet,
    pub provenance: Rule,
}

/// `U_self = a · U_other · b` up to phase.
#[derive(Clone, Debug, PartialEq)]
pub struct Link {
    pub other: usize,
    pub a: Unitary,
    pub b: Unitary,
}

#[derive(Clone, Debug, PartialEq)]
pub enum QubitConstraint {
    Free,
    Determined(Determination),
    EqualTo(Link),
}

/// One entry of the propagation log.
#[derive(Clone, Debug, PartialEq)]
pub struct Firing {
    pub qubit: usize,
    pub rule: Rule,
    pub k_set: Option<KSet>,
    /// Eigenvalue gap or vector norm the rule fired on.
    pub gap: f64,
}

/// Per-qubit constraints with the log of rules that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintSet {
    pub constraints: Vec<QubitConstraint>,
    pub log: Vec<Firing>,
}

impl ConstraintSet {
    pub fn new(n: usize) -> Self {
        Self {
            constraints: vec![QubitConstraint::Free; n],
            log: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.constraints.len()
    }

    pub fn determination(&self, q: usize) -> Option<&Determination> {
        match &self.constraints[q] {
            QubitConstraint::Determined(d) => Some(d),
            _ => None,
        }
    }

    pub fn is_determined(&self, q: usize) -> bool {
        self.determination(q).is_some()
    }

    /// Determined with `k = 0`.
    pub fn is_full(&self, q: usize) -> bool {
        self.determination(q)
            .is_some_and(|d| d.k_set.is_singleton())
    }

    pub fn all_determined(&self) -> bool {
        (0..self.n()).all(|q| self.is_determined(q))
    }

    pub fn undetermined(&self) -> Vec<usize> {
        (0..self.n()).filter(|&q| !self.is_determined(q)).collect()
    }

    /// Determined qubits whose `k` is still open.
    pub fn open_bits(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&q| {
                self.determination(q)
                    .is_some_and(|d| !d.k_set.is_singleton())
            })
            .collect()
    }

    /// Smallest gap among the firings that are still in force.
    pub fn min_gap(&self) -> f64 {
        self.log.iter().map(|f| f.gap).fold(f64::INFINITY, f64::min)
    }

    /// `⊗ W_q` (identity on undetermined qubits).
    pub fn source_layer(&self) -> Layer {
        Layer::new(
            0.0,
            (0..self.n())
                .map(|q| self.determination(q).map_or(Unitary::identity(), |d| d.w))
                .collect(),
        )
    }

    /// `⊗ V_q` (identity on undetermined qubits).
    pub fn target_layer(&self) -> Layer {
        Layer::new(
            0.0,
            (0..self.n())
                .map(|q| self.determination(q).map_or(Unitary::identity(), |d| d.v))
                .collect(),
        )
    }

    /// Fixes `k` on the listed qubits by folding `Xᵏ` into `V`.
    pub fn with_branch(&self, bits: &[(usize, u8)]) -> Self {
        let mut out = self.clone();
        for &(q, k) in bits {
            if let QubitConstraint::Determined(d) = &mut out.constraints[q] {
                if k == 1 {
                    d.v = Unitary::pauli(Pauli::X) * d.v;
                }
                d.k_set = KSet::Zero;
            }
        }
        out
    }

    fn frame_w(&self, q: usize) -> M2 {
        self.determination(q)
            .map_or(M2::identity(), |d| *d.w.matrix())
    }

    fn frame_v(&self, q: usize) -> M2 {
        self.determination(q)
            .map_or(M2::identity(), |d| *d.v.matrix())
    }

    /// Installs a determination, pushing it through a Werner link the qubit
    /// held before.
    fn set(&mut self, q: usize, d: Determination, gap: f64) {
        self.log.push(Firing {
            qubit: q,
            rule: d.provenance.clone(),
            k_set: Some(d.k_set),
            gap,
        });
        let old = std::mem::replace(
            &mut self.constraints[q],
            QubitConstraint::Determined(d.clone()),
        );
        if let QubitConstraint::EqualTo(link) = old {
            if !self.is_determined(link.other) {
                // U_q = a U_o b  ⇒  W_q a U_o b V_q† = Z Xᵏ.
                let derived = Determination {
                    w: Unitary::new_unchecked(d.w.matrix() * link.a.matrix()),
                    v: Unitary::new_unchecked(d.v.matrix() * link.b.matrix().adjoint()),
                    k_set: d.k_set,
                    provenance: Rule::WernerLink { other: q },
                };
                self.set(link.other, derived, gap);
            }
        }
    }

    fn link(&mut self, q: usize, link: Link) {
        self.log.push(Firing {
            qubit: q,
            rule: Rule::WernerLink { other: link.other },
            k_set: None,
            gap: 1.0,
        });
        self.constraints[q] = QubitConstraint::EqualTo(link);
    }

    /// Determines every linked qubit whose partner is determined.
    fn resolve_links(&mut self) -> bool {
        for q in 0..self.n() {
            if let QubitConstraint::EqualTo(link) = &self.constraints[q] {
                if let Some(d) = self.determination(link.other) {
                    // U_q = a U_o b, W_o U_o V_o† = Z Xᵏ  ⇒  W_o a† U_q b† V_o† = Z Xᵏ.
                    let derived = Determination {
                        w: Unitary::new_unchecked(d.w.matrix() * link.a.matrix().adjoint()),
                        v: Unitary::new_unchecked(d.v.matrix() * link.b.matrix()),
                        k_set: d.k_set,
                        provenance: Rule::WernerLink { other: link.other },
                    };
                    self.constraints[q] = QubitConstraint::Free;
                    self.set(q, derived, 1.0);
                    return true;
                }
            }
        }
        false
    }

    fn reaches(&self, from: usize, target: usize) -> bool {
        let mut cur = from;
        for _ in 0..=self.n() {
            if cur == target {
                return true;
            }
            match &self.constraints[cur] {
                QubitConstraint::EqualTo(l) => cur = l.other,
                _ => return false,
            }
        }
        true
    }
}

/// Result of a single rule application.
#[derive(Clone, Debug, PartialEq)]
pub enum PinOutcome {
    Pinned(Determination),
    NotApplicable,
    Mismatch(Witness),
}

/// The 2×2 Hermitian witness matrices `B`, `C` of `target` for every tuple
/// `(i, j)`, `i ≤ j`, of basis strings on `fixed`, in lexicographic order
/// with `B` before `C` (`C` is absent on the diagonal).
pub fn witness_matrices(
    psi: &State,
    fixed: &[usize],
    target: usize,
) -> crate::Result<Vec<WitnessMatrix>> {
    let mut order = fixed.to_vec();
    order.push(target);
    let rho = ordered_marginal(psi, &order)?;
    let dim = 1usize << fixed.len();
    let mut out = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            let m = block(&rho, i, j);
            let b = m + m.adjoint();
            out.push(WitnessMatrix {
                matrix: b,
                i,
                j,
                kind: WitnessKind::B,
            });
            if i != j {
                out.push(WitnessMatrix {
                    matrix: (m - m.adjoint()) * c(0.0, 1.0),
                    i,
                    j,
                    kind: WitnessKind::C,
                });
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WitnessMatrix {
    pub matrix: M2,
    pub i: usize,
    pub j: usize,
    pub kind: WitnessKind,
}

impl WitnessMatrix {
    /// `‖B − (tr B/2)𝟙‖_F ≤ WITNESS_DEGENERACY`.
    pub fn is_trivial(&self) -> bool {
        traceless_norm(&self.matrix) <= WITNESS_DEGENERACY
    }
}

fn traceless_norm(m: &M2) -> f64 {
    let t = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    (m - M2::identity() * t).norm()
}

/// `⟨i|_S ρ |j⟩_S` for the last qubit of an ordered marginal.
fn block(rho: &DMatrix<C64>, i: usize, j: usize) -> M2 {
    M2::new(
        rho[(2 * i, 2 * j)],
        rho[(2 * i, 2 * j + 1)],
        rho[(2 * i + 1, 2 * j)],
        rho[(2 * i + 1, 2 * j + 1)],
    )
}

/// Reduced state with the subsystems in the given order (first = MSB).
pub fn ordered_marginal(psi: &State, order: &[usize]) -> crate::Result<DMatrix<C64>> {
    let mut sorted = order.to_vec();
    sorted.sort_unstable();
    let rho = partial_trace(psi, &sorted)?;
    let m = order.len();
    let pos: Vec<usize> = order
        .iter()
        .map(|q| sorted.iter().position(|s| s == q).expect("member"))
        .collect();
    let map = |x: usize| {
        (0..m).fold(0, |acc, k| {
            acc | (((x >> (m - 1 - k)) & 1) << (m - 1 - pos[k]))
        })
    };
    let dim = 1usize << m;
    let idx: Vec<usize> = (0..dim).map(map).collect();
    Ok(DMatrix::from_fn(dim, dim, |a, b| {
        rho.matrix()[(idx[a], idx[b])]
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Free,
    Full,
    Axis,
}

fn kind_of(cs: &ConstraintSet, q: usize) -> Kind {
    match cs.determination(q) {
        Some(d) if d.k_set.is_singleton() => Kind::Full,
        Some(_) => Kind::Axis,
        None => Kind::Free,
    }
}

/// Operator basis used for a context qubit: Paulis when it is free,
/// `(𝟙, Z, |0⟩⟨1|, |1⟩⟨0|)` once its residual is `Z(α)Xᵏ`.
fn basis(kind: Kind) -> [M2; 4] {
    match kind {
        Kind::Free => [
            pauli_index(0),
            pauli_index(1),
            pauli_index(2),
            pauli_index(3),
        ],
        _ => {
            let z = c(0.0, 0.0);
            let o = c(1.0, 0.0);
            [
                pauli_index(0),
                pauli(Pauli::Z),
                M2::new(z, o, z, z),
                M2::new(z, z, o, z),
            ]
        }
    }
}

/// Groups of basis indices mixed only among themselves by the residual.
fn blocks(kind: Kind) -> Vec<Vec<usize>> {
    match kind {
        Kind::Free => vec![vec![0], vec![1, 2, 3]],
        Kind::Full => vec![vec![0], vec![1], vec![2], vec![3]],
        Kind::Axis => vec![vec![0], vec![1], vec![2, 3]],
    }
}

/// `tr(ρ · B₀ ⊗ B₁ ⊗ …)` for every basis combination (first factor most
/// significant in the base-4 index).
fn coefficients(rho: &DMatrix<C64>, bases: &[[M2; 4]]) -> Vec<C64> {
    let m = bases.len();
    let dim = 1usize << m;
    let mut out = vec![c(0.0, 0.0); 1 << (2 * m)];
    for (combo, slot) in out.iter_mut().enumerate() {
        let digit = |k: usize| (combo >> (2 * (m - 1 - k))) & 3;
        let mut acc = c(0.0, 0.0);
        for x in 0..dim {
            for y in 0..dim {
                let r = rho[(x, y)];
                if r.norm_sqr() == 0.0 {
                    continue;
                }
                let mut op = c(1.0, 0.0);
                for (k, b) in bases.iter().enumerate() {
                    let sh = m - 1 - k;
                    op *= b[digit(k)][((y >> sh) & 1, (x >> sh) & 1)];
                    if op.norm_sqr() == 0.0 {
                        break;
                    }
                }
                acc += r * op;
            }
        }
        *slot = acc;
    }
    out
}

/// Candidate pin relative to the current frames.
#[derive(Clone, Debug)]
struct Cand {
    w: M2,
    v: M2,
    k_set: KSet,
    gap: f64,
    rule: Rule,
}

enum Try {
    Fire(Cand),
    Skip,
    Clash(Witness),
}

impl Try {
    fn better(self, other: Try) -> Try {
        match (self, other) {
            (Try::Clash(w), _) | (_, Try::Clash(w)) => Try::Clash(w),
            (Try::Fire(a), Try::Fire(b)) => {
                let rank = |c: &Cand| (c.k_set.is_singleton(), c.gap);
                if rank(&b) > rank(&a) {
                    Try::Fire(b)
                } else {
                    Try::Fire(a)
                }
            }
            (Try::Fire(a), Try::Skip) | (Try::Skip, Try::Fire(a)) => Try::Fire(a),
            (Try::Skip, Try::Skip) => Try::Skip,
        }
    }
}

fn mismatch(name: impl Into<String>, left: Vec<f64>, right: Vec<f64>) -> Try {
    Try::Clash(Witness::InvariantMismatch {
        name: name.into(),
        left,
        right,
    })
}

/// Framed states plus a marginal cache.
struct Ctx<'a> {
    psi: State,
    phi: State,
    kinds: Vec<Kind>,
    opts: &'a PinOptions,
    cache: HashMap<Vec<usize>, (DMatrix<C64>, DMatrix<C64>)>,
}

impl<'a> Ctx<'a> {
    fn new(psi: &State, phi: &State, cs: &ConstraintSet, opts: &'a PinOptions) -> Self {
        let psi = apply_local_layer(psi, &cs.source_layer()).expect("layer matches register");
        let phi = apply_local_layer(phi, &cs.target_layer()).expect("layer matches register");
        let kinds = (0..cs.n()).map(|q| kind_of(cs, q)).collect();
        Self {
            psi,
            phi,
            kinds,
            opts,
            cache: HashMap::new(),
        }
    }

    fn n(&self) -> usize {
        self.psi.n()
    }

    fn marg(&mut self, order: &[usize]) -> (DMatrix<C64>, DMatrix<C64>) {
        if let Some(v) = self.cache.get(order) {
            return v.clone();
        }
        let v = (
            ordered_marginal(&self.psi, order).expect("valid subset"),
            ordered_marginal(&self.phi, order).expect("valid subset"),
        );
        self.cache.insert(order.to_vec(), v.clone());
        v
    }

    fn single(&mut self, q: usize) -> (M2, M2) {
        let (a, b) = self.marg(&[q]);
        (to_m2(&a), to_m2(&b))
    }
}

fn to_m2(m: &DMatrix<C64>) -> M2 {
    crate::linalg::dmatrix_to_m2(m)
}

/// Hermitian matrices with `Hψ = U Hφ U†`: diagonalizers when nondegenerate.
fn hermitian_pin(hp: &M2, hf: &M2, name: &str, opts: &PinOptions, rule: Rule) -> Try {
    let hp = (hp + hp.adjoint()) * c(0.5, 0.0);
    let hf = (hf + hf.adjoint()) * c(0.5, 0.0);
    let (vp, wp) = diagonalizer(&hp);
    let (vf, wf) = diagonalizer(&hf);
    if (vp[0] - vf[0]).abs() > opts.invariant_tol || (vp[1] - vf[1]).abs() > opts.invariant_tol {
        return mismatch(name, vp.to_vec(), vf.to_vec());
    }
    let gap = (vp[0] - vp[1]).min(vf[0] - vf[1]);
    if gap > opts.gap {
        Try::Fire(Cand {
            w: wp,
            v: wf,
            k_set: KSet::Zero,
            gap,
            rule,
        })
    } else {
        Try::Skip
    }
}

/// Matrices with `Mψ = e^{iβ} U Mφ U†` for an unknown phase.
fn phase_covariant_pin(mp: &M2, mf: &M2, name: &str, opts: &PinOptions, rule: Rule) -> Try {
    for (hp, hf) in [
        (mp * mp.adjoint(), mf * mf.adjoint()),
        (mp.adjoint() * mp, mf.adjoint() * mf),
    ] {
        match hermitian_pin(&hp, &hf, name, opts, rule.clone()) {
            Try::Skip => {}
            t => return t,
        }
    }
    // Both products are ∝ 𝟙, so M is a multiple of a unitary.
    let scale = mp.norm();
    if (scale - mf.norm()).abs() > opts.invariant_tol {
        return mismatch(name, vec![scale], vec![mf.norm()]);
    }
    if scale <= opts.gap {
        return Try::Skip;
    }
    let axis = |m: &M2| -> Option<(M2, C64, C64)> {
        let p = crate::linalg::pauli_coefficients(m);
        let v = [p[1], p[2], p[3]];
        let big = v
            .iter()
            .copied()
            .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap())?;
        if big.norm() <= opts.gap {
            return None;
        }
        let ph = big.conj() / big.norm();
        let n = Vector3::new((v[0] * ph).re, (v[1] * ph).re, (v[2] * ph).re);
        let f = frame_for_axis(&n);
        let d = f * m * f.adjoint();
        Some((f, d[(0, 0)], d[(1, 1)]))
    };
    let (Some((fp, p0, p1)), Some((ff, f0, f1))) = (axis(mp), axis(mf)) else {
        return Try::Skip;
    };
    if p1.norm() == 0.0 || f0.norm() == 0.0 || f1.norm() == 0.0 {
        return Try::Skip;
    }
    let rp = p0 / p1;
    let (same, swapped) = ((rp - f0 / f1).norm(), (rp - f1 / f0).norm());
    let tol = opts.invariant_tol.max(1e-9);
    let spread = (rp - c(1.0, 0.0) / rp).norm() * 0.5;
    match (same <= tol, swapped <= tol) {
        (true, true) => Try::Fire(Cand {
            w: fp,
            v: ff,
            k_set: KSet::Both,
            gap: scale,
            rule,
        }),
        (true, false) => Try::Fire(Cand {
            w: fp,
            v: ff,
            k_set: KSet::Zero,
            gap: spread,
            rule,
        }),
        (false, true) => {
            let x = pauli(Pauli::X);
            Try::Fire(Cand {
                w: fp,
                v: x * ff,
                k_set: KSet::Zero,
                gap: spread,
                rule,
            })
        }
        (false, false) => mismatch(name, vec![rp.re, rp.im], vec![(f0 / f1).re, (f0 / f1).im]),
    }
}

/// Invariants of a Gram matrix `G → (1⊕O) G (1⊕O)ᵀ`.
struct GramParts {
    g00: f64,
    vectors: [Vector3<f64>; 3],
    sym: Matrix3<f64>,
}

fn gram_parts(g: &Matrix4<C64>) -> GramParts {
    let re0 = Vector3::new(g[(1, 0)].re, g[(2, 0)].re, g[(3, 0)].re);
    let im0 = Vector3::new(g[(1, 0)].im, g[(2, 0)].im, g[(3, 0)].im);
    let axial = Vector3::new(g[(2, 3)].im, g[(3, 1)].im, g[(1, 2)].im);
    let sym = Matrix3::from_fn(|a, b| g[(a + 1, b + 1)].re);
    GramParts {
        g00: g[(0, 0)].re,
        vectors: [re0, im0, axial],
        sym,
    }
}

/// Pins the row qubit from column blocks of two coefficient matrices whose
/// rows transform as `(1⊕O)` and whose blocks are rotated by unitaries.
fn pin_from_columns(
    cp: &DMatrix<C64>,
    cf: &DMatrix<C64>,
    groups: &[Vec<usize>],
    allow_axis: bool,
    name: &str,
    opts: &PinOptions,
    rule: &Rule,
) -> Try {
    let mut best = Try::Skip;
    for cols in groups {
        let sub = |m: &DMatrix<C64>| DMatrix::from_fn(4, cols.len(), |r, k| m[(r, cols[k])]);
        let (sp, sf) = (sub(cp), sub(cf));
        let gp: Matrix4<C64> = (&sp * sp.adjoint()).fixed_view::<4, 4>(0, 0).into_owned();
        let gf: Matrix4<C64> = (&sf * sf.adjoint()).fixed_view::<4, 4>(0, 0).into_owned();
        let (pp, pf) = (gram_parts(&gp), gram_parts(&gf));
        let tol = opts.invariant_tol;
        if (pp.g00 - pf.g00).abs() > tol {
            return mismatch(name, vec![pp.g00], vec![pf.g00]);
        }
        for (a, b) in pp.vectors.iter().zip(&pf.vectors) {
            if (a.norm() - b.norm()).abs() > tol {
                return mismatch(name, vec![a.norm()], vec![b.norm()]);
            }
        }
        let (ep, vp) = sym_eigen3(&pp.sym);
        let (ef, vf) = sym_eigen3(&pf.sym);
        if ep.iter().zip(&ef).any(|(a, b)| (a - b).abs() > tol) {
            return mismatch(name, ep.to_vec(), ef.to_vec());
        }
        for (a, b) in pp.vectors.iter().zip(&pf.vectors) {
            let gap = a.norm().min(b.norm());
            if gap > opts.gap {
                let cand = Cand {
                    w: frame_for_axis(a),
                    v: frame_for_axis(b),
                    k_set: KSet::Zero,
                    gap,
                    rule: rule.clone(),
                };
                best = best.better(Try::Fire(cand));
            }
        }
        if allow_axis {
            for k in 0..3 {
                let sep = (0..3)
                    .filter(|&l| l != k)
                    .map(|l| (ep[k] - ep[l]).abs().min((ef[k] - ef[l]).abs()))
                    .fold(f64::INFINITY, f64::min);
                if sep > opts.gap {
                    let (a, b) = (vp.column(k).into_owned(), vf.column(k).into_owned());
                    let cand = Cand {
                        w: frame_for_axis(&a),
                        v: frame_for_axis(&b),
                        k_set: KSet::Both,
                        gap: sep,
                        rule: rule.clone(),
                    };
                    best = best.better(Try::Fire(cand));
                }
            }
        }
    }
    best
}

/// Column groups of a context: cartesian products of per-qubit blocks,
/// skipping the all-identity column.
fn context_groups(kinds: &[Kind]) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for &k in kinds {
        let mut next = Vec::new();
        for g in &groups {
            for b in blocks(k) {
                next.push(
                    g.iter()
                        .flat_map(|x| b.iter().map(move |y| x * 4 + y))
                        .collect(),
                );
            }
        }
        groups = next;
    }
    groups.retain(|g| g != &vec![0]);
    groups
}

// ---- individual rules on framed states ----

fn rule_single(ctx: &mut Ctx, q: usize) -> Try {
    let (rp, rf) = ctx.single(q);
    let (vp, _) = diagonalizer(&rp);
    let (vf, _) = diagonalizer(&rf);
    if (vp[0] - vf[0]).abs() > ctx.opts.invariant_tol {
        return Try::Clash(Witness::SpectrumMismatch {
            subset: vec![q],
            left: vp.to_vec(),
            right: vf.to_vec(),
        });
    }
    hermitian_pin(
        &rp,
        &rf,
        "single-qubit marginal",
        ctx.opts,
        Rule::SingleMarginal,
    )
}

/// `tr_a[(ρ_a ⊗ 𝟙) ρ_{aq}]`.
fn weighted(rho_aq: &DMatrix<C64>, rho_a: &M2) -> M2 {
    let mut out = M2::zeros();
    for x in 0..2 {
        for y in 0..2 {
            let mut acc = c(0.0, 0.0);
            for a in 0..2 {
                for b in 0..2 {
                    acc += rho_a[(a, b)] * rho_aq[(2 * b + x, 2 * a + y)];
                }
            }
            out[(x, y)] = acc;
        }
    }
    out
}

fn rule_weighted(ctx: &mut Ctx, a: usize, q: usize) -> Try {
    let (ap, af) = ctx.single(a);
    let (va, _) = diagonalizer(&ap);
    if va[0] - va[1] <= ctx.opts.gap {
        return Try::Skip;
    }
    let (pp, pf) = ctx.marg(&[a, q]);
    let (xp, xf) = (weighted(&pp, &ap), weighted(&pf, &af));
    hermitian_pin(
        &xp,
        &xf,
        "weighted marginal",
        ctx.opts,
        Rule::WeightedMarginal { anchor: a },
    )
}

fn rule_orthogonal_pair(ctx: &mut Ctx, a: usize, q: usize) -> Try {
    if ctx.kinds[a] != Kind::Full {
        return Try::Skip;
    }
    let (ap, af) = ctx.single(a);
    let diag = ap[(0, 1)].norm() <= 1e-9 && af[(0, 1)].norm() <= 1e-9;
    if !diag || (ap[(0, 0)] - ap[(1, 1)]).re.abs() <= ctx.opts.gap {
        return Try::Skip;
    }
    let (pp, pf) = ctx.marg(&[a, q]);
    phase_covariant_pin(
        &block(&pp, 0, 1),
        &block(&pf, 0, 1),
        "orthogonal-pair witness",
        ctx.opts,
        Rule::OrthogonalPair { anchor: a },
    )
}

fn rule_pair_witness(ctx: &mut Ctx, fixed: &[usize], q: usize) -> Try {
    if fixed.iter().any(|&s| ctx.kinds[s] != Kind::Full) {
        return Try::Skip;
    }
    let mut order = fixed.to_vec();
    order.push(q);
    let (pp, pf) = ctx.marg(&order);
    let dim = 1usize << fixed.len();
    for i in 0..dim {
        for j in i..dim {
            let (mp, mf) = (block(&pp, i, j), block(&pf, i, j));
            let rule = Rule::PairWitness {
                fixed: fixed.to_vec(),
                i,
                j,
            };
            let t = if i == j {
                if traceless_norm(&mf) <= WITNESS_DEGENERACY
                    && traceless_norm(&mp) <= WITNESS_DEGENERACY
                {
                    continue;
                }
                hermitian_pin(&mp, &mf, "pair witness", ctx.opts, rule)
            } else {
                phase_covariant_pin(&mp, &mf, "pair witness", ctx.opts, rule)
            };
            if !matches!(t, Try::Skip) {
                return t;
            }
        }
    }
    Try::Skip
}

/// `Λ Λᵀ ∝ 𝟙`.
fn isotropic(lambda: &Matrix3<f64>, tol: f64) -> bool {
    let g = lambda * lambda.transpose();
    let t = g.trace() / 3.0;
    (g - Matrix3::identity() * t).norm() <= tol
}

fn correlations(rho: &DMatrix<C64>) -> Matrix3<f64> {
    Matrix3::from_fn(|k, l| {
        let op = crate::linalg::kron2(&pauli_index(k + 1), &pauli_index(l + 1));
        let mut acc = c(0.0, 0.0);
        for x in 0..4 {
            for y in 0..4 {
                acc += rho[(x, y)] * op[(y, x)];
            }
        }
        acc.re
    })
}

/// `X = tr_i(ρ_{ij} ρ_{il})` on `(j, l)`.
fn triple_product(rij: &DMatrix<C64>, ril: &DMatrix<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(4, 4, |r, s| {
        let (j, l) = (r >> 1, r & 1);
        let (j2, l2) = (s >> 1, s & 1);
        let mut acc = c(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                acc += rij[(2 * a + j, 2 * b + j2)] * ril[(2 * b + l, 2 * a + l2)];
            }
        }
        acc
    })
}

fn rule_triple(ctx: &mut Ctx, i: usize, j: usize, l: usize, allow_axis: bool) -> Try {
    let (ijp, ijf) = ctx.marg(&[i, j]);
    if isotropic(&correlations(&ijp), 1e-8) {
        return Try::Skip;
    }
    let (ilp, ilf) = ctx.marg(&[i, l]);
    let (xp, xf) = (triple_product(&ijp, &ilp), triple_product(&ijf, &ilf));
    // Rows indexed by l's Pauli, columns by j's basis.
    let bases = [basis(ctx.kinds[j]), basis(Kind::Free)];
    let direct = |x: &DMatrix<C64>| {
        let v = coefficients(x, &bases);
        DMatrix::from_fn(4, 4, |r, col| v[col * 4 + r])
    };
    let (cp, cf) = (direct(&xp), direct(&xf));
    let groups = blocks(ctx.kinds[j]);
    pin_from_columns(
        &cp,
        &cf,
        &groups,
        allow_axis,
        "triple product",
        ctx.opts,
        &Rule::Triple { traced: i, kept: j },
    )
}

fn rule_gram(ctx: &mut Ctx, q: usize, context: &[usize], allow_axis: bool) -> Try {
    let mut order = vec![q];
    order.extend_from_slice(context);
    let (pp, pf) = ctx.marg(&order);
    let mut bases = vec![basis(Kind::Free)];
    bases.extend(context.iter().map(|&t| basis(ctx.kinds[t])));
    let cols = 1usize << (2 * context.len());
    let reshape = |v: Vec<C64>| DMatrix::from_fn(4, cols, |r, k| v[r * cols + k]);
    let (cp, cf) = (
        reshape(coefficients(&pp, &bases)),
        reshape(coefficients(&pf, &bases)),
    );
    let kinds: Vec<Kind> = context.iter().map(|&t| ctx.kinds[t]).collect();
    let groups = context_groups(&kinds);
    pin_from_columns(
        &cp,
        &cf,
        &groups,
        allow_axis,
        "correlation Gram",
        ctx.opts,
        &Rule::CorrelationGram {
            context: context.to_vec(),
        },
    )
}

fn subsets(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    if size == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for (k, &x) in items.iter().enumerate() {
        for mut rest in subsets(&items[k + 1..], size - 1) {
            rest.insert(0, x);
            out.push(rest);
        }
    }
    out
}

/// Runs the rules for one qubit in priority order; the first rule that
/// fires (best gap among its anchors) wins.
fn pin_qubit(ctx: &mut Ctx, q: usize) -> Try {
    let allow_axis = ctx.kinds[q] == Kind::Free;
    let n = ctx.n();
    let others: Vec<usize> = (0..n).filter(|&a| a != q).collect();
    let t = rule_single(ctx, q);
    if !matches!(t, Try::Skip) {
        return t;
    }
    let mut best = Try::Skip;
    for &a in &others {
        best = best.better(rule_weighted(ctx, a, q));
    }
    if !matches!(best, Try::Skip) {
        return best;
    }
    for &a in &others {
        best = best.better(rule_orthogonal_pair(ctx, a, q));
    }
    if !matches!(best, Try::Skip) {
        return best;
    }
    let full: Vec<usize> = others
        .iter()
        .copied()
        .filter(|&a| ctx.kinds[a] == Kind::Full)
        .collect();
    for size in 1..=2.min(full.len()) {
        for s in subsets(&full, size) {
            best = best.better(rule_pair_witness(ctx, &s, q));
        }
        if !matches!(best, Try::Skip) {
            return best;
        }
    }
    for &i in &others {
        for &j in &others {
            if i != j {
                best = best.better(rule_triple(ctx, i, j, q, allow_axis));
            }
        }
    }
    if !matches!(best, Try::Skip) {
        return best;
    }
    for size in 1..=ctx.opts.max_context.min(others.len()) {
        for s in subsets(&others, size) {
            best = best.better(rule_gram(ctx, q, &s, allow_axis));
        }
        if !matches!(best, Try::Skip) {
            return best;
        }
    }
    Try::Skip
}

fn compose(cs: &ConstraintSet, q: usize, cand: Cand) -> Determination {
    Determination {
        w: Unitary::new_unchecked(cand.w * cs.frame_w(q)),
        v: Unitary::new_unchecked(cand.v * cs.frame_v(q)),
        k_set: cand.k_set,
        provenance: cand.rule,
    }
}

fn outcome(cs: &ConstraintSet, q: usize, t: Try) -> PinOutcome {
    match t {
        Try::Fire(cand) => PinOutcome::Pinned(compose(cs, q, cand)),
        Try::Skip => PinOutcome::NotApplicable,
        Try::Clash(w) => PinOutcome::Mismatch(w),
    }
}

// ---- public single-rule entry points ----

/// Diagonalizers of `ρᵢ` and `σᵢ` (larger eigenvalue first), `k = 0`.
pub fn pin_from_single_marginal(
    psi: &State,
    phi: &State,
    i: usize,
    opts: &PinOptions,
) -> PinOutcome {
    let cs = ConstraintSet::new(psi.n());
    let mut ctx = Ctx::new(psi, phi, &cs, opts);
    outcome(&cs, i, rule_single(&mut ctx, i))
}

/// Witness matrices over the (determined, `k = 0`) qubits `fixed`.
pub fn pin_from_pair_witness(
    psi: &State,
    phi: &State,
    cs: &ConstraintSet,
    fixed: &[usize],
    target: usize,
    opts: &PinOptions,
) -> PinOutcome {
    let mut ctx = Ctx::new(psi, phi, cs, opts);
    outcome(cs, target, rule_pair_witness(&mut ctx, fixed, target))
}

/// `tr₁[(ρ₁ ⊗ 𝟙) ρ₁ᵢ]` against its `σ` counterpart.
pub fn pin_from_weighted_marginal(
    psi: &State,
    phi: &State,
    cs: &ConstraintSet,
    anchor: usize,
    i: usize,
    opts: &PinOptions,
) -> PinOutcome {
    let mut ctx = Ctx::new(psi, phi, cs, opts);
    outcome(cs, i, rule_weighted(&mut ctx, anchor, i))
}

/// `tr_{¬i}|Ψ₀⟩⟨Ψ₁|` for the Schmidt branches of a determined anchor.
pub fn pin_from_orthogonal_pair(
    psi: &State,
    phi: &State,
    cs: &ConstraintSet,
    anchor: usize,
    i: usize,
    opts: &PinOptions,
) -> PinOutcome {
    let mut ctx = Ctx::new(psi, phi, cs, opts);
    outcome(cs, i, rule_orthogonal_pair(&mut ctx, anchor, i))
}

/// `tr_i(ρ_{ij} ρ_{il})` reduced to qubit `l`.
pub fn pin_from_triple(
    psi: &State,
    phi: &State,
    cs: &ConstraintSet,
    i: usize,
    j: usize,
    l: usize,
    opts: &PinOptions,
) -> PinOutcome {
    let mut ctx = Ctx::new(psi, phi, cs, opts);
    let allow_axis = !cs.is_determined(l);
    outcome(cs, l, rule_triple(&mut ctx, i, j, l, allow_axis))
}

/// Block Gram matrices of the correlation tensor of `{target} ∪ context`.
pub fn pin_from_correlation_gram(
    psi: &State,
    phi: &State,
    cs: &ConstraintSet,
    context: &[usize],
    target: usize,
    opts: &PinOptions,
) -> PinOutcome {
    let mut ctx = Ctx::new(psi, phi, cs, opts);
    let allow_axis = !cs.is_determined(target);
    outcome(cs, target, rule_gram(&mut ctx, target, context, allow_axis))
}

/// Outcome of the Werner-link test on a pair.
#[derive(Clone, Debug, PartialEq)]
pub enum LinkOutcome {
    /// `U_j = a U_i b`.
    Linked(Link),
    NotApplicable,
    Mismatch(Witness),
}

/// Links `U_j` to `U_i` when `Λ_{ij}` is a nonzero multiple of an
/// orthogonal matrix (the pair marginal is then only `U ⊗ U` invariant up
/// to fixed rotations). Only undetermined qubits are considered.
pub fn detect_werner_link(
    psi: &State,
    phi: &State,
    cs: &ConstraintSet,
    i: usize,
    j: usize,
    opts: &PinOptions,
) -> LinkOutcome {
    if cs.is_determined(i) || cs.is_determined(j) {
        return LinkOutcome::NotApplicable;
    }
    let mut ctx = Ctx::new(psi, phi, cs, opts);
    let (pp, pf) = ctx.marg(&[i, j]);
    let (lp, lf) = (correlations(&pp), correlations(&pf));
    let iso_tol = 1e-8;
    let (ip, iff) = (isotropic(&lp, iso_tol), isotropic(&lf, iso_tol));
    let scale = |l: &Matrix3<f64>| ((l * l.transpose()).trace() / 3.0).sqrt();
    let (sp, sf) = (scale(&lp), scale(&lf));
    if ip != iff || (sp - sf).abs() > opts.invariant_tol {
        let (ep, _) = sym_eigen3(&(lp * lp.transpose()));
        let (ef, _) = sym_eigen3(&(lf * lf.transpose()));
        return LinkOutcome::Mismatch(Witness::InvariantMismatch {
            name: format!("correlation singular values on ({},{})", i + 1, j + 1),
            left: ep.to_vec(),
            right: ef.to_vec(),
        });
    }
    if !ip || sp <= opts.gap {
        return LinkOutcome::NotApplicable;
    }
    let (dp, df) = (lp.determinant(), lf.determinant());
    if dp.signum() != df.signum() {
        return LinkOutcome::Mismatch(Witness::InvariantMismatch {
            name: format!("correlation determinant on ({},{})", i + 1, j + 1),
            left: vec![dp],
            right: vec![df],
        });
    }
    let proper = |l: &Matrix3<f64>, s: f64| l * (dp.signum() / s);
    let (rp, rf) = (proper(&lp, sp), proper(&lf, sf));
    // Λψ = Oᵢ Λφ Oⱼᵀ  ⇒  Oⱼ = R̂ψᵀ Oᵢ R̂φ.
    LinkOutcome::Linked(Link {
        other: i,
        a: Unitary::new_unchecked(lift_rotation(&rp.transpose())),
        b: Unitary::new_unchecked(lift_rotation(&rf)),
    })
}

/// Projects a linked pair onto the singlet and propagates on the remaining
/// `n − 2` qubits. Returns the constraints that improved and the smallest
/// gap the inner propagation fired on.
pub fn pin_from_singlet_projection(
    psi: &State,
    phi: &State,
    cs: &ConstraintSet,
    i: usize,
    j: usize,
    opts: &PinOptions,
) -> Result<(Vec<(usize, QubitConstraint)>, f64), Witness> {
    let none = Ok((Vec::new(), f64::INFINITY));
    let link = match &cs.constraints[j] {
        QubitConstraint::EqualTo(l) if l.other == i => l.clone(),
        _ => return none,
    };
    let n = psi.n();
    if n < 3 {
        return none;
    }
    let ctx = Ctx::new(psi, phi, cs, opts);
    let mut pa = ctx.psi.amplitudes().to_vec();
    let mut fa = ctx.phi.amplitudes().to_vec();
    apply_single(&mut pa, n, j, &link.a.matrix().adjoint());
    apply_single(&mut fa, n, j, link.b.matrix());
    let rest: Vec<usize> = (0..n).filter(|&q| q != i && q != j).collect();
    let project = |amp: &[C64]| {
        let mut out = vec![c(0.0, 0.0); 1 << rest.len()];
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for (idx, a) in amp.iter().enumerate() {
            let (bi, bj) = (crate::tensor::bit(idx, i, n), crate::tensor::bit(idx, j, n));
            let sign = match (bi, bj) {
                (0, 1) => s,
                (1, 0) => -s,
                _ => continue,
            };
            out[gather(idx, &rest, n)] += a * sign;
        }
        out
    };
    let (xp, xf) = (project(&pa), project(&fa));
    let (np, nf) = (norm(&xp), norm(&xf));
    if (np - nf).abs() > opts.invariant_tol {
        return Err(Witness::InvariantMismatch {
            name: format!("singlet weight on ({},{})", i + 1, j + 1),
            left: vec![np * np],
            right: vec![nf * nf],
        });
    }
    if np * np <= opts.gap {
        return none;
    }
    let sp = PureState::normalized(rest.len(), xp).expect("nonzero");
    let sf = PureState::normalized(rest.len(), xf).expect("nonzero");
    let mut sub = ConstraintSet::new(rest.len());
    for (k, &q) in rest.iter().enumerate() {
        sub.constraints[k] = match &cs.constraints[q] {
            QubitConstraint::Determined(d) => QubitConstraint::Determined(Determination {
                w: Unitary::identity(),
                v: Unitary::identity(),
                k_set: d.k_set,
                provenance: d.provenance.clone(),
            }),
            QubitConstraint::EqualTo(l) => match rest.iter().position(|&r| r == l.other) {
                Some(o) => QubitConstraint::EqualTo(Link {
                    other: o,
                    ..l.clone()
                }),
                None => QubitConstraint::Free,
            },
            QubitConstraint::Free => QubitConstraint::Free,
        };
    }
    let before = sub.clone();
    let after = propagate_from(&sp, &sf, sub, opts)?;
    let mut updates = Vec::new();
    for (k, &q) in rest.iter().enumerate() {
        let improved = match (&before.constraints[k], &after.constraints[k]) {
            (QubitConstraint::Determined(a), QubitConstraint::Determined(b)) => {
                !a.k_set.is_singleton() && b.k_set.is_singleton()
            }
            (_, QubitConstraint::Determined(_)) => true,
            (QubitConstraint::Free, QubitConstraint::EqualTo(_)) => true,
            _ => false,
        };
        if !improved {
            continue;
        }
        let wrap = |r: &Rule| Rule::SingletProjection {
            pair: (i, j),
            inner: Box::new(r.clone()),
        };
        let c = match &after.constraints[k] {
            QubitConstraint::Determined(d) => QubitConstraint::Determined(Determination {
                w: Unitary::new_unchecked(d.w.matrix() * cs.frame_w(q)),
                v: Unitary::new_unchecked(d.v.matrix() * cs.frame_v(q)),
                k_set: d.k_set,
                provenance: wrap(&d.provenance),
            }),
            QubitConstraint::EqualTo(l) => QubitConstraint::EqualTo(Link {
                other: rest[l.other],
                ..l.clone()
            }),
            QubitConstraint::Free => continue,
        };
        updates.push((q, c));
    }
    Ok((updates, after.min_gap()))
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Runs every rule to a fixpoint from scratch.
pub fn propagate(psi: &State, phi: &State, opts: &PinOptions) -> Result<ConstraintSet, Witness> {
    propagate_from(psi, phi, ConstraintSet::new(psi.n()), opts)
}

/// Runs every rule to a fixpoint starting from existing constraints.
///
/// Priority: single marginal, weighted marginal, orthogonal pair, pair
/// witness, triple, correlation Gram, Werner link, singlet projection.
/// After any firing the scan restarts from the top.
pub fn propagate_from(
    psi: &State,
    phi: &State,
    mut cs: ConstraintSet,
    opts: &PinOptions,
) -> Result<ConstraintSet, Witness> {
    let n = psi.n();
    let mut projected: Vec<(usize, usize)> = Vec::new();
    'outer: loop {
        if cs.resolve_links() {
            continue;
        }
        let mut ctx = Ctx::new(psi, phi, &cs, opts);
        for q in 0..n {
            if cs.is_full(q) {
                continue;
            }
            match pin_qubit(&mut ctx, q) {
                Try::Fire(cand) => {
                    let gap = cand.gap;
                    let d = compose(&cs, q, cand);
                    cs.set(q, d, gap);
                    continue 'outer;
                }
                Try::Clash(w) => return Err(w),
                Try::Skip => {}
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i == j
                    || cs.is_determined(i)
                    || !matches!(cs.constraints[j], QubitConstraint::Free)
                    || cs.reaches(i, j)
                {
                    continue;
                }
                match detect_werner_link(psi, phi, &cs, i, j, opts) {
                    LinkOutcome::Linked(link) => {
                        cs.link(j, link);
                        continue 'outer;
                    }
                    LinkOutcome::Mismatch(w) => return Err(w),
                    LinkOutcome::NotApplicable => {}
                }
            }
        }
        for j in 0..n {
            let QubitConstraint::EqualTo(link) = &cs.constraints[j] else {
                continue;
            };
            let i = link.other;
            if projected.contains(&(i, j)) {
                continue;
            }
            projected.push((i, j));
            let (updates, gap) = pin_from_singlet_projection(psi, phi, &cs, i, j, opts)?;
            if updates.is_empty() {
                continue;
            }
            for (q, c) in updates {
                match c {
                    QubitConstraint::Determined(d) => cs.set(q, d, gap),
                    QubitConstraint::EqualTo(l) => cs.link(q, l),
                    QubitConstraint::Free => {}
                }
            }
            continue 'outer;
        }
        break;
    }
    Ok(cs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_marginal_swaps_subsystems() {
        let mut rng = crate::sample::rng(3);
        let psi = crate::sample::random_state(3, &mut rng);
        let a = ordered_marginal(&psi, &[0, 2]).unwrap();
        let b = ordered_marginal(&psi, &[2, 0]).unwrap();
        let swap = |x: usize| ((x & 1) << 1) | (x >> 1);
        for x in 0..4 {
            for y in 0..4 {
                assert!((a[(x, y)] - b[(swap(x), swap(y))]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn context_groups_cover_all_nonidentity_columns() {
        let groups = context_groups(&[Kind::Free, Kind::Axis]);
        let mut all: Vec<usize> = groups.concat();
        all.sort_unstable();
        assert_eq!(all, (1..16).collect::<Vec<_>>());
    }
}
