//! Outcome types shared by the two-qubit kit and the decider.

use std::fmt;

use serde::Serialize;

use crate::Layer;

/// Outcome of an equivalence decision.
#[derive(Clone, Debug)]
pub enum Verdict {
    /// `ψ = layer · φ`, checked before emission.
    Equivalent {
        certificate: Layer,
        overlap: f64,
    },
    NotEquivalent {
        witness: Witness,
    },
    Undecided {
        reason: String,
        best_overlap: f64,
    },
}

impl Verdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Verdict::Equivalent { .. })
    }

    pub fn is_not_equivalent(&self) -> bool {
        matches!(self, Verdict::NotEquivalent { .. })
    }

    pub fn is_undecided(&self) -> bool {
        matches!(self, Verdict::Undecided { .. })
    }

    pub fn certificate(&self) -> Option<&Layer> {
        match self {
            Verdict::Equivalent { certificate, .. } => Some(certificate),
            _ => None,
        }
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Verdict::NotEquivalent { witness } => Some(witness),
            _ => None,
        }
    }

    /// Exit-code style label.
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Equivalent { .. } => "Equivalent",
            Verdict::NotEquivalent { .. } => "NotEquivalent",
            Verdict::Undecided { .. } => "Undecided",
        }
    }
}

/// Why two states cannot be LU-equivalent. Each variant carries the two
/// values that differ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum Witness {
    SpectrumMismatch {
        subset: Vec<usize>,
        left: Vec<f64>,
        right: Vec<f64>,
    },
    SchmidtMismatch {
        left: Vec<f64>,
        right: Vec<f64>,
    },
    PhaseInfeasibleAllBranches {
        branches: usize,
    },
    ClassMismatch {
        left: String,
        right: String,
    },
    BellPairParamMismatch {
        left: Vec<f64>,
        right: Vec<f64>,
    },
    NonlocalContentMismatch {
        left: [f64; 3],
        right: [f64; 3],
    },
    /// A covariant quantity computed by a pin rule differs between the sides.
    InvariantMismatch {
        name: String,
        left: Vec<f64>,
        right: Vec<f64>,
    },
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::SpectrumMismatch {
                subset,
                left,
                right,
            } => {
                let one_based: Vec<usize> = subset.iter().map(|q| q + 1).collect();
                write!(
                    f,
                    "marginal spectrum on qubits {one_based:?} differs: {left:?} vs {right:?}"
                )
            }
            Witness::SchmidtMismatch { left, right } => {
                write!(f, "Schmidt coefficients differ: {left:?} vs {right:?}")
            }
            Witness::PhaseInfeasibleAllBranches { branches } => {
                write!(
                    f,
                    "no local phase-gate solution in any of {branches} bit-flip branches"
                )
            }
            Witness::ClassMismatch { left, right } => write!(f, "class differs: {left} vs {right}"),
            Witness::BellPairParamMismatch { left, right } => {
                write!(f, "Bell-pair parameters differ: {left:?} vs {right:?}")
            }
            Witness::NonlocalContentMismatch { left, right } => {
                write!(f, "nonlocal content differs: {left:?} vs {right:?}")
            }
            Witness::InvariantMismatch { name, left, right } => {
                write!(f, "{name} differs: {left:?} vs {right:?}")
            }
        }
    }
}
