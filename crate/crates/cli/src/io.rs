//! State, certificate and unitary files.

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use luq::linalg::M4;
use luq::tensor::PureState;
use luq::{Layer, State, Unitary, C64};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

/// Largest norm deviation accepted (and renormalized) on input.
pub const NORM_ACCEPT: f64 = 1e-6;
/// Deviation above which renormalization is reported.
pub const NORM_WARN: f64 = 1e-9;

type Pair = [f64; 2];

fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

fn complex(p: Pair) -> C64 {
    Complex::new(p[0], p[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub n: usize,
    pub amplitudes: Vec<Pair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl StateFile {
    pub fn from_state(psi: &State, label: Option<String>) -> Self {
        Self {
            n: psi.n(),
            amplitudes: psi.amplitudes().iter().copied().map(pair).collect(),
            label,
        }
    }

    /// Validates the file; `warn` receives a note when renormalizing.
    pub fn to_state(&self, warn: &mut dyn FnMut(String)) -> Result<State> {
        if self.amplitudes.len() != 1usize.checked_shl(self.n as u32).unwrap_or(0) {
            bail!(
                "n = {} needs {} amplitudes, found {}",
                self.n,
                1u64 << self.n.min(63),
                self.amplitudes.len()
            );
        }
        let amp: Vec<C64> = self.amplitudes.iter().copied().map(complex).collect();
        if amp.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            bail!("amplitudes must be finite");
        }
        let norm = amp.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let dev = (norm - 1.0).abs();
        if dev > NORM_ACCEPT {
            bail!("state norm {norm} deviates from 1 by more than {NORM_ACCEPT:e}");
        }
        if dev > NORM_WARN {
            warn(format!("renormalizing state (norm {norm})"));
            return Ok(PureState::normalized(self.n, amp)?);
        }
        Ok(PureState::new(self.n, amp)?)
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn read_state_file(path: &Path) -> Result<StateFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing state file {}", path.display()))
}

pub fn write_state(path: &Path, psi: &State, label: Option<String>) -> Result<()> {
    fs::write(path, to_json_pretty(&StateFile::from_state(psi, label))?)
        .with_context(|| format!("writing {}", path.display()))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificateMeta {
    pub tool_version: String,
    pub tolerance: f64,
    #[serde(default)]
    pub route: String,
    #[serde(default)]
    pub provenance: Vec<String>,
    #[serde(default)]
    pub feasible_branches: Vec<Vec<u8>>,
}

/// `ψ_A = e^{iθ} U₁ ⊗ … ⊗ Uₙ ψ_B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub global_phase: f64,
    pub units: Vec<[[Pair; 2]; 2]>,
    #[serde(default)]
    pub metadata: CertificateMeta,
}

impl CertificateFile {
    pub fn from_layer(layer: &Layer, metadata: CertificateMeta) -> Self {
        let units = layer
            .units()
            .iter()
            .map(|u| {
                let m = u.matrix();
                [
                    [pair(m[(0, 0)]), pair(m[(0, 1)])],
                    [pair(m[(1, 0)]), pair(m[(1, 1)])],
                ]
            })
            .collect();
        Self {
            global_phase: layer.global_phase(),
            units,
            metadata,
        }
    }

    pub fn to_layer(&self) -> Result<Layer> {
        let units = self
            .units
            .iter()
            .enumerate()
            .map(|(q, rows)| {
                let m = luq::linalg::M2::new(
                    complex(rows[0][0]),
                    complex(rows[0][1]),
                    complex(rows[1][0]),
                    complex(rows[1][1]),
                );
                Unitary::new(m).map_err(|e| anyhow!("unit {}: {e}", q + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Layer::new(self.global_phase, units))
    }
}

pub fn read_certificate(path: &Path) -> Result<CertificateFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing certificate {}", path.display()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UnitaryFile {
    pub unitary: Vec<Vec<Pair>>,
}

impl UnitaryFile {
    pub fn to_matrix(&self) -> Result<M4> {
        if self.unitary.len() != 4 || self.unitary.iter().any(|r| r.len() != 4) {
            bail!("unitary must be 4×4");
        }
        let m = M4::from_fn(|i, j| complex(self.unitary[i][j]));
        if !luq::linalg::is_unitary4(&m, 1e-8) {
            bail!("matrix is not unitary");
        }
        Ok(m)
    }
}

/// A two-qubit gate or a four-qubit state, told apart by their keys.
pub enum GateOrState {
    Gate(M4),
    State(StateFile),
}

pub fn read_gate_or_state(path: &Path) -> Result<GateOrState> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("unitary").is_some() {
        let u: UnitaryFile = serde_json::from_value(value)?;
        Ok(GateOrState::Gate(u.to_matrix()?))
    } else {
        Ok(GateOrState::State(
            serde_json::from_value(value).context("expected a unitary or state file")?,
        ))
    }
}
