//! `luq`: local-unitary equivalence from the command line.
//!
//! Exit codes: 0 equivalent / success, 1 not equivalent, 2 undecided,
//! 3 input error. Qubits are numbered from 1 on the command line.

mod io;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use luq::decider::{self, ConjugateFlag, Decision, FourQubitParams, LoccRelation, Options};
use luq::tensor::{entropy, partial_trace};
use luq::{State, Verdict, Witness};
use serde_json::{json, Value};

use crate::io::{CertificateFile, CertificateMeta, GateOrState, StateFile};

#[derive(Parser, Debug)]
#[command(
    name = "luq",
    version,
    about = "Local-unitary equivalence of multi-qubit pure states"
)]
struct Cli {
    /// Machine-readable JSON report.
    #[arg(long, global = true)]
    json: bool,
    /// Comparison tolerance for spectra and parameters.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Random starts for the numeric fallback.
    #[arg(long, global = true, default_value_t = 32)]
    fallback_starts: usize,
    /// Seed for the numeric fallback.
    #[arg(long, global = true, env = "LUQ_SEED", default_value_t = 0x5eed)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether A = (U₁ ⊗ … ⊗ Uₙ) B up to a global phase.
    Decide {
        a: PathBuf,
        b: PathBuf,
        /// Write the certificate here when equivalent.
        #[arg(short, long)]
        certificate: Option<PathBuf>,
    },
    /// Entanglement class of a 2-, 3- or 4-qubit state.
    Classify { a: PathBuf },
    /// Cartan phases of a two-qubit gate file or a Choi-type 4-qubit state.
    NonlocalContent { file: PathBuf },
    /// Whether a state is LU-equivalent to its complex conjugate.
    Conjugate { a: PathBuf },
    /// LOCC comparability of two states with equal single-qubit spectra.
    Locc { a: PathBuf, b: PathBuf },
    /// Reduced density matrices.
    Marginals {
        a: PathBuf,
        /// Comma-separated qubits, e.g. `1,2`; every single qubit if absent.
        #[arg(long, value_delimiter = ',')]
        subset: Option<Vec<usize>>,
    },
    /// Build a catalog state.
    #[command(allow_negative_numbers = true)]
    Make {
        family: String,
        params: Vec<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a certificate: overlap |⟨A|L B⟩|.
    Verify {
        a: PathBuf,
        b: PathBuf,
        certificate: PathBuf,
    },
    /// Phase-fixed sorted trace decomposition of a generic state.
    StandardForm {
        a: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Input problems map to exit code 3.
struct InputError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn options(cli: &Cli) -> Options {
    Options {
        tol: cli.tol,
        fallback_starts: cli.fallback_starts,
        seed: cli.seed,
        ..Options::default()
    }
}

fn load(path: &Path) -> Result<State> {
    let file = io::read_state_file(path)?;
    file.to_state(&mut |w| eprintln!("warning: {}: {w}", path.display()))
        .with_context(|| format!("invalid state in {}", path.display()))
}

fn load_pair(a: &Path, b: &Path) -> Result<(State, State)> {
    let (x, y) = (load(a)?, load(b)?);
    if x.n() != y.n() {
        bail!(
            "{} has {} qubits, {} has {}",
            a.display(),
            x.n(),
            b.display(),
            y.n()
        );
    }
    Ok((x, y))
}

fn emit(cli: &Cli, value: &Value, text: &str) {
    if cli.json {
        println!(
            "{}",
            serde_json::to_string_pretty(value).expect("serializable")
        );
    } else {
        print!("{text}");
    }
}

fn exit_code(v: &Verdict) -> u8 {
    match v {
        Verdict::Equivalent { .. } => 0,
        Verdict::NotEquivalent { .. } => 1,
        Verdict::Undecided { .. } => 2,
    }
}

/// Serialized witness with qubit indices shifted to 1-based.
fn witness_json(w: &Witness) -> Value {
    let mut v = serde_json::to_value(w).expect("serializable");
    if let Some(subset) = v
        .pointer_mut("/SpectrumMismatch/subset")
        .and_then(Value::as_array_mut)
    {
        for q in subset.iter_mut() {
            *q = json!(q.as_u64().unwrap_or(0) + 1);
        }
    }
    v
}

fn provenance(d: &Decision) -> Vec<String> {
    d.log
        .firings
        .iter()
        .map(|f| {
            let k = match f.k_set {
                Some(luq::pin::KSet::Zero) => "k=0",
                Some(luq::pin::KSet::Both) => "k∈{0,1}",
                None => "linked",
            };
            format!("qubit {}: {} ({k}, gap {:.3e})", f.qubit + 1, f.rule, f.gap)
        })
        .collect()
}

fn certificate_file(cli: &Cli, d: &Decision, layer: &luq::Layer) -> CertificateFile {
    let meta = CertificateMeta {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        tolerance: cli.tol,
        route: d.log.route.clone(),
        provenance: provenance(d),
        feasible_branches: d.log.feasible_branches.clone(),
    };
    CertificateFile::from_layer(layer, meta)
}

fn run(cli: &Cli) -> std::result::Result<u8, InputError> {
    let opts = options(cli);
    match &cli.command {
        Command::Decide { a, b, certificate } => {
            let (psi, phi) = load_pair(a, b)?;
            let d = decider::decide_lu_logged(&psi, &phi, &opts)?;
            let prov = provenance(&d);
            let mut report = json!({
                "verdict": d.verdict.label(),
                "route": d.log.route,
                "provenance": prov,
                "branches_examined": d.log.branches_total,
                "feasible_branches": d.log.feasible_branches,
                "used_fallback": d.log.used_fallback,
            });
            let mut text = format!("verdict: {}\nroute: {}\n", d.verdict.label(), d.log.route);
            match &d.verdict {
                Verdict::Equivalent {
                    certificate: layer,
                    overlap,
                } => {
                    let cert = certificate_file(cli, &d, layer);
                    report["overlap"] = json!(overlap);
                    report["certificate"] = serde_json::to_value(&cert).expect("serializable");
                    text += &format!("overlap: {overlap:.15}\n");
                    if let Some(path) = certificate {
                        std::fs::write(path, io::to_json_pretty(&cert)?)
                            .with_context(|| format!("writing {}", path.display()))?;
                        text += &format!("certificate: {}\n", path.display());
                    } else {
                        text += &format!("certificate:\n{}", io::to_json_pretty(&cert)?);
                    }
                }
                Verdict::NotEquivalent { witness } => {
                    report["witness"] = witness_json(witness);
                    report["witness_text"] = json!(witness.to_string());
                    text += &format!("witness: {witness}\n");
                }
                Verdict::Undecided {
                    reason,
                    best_overlap,
                } => {
                    report["reason"] = json!(reason);
                    report["best_overlap"] = json!(best_overlap);
                    text += &format!("reason: {reason}\n");
                }
            }
            if !prov.is_empty() {
                text += "pin rules:\n";
                for p in &prov {
                    text += &format!("  {p}\n");
                }
            }
            emit(cli, &report, &text);
            Ok(exit_code(&d.verdict))
        }
        Command::Classify { a } => {
            let psi = load(a)?;
            let (value, text) = classify(&psi)?;
            emit(cli, &value, &text);
            Ok(0)
        }
        Command::NonlocalContent { file } => {
            let phases = match io::read_gate_or_state(file)? {
                GateOrState::Gate(u) => luq::two_qubit::nonlocal_content(&u)?.content.phases,
                GateOrState::State(sf) => {
                    let psi = sf.to_state(&mut |w| eprintln!("warning: {w}"))?;
                    if psi.n() != 4 {
                        return Err(anyhow::anyhow!(
                            "a state file must hold 4 qubits, found {}",
                            psi.n()
                        )
                        .into());
                    }
                    match decider::classify_4(&psi)?.params {
                        FourQubitParams::Nonlocal { content, .. } => content.phases,
                        _ => {
                            return Err(anyhow::anyhow!(
                                "state is not maximally entangled across a 2|2 split"
                            )
                            .into())
                        }
                    }
                }
            };
            let text = format!(
                "phases: ({:.12}, {:.12}, {:.12})\n",
                phases[0], phases[1], phases[2]
            );
            emit(cli, &json!({ "phases": phases }), &text);
            Ok(0)
        }
        Command::Conjugate { a } => {
            let psi = load(a)?;
            let (flag, v) = decider::conjugate_class(&psi, &opts)?;
            let i1 = match flag {
                ConjugateFlag::Zero => json!(0),
                ConjugateFlag::One => json!(1),
                ConjugateFlag::Unknown => Value::Null,
            };
            let shown = i1.as_u64().map_or("unknown".to_string(), |x| x.to_string());
            emit(
                cli,
                &json!({ "I1": i1, "verdict": v.label() }),
                &format!("I1: {shown}\nverdict: {}\n", v.label()),
            );
            Ok(match flag {
                ConjugateFlag::Unknown => 2,
                _ => 0,
            })
        }
        Command::Locc { a, b } => {
            let (psi, phi) = load_pair(a, b)?;
            let (rel, v) = decider::locc_comparability(&psi, &phi, &opts)?;
            let name = match rel {
                LoccRelation::Equivalent => "Equivalent",
                LoccRelation::LoccIncomparable => "LOCCIncomparable",
                LoccRelation::Unknown => "Unknown",
            };
            emit(
                cli,
                &json!({ "relation": name, "verdict": v.label() }),
                &format!("relation: {name}\nverdict: {}\n", v.label()),
            );
            Ok(match rel {
                LoccRelation::Unknown => 2,
                _ => 0,
            })
        }
        Command::Marginals { a, subset } => {
            let psi = load(a)?;
            let subsets: Vec<Vec<usize>> = match subset {
                Some(s) => vec![s.clone()],
                None => (1..=psi.n()).map(|q| vec![q]).collect(),
            };
            let mut out = Vec::new();
            let mut text = String::new();
            for s in subsets {
                if s.contains(&0) {
                    return Err(anyhow::anyhow!("qubits are numbered from 1").into());
                }
                let zero: Vec<usize> = s.iter().map(|q| q - 1).collect();
                let rho = partial_trace(&psi, &zero)?;
                let m = rho.matrix();
                let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
                    .map(|i| {
                        (0..m.ncols())
                            .map(|j| [m[(i, j)].re, m[(i, j)].im])
                            .collect()
                    })
                    .collect();
                let spec = rho.spectrum().values;
                let h = entropy(&rho);
                text +=
                    &format!("qubits {s:?}\n  spectrum: {spec:?}\n  entropy: {h:.12}\n  matrix:\n");
                for i in 0..m.nrows() {
                    let row: Vec<String> = (0..m.ncols())
                        .map(|j| format!("{:+.6}{:+.6}i", m[(i, j)].re, m[(i, j)].im))
                        .collect();
                    text += &format!("    {}\n", row.join("  "));
                }
                out.push(json!({ "subset": s, "matrix": rows, "spectrum": spec, "entropy": h }));
            }
            emit(cli, &json!(out), &text);
            Ok(0)
        }
        Command::Make {
            family,
            params,
            output,
        } => {
            let psi = luq::catalog::make(family, params)?;
            let label = Some(format!("{family} {params:?}"));
            match output {
                Some(path) => io::write_state(path, &psi, label)?,
                None => print!(
                    "{}",
                    io::to_json_pretty(&StateFile::from_state(&psi, label))?
                ),
            }
            Ok(0)
        }
        Command::Verify { a, b, certificate } => {
            let (psi, phi) = load_pair(a, b)?;
            let layer = io::read_certificate(certificate)?.to_layer()?;
            let overlap = decider::verify_certificate(&psi, &phi, &layer)?;
            let ok = 1.0 - overlap <= decider::CERTIFICATE_TOL;
            emit(
                cli,
                &json!({ "overlap": overlap, "valid": ok }),
                &format!("overlap: {overlap:.15}\nvalid: {ok}\n"),
            );
            Ok(if ok { 0 } else { 1 })
        }
        Command::StandardForm { a, output } => {
            let psi = load(a)?;
            let (form, _) = luq::canonical::standard_form(&psi)?;
            let label = Some("standard form".to_string());
            match output {
                Some(path) => io::write_state(path, &form, label)?,
                None => print!(
                    "{}",
                    io::to_json_pretty(&StateFile::from_state(&form, label))?
                ),
            }
            Ok(0)
        }
    }
}

fn classify(psi: &State) -> Result<(Value, String)> {
    match psi.n() {
        2 => {
            let s = partial_trace(psi, &[0])?.spectrum().values;
            let label = if s[1] <= 1e-10 {
                "product"
            } else {
                "entangled"
            };
            Ok((
                json!({ "class": label, "schmidt": s }),
                format!("class: {label}\nSchmidt weights: {s:?}\n"),
            ))
        }
        3 => {
            let c = decider::classify_3(psi)?;
            let mut text = format!("class: {}\nentropies: {:?}\n", c.label, c.entropies);
            if let (Some(p), Some(q)) = (c.p, c.split_qubit) {
                text += &format!("split qubit: {}, p = {p:.12}\n", q + 1);
            }
            let value = json!({
                "class": c.label.to_string(),
                "entropies": c.entropies,
                "p": c.p,
                "split_qubit": c.split_qubit.map(|q| q + 1),
            });
            Ok((value, text))
        }
        4 => {
            let c = decider::classify_4(psi)?;
            let (params, detail) = match &c.params {
                FourQubitParams::Entropies(e) => {
                    (json!({ "entropies": e }), format!("entropies: {e:?}"))
                }
                FourQubitParams::BellPair {
                    pair,
                    lambda,
                    gammas,
                } => (
                    json!({ "pair": [pair.0 + 1, pair.1 + 1], "lambda": lambda, "gammas": gammas }),
                    format!(
                        "pair ({},{}), λ = {lambda:.12}, γ = {gammas:?}",
                        pair.0 + 1,
                        pair.1 + 1
                    ),
                ),
                FourQubitParams::Nonlocal { pair, content } => (
                    json!({ "pair": [pair.0 + 1, pair.1 + 1], "phases": content.phases }),
                    format!(
                        "pair ({},{}), φ = {:?}",
                        pair.0 + 1,
                        pair.1 + 1,
                        content.phases
                    ),
                ),
            };
            Ok((
                json!({ "class": c.label.to_string(), "params": params }),
                format!("class: {}\n{detail}\n", c.label),
            ))
        }
        n => Ok((
            json!({ "class": null, "notice": format!("no class taxonomy for {n} qubits") }),
            format!("class: unsupported (no class taxonomy for {n} qubits)\n"),
        )),
    }
}
