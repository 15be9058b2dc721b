use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn luq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_luq"))
        .args(args)
        .env_remove("LUQ_SEED")
        .output()
        .expect("spawn luq")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &TempDir, name: &str, value: &Value) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn make(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let p = dir.path().join(name);
    let mut all = vec!["make"];
    all.extend_from_slice(args);
    all.extend_from_slice(&["-o", s(&p)]);
    let out = luq(&all);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    p
}

/// Row-major complex 4×4 as `[[re, im], …]` rows.
fn gate(rows: [[(f64, f64); 4]; 4]) -> Value {
    json!({ "unitary": rows.iter().map(|r| r.iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>()).collect::<Vec<_>>() })
}

fn phases(dir: &TempDir, name: &str, g: Value) -> [f64; 3] {
    let p = write(dir, name, &g);
    let out = luq(&["--json", "nonlocal-content", s(&p)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out)["phases"].clone();
    [0, 1, 2].map(|i| v[i].as_f64().unwrap())
}

#[test]
fn ghz_and_its_hadamard_image_are_equivalent() {
    let dir = TempDir::new().unwrap();
    let a = make(&dir, "ghz.json", &["ghz", "3"]);
    // H⊗H⊗H |GHZ⟩ = ½ Σ_{even parity} |x⟩.
    let amps: Vec<Value> = (0..8u32)
        .map(|i| json!([if i.count_ones() % 2 == 0 { 0.5 } else { 0.0 }, 0.0]))
        .collect();
    let b = write(&dir, "hhh.json", &json!({ "n": 3, "amplitudes": amps }));
    let cert = dir.path().join("cert.json");
    let out = luq(&["decide", s(&a), s(&b), "--certificate", s(&cert)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("verdict: Equivalent"));

    let out = luq(&["--json", "verify", s(&a), s(&b), s(&cert)]);
    assert_eq!(code(&out), 0);
    assert!(stdout_json(&out)["overlap"].as_f64().unwrap() >= 1.0 - 1e-9);

    let c: Value = serde_json::from_str(&std::fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(c["units"].as_array().unwrap().len(), 3);
    assert!(c["metadata"]["tool_version"].is_string());
}

#[test]
fn cphase_state_is_not_equivalent_to_its_conjugate() {
    let dir = TempDir::new().unwrap();
    let a = make(&dir, "a.json", &["cphase", "3", &FRAC_PI_2.to_string()]);
    let b = make(&dir, "b.json", &["cphase", "3", &(-FRAC_PI_2).to_string()]);
    let out = luq(&["--json", "decide", s(&a), s(&b)]);
    assert_eq!(code(&out), 1);
    let v = stdout_json(&out);
    assert_eq!(v["verdict"], "NotEquivalent");
    assert!(v["witness"].is_object());

    let out = luq(&["--json", "conjugate", s(&a)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["I1"], 1);

    let out = luq(&["--json", "locc", s(&a), s(&b)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["relation"], "LOCCIncomparable");
}

#[test]
fn spectrum_witness_uses_one_based_qubits() {
    let dir = TempDir::new().unwrap();
    let a = make(&dir, "a.json", &["ghz", "3"]);
    let b = make(&dir, "b.json", &["w", "3"]);
    let out = luq(&["--json", "decide", s(&a), s(&b)]);
    assert_eq!(code(&out), 1);
    let subset = &stdout_json(&out)["witness"]["SpectrumMismatch"]["subset"];
    assert_eq!(subset[0], 1);
}

#[test]
fn input_errors_exit_with_three() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let good = make(&dir, "g.json", &["ghz", "3"]);
    assert_eq!(code(&luq(&["decide", s(&bad), s(&good)])), 3);
    let short = write(
        &dir,
        "short.json",
        &json!({ "n": 2, "amplitudes": [[1.0, 0.0]] }),
    );
    assert_eq!(code(&luq(&["classify", s(&short)])), 3);
    let unnormed = write(
        &dir,
        "un.json",
        &json!({ "n": 1, "amplitudes": [[1.0, 0.0], [1.0, 0.0]] }),
    );
    assert_eq!(code(&luq(&["classify", s(&unnormed)])), 3);
    let two = make(&dir, "two.json", &["ghz", "2"]);
    assert_eq!(code(&luq(&["decide", s(&two), s(&good)])), 3);
    assert_eq!(code(&luq(&["make", "nope"])), 3);
    assert_eq!(code(&luq(&["frobnicate"])), 3);
    assert_eq!(
        code(&luq(&[
            "decide",
            s(&dir.path().join("missing.json")),
            s(&good)
        ])),
        3
    );
}

#[test]
fn small_norm_drift_is_renormalized_with_a_warning() {
    let dir = TempDir::new().unwrap();
    let x = FRAC_1_SQRT_2 * (1.0 + 1e-7);
    let p = write(
        &dir,
        "drift.json",
        &json!({ "n": 2, "amplitudes": [[x, 0.0], [0.0, 0.0], [0.0, 0.0], [x, 0.0]] }),
    );
    let out = luq(&["classify", s(&p)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("renormalizing"));
}

#[test]
fn classify_labels() {
    let dir = TempDir::new().unwrap();
    let g = make(&dir, "g.json", &["ghz", "3"]);
    let out = luq(&["--json", "classify", s(&g)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["class"], "3-1");
    let c = make(&dir, "c.json", &["choi", "0.5", "0.3", "0.1"]);
    let v = stdout_json(&luq(&["--json", "classify", s(&c)]));
    assert_eq!(v["class"], "4-2b");
    let f = make(&dir, "f.json", &["five-qubit", "0.4"]);
    let out = luq(&["classify", s(&f)]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("unsupported"));
}

#[test]
fn nonlocal_content_of_standard_gates() {
    let dir = TempDir::new().unwrap();
    let (o, l) = ((0.0, 0.0), (1.0, 0.0));
    let cnot = phases(
        &dir,
        "cnot.json",
        gate([[l, o, o, o], [o, l, o, o], [o, o, o, l], [o, o, l, o]]),
    );
    assert!(
        (cnot[0] - FRAC_PI_4).abs() < 1e-9 && cnot[1].abs() < 1e-9 && cnot[2].abs() < 1e-9,
        "{cnot:?}"
    );
    let id = phases(
        &dir,
        "id.json",
        gate([[l, o, o, o], [o, l, o, o], [o, o, l, o], [o, o, o, l]]),
    );
    assert!(id.iter().all(|p| p.abs() < 1e-9), "{id:?}");
    // (H ⊗ S) · SWAP.
    let h = [
        [FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        [FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
    ];
    let sgate = [(1.0, 0.0), (0.0, 1.0)];
    let mut rows = [[o; 4]; 4];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            // SWAP maps |b1 b2⟩ to |b2 b1⟩; column j of the product is (H⊗S)|swap(j)⟩.
            let sw = ((j & 1) << 1) | (j >> 1);
            if (i & 1) == (sw & 1) {
                let hv = h[i >> 1][sw >> 1];
                let sv = sgate[i & 1];
                *e = (hv * sv.0, hv * sv.1);
            }
        }
    }
    let swap = phases(&dir, "swap.json", gate(rows));
    assert!(
        swap.iter().all(|p| (p - FRAC_PI_4).abs() < 1e-9),
        "{swap:?}"
    );
}

#[test]
fn five_qubit_pair_marginal_is_maximally_mixed() {
    let dir = TempDir::new().unwrap();
    let f = make(&dir, "f.json", &["five-qubit", "0.7"]);
    let out = luq(&["--json", "marginals", s(&f), "--subset", "1,2"]);
    assert_eq!(code(&out), 0);
    let v = stdout_json(&out);
    let m = v[0]["matrix"].as_array().unwrap();
    for (i, row) in m.iter().enumerate() {
        for (j, e) in row.as_array().unwrap().iter().enumerate() {
            let want = if i == j { 0.25 } else { 0.0 };
            assert!(
                (e[0].as_f64().unwrap() - want).abs() < 1e-12
                    && e[1].as_f64().unwrap().abs() < 1e-12
            );
        }
    }
    assert_eq!(code(&luq(&["marginals", s(&f), "--subset", "0"])), 3);
}

#[test]
fn state_files_round_trip_bit_for_bit() {
    let dir = TempDir::new().unwrap();
    let a = make(&dir, "a.json", &["cphase", "4", "0.123456789"]);
    let before = std::fs::read(&a).unwrap();
    let out = luq(&["make", "cphase", "4", "0.123456789"]);
    assert_eq!(out.stdout, before);
    // Standard form of a standard form is itself, written through the same path.
    let r = make(&dir, "r.json", &["lme", "2", "0.1", "0.2", "0.3", "0.4"]);
    let sf = dir.path().join("sf.json");
    assert_eq!(code(&luq(&["standard-form", s(&r), "-o", s(&sf)])), 0);
    let v: Value = serde_json::from_slice(&std::fs::read(&sf).unwrap()).unwrap();
    assert_eq!(v["n"], 2);
}

#[test]
fn verify_rejects_a_wrong_certificate() {
    let dir = TempDir::new().unwrap();
    let a = make(&dir, "a.json", &["ghz", "3"]);
    let b = make(&dir, "b.json", &["w", "3"]);
    let id = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]];
    let cert = write(
        &dir,
        "c.json",
        &json!({ "global_phase": 0.0, "units": [id, id, id] }),
    );
    assert_eq!(code(&luq(&["verify", s(&a), s(&b), s(&cert)])), 1);
    assert_eq!(code(&luq(&["verify", s(&a), s(&a), s(&cert)])), 0);
}
