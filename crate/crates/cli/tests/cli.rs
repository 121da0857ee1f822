use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metricforge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Value {
    let out = bin(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn fails(args: &[&str], code: i32) -> Value {
    let out = bin(args);
    assert_eq!(
        out.status.code(),
        Some(code),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(out.stdout.is_empty());
    serde_json::from_slice(&out.stderr).expect("stderr is JSON")
}

fn matrix(v: &Value) -> Vec<Vec<(f64, f64)>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|row| {
            row.as_array()
                .unwrap()
                .iter()
                .map(|z| (z[0].as_f64().unwrap(), z[1].as_f64().unwrap()))
                .collect()
        })
        .collect()
}

fn assert_matrix(v: &Value, expected: &[&[(f64, f64)]], tol: f64) {
    let m = matrix(v);
    assert_eq!(m.len(), expected.len());
    for (row, erow) in m.iter().zip(expected) {
        for (z, e) in row.iter().zip(erow.iter()) {
            assert!(
                (z.0 - e.0).abs() <= tol && (z.1 - e.1).abs() <= tol,
                "{m:?}"
            );
        }
    }
}

const JC: &str = "n=0,eps=0.5,omega=1,rho=0.125";

#[test]
fn jc_metric_both_methods_agree() {
    let doc = ok(&[
        "metric",
        "--model",
        "jc_doublet",
        "--params",
        JC,
        "--method",
        "both",
    ]);
    let r = &doc["results"];
    assert_eq!(r["comparison"]["verdict"], "equal");
    let expected: &[&[(f64, f64)]] = &[&[(1.0, 0.0), (-0.5, 0.0)], &[(-0.5, 0.0), (1.0, 0.0)]];
    assert_matrix(&r["spectral"]["matrix"], expected, 1e-10);
    assert_matrix(&r["das"]["matrix"], expected, 1e-10);
    assert_eq!(r["spectral"]["report"]["positive"], true);
}

#[test]
fn pt_metrics_are_proportional() {
    let doc = ok(&[
        "metric",
        "--model",
        "pt_matrix",
        "--params",
        "r=1,theta=0.5235987755982988,s=1,t=1,phi=0",
        "--method",
        "both",
    ]);
    let c = &doc["results"]["comparison"];
    assert_eq!(c["verdict"], "proportional");
    assert!((c["factor"].as_f64().unwrap() - 4.0 / 3.0).abs() < 1e-9);
}

#[test]
fn identity_matrix_input() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("id.json");
    std::fs::write(
        &path,
        r#"{"matrix": {"h": [[[1, 0], [0, 0]], [[0, 0], [1, 0]]]}}"#,
    )
    .unwrap();
    let doc = ok(&["metric", "--in", path.to_str().unwrap()]);
    let s = &doc["results"]["spectral"];
    assert_matrix(
        &s["matrix"],
        &[&[(1.0, 0.0), (0.0, 0.0)], &[(0.0, 0.0), (1.0, 0.0)]],
        0.0,
    );
    assert_eq!(s["report"]["hermitian_residual"], 0.0);
    assert_eq!(s["report"]["intertwining_residual"], 0.0);
}

#[test]
fn generator_data_in_matrix_input() {
    // the model's own generator data, passed as a plain matrix document
    let shown = ok(&["model", "show", "--model", "jc_doublet", "--params", JC]);
    let model = &shown["results"]["model"];
    let input = serde_json::json!({
        "matrix": { "h": model["hamiltonian"], "s": model["similarity"], "das": model["das_data"] }
    });
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("jc.json");
    std::fs::write(&path, input.to_string()).unwrap();
    let doc = ok(&["metric", "--in", path.to_str().unwrap(), "--method", "both"]);
    assert_eq!(doc["results"]["comparison"]["verdict"], "equal");

    let v = ok(&["validate", "--in", path.to_str().unwrap()]);
    assert!(v["results"]["pseudo_hermitian_residual"].as_f64().unwrap() < 1e-15);
    assert_eq!(v["results"]["phase"]["classification"], "unbroken");
}

#[test]
fn das_needs_generator_data() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.json");
    std::fs::write(
        &path,
        r#"{"matrix": {"h": [[[1, 0], [0.5, 0]], [[0.2, 0], [2, 0]]]}}"#,
    )
    .unwrap();
    let err = fails(
        &["metric", "--in", path.to_str().unwrap(), "--method", "das"],
        4,
    );
    assert_eq!(err["error"]["code"], "parse_error");
}

#[test]
fn exit_codes() {
    let e = fails(
        &[
            "metric",
            "--model",
            "jc_doublet",
            "--params",
            "eps=0.5,rho=0.3",
        ],
        2,
    );
    assert_eq!(e["error"]["code"], "broken_phase");
    let e = fails(
        &[
            "metric",
            "--model",
            "jc_doublet",
            "--params",
            "eps=0.5,rho=0.25",
        ],
        3,
    );
    assert_eq!(e["error"]["code"], "defective_system");
    let e = fails(&["metric", "--model", "nope"], 4);
    assert_eq!(e["error"]["code"], "invalid_params");
    fails(&["metric", "--model", "jc_doublet", "--params", "rho"], 4);
    fails(&["metric", "--frobnicate"], 4);
    fails(&["metric", "--in", "/nonexistent/input.json"], 4);
    fails(
        &["metric", "--model", "jc_doublet", "--tol", "bogus_tol=1"],
        4,
    );
    let e = fails(&["sweep", "--model", "jc_doublet", "--axis", "rho=0:1"], 2);
    assert_eq!(e["error"]["code"], "malformed_axis");
    let e = fails(
        &[
            "evolve",
            "--model",
            "jc_doublet",
            "--params",
            "eps=0.5,rho=0.3",
        ],
        2,
    );
    assert_eq!(e["error"]["code"], "phase_violation");
}

#[test]
fn malformed_documents() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [
        (
            "both.json",
            r#"{"model": {"family": "jc_doublet"}, "matrix": {"h": [[[1, 0]]]}}"#,
        ),
        ("neither.json", r#"{}"#),
        (
            "ragged.json",
            r#"{"matrix": {"h": [[[1, 0], [0, 0]], [[1, 0]]]}}"#,
        ),
        ("rect.json", r#"{"matrix": {"h": [[[1, 0], [0, 0]]]}}"#),
        (
            "singular_s.json",
            r#"{"matrix": {"h": [[[1, 0]]], "s": [[[0, 0]]]}}"#,
        ),
        ("syntax.json", r#"{"matrix": "#),
    ] {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        fails(&["metric", "--in", path.to_str().unwrap()], 4);
    }
}

#[test]
fn jc_sweep_finds_the_boundary() {
    let doc = ok(&[
        "sweep",
        "--model",
        "jc_doublet",
        "--params",
        "eps=0.5,omega=1",
        "--axis",
        "rho=0:0.5:51",
    ]);
    let boundaries = doc["results"]["boundaries"].as_array().unwrap();
    assert!(!boundaries.is_empty());
    for b in boundaries {
        let (lo, hi) = (b["lo"].as_f64().unwrap(), b["hi"].as_f64().unwrap());
        assert!(lo >= 0.24 - 1e-12 && hi <= 0.26 + 1e-12, "{b}");
        assert!((b["exceptional_point"]["value"].as_f64().unwrap() - 0.25).abs() < 1e-8);
    }
    assert_eq!(
        doc["results"]["diagram"]["points"]
            .as_array()
            .unwrap()
            .len(),
        51
    );
}

#[test]
fn dirac_sweep_finds_the_boundary() {
    let doc = ok(&[
        "sweep",
        "--model",
        "dirac_scalar",
        "--params",
        "m0=1,kx=0",
        "--axis",
        "v0=0:2:201",
    ]);
    let boundaries = doc["results"]["boundaries"].as_array().unwrap();
    assert!(!boundaries.is_empty());
    for b in boundaries {
        let v = b["exceptional_point"]["value"].as_f64().unwrap();
        assert!((v - 1.0).abs() <= 0.01, "{b}");
    }
}

#[test]
fn single_point_sweep_writes_one_row() {
    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "sweep",
        "--model",
        "jc_doublet",
        "--params",
        "eps=0.5",
        "--axis",
        "rho=0.1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let csv = std::fs::read_to_string(dir.path().join("diagram.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("1.0000000000000001e-1,unbroken,"));
    assert!(dir.path().join("diagram.json").exists());
}

#[test]
fn two_axis_sweep_with_failures_embedded() {
    let doc = ok(&[
        "sweep",
        "--model",
        "jc_doublet",
        "--params",
        "eps=0.5",
        "--axis",
        "omega=-1:1:3",
        "--axis",
        "rho=0:0.4:5",
    ]);
    let counts = &doc["results"]["classification_counts"];
    assert_eq!(counts["failed"], 10);
    assert_eq!(doc["results"]["points"], 15);
}

#[test]
fn ep_command() {
    let doc = ok(&[
        "ep",
        "--model",
        "pt_matrix",
        "--params",
        "r=1,theta=1.5707963267948966,t=1",
        "--param",
        "s",
        "--lo",
        "0.1",
        "--hi",
        "2",
    ]);
    let v = doc["results"]["exceptional_point"]["value"]
        .as_f64()
        .unwrap();
    assert!((v - 1.0).abs() < 1e-8);
    let e = fails(
        &[
            "ep",
            "--model",
            "jc_doublet",
            "--params",
            "eps=0.5",
            "--param",
            "rho",
            "--lo",
            "0",
            "--hi",
            "0.1",
        ],
        1,
    );
    assert_eq!(e["error"]["code"], "no_bracket");
}

#[test]
fn unbroken_evolution_conserves_metric_norm() {
    let dir = tempfile::tempdir().unwrap();
    let doc = ok(&[
        "evolve",
        "--model",
        "jc_doublet",
        "--params",
        JC,
        "--steps",
        "101",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let r = &doc["results"];
    assert!(r["max_metric_norm_deviation"].as_f64().unwrap() <= 1e-8);
    assert!(r["max_standard_norm_deviation"].as_f64().unwrap() > 1e-4);
    assert!(r["summary"]
        .as_str()
        .unwrap()
        .starts_with("max metric-norm deviation"));
    let csv = std::fs::read_to_string(dir.path().join("evolution.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn broken_evolution_growth_rate() {
    let doc = ok(&[
        "evolve",
        "--model",
        "jc_doublet",
        "--params",
        "eps=0.5,rho=0.3",
        "--allow-broken",
        "--t-max",
        "40",
        "--steps",
        "401",
        "--psi0",
        "[1, 0]",
    ]);
    let r = &doc["results"];
    let rate = r["growth_rate"].as_f64().unwrap();
    let gamma = r["max_imag_eigenvalue"].as_f64().unwrap();
    assert!((gamma - 0.16583).abs() < 1e-5);
    assert!((rate - gamma).abs() < 0.01 * gamma, "{rate} vs {gamma}");
    assert_eq!(r["metric"], "identity");
}

#[test]
fn growing_mode_rate_on_a_short_window() {
    let doc = ok(&[
        "evolve",
        "--model",
        "jc_doublet",
        "--params",
        "eps=0.5,rho=0.3",
        "--allow-broken",
        "--psi0",
        "growing",
    ]);
    let r = &doc["results"];
    let rate = r["growth_rate"].as_f64().unwrap();
    let gamma = r["max_imag_eigenvalue"].as_f64().unwrap();
    assert!((rate - gamma).abs() < 0.01 * gamma, "{rate} vs {gamma}");
}

#[test]
fn psi0_formats() {
    for psi in ["0.6,0.8", "[0.6, 0.8]", "[[0.6, 0], [0, 0.8]]"] {
        ok(&[
            "evolve",
            "--model",
            "jc_doublet",
            "--params",
            JC,
            "--steps",
            "3",
            "--psi0",
            psi,
        ]);
    }
    fails(
        &[
            "evolve",
            "--model",
            "jc_doublet",
            "--params",
            JC,
            "--psi0",
            "1,0,0",
        ],
        4,
    );
    fails(
        &[
            "evolve",
            "--model",
            "jc_doublet",
            "--params",
            JC,
            "--psi0",
            "0,0",
        ],
        4,
    );
}

#[test]
fn discrimination() {
    let doc = ok(&["discriminate", "--eps", "0"]);
    for row in doc["results"]["rows"].as_array().unwrap() {
        assert!(row["distinguishability_gain"].as_f64().unwrap().abs() < 1e-15);
    }
    let doc = ok(&[
        "discriminate",
        "--theta",
        "1.0471975511965976",
        "--eps",
        "0.05",
    ]);
    let r = &doc["results"];
    assert!((r["overlap_squared"].as_f64().unwrap() - 0.05f64.cos().powi(2)).abs() < 1e-12);
    assert!(r["max_gain"]["gain"].as_f64().unwrap() > 0.0);

    let dir = tempfile::tempdir().unwrap();
    ok(&[
        "discriminate",
        "--model",
        "jc_doublet",
        "--params",
        "eps=0.5,rho=0.1",
        "--scan",
        "91",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let scan = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(scan.lines().count(), 92);
    fails(&["discriminate", "--sin-theta", "1.5"], 1);
}

#[test]
fn output_round_trip_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let args = [
        "metric",
        "--model",
        "dirac_scalar",
        "--params",
        "m0=1,v0=0.6",
        "--method",
        "both",
        "--out",
        out,
    ];
    let first = bin(&args);
    let file1 = std::fs::read(Path::new(out).join("result.json")).unwrap();
    let second = bin(&args);
    let file2 = std::fs::read(Path::new(out).join("result.json")).unwrap();
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(file1, file2);
    let from_stdout: Value = serde_json::from_slice(&first.stdout).unwrap();
    let from_file: Value = serde_json::from_slice(&file1).unwrap();
    assert_eq!(from_stdout, from_file);

    let sweep = [
        "sweep",
        "--model",
        "dirac_scalar",
        "--params",
        "m0=1",
        "--axis",
        "v0=0:2:41",
        "--axis",
        "kx=0:1:11",
    ];
    assert_eq!(bin(&sweep).stdout, bin(&sweep).stdout);
}

#[test]
fn in_process_output_matches_reparse() {
    let text = metricforge_cli::run([
        "metricforge",
        "metric",
        "--model",
        "pt_matrix",
        "--params",
        "r=1,theta=0.3,s=1,t=2",
    ])
    .unwrap();
    let doc: metricforge_cli::output::OutputDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(metricforge_cli::output::to_compact(&doc) + "\n", text);
}

#[test]
fn digest_is_independent_of_input_route() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    std::fs::write(
        &path,
        r#"{"model": {"family": "jc_doublet", "params": {"rho": 0.125, "eps": 0.5}}}"#,
    )
    .unwrap();
    let a = ok(&["metric", "--in", path.to_str().unwrap()]);
    let b = ok(&[
        "metric",
        "--model",
        "jc_doublet",
        "--params",
        "eps=0.5,rho=0.125",
    ]);
    assert_eq!(a["input_digest"], b["input_digest"]);
    assert_eq!(a["results"], b["results"]);
    let c = ok(&[
        "metric",
        "--model",
        "jc_doublet",
        "--params",
        "eps=0.5,rho=0.12",
    ]);
    assert_ne!(a["input_digest"], c["input_digest"]);
}

#[test]
fn tolerances_are_echoed() {
    let doc = ok(&[
        "metric",
        "--model",
        "jc_doublet",
        "--params",
        JC,
        "--tol",
        "cmp_tol=1e-6,eig_tol=1e-9",
    ]);
    assert_eq!(doc["tolerances"]["cmp_tol"].as_f64(), Some(1e-6));
    assert_eq!(doc["tolerances"]["eig_tol"].as_f64(), Some(1e-9));
    assert_eq!(doc["tolerances"]["herm_tol"].as_f64(), Some(1e-10));
}

#[test]
fn compare_and_validate_models() {
    let doc = ok(&[
        "compare",
        "--model",
        "pt_matrix",
        "--params",
        "r=1,theta=0.5235987755982988,s=1,t=1",
    ]);
    let comparisons = doc["results"]["comparisons"].as_array().unwrap();
    assert_eq!(comparisons[0]["metric"], "das");
    assert_eq!(comparisons[0]["result"]["verdict"], "proportional");
    assert_eq!(comparisons[1]["metric"], "analytic");
    assert_eq!(comparisons[1]["result"]["verdict"], "equal");

    let v = ok(&[
        "validate",
        "--model",
        "jc_doublet",
        "--params",
        "eps=0.5,rho=0.3",
    ]);
    assert_eq!(v["results"]["phase"]["classification"], "broken");
    assert_eq!(v["results"]["spectral_metric"]["error"], "broken_phase");
}

#[test]
fn normalization_flag() {
    let left = ok(&[
        "metric",
        "--model",
        "pt_matrix",
        "--params",
        "r=1,theta=0.5235987755982988,s=1,t=1",
    ]);
    let right = ok(&[
        "metric",
        "--model",
        "pt_matrix",
        "--params",
        "r=1,theta=0.5235987755982988,s=1,t=1",
        "--normalization",
        "unit_right",
    ]);
    let l = matrix(&left["results"]["spectral"]["matrix"]);
    let r = matrix(&right["results"]["spectral"]["matrix"]);
    // unit-right differs from unit-left by 1/cos^2(pi/6) = 4/3
    assert!((r[0][0].0 / l[0][0].0 - 4.0 / 3.0).abs() < 1e-12);
    fails(
        &[
            "metric",
            "--model",
            "jc_doublet",
            "--normalization",
            "sideways",
        ],
        4,
    );
}

#[test]
fn help_and_version() {
    let out = bin(&["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("discriminate"));
    let out = bin(&["--version"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains(env!("CARGO_PKG_VERSION")));
}
