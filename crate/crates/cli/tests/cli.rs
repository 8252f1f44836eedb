use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn levinson(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_levinson"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("run binary")
}

fn csv_column(text: &str, name: &str) -> Vec<f64> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(j).unwrap().parse().unwrap()).collect()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn scatter_poschl_teller_is_reflectionless() {
    let dir = tempfile::tempdir().unwrap();
    let o = levinson(&["scatter", "--potential", "poschl-teller", "--l", "1"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("scatter.csv")).unwrap();
    assert!(csv_column(&text, "abs_b2").iter().all(|&b| b < 1e-12));
    assert!(String::from_utf8_lossy(&o.stdout).contains("unitarity residual"));
}

#[test]
fn scatter_free_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let o = levinson(&["scatter", "--potential", "free", "--n-k", "32"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("scatter.csv")).unwrap();
    assert!(csv_column(&text, "re_t").iter().all(|&t| (t - 1.0).abs() < 1e-12));
    assert!(csv_column(&text, "abs_b2").iter().all(|&b| b < 1e-24));
}

#[test]
fn scatter_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("well.json");
    fs::write(&spec, r#"{"kind": "square-well", "depth": -2.0, "half_width": 1.0}"#).unwrap();
    let o = levinson(&["scatter", "--spec", spec.to_str().unwrap(), "--n-k", "64"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_column(&fs::read_to_string(dir.path().join("scatter.csv")).unwrap(), "k").len(), 64);
}

#[test]
fn scatter_json_format() {
    let dir = tempfile::tempdir().unwrap();
    let o = levinson(&["scatter", "--potential", "gaussian", "--n-k", "20", "--format", "json"], dir.path());
    assert!(o.status.success());
    let v = json(&dir.path().join("scatter.json"));
    assert_eq!(v["k"].as_array().unwrap().len(), 20);
}

#[test]
fn density_delta_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = levinson(&["density", "--potential", "delta", "--g", "-2"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    let (ks, rho) = (csv_column(&text, "k"), csv_column(&text, "rho_smooth"));
    for (k, r) in ks.iter().zip(&rho).filter(|(k, _)| (1e-2..=20.0).contains(*k)) {
        assert!((r - (-4.0) / (4.0 + 4.0 * k * k)).abs() < 1e-3, "k={k}");
    }
    let side = json(&dir.path().join("density.json"));
    assert_eq!(side["b0"], -1.0);
}

#[test]
fn density_free_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = levinson(&["density", "--potential", "free", "--n-k", "32"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    assert!(csv_column(&text, "rho_smooth").iter().all(|r| r.abs() < 1e-10));
}

#[test]
fn density_box_columns_oscillate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("asym.json");
    fs::write(
        &spec,
        r#"{"kind": "composite", "terms": [
            {"kind": "gaussian", "amplitude": -1.5, "center": -1.0, "width": 0.6},
            {"kind": "gaussian", "amplitude": -0.7, "center": 1.3, "width": 0.9}]}"#,
    )
    .unwrap();
    let o = levinson(
        &["density", "--spec", spec.to_str().unwrap(), "--L", "30", "--L", "40", "--k-min", "0.1", "--k-max", "5", "--n-k", "60"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("density.csv")).unwrap();
    let a = csv_column(&text, "rho_box(L=30)");
    let b = csv_column(&text, "rho_box(L=40)");
    let ks = csv_column(&text, "k");
    let smooth = csv_column(&text, "rho_smooth");
    // after removing 2L the two boxes differ only through the oscillating term
    let diffs: Vec<f64> = (0..ks.len()).map(|i| (a[i] - 60.0) - (b[i] - 80.0)).collect();
    assert!(diffs.iter().any(|d| d.abs() > 1e-3));
    assert!(csv_column(&text, "identity_residual").iter().all(|&r| r < 1e-2));
    assert!(smooth.iter().all(|r| r.is_finite()));
}

#[test]
fn levinson_examples() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&[&str], f64, f64); 3] = [
        (&["levinson", "--potential", "poschl-teller", "--l", "1"], 1.0, 0.0),
        (&["levinson", "--potential", "free"], 0.0, 0.0),
        (&["levinson", "--potential", "delta", "--g", "1"], 0.0, -1.0),
    ];
    for (args, n, b0) in cases {
        let o = levinson(args, dir.path());
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let r = json(&dir.path().join("levinson.json"));
        assert!((r["n_levinson"].as_f64().unwrap() - n).abs() < 0.05, "{args:?}");
        assert_eq!(r["b0"].as_f64().unwrap(), b0);
        assert_eq!(r["verdict"], "pass");
        assert!(r["provenance"]["unitarity_tol"].is_number());
    }
}

#[test]
fn bad_config_fails_without_files() {
    let dir = tempfile::tempdir().unwrap();
    let o = levinson(&["scatter", "--potential", "free", "--k-min", "2", "--k-max", "1"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--k-min"));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
    let o = levinson(&["scatter", "--potential", "coulomb"], dir.path());
    assert!(!o.status.success());
    let o = levinson(&["levinson", "--potential", "free", "--n-k", "8"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn outputs_are_deterministic() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = ["scatter", "--potential", "asym-double-gaussian", "--n-k", "50"];
    assert!(levinson(&args, a.path()).status.success());
    assert!(levinson(&args, b.path()).status.success());
    assert_eq!(
        fs::read(a.path().join("scatter.csv")).unwrap(),
        fs::read(b.path().join("scatter.csv")).unwrap()
    );
}

#[test]
fn verify_fast_and_forced_failure() {
    let dir = tempfile::tempdir().unwrap();
    let run = |extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_levinson"))
            .args(["verify", "--fast"])
            .args(extra)
            .output()
            .unwrap()
    };
    let o = run(&[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).lines().all(|l| l.starts_with("PASS")));
    let report = dir.path().join("verify.json");
    let o = run(&["--tol-scale", "1e-6", "--json", report.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("failed criteria: 1 ("));
    assert!(json(&report).as_array().unwrap().iter().any(|c| c["passed"] == false));
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_levinson"));
    cmd.env("LEVINSON_THREADS", "zero")
        .args(["scatter", "--potential", "free", "--n-k", "16", "--out"])
        .arg(dir.path());
    let o = cmd.output().unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("LEVINSON_THREADS"));
    let o = Command::new(env!("CARGO_BIN_EXE_levinson"))
        .env("LEVINSON_THREADS", "1")
        .args(["scatter", "--potential", "free", "--n-k", "16", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
}
