//! End-to-end tests of the foliation-forge binary: scenario validation,
//! output schemas, determinism, exit codes and the audit round trip.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_foliation-forge"))
}

fn write_scenario(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

#[test]
fn models_lists_builtins() {
    let out = run(&["models", "--n", "2"]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let find = |name: &str| {
        rows.iter()
            .find(|r| r["name"] == name)
            .unwrap_or_else(|| panic!("missing {name}"))
            .clone()
    };
    assert_eq!(find("fuchsian")["kappa2"], 1.0);
    assert_eq!(find("hyperbolic_ball")["kappa2"], -1.0);
    assert_eq!(find("horospherical")["kappa2"], 0.0);
    assert_eq!(find("exponential_collar")["kappa1"], -1.0);
}

#[test]
fn minimal_scenario_defaults_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write_scenario(dir.path(), "s.json", r#"{"model":"fuchsian","n":2}"#);
    let out_dir = dir.path().join("out");
    let out = run(&[
        "kappa",
        "--scenario",
        scen.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let resolved: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("scenario_resolved.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(resolved["resolution"], serde_json::json!([64, 64]));
    assert_eq!(resolved["ladder"]["count"], 16);
    assert_eq!(resolved["ladder"]["spacing"], "log");
    assert_eq!(resolved["tolerances"]["newton_residual"], 1e-10);
}

#[test]
fn ladder_outside_collar_is_rejected_naming_both() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write_scenario(
        dir.path(),
        "s.json",
        r#"{"model":"fuchsian","n":2,"x_max":0.4}"#,
    );
    let out = run(&["foliate", "--scenario", scen.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("0.5") && err.contains("0.4"), "{err}");
}

#[test]
fn scenario_round_trip_preserves_hash() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write_scenario(
        dir.path(),
        "s.json",
        r#"{"model":"horospherical","n":2,"resolution":[16,16],"x_max":0.9,
            "ladder":{"min":0.1,"max":0.3,"count":3,"spacing":"linear"},"steps":48}"#,
    );
    let out1 = dir.path().join("o1");
    let out2 = dir.path().join("o2");
    assert!(run(&["kappa", "--scenario", scen.to_str().unwrap(), "--out", out1.to_str().unwrap()])
        .status
        .success());
    // reload the resolved scenario and run again: the hash must be stable
    let resolved = out1.join("scenario_resolved.json");
    assert!(run(&[
        "kappa",
        "--scenario",
        resolved.to_str().unwrap(),
        "--out",
        out2.to_str().unwrap()
    ])
    .status
    .success());
    let m1: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("manifest.json")).unwrap())
            .unwrap();
    let m2: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out2.join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m1["scenario_hash"], m2["scenario_hash"]);
}

fn fuchsian_small(dir: &Path) -> std::path::PathBuf {
    write_scenario(
        dir,
        "fuchsian.json",
        r#"{"model":"fuchsian","n":2,"resolution":[16,16],"x_max":1.2,
            "ladder":{"min":0.1,"max":0.5,"count":5,"spacing":"linear"},"steps":64}"#,
    )
}

#[test]
fn foliate_fuchsian_matches_model_formula_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scen = fuchsian_small(dir.path());
    let out1 = dir.path().join("o1");
    let out2 = dir.path().join("o2");
    for out in [&out1, &out2] {
        let o = run(&[
            "foliate",
            "--scenario",
            scen.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    // H column matches n (4 - eps^2)/(4 + eps^2) rowwise
    let csv = std::fs::read_to_string(out1.join("foliation.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let (eps, mean_h) = (cols[0], cols[1]);
        let expect = 2.0 * (4.0 - eps * eps) / (4.0 + eps * eps);
        assert!(
            (mean_h - expect).abs() / expect < 1e-8,
            "eps {eps}: H {mean_h} vs {expect}"
        );
    }
    // byte-identical CSV across identical runs
    let a = std::fs::read(out1.join("foliation.csv")).unwrap();
    let b = std::fs::read(out2.join("foliation.csv")).unwrap();
    assert_eq!(a, b);
    // manifest checksums hold
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out1.join("manifest.json")).unwrap())
            .unwrap();
    for f in manifest["files"].as_array().unwrap() {
        let p = out1.join(f["path"].as_str().unwrap());
        assert!(p.exists(), "{} missing", p.display());
        let data = std::fs::read(&p).unwrap();
        use sha2::Digest;
        let digest = format!("{:x}", sha2::Sha256::digest(&data));
        assert_eq!(digest, f["sha256"].as_str().unwrap(), "{}", p.display());
    }
}

#[test]
fn audit_reproduces_foliate_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let scen = fuchsian_small(dir.path());
    let out_dir = dir.path().join("out");
    assert!(run(&[
        "foliate",
        "--scenario",
        scen.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap()
    ])
    .status
    .success());
    let audit = run(&["audit", out_dir.to_str().unwrap()]);
    assert!(audit.status.success(), "{}", String::from_utf8_lossy(&audit.stderr));
    let verdict: bool = serde_json::from_slice(&audit.stdout).unwrap();
    assert!(verdict, "re-audit disagreed with the stored verdict");
}

#[test]
fn resonances_match_prediction_and_gaps_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // scan window holding the two largest crossings of the collar
    let scen = write_scenario(
        dir.path(),
        "collar.json",
        r#"{"model":"exponential_collar","n":2,"resolution":[16,16],"x_max":0.8,
            "ladder":{"min":0.1,"max":0.3,"count":3,"spacing":"linear"},"steps":48,
            "resonance":{"eps_min":0.008,"eps_max":0.05,"samples":14,"m_eigs":8,"jn":3.0}}"#,
    );
    let out_dir = dir.path().join("res");
    let out = run(&[
        "resonances",
        "--scenario",
        scen.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let crossings: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out_dir.join("crossings.json")).unwrap(),
    )
    .unwrap();
    let found: Vec<f64> = crossings["crossings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["eps"].as_f64().unwrap())
        .collect();
    let oracle = foliation_core::resonance::collar_crossing_oracle(2, &[1, 2]);
    assert!(found.len() >= 2);
    for (f, o) in found.iter().take(2).zip(&oracle) {
        assert!((f - o).abs() / o < 0.01, "crossing {f} vs prediction {o}");
    }
    // a ladder point sitting on the first crossing must be skipped: exit 4
    let eps1 = oracle[0];
    let gap_scen = write_scenario(
        dir.path(),
        "collar_gap.json",
        &format!(
            r#"{{"model":"exponential_collar","n":2,"resolution":[16,16],"x_max":0.8,
                "ladder":{{"min":{eps1},"max":0.06,"count":3,"spacing":"linear"}},"steps":48}}"#
        ),
    );
    let gap_out = dir.path().join("gap");
    let out = run(&[
        "foliate",
        "--scenario",
        gap_scen.to_str().unwrap(),
        "--out",
        gap_out.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    let fol: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(gap_out.join("foliation.json")).unwrap(),
    )
    .unwrap();
    let gaps = fol["gaps"].as_array().unwrap();
    assert_eq!(gaps.len(), 1);
    assert!((gaps[0]["eps"].as_f64().unwrap() - eps1).abs() < 1e-12);
    assert_eq!(fol["leaves"].as_array().unwrap().len(), 2);
}

#[test]
fn leaf_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let scen = fuchsian_small(dir.path());
    let out_dir = dir.path().join("leaf");
    let out = run(&[
        "leaf",
        "--scenario",
        scen.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--override",
        "eps=0.3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let leaf: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("leaf.json")).unwrap())
            .unwrap();
    assert_eq!(leaf["eps"], 0.3);
    let expect = 2.0 * (4.0 - 0.09) / (4.0 + 0.09);
    assert!((leaf["mean_h"].as_f64().unwrap() - expect).abs() < 1e-9);
    assert!(out_dir.join("phi0.field").exists());
}

#[test]
fn sigmak_gauss_curvature_run() {
    let dir = tempfile::tempdir().unwrap();
    let scen = write_scenario(
        dir.path(),
        "sig.json",
        r#"{"model":"fuchsian","n":2,"k":2,"resolution":[16,16],"x_max":1.0,
            "ladder":{"min":0.1,"max":0.4,"count":4,"spacing":"linear"},"steps":64,
            "perturbation":[{"power":2,"amplitude":0.04,"mode":[1,0]}]}"#,
    );
    let out_dir = dir.path().join("sig");
    let out = run(&[
        "sigmak",
        "--scenario",
        scen.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dev_csv = std::fs::read_to_string(out_dir.join("sigma_deviation.csv")).unwrap();
    for line in dev_csv.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cols[2] < 1e-8, "sigma deviation {} at eps {}", cols[2], cols[0]);
    }
    let fol: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("sigmak.json")).unwrap())
            .unwrap();
    assert_eq!(fol["audit"]["monotonicity"], "decreasing");
}
