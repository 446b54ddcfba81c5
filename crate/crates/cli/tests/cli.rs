use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_floquet-advect"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn solve_constant_potential() {
    let out = run(&["solve", "catalog:constant-potential", "--alpha", "5", "--nx", "101", "--nt", "100"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["lambda"].as_f64().unwrap() - 0.7).abs() < 1e-8);
    assert!(v["residual"].is_number());
    assert!(v["iterations"].is_number());
}

#[test]
fn malformed_file_is_a_load_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "name = \"bad\"\nT = 1.0\n[expressions]\nm = \"x\"\ndxm = \"1\"\nV = \"cos(\"\n").unwrap();
    let out = run(&["solve", path.to_str().unwrap(), "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
    let missing = run(&["solve", "does/not/exist.toml", "--alpha", "1"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn forced_non_convergence_reports_residual() {
    // Weak diffusion leaves a spectral ratio near one, so ten iterations cannot reach 1e-15.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("slow.toml");
    std::fs::write(
        &path,
        "name = \"slow\"\nT = 1.0\nD = 0.001\n[expressions]\nm = \"0\"\ndxm = \"0\"\nV = \"cos(pi*x)\"\n",
    )
    .unwrap();
    let out = run(&[
        "solve",
        path.to_str().unwrap(),
        "--alpha",
        "1",
        "--nx",
        "61",
        "--nt",
        "60",
        "--tol",
        "1e-15",
        "--max-iter",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("residual"), "{err}");
}

#[test]
fn sweep_writes_deterministic_csv() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["constant-potential", "monotone-increasing", "reversing-drift"] {
        let a = dir.path().join(format!("{name}-a.csv"));
        let b = dir.path().join(format!("{name}-b.csv"));
        for path in [&a, &b] {
            let out = run(&[
                "sweep",
                &format!("catalog:{name}"),
                "--alphas",
                "1,10",
                "--nx",
                "61",
                "--nt",
                "60",
                "--out",
                path.to_str().unwrap(),
            ]);
            assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        }
        let text = std::fs::read_to_string(&a).unwrap();
        assert!(text.starts_with("alpha,lambda,residual,iterations,nx,nt\n"));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    }
}

#[test]
fn limit_outputs() {
    let out = run(&["limit", "catalog:constant-potential"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["candidates"].as_array().unwrap().len(), 1);
    assert!((v["minimum"].as_f64().unwrap() - 0.7).abs() < 1e-12);

    let out = run(&["limit", "catalog:reversing-drift", "--nx", "41", "--nt", "400"]);
    assert_eq!(out.status.code(), Some(0));
    assert!((json(&out)["minimum"].as_f64().unwrap() - 0.5).abs() < 1e-9);

    let out = run(&["limit", "catalog:staircase", "--nx", "101", "--nt", "200"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let kinds: Vec<&str> = v["candidates"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["source"]["kind"].as_str().unwrap())
        .collect();
    assert_eq!(kinds.iter().filter(|k| **k == "curve_average").count(), 2);
    assert_eq!(kinds.iter().filter(|k| **k == "subdomain").count(), 4);
}

#[test]
fn inconsistent_mode_is_a_hypothesis_violation() {
    let out = run(&["limit", "catalog:staircase", "--mode", "nondegenerate"]);
    assert_eq!(out.status.code(), Some(4));
    let out = run(&["limit", "catalog:constant-potential", "--mode", "temporal"]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn verify_passes_and_flags_a_mislabeled_limit() {
    let out = run(&["verify", "catalog:constant-potential", "--alphas", "1,10,30", "--nx", "61", "--nt", "60"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v[0]["status"], "PASS");
    assert!(v[0]["final_gap"].as_f64().unwrap() < 1e-8);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mislabeled.toml");
    std::fs::write(
        &path,
        r#"
name = "mislabeled"
T = 1.0
[expressions]
m = "-x*(1.5 + cos(2*pi*t))"
dxm = "-(1.5 + cos(2*pi*t))"
V = "x^2 + x*sin(2*pi*t)"
[[curves]]
expr = "0"
[expected_limit]
kind = "explicit_value"
value = 0.5
"#,
    )
    .unwrap();
    let out = run(&["verify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(json(&out)[0]["status"], "FAIL");
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn unknown_catalog_name_lists_choices() {
    let out = run(&["solve", "catalog:nope", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("staircase"));
}
