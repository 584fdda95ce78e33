//! End-to-end tests of the `qwalk` binary: artifact layout, determinism,
//! config/flag merging, and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .args(args)
        .env_remove("QWALK_OUT")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("missing {name}: {e}"))
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn rerun_with_identical_inputs_is_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        let out = qwalk(&[
            "disorder-edge",
            "--ensemble",
            "3",
            "--format",
            "csv,json,svg",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 4);
    for name in names {
        assert_eq!(
            fs::read(a.path().join(&name)).unwrap(),
            fs::read(b.path().join(&name)).unwrap(),
            "artifact {name} differs between identical runs"
        );
    }
}

#[test]
fn phase_diagram_two_by_two_writes_four_rows() {
    let dir = TempDir::new().unwrap();
    let out = qwalk(&[
        "phase-diagram",
        "--resolution",
        "2",
        "--k-grid",
        "64",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "phase_diagram.csv");
    assert!(csv.starts_with("theta1,theta2,nu_prime,nu_dprime,nu_0,nu_pi,valid\n"));
    assert_eq!(csv_rows(&csv).len(), 4);
}

#[test]
fn edge_survivors_pile_up_at_the_boundary() {
    let dir = TempDir::new().unwrap();
    let out = qwalk(&["edge", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&read(dir.path(), "edge_q.csv"));
    let final_step: Vec<_> = rows.iter().filter(|r| r[1] == "5").collect();
    assert!(!final_step.is_empty());
    let best = final_step
        .iter()
        .max_by(|a, b| {
            a[2].parse::<f64>()
                .unwrap()
                .total_cmp(&b[2].parse::<f64>().unwrap())
        })
        .unwrap();
    assert_eq!(best[0], "4", "maximum of the t = 5 column should sit at x₀");
    let q: f64 = best[2].parse().unwrap();
    assert!((q - 0.768580).abs() < 1e-5, "boundary weight {q}");
}

#[test]
fn config_file_flags_and_defaults_merge_in_order() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"trials": 400, "theta1": "1/8 pi", "p": "2/3"}"#).unwrap();
    let out = qwalk(&[
        "oracle-check",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "200",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "oracle_check_summary.json")).unwrap();
    let params = &summary["parameters"];
    // flag beats file
    assert_eq!(params["trials"], 200);
    // file beats default, with the "a/b pi" grammar
    assert!((params["theta1"].as_f64().unwrap() - std::f64::consts::PI / 8.0).abs() < 1e-12);
    assert!((params["p"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-12);
    // untouched default survives
    assert_eq!(params["steps"], 5);
    assert_eq!(summary["scenario"], "oracle-check");
}

#[test]
fn empty_config_file_means_reference_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("empty.json");
    fs::write(&cfg, "").unwrap();
    // narrow the sweep via flags so the run stays small; the remaining
    // parameters must come from the defaults
    let out = qwalk(&[
        "displacement-scan",
        "--config",
        cfg.to_str().unwrap(),
        "--theta1-list",
        "1/8 pi",
        "--p-list",
        "1",
        "--steps",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "displacement_scan_summary.json")).unwrap();
    let params = &summary["parameters"];
    assert!((params["theta2"].as_f64().unwrap() - std::f64::consts::PI / 4.0).abs() < 1e-12);
    assert_eq!(params["frame"], "prime");
}

#[test]
fn out_of_range_loss_in_config_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"p": 1.5}"#).unwrap();
    let out = qwalk(&[
        "oracle-check",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("oracle_check.csv").exists());
}

#[test]
fn unknown_config_key_exits_2() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("typo.json");
    fs::write(&cfg, r#"{"stepz": 3}"#).unwrap();
    let out = qwalk(&[
        "edge",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stepz"), "stderr should name the bad key: {err}");
}

#[test]
fn malformed_count_table_exits_3() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "kind,x,t,count\nR,zzz,1,5\n").unwrap();
    let out = qwalk(&[
        "ingest",
        bad.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("malformed"), "stderr: {err}");
}

#[test]
fn nonconverged_long_run_exits_4_but_still_writes() {
    let dir = TempDir::new().unwrap();
    // θ₁ = π/4 sits on the gap closing, where the survival decay is too
    // slow for the long-run stopping rule
    let out = qwalk(&[
        "displacement-scan",
        "--theta1-list",
        "1/4 pi",
        "--p-list",
        "2/3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv_rows(&read(dir.path(), "displacement_scan.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][8], "false", "converged column");
}

#[test]
fn ingest_converts_counts_to_distributions() {
    let dir = TempDir::new().unwrap();
    let counts = dir.path().join("counts.csv");
    fs::write(
        &counts,
        "kind,x,t,count\nR,-2,1,100\nR,2,1,100\nR,-2,2,50\nT,-3,2,375\nT,3,2,375\n",
    )
    .unwrap();
    let out = qwalk(&[
        "ingest",
        counts.to_str().unwrap(),
        "--poisson-errors",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let p_rows = csv_rows(&read(dir.path(), "ingest_p_exp.csv"));
    let cell = |x: &str, t: &str| -> f64 {
        p_rows
            .iter()
            .find(|r| r[0] == x && r[1] == t)
            .unwrap()[2]
            .parse()
            .unwrap()
    };
    assert!((cell("-2", "1") - 0.1).abs() < 1e-15);
    assert!((cell("-2", "2") - 0.05).abs() < 1e-15);
    let q_rows = csv_rows(&read(dir.path(), "ingest_q_exp.csv"));
    let q: f64 = q_rows.iter().find(|r| r[0] == "3").unwrap()[1].parse().unwrap();
    assert!((q - 0.5).abs() < 1e-15);

    let summary: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "ingest_summary.json")).unwrap();
    assert!((summary["results"]["detected_fraction"].as_f64().unwrap() - 0.25).abs() < 1e-12);
}

#[test]
fn seed_flag_changes_disorder_draws() {
    let run = |seed: &str, dir: &TempDir| {
        let out = qwalk(&[
            "disorder-scan",
            "--theta1-list",
            "1/8 pi",
            "--ensemble",
            "2",
            "--steps",
            "2",
            "--seed",
            seed,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        read(dir.path(), "disorder_scan_members.csv")
    };
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let c = TempDir::new().unwrap();
    let first = run("9", &a);
    assert_eq!(first, run("9", &b), "same seed must reproduce");
    assert_ne!(first, run("10", &c), "different seed must differ");
}

#[test]
fn env_var_provides_the_default_output_directory() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .args(["edge", "--format", "csv"])
        .env("QWALK_OUT", dir.path())
        .output()
        .expect("binary runs");
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("edge_q.csv").exists());
}
