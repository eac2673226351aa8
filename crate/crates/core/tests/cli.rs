use std::path::Path;
use std::process::Command;

use hampack::report::{parse_report, Outcome};

fn hampack(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_hampack"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn pack_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    let report = dir.path().join("r.json");
    let (code, _) = hampack(&[
        "pack",
        "--n",
        "200",
        "--p",
        "0.1",
        "--seed",
        "3",
        "--graph-out",
        s(&graph),
        "--out",
        s(&report),
    ]);
    let r = parse_report(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(code, r.outcome.exit_code());
    assert_eq!(r.seed, 3);
    let (code, stdout) = hampack(&["verify", "--graph", s(&graph), "--report", s(&report)]);
    assert_eq!(code, 0, "{stdout}");

    // Same inputs, same bytes.
    let again = dir.path().join("r2.json");
    hampack(&[
        "pack",
        "--n",
        "200",
        "--p",
        "0.1",
        "--seed",
        "3",
        "--out",
        s(&again),
    ]);
    assert_eq!(
        std::fs::read(&report).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn verify_rejects_tampered_report() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    let report = dir.path().join("r.json");
    hampack(&["generate", "--n", "6", "--p", "1", "--out", s(&graph)]);
    let (code, _) = hampack(&[
        "pack",
        "--graph",
        s(&graph),
        "--p",
        "1",
        "--out",
        s(&report),
    ]);
    assert_eq!(code, 0);
    let mut r = parse_report(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r.outcome, Outcome::Full);
    r.cycles[1] = r.cycles[0].clone();
    std::fs::write(&report, serde_json::to_vec(&r).unwrap()).unwrap();
    let (code, stdout) = hampack(&["verify", "--graph", s(&graph), "--report", s(&report)]);
    assert_eq!(code, 3);
    assert!(stdout.contains("SharedEdge"), "{stdout}");
}

#[test]
fn config_file_and_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "alpha = 0.4\nlevel2_starts = 2\n").unwrap();
    let report = dir.path().join("r.json");
    hampack(&[
        "pack",
        "--n",
        "64",
        "--p",
        "0.3",
        "--config",
        s(&cfg),
        "--out",
        s(&report),
    ]);
    let r = parse_report(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(r.config.alpha, 0.4);
    assert_eq!(r.config.level2_starts, 2);

    std::fs::write(&cfg, "alpha = 2.0\n").unwrap();
    assert_eq!(
        hampack(&["pack", "--n", "64", "--p", "0.3", "--config", s(&cfg)]).0,
        1
    );
    std::fs::write(&cfg, "unknown = 1\n").unwrap();
    assert_eq!(
        hampack(&["pack", "--n", "64", "--p", "0.3", "--config", s(&cfg)]).0,
        1
    );
    assert_eq!(hampack(&["pack", "--p", "0.3"]).0, 1);
    assert_eq!(hampack(&["pack", "--n", "10", "--p", "1.5"]).0, 1);
    assert_eq!(hampack(&["frobnicate"]).0, 1);
}

#[test]
fn experiment_writes_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("agg.json");
    let (code, _) = hampack(&[
        "experiment",
        "--grid",
        "120:3logn,80:0.2",
        "--trials",
        "3",
        "--seed",
        "1",
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 2);
    assert_eq!(v["points"][0]["records"].as_array().unwrap().len(), 3);
}
