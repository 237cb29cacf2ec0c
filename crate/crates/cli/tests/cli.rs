use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn cslp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cslp")).args(args).output().unwrap()
}

fn inputs() -> Vec<String> {
    let f = fixtures();
    ["instance", "paths", "scenarios"]
        .iter()
        .flat_map(|k| [format!("--{k}"), f.join(format!("{k}.json")).display().to_string()])
        .collect()
}

fn run_in(dir: &Path, cmd: &[&str], extra: &[&str]) -> Output {
    let mut args: Vec<String> = vec!["--quiet".into(), "--out-dir".into(), dir.display().to_string()];
    args.extend(cmd.iter().map(|s| s.to_string()));
    args.extend(inputs());
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    cslp(&refs)
}

fn json(p: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn bundled_instance_solves_to_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["solve", "--method", "lshaped"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sol = json(&dir.path().join("solution.json"));
    assert!(sol["gap"].as_f64().unwrap() <= 1e-3);
    assert_eq!(sol["scenarios"].as_array().unwrap().len(), 10);

    let mono = run_in(dir.path(), &["solve", "--method", "monolith"], &["--out", "mono.json", "--log", "mono.csv"]);
    assert!(mono.status.success());
    let m = json(&dir.path().join("mono.json"));
    let (a, b) = (sol["objective"].as_f64().unwrap(), m["objective"].as_f64().unwrap());
    assert!((a - b).abs() <= 1e-3 * (1.0 + b.abs()), "{a} vs {b}");

    let log = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert!(log.starts_with("time,LB,UB,gap,nodes,cuts_linear,cuts_integer"));
}

#[test]
fn manifest_records_runs_and_digests() {
    let dir = tempfile::tempdir().unwrap();
    assert!(run_in(dir.path(), &["solve"], &[]).status.success());
    assert!(run_in(dir.path(), &["vss"], &[]).status.success());
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(entries.iter().filter(|n| n.to_string_lossy().contains("manifest")).count(), 1);
    let m = json(&dir.path().join("manifest.json"));
    let solve = &m["runs"]["solve"];
    assert!(m["runs"]["vss"].is_object());
    let inst = fixtures().join("instance.json");
    let digest = {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(std::fs::read(&inst).unwrap()))
    };
    assert_eq!(solve["inputs"][inst.display().to_string()], digest);
    assert!(solve["wall_s"]["total"].as_f64().is_some());
    assert_eq!(solve["seed"], 1);
}

#[test]
fn reruns_give_identical_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for (d, t) in [(&a, "1"), (&b, "3")] {
        assert!(run_in(d.path(), &["--threads", t, "solve"], &[]).status.success());
        assert!(run_in(d.path(), &["--threads", t, "report"], &["--solution", &d.path().join("solution.json").display().to_string()]).status.success());
    }
    for f in ["solution.json", "report.json", "report.md"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn analysis_outputs_have_expected_columns() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(run_in(d, &["solve"], &[]).status.success());
    let sol = d.join("solution.json").display().to_string();
    assert!(run_in(d, &["--svg", "sweep"], &["--deltas", "-5,0,5,inf"]).status.success());
    assert!(run_in(d, &["detours"], &["--solution", &sol]).status.success());
    assert!(run_in(d, &["co2"], &["--solution", &sol]).status.success());
    let sweep = std::fs::read_to_string(d.join("sweep.csv")).unwrap();
    assert!(sweep.starts_with("delta,budget,D,share,stations,chargers,gap,elasticity,status"));
    assert_eq!(sweep.lines().count(), 5);
    assert!(std::fs::read_to_string(d.join("sweep.svg")).unwrap().starts_with("<svg"));
    assert!(std::fs::read_to_string(d.join("detour.csv")).unwrap().starts_with("bucket_lo,bucket_hi,flow"));
    let co2 = std::fs::read_to_string(d.join("co2.csv")).unwrap();
    assert!(co2.starts_with("period,electric,diesel,baseline,ratio"));
    assert!(co2.lines().last().unwrap().starts_with("total,"));
}

#[test]
fn pipeline_from_seed_is_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = fixtures().join("small.toml").display().to_string();
    for d in [&a, &b] {
        let p = d.path().display().to_string();
        let inst = d.path().join("instance.json").display().to_string();
        for args in [vec!["synth"], vec!["paths", "--instance", &inst], vec!["scenarios", "--instance", &inst]] {
            let mut full = vec!["--quiet", "--config", &cfg, "--out-dir", &p];
            full.extend(args);
            assert!(cslp(&full).status.success());
        }
    }
    for f in ["instance.json", "paths.json", "scenarios.json"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
        assert_eq!(x, std::fs::read(fixtures().join(f)).unwrap(), "bundled {f} is stale");
    }
}

#[test]
fn failures_have_distinct_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().display().to_string();

    let unknown = cslp(&["--bogus", "validate"]);
    assert_eq!(unknown.status.code(), Some(2));

    let missing = cslp(&["--out-dir", &d, "validate", "--instance", "/nonexistent/instance.json"]);
    assert_eq!(missing.status.code(), Some(3));

    let mut inst = json(&fixtures().join("instance.json"));
    inst["horizon"]["carryover"] = serde_json::json!(2.0);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, inst.to_string()).unwrap();
    let invalid = cslp(&["--out-dir", &d, "validate", "--instance", &bad.display().to_string()]);
    assert_eq!(invalid.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&invalid.stderr).contains("carry-over factor"));

    std::fs::write(&bad, "{ not json").unwrap();
    assert_eq!(cslp(&["--out-dir", &d, "validate", "--instance", &bad.display().to_string()]).status.code(), Some(4));

    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[solver]\nbackend = \"cplex\"\n").unwrap();
    assert_eq!(cslp(&["--config", &cfg.display().to_string(), "--out-dir", &d, "synth"]).status.code(), Some(2));
}

#[test]
fn validate_accepts_bundled_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["validate"], &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
