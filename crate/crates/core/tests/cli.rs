use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use evohom::cli::output::format_significant;
use evohom::cli::read_barcodes;
use evohom::metrics::{distance, distance_to_empty, PNorm};
use serde_json::Value;

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(rel)
}

fn evohom(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evohom"))
        .args(args)
        .env_remove("EVOHOM_BUDGET")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().find(|l| l.starts_with('{')).expect("json error line");
    serde_json::from_str(line).unwrap()
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

/// The first `n` residues of a PDB file as a new file.
fn pdb_prefix(name: &str, n: usize, target: &Path) {
    let text = fs::read_to_string(data(&format!("pdb/{name}"))).unwrap();
    let mut seen = 0;
    let mut out = String::new();
    for line in text.lines() {
        if line.starts_with("ATOM") && line.get(12..16).map(str::trim) == Some("CA") {
            seen += 1;
            if seen > n {
                break;
            }
            out.push_str(line);
            out.push('\n');
        }
    }
    out.push_str("END\n");
    fs::write(target, out).unwrap();
}

#[test]
fn eh_writes_one_bundle_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let hex = data("points/hexagon.txt");
    ok(&evohom(&["eh", "--out", s(&out), s(&hex)]));
    let files = read_dir_sorted(&out);
    let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
    let mut expected: Vec<String> = (0..6).map(|i| format!("hexagon.node{i}.json")).collect();
    expected.push("hexagon.features.csv".into());
    expected.sort();
    assert_eq!(names, expected);

    let csv = fs::read_to_string(out.join("hexagon.features.csv")).unwrap();
    let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 7);
    assert!(body[0].starts_with("protein,chain,residue,EH_inf_0"));

    let bundle: Value = serde_json::from_slice(&fs::read(out.join("hexagon.node1.json")).unwrap()).unwrap();
    assert_eq!(bundle["node"], 1);
    let dims: Vec<u64> = bundle["barcodes"].as_array().unwrap().iter().map(|b| b["dim"].as_u64().unwrap()).collect();
    assert_eq!(dims, vec![0, 1, 2]);
    assert!(bundle["t_sync"].as_f64().unwrap() > 0.0);
    assert_eq!(bundle["affected_count"].as_u64().unwrap() as usize, bundle["affected"].as_array().unwrap().len());
    assert_eq!(bundle["features"].as_object().unwrap().len(), 9);
    assert_eq!(bundle["provenance"]["tool"], "evohom");
}

#[test]
fn single_node_and_max_dim() {
    let dir = tempfile::tempdir().unwrap();
    let hex = data("points/hexagon.txt");
    ok(&evohom(&["eh", "--node", "2", "--max-dim", "1", "--out", s(dir.path()), s(&hex)]));
    let bundle: Value = serde_json::from_slice(&fs::read(dir.path().join("hexagon.node2.json")).unwrap()).unwrap();
    assert_eq!(bundle["barcodes"].as_array().unwrap().len(), 2);
    assert!(!dir.path().join("hexagon.node0.json").exists());
}

#[test]
fn missing_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let r = evohom(&["eh", "--out", s(&out), s(&dir.path().join("absent.txt"))]);
    assert_eq!(r.status.code(), Some(2));
    assert_eq!(stderr_json(&r)["error"]["kind"], "input");
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(evohom(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(evohom(&[]).status.code(), Some(1));
    assert_eq!(evohom(&["--version"]).status.code(), Some(0));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "[filtration]\neps_p = -1\n").unwrap();
    let r = evohom(&["eh", "--config", s(&cfg), s(&data("points/hexagon.txt"))]);
    assert_eq!(r.status.code(), Some(1));
    assert_eq!(stderr_json(&r)["error"]["kind"], "usage");
}

#[test]
fn budget_override_exits_four() {
    let dir = tempfile::tempdir().unwrap();
    let r = Command::new(env!("CARGO_BIN_EXE_evohom"))
        .args(["eh", "--node", "0", "--out", s(dir.path()), s(&data("points/hexagon.txt"))])
        .env("EVOHOM_BUDGET", "1")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(4));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn distance_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let hex = data("points/hexagon.txt");
    ok(&evohom(&["eh", "--out", s(dir.path()), s(&hex)]));
    let a = dir.path().join("hexagon.node0.json");
    let b = dir.path().join("hexagon.node3.json");

    let same = evohom(&["distance", "--p", "1", s(&a), s(&a)]);
    ok(&same);
    assert_eq!(String::from_utf8_lossy(&same.stdout).lines().collect::<Vec<_>>(), vec!["H0 0", "H1 0", "H2 0"]);

    let (ba, bb) = (read_barcodes(&a).unwrap(), read_barcodes(&b).unwrap());
    for (flag, p) in [("2", PNorm::Finite(2.0)), ("inf", PNorm::Infinity)] {
        let r = evohom(&["distance", "--p", flag, "--dim", "0", s(&a), s(&b)]);
        ok(&r);
        let expected = format_significant(distance(&ba[0].bars, &bb[0].bars, p).unwrap(), 12);
        assert_eq!(String::from_utf8_lossy(&r.stdout).trim(), expected);
    }

    let empty = dir.path().join("empty.json");
    fs::write(&empty, r#"[{"dim":0,"bars":[]},{"dim":1,"bars":[]},{"dim":2,"bars":[]}]"#).unwrap();
    let r = evohom(&["distance", "--p", "1", "--dim", "0", s(&a), s(&empty)]);
    ok(&r);
    let expected = format_significant(distance_to_empty(&ba[0].bars, PNorm::Finite(1.0)).unwrap(), 12);
    assert_eq!(String::from_utf8_lossy(&r.stdout).trim(), expected);

    let one_dim = dir.path().join("one.json");
    fs::write(&one_dim, r#"{"dim":0,"bars":[]}"#).unwrap();
    assert_eq!(evohom(&["distance", s(&a), s(&one_dim)]).status.code(), Some(2));
}

#[test]
fn outputs_do_not_depend_on_workers_or_repetition() {
    let dir = tempfile::tempdir().unwrap();
    let hex = data("points/hexagon.txt");
    let run = |name: &str, workers: &str| {
        let out = dir.path().join(name);
        ok(&evohom(&["eh", "--workers", workers, "--out", s(&out), s(&hex)]));
        read_dir_sorted(&out)
    };
    let one = run("w1", "1");
    assert_eq!(one, run("w4", "4"));
    assert_eq!(one, run("again", "1"));
}

#[test]
fn bfactor_aggregates_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("crnA.pdb");
    let b = dir.path().join("crnB.pdb");
    pdb_prefix("1crn.pdb", 20, &a);
    pdb_prefix("1crn.pdb", 30, &b);

    let single = dir.path().join("single");
    ok(&evohom(&["bfactor", "--out", s(&single), s(&a)]));
    let report: Value = serde_json::from_slice(&fs::read(single.join("crnA.report.json")).unwrap()).unwrap();
    let summary: Value = serde_json::from_slice(&fs::read(single.join("bfactor_summary.json")).unwrap()).unwrap();
    let mean = |v: &Value, key: &str| -> Value {
        v["mean"].as_array().unwrap().iter().find(|e| e[0] == key).unwrap()[1].clone()
    };
    assert_eq!(mean(&summary, "EH"), report["report"]["regression"]);
    assert_eq!(report["report"]["residues"], 20);
    assert!(single.join("crnA.features.csv").exists());

    let both = dir.path().join("both");
    ok(&evohom(&["bfactor", "--out", s(&both), s(&a), s(&b)]));
    let ra: Value = serde_json::from_slice(&fs::read(both.join("crnA.report.json")).unwrap()).unwrap();
    let rb: Value = serde_json::from_slice(&fs::read(both.join("crnB.report.json")).unwrap()).unwrap();
    let summary: Value = serde_json::from_slice(&fs::read(both.join("bfactor_summary.json")).unwrap()).unwrap();
    let avg = (ra["report"]["regression"].as_f64().unwrap() + rb["report"]["regression"].as_f64().unwrap()) / 2.0;
    assert!((mean(&summary, "EH").as_f64().unwrap() - avg).abs() <= 1e-15);
    let csv = fs::read_to_string(both.join("bfactor_summary.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[3].starts_with("mean,50,"));
}

#[test]
fn bfactor_failure_keeps_earlier_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("crnA.pdb");
    pdb_prefix("1crn.pdb", 16, &a);
    let broken = dir.path().join("broken.pdb");
    fs::write(&broken, "HEADER nothing here\nEND\n").unwrap();
    let out = dir.path().join("out");
    let r = evohom(&["bfactor", "--out", s(&out), s(&a), s(&broken)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(out.join("crnA.report.json").exists());
    let summary: Value = serde_json::from_slice(&fs::read(out.join("bfactor_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["proteins"], serde_json::json!(["crnA"]));
    assert_eq!(summary["failures"].as_array().unwrap().len(), 1);
}

#[test]
fn zero_bfactors_exit_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let nmr = dir.path().join("nmr.pdb");
    pdb_prefix("1nmr_models1-3.pdb", 10, &nmr);
    let r = evohom(&["bfactor", "--out", s(dir.path()), s(&nmr)]);
    assert_eq!(r.status.code(), Some(3));
    let err = stderr_json(&r);
    assert_eq!(err["error"]["kind"], "numerical");
    assert_eq!(err["error"]["protein"], "nmr");
}

#[test]
fn simulate_writes_a_trajectory_table() {
    let dir = tempfile::tempdir().unwrap();
    ok(&evohom(&["simulate", "--node", "4", "--out", s(dir.path()), s(&data("points/hexagon.txt"))]));
    let csv = fs::read_to_string(dir.path().join("hexagon.node4.trajectory.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,node0,node1,node2,node3,node4,node5");
    assert_eq!(rows[1].split(',').next(), Some("0"));
    assert!(rows.len() > 100);
    assert!(rows[1..].iter().all(|r| r.split(',').count() == 7));
}

#[test]
fn selftest_passes() {
    let r = evohom(&["selftest"]);
    ok(&r);
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.lines().count() >= 7);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
