use std::path::Path;
use std::process::{Command, Output};

fn paintwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_paintwalk")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = paintwalk(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn simulate_writes_reproducible_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let base = ["simulate", "--graph", "torus:d=3,n=4", "--runs", "200", "--seed", "5"];
    ok(&[&base[..], &["--workers", "1", "--out", a.path().to_str().unwrap()]].concat());
    ok(&[&base[..], &["--workers", "2", "--out", b.path().to_str().unwrap()]].concat());
    for f in ["runs.csv", "summary.json"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f}");
    }
    let csv = read(a.path(), "runs.csv");
    assert!(csv.starts_with("# {\"version\""));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 201);
    assert!(read(a.path(), "run.log").contains("workers=1"));
    let summary: serde_json::Value = serde_json::from_str(&read(a.path(), "summary.json")).unwrap();
    assert_eq!(summary["provenance"]["config"]["seed"], 5);
    assert_eq!(summary["runs_completed"], 200);
}

#[test]
fn single_run_gives_one_row() {
    let d = tempfile::tempdir().unwrap();
    ok(&["simulate", "--graph", "hypercube:n=3", "--runs", "1", "--out", d.path().to_str().unwrap()]);
    let csv = read(d.path(), "runs.csv");
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], "run_id,a1,a2,ties,wins1,wins2,b,cover_time,boundary_edges");
}

#[test]
fn exact_is_cached_and_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path().to_str().unwrap();
    let first = ok(&["exact", "--graph", "torus:d=3,n=4", "--out", dir]);
    let written = read(d.path(), "exact.json");
    let second = ok(&["exact", "--graph", "torus:d=3,n=4", "--out", dir]);
    assert_eq!(first, second);
    assert_eq!(written, read(d.path(), "exact.json"));
    let cached: Vec<_> = std::fs::read_dir(d.path().join("cache")).unwrap().collect();
    assert_eq!(cached.len(), 2);
    let v: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert!(v["t_mix"].as_u64().unwrap() > 0);
    let f = v["f_statistic"].as_f64().unwrap();
    assert_eq!(v["prediction"]["quarter_f"].as_f64().unwrap(), f / 4.0);
}

#[test]
fn compare_reads_stored_results() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path().to_str().unwrap();
    let missing = paintwalk(&["compare", "--out", dir]);
    assert_eq!(missing.status.code(), Some(2));
    ok(&["simulate", "--graph", "hypercube:n=6", "--runs", "400", "--out", dir]);
    ok(&["exact", "--graph", "hypercube:n=6", "--out", dir]);
    let text = ok(&["compare", "--out", dir]);
    assert!(text.contains("mc_variance_over_quarter_f"));
    assert!(text.contains("quarter_f_over_quarter_v"));
    assert!(d.path().join("compare.json").exists());
}

#[test]
fn explicit_graph_from_edge_list() {
    let d = tempfile::tempdir().unwrap();
    let path = d.path().join("c5.txt");
    std::fs::write(&path, "0 1\n1 2\n2 3\n3 4\n4 0\n").unwrap();
    let spec = format!("explicit:path={}", path.display());
    let out = ok(&["simulate", "--graph", &spec, "--runs", "50"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["vertex_count"], 5);
    let bad = d.path().join("bad.txt");
    std::fs::write(&bad, "0 1\n2 3\n").unwrap();
    let out = paintwalk(&["simulate", "--graph", &format!("explicit:path={}", bad.display())]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(paintwalk(&["simulate", "--graph", "torus:d=3"]).status.code(), Some(2));
    assert_eq!(paintwalk(&["simulate", "--graph", "hypercube:n=4", "--laziness", "1.5"]).status.code(), Some(2));
    assert_eq!(paintwalk(&["exact", "--graph", "hypercube:n=17"]).status.code(), Some(3));
    assert_eq!(paintwalk(&["simulate", "--graph", "hypercube:n=30"]).status.code(), Some(3));
    assert_eq!(paintwalk(&["constants", "--d", "2"]).status.code(), Some(2));
}

#[test]
fn constants_and_diagnostics() {
    let v: serde_json::Value = serde_json::from_str(&ok(&["constants", "--d", "5", "--radius", "8"])).unwrap();
    assert!(v["value"].as_f64().unwrap() > 1.0);
    assert_eq!(v["parameters"]["radius"], 8.0);
    let v: serde_json::Value = serde_json::from_str(&ok(&["assumptions", "--graph", "hypercube:n=6"])).unwrap();
    let r3 = v["report"]["r3"].as_f64().unwrap();
    assert!(r3 > 0.0 && r3 < 1.0);
    let d = tempfile::tempdir().unwrap();
    let line = ok(&["qq", "--graph", "hypercube:n=5", "--runs", "200", "--out", d.path().to_str().unwrap()]);
    assert!(line.contains("correlation="));
    assert_eq!(read(d.path(), "qq.csv").lines().count(), 201);
    let eq = ok(&["equivalence", "--graph", "hypercube:n=4", "--runs", "300"]);
    assert!(eq.contains("\"ks\""));
}
