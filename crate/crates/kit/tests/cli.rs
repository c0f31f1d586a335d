use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use carnot_core::catalog;
use carnot_core::group::CarnotGroup;

fn kit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carnot-kit")).args(args).output().unwrap()
}

fn kit_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carnot-kit")).args(args).env("CARNOT_KIT_THREADS", threads).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn group_axioms_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = kit(&["run", "--group", "heisenberg1", "--suite", "group-axioms", "--seed", "7", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("PASS associativity"));
    let csv = fs::read_to_string(out.join("associativity.csv")).unwrap();
    assert!(csv.starts_with("# ") && csv.contains("seed=7"));
    let s = summary(&out);
    assert_eq!(s["seed"], 7);
    assert_eq!(s["pass"], true);
    assert!(out.join("group.json").exists());
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 7);
}

#[test]
fn nothing_written_without_out() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_carnot-kit"))
        .args(["run", "--group", "euclidean1", "--suite", "group-axioms", "--samples", "100"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn usage_errors_exit_two() {
    let o = kit(&["run", "--group", "bogus", "--suite", "group-axioms"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"));
    let o = kit(&["run", "--group", "heisenberg1", "--suite", "bogus"]);
    assert_eq!(o.status.code(), Some(2));
    let o = kit(&["run", "--group", "heisenberg1", "--suite", "group-axioms", "--params", "nonsense=1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nonsense"));
    let o = kit(&["run", "--group", "heisenberg1", "--suite", "group-axioms", "--params", "noequals"]);
    assert_eq!(o.status.code(), Some(2));
    let o = kit(&["run", "--group", "euclidean1", "--suite", "drift"]);
    assert_eq!(o.status.code(), Some(2));
    let o = kit_env(&["run", "--group", "euclidean1", "--suite", "group-axioms"], "zero");
    assert_eq!(o.status.code(), Some(2));
    let o = kit(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spec_file_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    fs::write(&path, r#"{"name": "mine", "strata": [2, 1], "brackets": [[1, 2, 3, 2.0]]}"#).unwrap();
    let o = kit(&["run", "--spec", path.to_str().unwrap(), "--suite", "group-axioms", "--samples", "500"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    fs::write(&path, r#"{"name": "broken", "strata": [2, 1], "brackets": [[1, 2, 1, 1.0]]}"#).unwrap();
    let o = kit(&["run", "--spec", path.to_str().unwrap(), "--suite", "group-axioms"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn list_reports_homogeneous_dimension() {
    let o = kit(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("heisenberg1 Q=4"));
    assert!(text.contains("euclidean3 Q=3"));
    for line in text.lines() {
        let (name, q) = line.split_once(" Q=").unwrap();
        let g = CarnotGroup::new(catalog::by_name(name).unwrap()).unwrap();
        assert_eq!(q.parse::<usize>().unwrap(), g.homogeneous_dimension(), "{name}");
    }
}

fn run_to(dir: &Path, name: &str, threads: &str, args: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut full = args.to_vec();
    full.extend(["--out", out.to_str().unwrap()]);
    let o = kit_env(&full, threads);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    out
}

#[test]
fn outputs_are_deterministic_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["run", "--group", "engel", "--suite", "decompose-roundtrip", "--seed", "5", "--samples", "200"];
    let a = run_to(dir.path(), "a", "1", &args);
    let b = run_to(dir.path(), "b", "4", &args);
    let c = run_to(dir.path(), "c", "4", &args);
    for file in ["summary.json", "roundtrip.csv", "words.json"] {
        let x = fs::read(a.join(file)).unwrap();
        assert_eq!(x, fs::read(b.join(file)).unwrap(), "{file}");
        assert_eq!(x, fs::read(c.join(file)).unwrap(), "{file}");
    }
    let other = run_to(dir.path(), "d", "2", &["run", "--group", "engel", "--suite", "decompose-roundtrip", "--seed", "6", "--samples", "200"]);
    assert_ne!(fs::read(a.join("roundtrip.csv")).unwrap(), fs::read(other.join("roundtrip.csv")).unwrap());
}

#[test]
fn failing_check_exits_one() {
    let o = kit(&["run", "--group", "euclidean1", "--suite", "tiling-verify", "--depth", "8", "--params", "lambda=0.9"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL lambda"));
    assert!(stderr(&o).contains("lambda"));
}

#[test]
fn drift_writes_fragments() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("drift");
    let o = kit(&["run", "--group", "heisenberg1", "--suite", "drift", "--samples", "401", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(out.join("drift.csv").exists());
    let svg = fs::read_to_string(out.join("fragment.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<!--"));
    let frag = carnot_kit::formats::FragmentCsv::load(&out.join("fragment_sigma_0.1.csv")).unwrap();
    assert!(!frag.times.is_empty() && frag.times.len() <= 401);
    assert!(frag.times.windows(2).all(|w| w[0] < w[1]));
    assert!(frag.points.iter().all(|p| p.len() == 3));
}
