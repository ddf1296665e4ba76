use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn stash(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stash"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let o = stash(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

/// One primitive per line, 5 s apart.
fn write_seq(path: &Path, word: &str) {
    let text: String = word.chars().enumerate().map(|(i, c)| format!("{c},{}\n", i as i64 * 5_000_000_000)).collect();
    fs::write(path, text).unwrap();
}

#[test]
fn compare_prints_integer_score() {
    let d = TempDir::new().unwrap();
    write_seq(&d.path().join("a.seq"), "MMLMM");
    write_seq(&d.path().join("b.seq"), "MMRMM");
    // Four matches and one mismatch beat any gapped alignment: 4 - 2 = 2.
    assert_eq!(ok(d.path(), &["compare", "a.seq", "b.seq"]).trim(), "2");
    // S is dropped first, leaving MMMLMM: five matches and one gap.
    write_seq(&d.path().join("c.seq"), "MSSMMLSMM");
    assert_eq!(ok(d.path(), &["compare", "a.seq", "c.seq"]).trim(), "4");
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    assert_eq!(stash(d.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(stash(d.path(), &["compare", "only-one.seq"]).status.code(), Some(2));
    assert_eq!(stash(d.path(), &["simulate", "--scenario", "teleport"]).status.code(), Some(2));
    let missing = stash(d.path(), &["compare", "x.seq", "y.seq"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("x.seq"));
    fs::write(d.path().join("bad.seq"), "Q,0\n").unwrap();
    assert_eq!(stash(d.path(), &["seq", "strip", "bad.seq"]).status.code(), Some(1));
    assert_eq!(stash(d.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn relay_scenario_is_refused() {
    let d = TempDir::new().unwrap();
    let out = ok(d.path(), &["simulate", "--scenario", "relay", "--latency-ms", "1"]);
    let outcome = out.lines().last().unwrap();
    assert!(outcome == "outcome Rejected" || outcome == "outcome FallbackToExplicit", "{out}");
    assert!(!out.lines().any(|l| l.trim_start().starts_with("prover -> Response")), "{out}");
    assert!(out.contains("verifier did not accept"));

    let open = ok(d.path(), &["simulate", "--scenario", "relay-nogate", "--latency-ms", "1"]);
    assert!(open.ends_with("outcome Accepted\n"), "{open}");
    assert!(open.lines().any(|l| l.trim_start().starts_with("prover -> Response")));
}

#[test]
fn benign_scenario_over_tcp() {
    let d = TempDir::new().unwrap();
    let out = ok(d.path(), &["simulate", "--scenario", "benign", "--transport", "tcp", "--seed", "7"]);
    assert!(out.ends_with("outcome Accepted\n"), "{out}");
    assert!(!out.contains("relay forwarded"));
}

#[test]
fn seq_operations() {
    let d = TempDir::new().unwrap();
    write_seq(&d.path().join("s.seq"), "MSMSLLS");
    assert_eq!(ok(d.path(), &["seq", "strip", "s.seq"]), "M,0\nM,10000000000\nL,20000000000\nL,25000000000\n");
    // Last primitive at 30 s; a 10 s window keeps 20 s through 30 s inclusive.
    assert_eq!(ok(d.path(), &["seq", "trim", "s.seq", "--seconds", "10"]), "L,20000000000\nL,25000000000\nS,30000000000\n");
    assert_eq!(stash(d.path(), &["seq", "trim", "s.seq", "--seconds", "0"]).status.code(), Some(1));

    write_seq(&d.path().join("blocks.seq"), "MMMS");
    let turn = r#"{"t_begin_ns":6000000000,"t_end_ns":9000000000,"angle_deg":31.0,"direction":"Right","count":2}"#;
    fs::write(d.path().join("turns.jsonl"), format!("{turn}\n")).unwrap();
    let merged = ok(d.path(), &["seq", "merge", "blocks.seq", "turns.jsonl"]);
    assert_eq!(merged, "M,0\nR,6000000000\nR,6000000000\nM,10000000000\nS,15000000000\n");
}

#[test]
fn synth_is_reproducible() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["synth", "--routes", "3", "--instances", "3", "--seed", "5", "--out", "a"]);
    ok(d.path(), &["synth", "--routes", "3", "--instances", "3", "--seed", "5", "--out", "b"]);
    ok(d.path(), &["synth", "--routes", "3", "--instances", "3", "--seed", "6", "--out", "c"]);
    let a = fs::read(d.path().join("a/corpus.json")).unwrap();
    assert_eq!(a, fs::read(d.path().join("b/corpus.json")).unwrap());
    assert_ne!(a, fs::read(d.path().join("c/corpus.json")).unwrap());
    assert_eq!(stash(d.path(), &["synth", "--routes", "3"]).status.code(), Some(1));
}

#[test]
fn enroll_show_verify() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    let route = "MMMMRRRRRRMMMMMMLLLLLLMMMMMMRRRMMMMMM";
    write_seq(&p.join("route.seq"), route);
    write_seq(&p.join("idle.seq"), &"S".repeat(40));
    assert!(ok(p, &["enroll", "--repo", "repo.json", "--verifier", "door", "route.seq", "--length-min", "3"]).contains("path 0"));
    let shown = ok(p, &["repo", "show", "--repo", "repo.json"]);
    assert!(shown.starts_with("door\tpath 0\tL=3 min\tn=1"), "{shown}");
    assert!(shown.trim_end().ends_with(route), "{shown}");

    assert!(ok(p, &["verify", "--repo", "repo.json", "--verifier", "door", "route.seq"]).starts_with("PASS after 1 attempt"));
    let idle = ok(p, &["verify", "--repo", "repo.json", "--verifier", "door", "idle.seq"]);
    assert!(idle.starts_with("FAIL after 10 attempt"), "{idle}");
    assert_eq!(stash(p, &["verify", "--repo", "repo.json", "--verifier", "gate", "route.seq"]).status.code(), Some(1));

    ok(p, &["verify", "--repo", "repo.json", "--verifier", "door", "route.seq", "--confirm", "--length-min", "3"]);
    let shown = ok(p, &["repo", "show", "--repo", "repo.json"]);
    assert_eq!(shown.lines().count(), 1, "{shown}");
    assert!(shown.contains("n=2"), "{shown}");
}

#[test]
fn config_round_trip_and_rejection() {
    let d = TempDir::new().unwrap();
    let text = ok(d.path(), &["config"]);
    fs::write(d.path().join("c.toml"), &text).unwrap();
    assert_eq!(ok(d.path(), &["--config", "c.toml", "config"]), text);
    fs::write(d.path().join("bad.toml"), "length_min = 2.0\nbogus = 1\n").unwrap();
    assert_eq!(stash(d.path(), &["--config", "bad.toml", "config"]).status.code(), Some(1));

    // Scoring overrides reach `compare`.
    fs::write(d.path().join("s.toml"), "[scoring]\nmatch = 3\nmismatch = -2\ngap = -1\n").unwrap();
    write_seq(&d.path().join("a.seq"), "MLM");
    assert_eq!(ok(d.path(), &["--config", "s.toml", "compare", "a.seq", "a.seq"]).trim(), "9");
}

#[test]
fn keys_file_has_one_line_per_verifier() {
    let d = TempDir::new().unwrap();
    let text = ok(d.path(), &["keys", "--verifier", "door", "--verifier", "car", "--seed", "9"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    for l in lines {
        let (id, hex) = l.split_once(' ').unwrap();
        assert!(id == "door" || id == "car");
        assert_eq!(hex.trim().len(), 64);
        assert!(hex.trim().chars().all(|c| c.is_ascii_hexdigit()));
    }
    assert_eq!(text, ok(d.path(), &["keys", "--verifier", "door", "--verifier", "car", "--seed", "9"]));
}

#[test]
fn eval_writes_report_and_summary() {
    let d = TempDir::new().unwrap();
    ok(d.path(), &["synth", "--routes", "5", "--instances", "4", "--seed", "2", "--out", "corpus"]);
    let table = ok(d.path(), &["eval", "--corpus", "corpus", "--sweep", "alpha", "--out", "report.csv"]);
    assert_eq!(table.lines().count(), 1 + 9);
    let report = fs::read_to_string(d.path().join("report.csv")).unwrap();
    assert!(report.starts_with("axis,length_min,n_instances,alpha,scheme,route,"));
    assert_eq!(report.lines().count(), 1 + 9 * 5);
    let summary = fs::read_to_string(d.path().join("report_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 9);
    assert_eq!(stash(d.path(), &["eval", "--corpus", "corpus", "--sweep", "sideways"]).status.code(), Some(2));
}

#[test]
fn recording_to_primitives() {
    let d = TempDir::new().unwrap();
    let p = d.path();
    ok(p, &["ride", "--minutes", "3", "--seed", "11", "--truth", "truth.seq", "--out", "ride.csv"]);
    ok(p, &["ingest", "ride.csv", "--rate", "20", "--out", "ride20.jsonl"]);
    let resampled = fs::read_to_string(p.join("ride20.jsonl")).unwrap();
    let t: Vec<i64> = resampled
        .lines()
        .take(3)
        .map(|l| t_ns_of(l))
        .collect();
    assert_eq!(t, vec![0, 50_000_000, 100_000_000]);

    ok(p, &["train", "--seed", "1", "--out", "model.json"]);
    let seq = ok(p, &["primitives", "ride20.jsonl", "--model", "model.json"]);
    fs::write(p.join("got.seq"), &seq).unwrap();
    let truth = fs::read_to_string(p.join("truth.seq")).unwrap();
    let len = truth.lines().filter(|l| !l.starts_with('S')).count() as i32;
    let score: i32 = ok(p, &["compare", "truth.seq", "got.seq"]).trim().parse().unwrap();
    assert!(score >= len - 6, "score {score} for {len} primitives");

    let turns = ok(p, &["turns", "ride.csv"]);
    assert!(turns.lines().all(|l| l.starts_with("{\"t_begin_ns\":")));
    let labels = ok(p, &["classify", "ride.csv", "--model", "model.json"]);
    assert!(labels.lines().count() >= 170);
}

fn t_ns_of(line: &str) -> i64 {
    let rest = line.split("\"t_ns\":").nth(1).unwrap();
    rest.split(|c: char| c == ',' || c == '}').next().unwrap().parse().unwrap()
}
