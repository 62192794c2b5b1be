use std::process::{Command, Output};

fn tabchoice(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tabchoice"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn hash_prints_hex_pairs() {
    let o = tabchoice(&[
        "hash",
        "--c",
        "2",
        "--q",
        "8",
        "--r",
        "16",
        "--seed",
        "7",
        "--keys",
        "0,0x102, 3",
    ]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0x102,0x"));
    let again = tabchoice(&["hash", "--seed", "7", "--r", "16", "--keys", "0 0x102 3"]);
    assert_eq!(stdout(&again), out);
}

#[test]
fn hash_rejects_out_of_range_key() {
    let o = tabchoice(&["hash", "--c", "1", "--q", "4", "--keys", "16"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_reports_count_and_bound() {
    let o = tabchoice(&["oracle", "--c", "2", "--q", "2", "zero-sum", "--t", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("count=1600 bound=2304"));
}

#[test]
fn simulate_writes_records_csv_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.jsonl");
    let csv = dir.path().join("summary.csv");
    let trace = dir.path().join("trace.jsonl");
    let o = tabchoice(&[
        "simulate",
        "--n",
        "256",
        "--m",
        "256",
        "--trials",
        "3",
        "--checks",
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--trace-out",
        trace.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let records = std::fs::read_to_string(&out).unwrap();
    assert_eq!(records.lines().count(), 3);
    for line in records.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["scheme"], "tabulation");
        assert_eq!(v["checks"]["lemma32"], true);
        assert_eq!(v["checks"]["obs41"], true);
        assert_eq!(v["ms"], 0);
    }
    let summary = std::fs::read_to_string(&csv).unwrap();
    assert!(summary.starts_with(
        "scheme,n,m,trials,mean_max,median_max,min_max,max_max,double_cycle_frac,violations"
    ));

    let a = tabchoice(&[
        "analyze",
        "--trace",
        trace.to_str().unwrap(),
        "--check-lemmas",
    ]);
    assert!(a.status.success());
    let text = stdout(&a);
    assert_eq!(text.matches("lemma32 pass").count(), 3);
    assert_eq!(text.matches("obs41 pass").count(), 3);
}

#[test]
fn adversary_tags_records() {
    let o = tabchoice(&[
        "adversary",
        "--n-bins",
        "1024",
        "--k",
        "2",
        "--rigged",
        "--trials",
        "2",
    ]);
    assert!(o.status.success());
    for line in stdout(&o).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["rigged"], true);
        assert_eq!(v["scheme"], "rigged-tabulation");
    }
}

#[test]
fn error_exit_codes() {
    assert_eq!(
        tabchoice(&["simulate", "--n", "100"]).status.code(),
        Some(2)
    );
    assert_eq!(
        tabchoice(&["simulate", "--n", "64", "--scheme", "cubic"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        tabchoice(&["analyze", "--trace", "/nonexistent/trace.jsonl"])
            .status
            .code(),
        Some(3)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "not json\n").unwrap();
    assert_eq!(
        tabchoice(&["analyze", "--trace", bad.to_str().unwrap()])
            .status
            .code(),
        Some(3)
    );
}
