use std::process::{Command, Output};

use ladder_core::verify::TABLE1_CSV;

fn ladder(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ladder"))
        .args(args)
        .env_remove("LADDER_BIT_CAP")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn golden_record_table() {
    for method in ["scan", "sequence", "both"] {
        let o = ladder(&["records", "--a", "2", "--b", "3", "--max-p", "32768", "--method", method]);
        assert_eq!(o.status.code(), Some(0), "{method}: {}", stderr(&o));
        let got: Vec<String> = stdout(&o)
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect();
        let want: Vec<&str> = TABLE1_CSV.lines().collect();
        assert_eq!(got, want, "{method}");
    }
}

#[test]
fn csv_uses_lf_and_header() {
    let o = ladder(&["records", "--max-p", "100"]);
    let s = stdout(&o);
    assert!(!s.contains('\r'));
    assert!(s.starts_with("kind,p,d,delta_p,delta_d,value_approx\n"));
    assert!(s.ends_with('\n'));
}

#[test]
fn output_is_deterministic() {
    let runs = [
        vec!["records", "--a", "3", "--b", "5", "--max-p", "5000"],
        vec!["records", "--a", "3", "--b", "5", "--max-p", "5000", "--parallel", "4"],
    ];
    let first = ladder(&runs[0]);
    for args in &runs {
        for _ in 0..2 {
            assert_eq!(ladder(args).stdout, first.stdout);
        }
    }
    let a = ladder(&["approx", "--target", "3/2", "--eps", "1e-6", "--format", "json"]);
    let b = ladder(&["approx", "--target", "1.5", "--eps", "0.000001", "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn pairs_json_round_trips_through_phases() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairs.json");
    let path = path.to_str().unwrap();
    for (a, b) in [("2", "3"), ("7", "8")] {
        let o = ladder(&["pairs", "--a", a, "--b", b, "--steps", "300", "--format", "json", "--output", path]);
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
        let from_file = ladder(&["phases", "--a", a, "--b", b, "--from-file", path]);
        let direct = ladder(&["phases", "--a", a, "--b", b, "--steps", "300"]);
        assert_eq!(from_file.status.code(), Some(0), "{}", stderr(&from_file));
        assert_eq!(from_file.stdout, direct.stdout);
    }
}

#[test]
fn phase_table_for_two_three() {
    let o = ladder(&["phases", "--steps", "40", "--format", "json"]);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lambdas: Vec<u64> = doc["phases"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["lambda"].as_u64().unwrap())
        .collect();
    assert_eq!(&lambdas[..7], &[1, 2, 2, 3, 1, 5, 2]);
    assert_eq!(doc["start_case"], "v_first");
}

#[test]
fn tampered_pairs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairs.json");
    let o = ladder(&["pairs", "--steps", "10", "--format", "json"]);
    let text = stdout(&o).replacen("\"d\": 3", "\"d\": 4", 1);
    std::fs::write(&path, text).unwrap();
    let o = ladder(&["phases", "--from-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn not_coprime_is_a_usage_error() {
    let o = ladder(&["records", "--a", "2", "--b", "4", "--max-p", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("not co-prime"));
}

#[test]
fn bad_arguments_exit_two() {
    for args in [
        vec!["records", "--a", "3", "--b", "2", "--max-p", "10"],
        vec!["records", "--max-p", "0"],
        vec!["pairs"],
        vec!["approx", "--target", "abc", "--eps", "1/10"],
        vec!["approx", "--target", "5", "--eps", "1/10"],
        vec!["approx", "--target", "3/2", "--eps", "0"],
        vec!["verify", "--suite", "nope"],
    ] {
        assert_eq!(ladder(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn value_line() {
    let o = ladder(&["value", "--a", "2", "--b", "3", "--p", "7", "--digits", "9"]);
    assert_eq!(stdout(&o), "2^12/3^7 ≈ 1.87288523\n");
    let o = ladder(&["value", "--a", "7", "--b", "8", "--p", "2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["value_approx"], "5.359375000");
    assert_eq!(v["fraction"], "7^3/8^2");
}

#[test]
fn exhausted_budget_exits_three() {
    let o = ladder(&["approx", "--target", "3/2", "--eps", "1e-40", "--max-steps", "3"]);
    assert_eq!(o.status.code(), Some(3));
    // the partial trace is still written
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn bit_cap_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_ladder"))
        .args(["value", "--p", "7", "--digits", "200"])
        .env("LADDER_BIT_CAP", "256")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("cap of 256 bits"));
    let o = ladder(&["value", "--p", "7", "--digits", "200"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn exact_hit_is_reported() {
    let o = ladder(&["approx", "--target", "4/3", "--eps", "1/100", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["exact_hit"]["p"], 1);
}

#[test]
fn verify_table_suite() {
    let o = ladder(&["verify", "--suite", "table1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("suite,check,passed,detail\n"));
}
