use std::process::{Command, Output};

fn liftpir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liftpir"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn matrix_text_matches_golden_files() {
    let o = liftpir(&["matrix", "--n", "4", "--r", "3", "--m", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), include_str!("golden/s3.txt"));
    let o = liftpir(&["matrix", "--n", "4", "--r", "3", "--m", "4"]);
    assert_eq!(stdout(&o), include_str!("golden/s4.txt"));
}

#[test]
fn matrix_json_carries_groups() {
    let o = liftpir(&["matrix", "--n", "2", "--r", "1", "--m", "3", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(!v["groups"].as_array().unwrap().is_empty());
    let text = stdout(&liftpir(&["matrix", "--n", "2", "--r", "1", "--m", "3"]));
    // one entry of every value for N=2, r=1
    for k in 1..=3 {
        let count = text.split_whitespace().filter(|c| *c == k.to_string()).count();
        assert_eq!(count, 1, "{text}");
    }
}

#[test]
fn run_report_matches_golden_and_is_stable() {
    let args = ["run", "--n", "4", "--k", "2", "--t", "2", "--m", "3", "--seed", "42"];
    let a = liftpir(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), include_str!("golden/run_seed42.json"));
    assert_eq!(stdout(&a), stdout(&liftpir(&args)));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"n": 4, "k": 1, "t": 2, "m": 3, "scheme": "secret_sharing_lifted"}"#).unwrap();
    let out = dir.path().join("report.json");
    let o = liftpir(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["expected_rate"], "4/7");
    assert_eq!(v["seed"], 7);
    assert_eq!(v["pass"], true);
}

#[test]
fn validation_errors_exit_one() {
    let o = liftpir(&["run", "--k", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("T <= N-K"));
    let o = liftpir(&["run", "--scheme", "secret_sharing_lifted"]);
    assert_eq!(o.status.code(), Some(1));
    let o = liftpir(&["run", "--prime", "9"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn audit_exit_codes() {
    let o = liftpir(&["audit"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["pass"], true);
    for m in ["leak_basis", "correction_on_group_server", "weak_sharing"] {
        let o = liftpir(&["audit", "--mutate", m]);
        assert_eq!(o.status.code(), Some(2), "{m}");
    }
    let o = liftpir(&["audit", "--mutate", "nonsense"]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn statistical_audit_path() {
    let o = liftpir(&["audit", "--prime", "5", "--m", "2", "--stat"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["statistical"].as_array().unwrap().len(), 6);
    let o = liftpir(&["audit", "--prime", "5", "--m", "2", "--stat", "--mutate", "leak_basis"]);
    assert_eq!(o.status.code(), Some(2));
    // large fields are rejected for the statistical path
    let o = liftpir(&["audit", "--m", "2", "--stat"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn rates_csv_exact_and_decimal() {
    let o = liftpir(&["rates", "--n", "4", "--k", "2", "--t", "2", "--m", "3"]);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "N,K,T,M,r,one_shot,refined,lifted_eq5,lifted_eq4_corrected,capacity_k1,equality_flag,lifted_eq4_literal,note"
    );
    assert_eq!(lines.next().unwrap(), "4,2,2,3,3,1/4,4/7,16/37,16/37,,true,48/37,");
    let o = liftpir(&["rates", "--n", "5", "--k", "2", "--t", "2", "--m", "2", "--decimal"]);
    let row = stdout(&o).lines().nth(1).unwrap().to_string();
    assert!(row.contains("non-integer co-dimension 7/2"), "{row}");
    assert!(row.starts_with("5,2,2,2,3,0.400000,0.625000,0.625000,"), "{row}");
}

#[test]
fn transcript_dump_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    let o = liftpir(&["run", "--m", "2", "--transcript", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[0]["download_count"], 7);
}
