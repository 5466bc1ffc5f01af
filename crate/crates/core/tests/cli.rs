use std::path::Path;
use std::process::{Command, Output};

fn agrisk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agrisk"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

const TRIANGLE: &str = r#"{"nodes":["a","b","c"],"edges":[
  {"u":"a","v":"b","capacity":10},{"u":"b","v":"c","capacity":10},{"u":"a","v":"c","capacity":10}]}"#;

#[test]
fn risk_eval_prints_cvar() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d4.csv"), "value,prob\n1,0.25\n2,0.25\n3,0.25\n4,0.25\n").unwrap();
    let o = agrisk(dir.path(), &["risk", "eval", "--dist", "d4.csv", "--alpha", "0.5", "--gamma", "1.0"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "alpha,gamma,var,cvar,expectation\n0.5,1.0,4.0,3.5,3.5\n");

    let o = agrisk(dir.path(), &["risk", "alpha-star", "--dist", "d4.csv", "--gamma", "0.9", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["alpha_star"].as_f64().unwrap() >= 0.75);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(agrisk(dir.path(), &["estimate", "--feasible", "missing.json", "--gamma", "0.9"]).status.code(), Some(2));
    assert_eq!(agrisk(dir.path(), &["risk", "eval", "--nope"]).status.code(), Some(2));
    std::fs::write(dir.path().join("d.csv"), "value,prob\n1,0.5\n2,0.6\n").unwrap();
    let o = agrisk(dir.path(), &["risk", "eval", "--dist", "d.csv", "--alpha", "0.1", "--gamma", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    std::fs::write(dir.path().join("down.json"), r#"{"A":[[-1],[1]],"B":[[1],[0]],"c":[0,1],"probs":[1.0]}"#).unwrap();
    let o = agrisk(dir.path(), &["estimate", "--feasible", "down.json", "--gamma", "0.9", "--big-m", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn te_run_is_deterministic_and_replayable() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tri.json"), TRIANGLE).unwrap();
    let args = ["te", "run", "--topology", "tri.json", "--seed", "7", "--ip", "--gamma", "0.9"];
    let first = agrisk(dir.path(), &args);
    let second = agrisk(dir.path(), &args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let text = stdout(&first);
    assert!(text.contains("meta_seed"));
    assert!(text.lines().nth(1).unwrap().ends_with(",7,0.6,tri.json"));

    let o = agrisk(dir.path(), &["te", "gen", "--topology", "tri.json", "--seed", "7", "--out", "gen"]);
    assert!(o.status.success());
    for f in ["topology.json", "demands.csv", "tunnels.json", "scenarios.json", "instance.json"] {
        assert!(dir.path().join("gen").join(f).exists(), "{f}");
    }
    let replayed = agrisk(
        dir.path(),
        &[
            "te", "run", "--topology", "gen/topology.json", "--demands", "gen/demands.csv", "--tunnels",
            "gen/tunnels.json", "--scenarios", "gen/scenarios.json", "--seed", "7", "--ip", "--gamma", "0.9",
            "--format", "json",
        ],
    );
    let direct = agrisk(dir.path(), &["estimate", "--feasible", "gen/instance.json", "--gamma", "0.9", "--ip", "--big-m", "1", "--format", "json"]);
    let a: serde_json::Value = serde_json::from_slice(&replayed.stdout).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&direct.stdout).unwrap();
    let first: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    for (key, col) in [("ip_true", 2), ("u1", 3), ("o1", 4), ("u2", 5), ("o2", 6)] {
        let x = a[0][key].as_f64().unwrap();
        let y = b[0][key].as_f64().unwrap();
        assert!((x - y).abs() < 1e-7, "{key}: {x} vs {y}");
        assert_eq!(format!("{x:.5}").replace("-0.00000", "0.00000"), first[col], "{key}");
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.csv"), "value,prob\n0,0.5\n10,0.5\n").unwrap();
    let o = agrisk(dir.path(), &["risk", "eval", "--dist", "d.csv", "--alpha", "0.25", "--gamma", "0.75", "--out", "r.csv"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(&row[..3], &[0.25, 0.75, 10.0]);
    assert!((row[3] - 20.0 / 3.0).abs() < 1e-12);
    assert_eq!(row[4], 5.0);
}
