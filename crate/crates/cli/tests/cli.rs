use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_treealign"));
    c.env_remove("TREEALIGN_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).unwrap_or_else(|_| panic!("stderr is not JSON: {}", String::from_utf8_lossy(&o.stderr)))
}

fn config_line(text: &str) -> serde_json::Value {
    let first = text.lines().next().unwrap();
    serde_json::from_str(first.strip_prefix("# config: ").expect("config line first")).unwrap()
}

#[test]
fn enumerate_table() {
    let o = run(&["enumerate", "--max-n", "10"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(config_line(&text)["command"], "enumerate");
    let rows: Vec<&str> = text.lines().skip(2).collect();
    let counts: Vec<&str> = rows.iter().map(|r| r.split(',').nth(1).unwrap()).collect();
    assert_eq!(counts, ["1", "1", "2", "4", "9", "20", "48", "115", "286", "719"]);
}

#[test]
fn otter_estimate() {
    let o = run(&["otter", "--max-n", "200", "--acceptance"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let est = v["result"]["estimate"]["estimate"].as_f64().unwrap();
    assert!((est - 0.3383219).abs() < 1e-3);
    assert_eq!(v["config"]["max_n"], 200);
}

#[test]
fn kl_curve_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = ["kl-curve", "--lambda", "4", "--s", "0.5,0.8", "--d", "2..3", "--trials", "1000", "--seed", "7"];
    assert!(bin().args(args).arg("--out").arg(&a).status().unwrap().success());
    assert!(bin().args(args).arg("--out").arg(&b).args(["--threads", "1"]).status().unwrap().success());
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "d,kl_estimate,stderr,trials,lambda,s");
    assert_eq!(text.lines().count(), 2 + 4);
    assert_eq!(config_line(&text)["seed"], 7);
}

#[test]
fn s_out_of_range_is_a_config_error() {
    let o = run(&["align", "--n", "50", "--lambda", "2", "--s", "1.2", "--d", "3", "--gamma", "1.5", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr_json(&o);
    assert_eq!(e["error"], "config");
    assert!(e["violations"].as_array().unwrap().iter().any(|v| v.as_str().unwrap().contains("s out of [0,1]")));
}

#[test]
fn align_needs_a_seed_and_gamma_above_one() {
    let base = ["align", "--n", "50", "--lambda", "2", "--s", "0.9", "--d", "3"];
    let o = bin().args(base).args(["--gamma", "1.5"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["violations"][0].as_str().unwrap().contains("missing seed"));
    let o = bin().args(base).args(["--gamma", "1.0", "--seed", "3"]).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr_json(&o)["violations"][0].as_str().unwrap().contains("gamma must exceed 1"));
    let o = bin().args(base).args(["--gamma", "1.5"]).env("TREEALIGN_SEED", "11").output().unwrap();
    assert!(o.status.success());
    assert_eq!(config_line(&stdout(&o))["seed"], 11);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gamma.json");
    std::fs::write(&cfg, r#"{"lambda": 2.2, "d_min": 2, "d_max": 3, "trials": 40, "seed": 5}"#).unwrap();
    let out = dir.path().join("nested/rate.csv");
    let o = bin().arg("gamma").arg("--config").arg(&cfg).args(["--trials", "60", "--out"]).arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let c = config_line(&text);
    assert_eq!((c["trials"].as_u64(), c["seed"].as_u64(), c["model"].as_str()), (Some(60), Some(5), Some("null")));
    assert_eq!(text.lines().nth(1).unwrap(), "d,mean_logW,stderr,n_survived");
    assert!(text.lines().last().unwrap().starts_with("# fit: "));
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"max_n": 60, "colour": "blue"}"#).unwrap();
    let o = bin().arg("otter").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn resource_guard_exit_code() {
    let o = run(&["eigencheck", "--lambda", "2", "--d", "3", "--k", "4", "--pair-size", "40", "--checks", "decomposition"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "resource");
}

#[test]
fn failed_checks_exit_four_only_in_acceptance_mode() {
    let args = ["align", "--algorithm", "ntma2", "--n", "200", "--lambda", "3", "--s", "0.3", "--d", "2", "--gamma", "1.01", "--seed", "1"];
    assert!(run(&args).status.success());
    let o = bin().args(args).arg("--acceptance").output().unwrap();
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(stderr_json(&o)["error"], "statistical");
}

fn read_lines(p: &Path) -> Vec<String> {
    std::fs::read_to_string(p).unwrap().lines().map(String::from).collect()
}

#[test]
fn align_side_files_and_thread_independence() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = dir.path().join("pairs");
    let summary = dir.path().join("summary.json");
    let mut args: Vec<String> = ["align", "--algorithm", "ntma2", "--n", "300", "--lambda", "2.1", "--s", "1", "--d", "4", "--gamma", "1.5", "--seed", "4", "--reps", "2"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    args.extend(["--pairs-dir".into(), pairs.display().to_string(), "--summary".into(), summary.display().to_string()]);
    let a = bin().args(&args).output().unwrap();
    let b = bin().args(&args).args(["--threads", "1"]).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let runs = stdout(&a);
    assert_eq!(runs.lines().nth(1).unwrap(), "algorithm,n,rep,seed,overlap,error,pairs,candidate_pairs,skipped_pairs");
    let csv = read_lines(&pairs.join("ntma2_n300_rep1.csv"));
    assert!(csv[0].starts_with("# config: "));
    assert_eq!(csv[1], "u,u_prime,correct");
    // Under s = 1 every emitted pair is read back as 0/1 correctness flags.
    assert!(csv[2..].iter().all(|r| r.ends_with(",1") || r.ends_with(",0")));
    let s: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    let runs = s["result"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    for key in ["n", "lambda", "s", "d", "gamma", "overlap", "error", "pairs", "skipped_pairs", "seed"] {
        assert!(runs[0].get(key).is_some(), "{key}");
    }
}

#[test]
fn zstat_and_lr_test_report_json() {
    let o = run(&["zstat", "--lambda", "2", "--s", "0.8", "--trials", "5000", "--moment4-draws", "20000", "--seed", "3"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["result"]["null_z"].is_number());
    assert_eq!(v["result"]["moment4"]["exact"], 21.25);
    let o = run(&["lr-test", "--lambda", "4", "--s", "0.8", "--d", "2", "--trials", "50", "--beta", "2.5", "--seed", "1"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["result"]["log_beta"].as_f64().unwrap() - 2.5f64.ln()).abs() < 1e-12);
}

#[test]
fn cyclic_csv_columns() {
    let o = run(&["cyclic", "--lambda", "1.5", "--s", "0.6", "--d", "2", "--m", "2", "--trials", "2000", "--seed", "9"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let header = text.lines().nth(1).unwrap();
    assert_eq!(header, "m,analytic,tail_bound,mc_estimate,mc_stderr,trials,z_score,max_share,heavy_tail");
    let row: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(row.len(), 9);
    assert!((row[1].parse::<f64>().unwrap() - 1.933393436).abs() < 1e-8);
}
