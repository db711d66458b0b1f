use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_infoconc"));
    c.env_remove("INFOCONC_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("infoconc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn read_json(path: &PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn column<'a>(csv: &'a str, name: &str) -> Vec<&'a str> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|c| c == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap()).collect()
}

#[test]
fn tail_example_has_17_holding_rows() {
    let json = tmp("tail.json");
    let o = run(&[
        "tail", "--model", "gaussian", "--dim", "16", "--samples", "1000000", "--seed", "42", "--t-grid", "0:8:0.5", "--out-json",
        json.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 18);
    assert!(column(&csv, "verdict_exp").iter().all(|v| *v == "HOLDS"));
    assert!(column(&csv, "verdict_gaus").iter().all(|v| *v == "HOLDS"));
    let s = read_json(&json);
    assert_eq!(s["seed"], 42);
    assert_eq!(s["verdict_counts"]["VIOLATED"], 0);
    assert!(s["metadata"]["runtime_seconds"].as_f64().unwrap() >= 0.0);
    let anchors: Vec<&str> = s["bounds_tested"].as_array().unwrap().iter().map(|b| b["paper_anchor"].as_str().unwrap()).collect();
    assert!(anchors.iter().all(|a| !a.is_empty()));
}

#[test]
fn lyapunov_exponential_is_extremal() {
    let json = tmp("lyap.json");
    let o = run(&["lyapunov", "--model", "exponential", "--kind", "normalized", "--p-grid", "0.5:40:0.5", "--out-json", json.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 81);
    let s = read_json(&json);
    assert!(s["results"]["worst_defect"].as_f64().unwrap().abs() < 1e-9);
    assert_eq!(s["results"]["verdict"], "HOLDS");
}

#[test]
fn order_p_gamma_has_zero_margin() {
    let o = run(&["order_p", "--model", "gamma", "--p", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = stdout(&o);
    let names = column(&csv, "bound_name");
    let margins = column(&csv, "margin");
    let i = names.iter().position(|n| *n == "trigamma_var_log").unwrap();
    assert!(margins[i].parse::<f64>().unwrap().abs() < 1e-7);
}

#[test]
fn catalog_listing() {
    let o = run(&["list_bounds", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let entries = v.as_array().unwrap();
    assert!(entries.len() >= 12);
    assert!(entries.iter().any(|e| e["validity"].as_str().unwrap().contains("c = 1/16")));
    assert!(entries.iter().any(|e| e["formula_text"].as_str().unwrap().contains("3 exp(4 a^2)")));
    let table = run(&["list_bounds"]);
    assert!(stdout(&table).contains("thm_mgf"));
}

#[test]
fn violation_exits_with_two() {
    // the band with 2/n exponents almost never contains f(X)^{2/n}
    let o = run(&["entropy_power", "--model", "gaussian", "--dim", "64", "--samples", "20000", "--literal-band"]);
    assert_eq!(o.status.code(), Some(2));
    let csv = stdout(&o);
    assert_eq!(column(&csv, "verdict"), vec!["HOLDS", "VIOLATED"]);
}

#[test]
fn errors_exit_with_one() {
    let o = run(&["tail", "--model", "no_such_family", "--samples", "10"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
    assert_eq!(run(&["tail", "--samples", "10"]).status.code(), Some(1));
    assert_eq!(run(&["tail", "--model", "gaussian", "--t-grid", "1:0:1"]).status.code(), Some(1));
    assert_eq!(run(&["bogus"]).status.code(), Some(1));
    let cfg = tmp("bad.json");
    std::fs::write(&cfg, r#"{"experiment":"tail","unknown":1}"#).unwrap();
    assert_eq!(run(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn config_file_runs_are_reproducible_across_workers() {
    let cfg = tmp("mgf.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"mgf","model":{"family":"iid","params":{"component":{"family":"laplace"},"dim":9}},
            "samples":50000,"seed":7}"#,
    )
    .unwrap();
    let mut outputs = Vec::new();
    for w in ["1", "3"] {
        let csv = tmp(&format!("mgf{w}.csv"));
        let json = tmp(&format!("mgf{w}.json"));
        let o = run(&[
            "run", "--config", cfg.to_str().unwrap(), "--workers", w, "--out-csv", csv.to_str().unwrap(), "--out-json",
            json.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty());
        let mut s = read_json(&json);
        s.as_object_mut().unwrap().remove("metadata");
        outputs.push((std::fs::read_to_string(&csv).unwrap(), s));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].0.lines().count(), 5);
}

#[test]
fn seed_falls_back_to_environment() {
    let args = ["variance", "--model", "exponential", "--dim", "3", "--samples", "2000"];
    let a = bin().args(args).env("INFOCONC_SEED", "11").output().unwrap();
    let b = bin().args(args).args(["--seed", "11"]).output().unwrap();
    let c = bin().args(args).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn aep_writes_both_tables() {
    let traj = tmp("traj.csv");
    let o = run(&[
        "aep", "--model", "gauss_ar1", "--rho", "0.3", "--n-grid", "4,16", "--trials", "50", "--s-grid", "0.5,1",
        "--out-trajectories", traj.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 5);
    let t = std::fs::read_to_string(&traj).unwrap();
    assert!(t.starts_with("trial,n,per_coord_info,deviation,centered_deviation\n"));
    assert_eq!(t.lines().count(), 1 + 50 * 2);
}

#[test]
fn quantile_density_on_beta() {
    let o = run(&["quantile_density", "--model", "beta", "--param", "a=2", "--param", "b=3"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 20);
    assert_eq!(column(&csv, "verdict").iter().filter(|v| **v == "HOLDS").count(), 17);
}
