use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn meio(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meio")).args(args).output().expect("spawn meio")
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

fn tiny_config(dir: &Path) -> String {
    let p = dir.join("tiny.toml");
    fs::write(&p, "hidden = [8, 8]\n").unwrap();
    p.to_string_lossy().into_owned()
}

fn error_record(out: &Output) -> serde_json::Value {
    assert!(!out.status.success());
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).expect("json line on stderr");
    serde_json::from_str(line).unwrap()
}

#[test]
fn heuristic_writes_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = meio(&["heuristic", "--scenario", "A1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let path = dir.path().join("bsl.csv");
    assert_eq!(header(&path), "stock_point,echelon_level,installation_level,expected_backorders,benchmark_cost");
    assert_eq!(fs::read_to_string(&path).unwrap().lines().count(), 5);
}

#[test]
fn unknown_scenario_is_a_json_error() {
    let out = meio(&["heuristic", "--scenario", "Z9"]);
    let v = error_record(&out);
    assert_eq!(v["status"], "error");
    assert!(v["kind"].is_string());
    assert!(v["message"].as_str().unwrap().contains("Z9"));
}

#[test]
fn empirical_scenario_without_data_fails() {
    let out = meio(&["heuristic", "--scenario", "A2"]);
    assert_eq!(error_record(&out)["kind"], "missing-data");
}

#[test]
fn bad_flag_value_is_a_json_error() {
    let out = meio(&["train", "--scenario", "A1", "--model", "gnn", "--out", "x"]);
    assert_eq!(error_record(&out)["status"], "error");
}

#[test]
fn evaluate_random_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = meio(&["evaluate", "--scenario", "A1", "--model", "random", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(header(&dir.path().join("trajectory.csv")), "period,stock_point,on_hand,ip,order_placed,backlog,cost");
    let eval = fs::read_to_string(dir.path().join("evaluation.csv")).unwrap();
    assert!(eval.starts_with("scenario,model,seed,mean_cost,std_cost,benchmark_cost,savings"));
    assert_eq!(eval.lines().count(), 2);
}

#[test]
fn train_then_evaluate_and_map_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let cfg = tiny_config(dir.path());
    let out = meio(&["train", "--scenario", "A1", "--model", "marl", "--seeds", "0", "--episodes", "16", "--config", &cfg, "--out", d]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ckpt = dir.path().join("checkpoint_A1_marl_0.json");
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&ckpt).unwrap()).unwrap();
    assert!(json["config_hash"].as_str().is_some_and(|h| h.len() == 64));
    let curves: Vec<_> = fs::read_dir(dir.path().join("curves")).unwrap().collect();
    assert_eq!(curves.len(), 1);
    let curve = curves[0].as_ref().unwrap().path();
    assert_eq!(header(&curve), "episode,eval_mean_cost,eval_std");
    assert!(dir.path().join("trials.csv").exists());

    let ev = dir.path().join("eval");
    let out = meio(&["evaluate", "--scenario", "A1", "--model", ckpt.to_str().unwrap(), "--out", ev.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(ev.join("trajectory.csv").exists());

    let map = dir.path().join("map.csv");
    let out = meio(&["policy-map", "--scenario", "A1", "--model", ckpt.to_str().unwrap(), "--periods", "300", "--out", map.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(&map).unwrap();
    assert!(text.starts_with("period,stock_point,ip,order"));
    assert_eq!(text.lines().count(), 1 + 300 * 4);

    // checkpoint trained on A1 cannot drive a different network
    let out = meio(&["evaluate", "--scenario", "B1", "--model", ckpt.to_str().unwrap()]);
    assert_eq!(error_record(&out)["status"], "error");
}

#[test]
fn grid_writes_report_tree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = meio(&[
            "grid", "--scenario", "A1", "--model", "heuristic,random,marl", "--seeds", "0..2", "--episodes", "16",
            "--config", &cfg, "--policy-map-periods", "200", "--out", out_dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let a = run("a");
    for f in ["grid_best.csv", "grid_mean.csv", "trials.csv", "README.md"] {
        assert!(a.join(f).exists(), "{f}");
    }
    assert!(fs::read_dir(a.join("curves")).unwrap().count() >= 3);
    assert!(fs::read_dir(a.join("policy_maps")).unwrap().count() >= 1);
    let trials = fs::read_to_string(a.join("trials.csv")).unwrap();
    // heuristic once, random and marl per seed
    assert_eq!(trials.lines().count(), 1 + 1 + 2 + 2);
    let b = run("b");
    for f in ["grid_best.csv", "grid_mean.csv", "trials.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}
