use meio_wasm::{heuristic_levels, lead_time_demand, scenario_ids, simulate_base_stock};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn scenario_list_is_synthetic_only() {
    let ids: Vec<String> = serde_json::from_str(&scenario_ids()).unwrap();
    assert_eq!(ids, ["A1", "A3", "B1", "B3", "C1", "C3", "D1"]);
}

#[test]
fn pmf_json_is_normalized() {
    let v = parse(lead_time_demand(10, 10, 2, 2));
    let total: f64 = v["probs"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9);
    assert!((v["mean"].as_f64().unwrap() - 20.0).abs() < 1e-9);
}

#[test]
fn levels_and_trace_agree() {
    let lv = parse(heuristic_levels("A1"));
    let levels: Vec<i64> = lv["installation_level"].as_array().unwrap().iter().map(|x| x.as_i64().unwrap()).collect();
    assert_eq!(levels.len(), 4);
    let tr = parse(simulate_base_stock("A1", 0, 50, 3));
    let bsl: Vec<i64> = tr["bsl"].as_array().unwrap().iter().map(|x| x.as_i64().unwrap()).collect();
    assert_eq!(bsl, levels);
    assert_eq!(tr["cost"].as_array().unwrap().len(), 50);
    // same seed, same run
    assert_eq!(simulate_base_stock("A1", 2, 30, 9), simulate_base_stock("A1", 2, 30, 9));
    assert!(parse(simulate_base_stock("A2", 0, 10, 0))["error"].is_string());
}
