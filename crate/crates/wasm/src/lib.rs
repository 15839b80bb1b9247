//! wasm-bindgen exports for the static demo page. Every function returns a
//! JSON string; errors come back as `{"error": "..."}`.

use std::sync::Arc;

use serde::Serialize;
use wasm_bindgen::prelude::*;

use meio::distributions::{compound_lead_time_demand, make_uniform, make_uniform_poisson_mixture, DEFAULT_TAIL_EPS};
use meio::heuristic::{da_heuristic, BaseStockPolicy};
use meio::network::{build_scenario, ScenarioConfig, SCENARIO_IDS};
use meio::simulator::{Policy, Simulator};

const EVAL_SEED: u64 = 7;

fn respond<T: Serialize>(r: meio::Result<T>) -> String {
    match r {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[derive(Serialize)]
pub struct PmfView {
    pub offset: usize,
    pub probs: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
}

/// Demand over a random replenishment cycle: Poisson demand with mean drawn
/// uniformly from `demand_lo..=demand_hi`, lead time uniform on
/// `lead_lo..=lead_hi` periods.
pub fn lead_time_demand_view(demand_lo: u32, demand_hi: u32, lead_lo: usize, lead_hi: usize) -> meio::Result<PmfView> {
    let d = make_uniform_poisson_mixture(demand_lo, demand_hi, DEFAULT_TAIL_EPS)?;
    let l = make_uniform(lead_lo, lead_hi)?;
    let c = compound_lead_time_demand(&d, &l);
    Ok(PmfView {
        offset: c.offset(),
        probs: c.probs().to_vec(),
        mean: c.mean(),
        variance: c.variance(),
    })
}

#[wasm_bindgen]
pub fn lead_time_demand(demand_lo: u32, demand_hi: u32, lead_lo: u32, lead_hi: u32) -> String {
    respond(lead_time_demand_view(demand_lo, demand_hi, lead_lo as usize, lead_hi as usize))
}

#[derive(Serialize)]
pub struct LevelsView {
    pub scenario: String,
    pub stock_points: Vec<String>,
    pub echelon: Vec<usize>,
    pub echelon_level: Vec<i64>,
    pub installation_level: Vec<i64>,
    pub expected_backorders: Vec<f64>,
    pub edges: Vec<(String, String)>,
    pub benchmark_cost: f64,
}

fn scenario(id: &str) -> meio::Result<(Arc<ScenarioConfig>, meio::heuristic::HeuristicResult)> {
    let s = build_scenario(id, None)?;
    da_heuristic(&s, EVAL_SEED)
}

pub fn levels_view(id: &str) -> meio::Result<LevelsView> {
    let (s, h) = scenario(id)?;
    let t = &s.topology;
    let name = |sp: meio::network::Supplier| match sp {
        meio::network::Supplier::External => meio::network::EXTERNAL.to_string(),
        meio::network::Supplier::Node(q) => t.name(q).to_string(),
    };
    Ok(LevelsView {
        scenario: s.id.clone(),
        stock_points: t.names().to_vec(),
        echelon: t.echelons().to_vec(),
        echelon_level: h.levels.echelon.clone(),
        installation_level: h.levels.installation.clone(),
        expected_backorders: h.levels.expected_backorders.clone(),
        edges: t.edges().iter().map(|e| (name(e.supplier), t.name(e.customer).to_string())).collect(),
        benchmark_cost: h.benchmark.mean_cost,
    })
}

/// Benchmark base-stock levels and their simulated cost for a named
/// scenario (A1..D1).
#[wasm_bindgen]
pub fn heuristic_levels(id: &str) -> String {
    respond(levels_view(id))
}

#[derive(Serialize)]
pub struct TraceView {
    pub stock_points: Vec<String>,
    pub bsl: Vec<i64>,
    /// Per period, per stock point.
    pub ip: Vec<Vec<i64>>,
    pub on_hand: Vec<Vec<i64>>,
    pub orders: Vec<Vec<i64>>,
    pub cost: Vec<f64>,
    pub mean_cost: f64,
}

/// One run of an order-up-to policy at the benchmark levels shifted by
/// `shift` units at every stock point.
pub fn trace_view(id: &str, shift: i64, periods: usize, seed: u64) -> meio::Result<TraceView> {
    let (s, h) = scenario(id)?;
    let bsl: Vec<i64> = h.bsl().iter().map(|b| (b + shift).max(0)).collect();
    let s = Arc::new(s.with_bsl(&bsl)?);
    let mut pol = BaseStockPolicy::for_scenario(&s, bsl.clone());
    let mut sim = Simulator::new(Arc::clone(&s), seed)?;
    let mut obs = sim.reset();
    let mut a = vec![0.0; bsl.len()];
    let mut v = TraceView {
        stock_points: s.topology.names().to_vec(),
        bsl,
        ip: Vec::with_capacity(periods),
        on_hand: Vec::with_capacity(periods),
        orders: Vec::with_capacity(periods),
        cost: Vec::with_capacity(periods),
        mean_cost: 0.0,
    };
    for _ in 0..periods {
        pol.act(&obs, &mut a);
        let out = sim.step(&a);
        v.ip.push(out.observation.ip.clone());
        v.on_hand.push(sim.state().on_hand.clone());
        v.orders.push(out.info.orders.clone());
        v.cost.push(out.info.total_cost);
        obs = out.observation;
    }
    v.mean_cost = v.cost.iter().sum::<f64>() / periods.max(1) as f64;
    Ok(v)
}

#[wasm_bindgen]
pub fn simulate_base_stock(id: &str, shift: i32, periods: u32, seed: u32) -> String {
    respond(trace_view(id, shift as i64, periods as usize, seed as u64))
}

/// Named scenarios that build without empirical data files.
#[wasm_bindgen]
pub fn scenario_ids() -> String {
    let ids: Vec<&str> = SCENARIO_IDS.iter().copied().filter(|id| build_scenario(id, None).is_ok()).collect();
    serde_json::to_string(&ids).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compound_mean_is_product_of_means() {
        let v = lead_time_demand_view(5, 15, 1, 5).unwrap();
        assert!((v.mean - 30.0).abs() < 1e-9);
        assert!((v.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bad_input_is_an_error_record() {
        let s = lead_time_demand(9, 3, 1, 1);
        assert!(s.contains("\"error\""));
        assert!(heuristic_levels("Z9").contains("\"error\""));
    }
}
