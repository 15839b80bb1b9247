//! Decomposition-aggregation benchmark for base-stock levels.
//!
//! The network is split into one serial system per (retailer, supply path).
//! Each serial system gets newsvendor-bound echelon base stocks on exact
//! lead-time-demand PMFs; shared upstream stock points are then recombined by
//! matching their expected backorders to the sum over their serial
//! counterparts. Random supplier choice in general networks enters through
//! thinning of the order stream each supplier sees.

use std::collections::HashMap;
use std::sync::Arc;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::distributions::{compound_lead_time_demand, thin_random_routing, Pmf};
use crate::error::{invalid, Error, Result};
use crate::network::{validate_heuristic_preconditions, NodeId, ScenarioConfig, Supplier};
use crate::simulator::{encode_action, evaluate_policy, EvalResult, Observation, Policy};

/// One stage of a serial system; stage 0 is the retailer.
#[derive(Debug, Clone, PartialEq)]
pub struct SerialStage {
    pub node: NodeId,
    /// Edge the stage is replenished through on this path.
    pub edge: usize,
    /// Order-to-arrival time: shipment lead plus the order-processing period.
    pub lead: Pmf,
    pub local_h: f64,
    /// Probability that a unit of retailer demand is routed through this
    /// stage along this path.
    pub routing: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SerialSystem {
    pub retailer: NodeId,
    pub demand: Pmf,
    pub backorder_cost: f64,
    pub stages: Vec<SerialStage>,
}

impl SerialSystem {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStockSolution {
    pub echelon: Vec<i64>,
    pub installation: Vec<i64>,
    /// Expected installation backorders per stage at the chosen level.
    pub expected_backorders: Vec<f64>,
}

/// Shipment lead plus the one-period order-processing stage.
pub fn effective_lead(edge_lead: &Pmf) -> Pmf {
    edge_lead.convolve(&Pmf::point(1))
}

/// Echelon holding costs from local costs ordered retailer first.
pub fn echelon_holding_costs(local_h: &[f64]) -> Result<Vec<f64>> {
    if local_h.is_empty() {
        return Err(invalid("no stages"));
    }
    if local_h.windows(2).any(|w| w[1] >= w[0]) || local_h.last().is_some_and(|h| *h <= 0.0) {
        return Err(invalid(format!(
            "local holding costs must be positive and strictly decrease upstream: {local_h:?}"
        )));
    }
    Ok((0..local_h.len())
        .map(|j| local_h[j] - local_h.get(j + 1).copied().unwrap_or(0.0))
        .collect())
}

fn round_half_up_mid(a: i64, b: i64) -> i64 {
    (a + b + 1).div_euclid(2)
}

/// Newsvendor-bound heuristic for a serial system: for every stage, the
/// echelon base stock is the rounded midpoint of two fractiles of the
/// cumulative lead-time demand.
pub fn shang_song_serial(sys: &SerialSystem) -> Result<BaseStockSolution> {
    let n = sys.stages.len();
    let local: Vec<f64> = sys.stages.iter().map(|s| s.local_h).collect();
    let echelon_h = echelon_holding_costs(&local)?;
    // tail[k] = sum of echelon costs of stages k.. (H_{k+1} in 1-based terms)
    let mut tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        tail[k] = tail[k + 1] + echelon_h[k];
    }
    let b = sys.backorder_cost;

    let mut echelon = Vec::with_capacity(n);
    let mut cum_lead = Pmf::point(0);
    for j in 0..n {
        cum_lead = cum_lead.convolve(&sys.stages[j].lead);
        let ltd = compound_lead_time_demand(&sys.demand, &cum_lead);
        let r_low = (b + tail[j + 1]) / (b + tail[0]);
        let r_high = (b + tail[j + 1]) / (b + tail[j]);
        let lo = ltd.quantile(r_low)?;
        let hi = ltd.quantile(r_high)?;
        echelon.push(round_half_up_mid(lo, hi));
    }

    let mut installation = Vec::with_capacity(n);
    for j in 0..n {
        let below = if j == 0 { 0 } else { echelon[j - 1] };
        let mut s = echelon[j] - below;
        if s < 0 {
            warn!(
                "negative installation level {s} at stage {j} of serial system for node {}; using 0",
                sys.retailer
            );
            s = 0;
        }
        installation.push(s);
    }

    let expected_backorders = sys
        .stages
        .iter()
        .zip(&installation)
        .map(|(st, s)| compound_lead_time_demand(&sys.demand, &st.lead).expected_shortfall(*s))
        .collect();

    Ok(BaseStockSolution {
        echelon,
        installation,
        expected_backorders,
    })
}

/// One serial system per retailer and distinct supply path to the outside
/// source.
pub fn decompose(s: &ScenarioConfig) -> Result<Vec<SerialSystem>> {
    let t = &s.topology;
    let mut out = Vec::new();
    for r in t.retailers() {
        let demand = s.demand_pmf[r]
            .clone()
            .ok_or_else(|| Error::Preconditions(vec![format!("{}: no demand law", t.name(r))]))?;
        let mut paths = Vec::new();
        let mut stack: Vec<Vec<(NodeId, usize)>> = t
            .supplier_edges(r)
            .iter()
            .map(|&e| vec![(r, e)])
            .collect();
        while let Some(path) = stack.pop() {
            let (_, e) = *path.last().unwrap();
            match t.edge(e).supplier {
                Supplier::External => paths.push(path),
                Supplier::Node(u) => {
                    for &up in t.supplier_edges(u) {
                        let mut p = path.clone();
                        p.push((u, up));
                        stack.push(p);
                    }
                }
            }
        }
        // deterministic order: by the sequence of edges along the path
        paths.sort_by(|a, b| {
            a.iter().map(|x| x.1).collect::<Vec<_>>().cmp(&b.iter().map(|x| x.1).collect::<Vec<_>>())
        });
        for path in paths {
            let mut routing = 1.0;
            let mut stages = Vec::with_capacity(path.len());
            for (i, &(node, edge)) in path.iter().enumerate() {
                if i > 0 {
                    routing /= t.supplier_edges(path[i - 1].0).len() as f64;
                }
                stages.push(SerialStage {
                    node,
                    edge,
                    lead: effective_lead(&s.lead_pmf[edge]),
                    local_h: s.params[node].h,
                    routing,
                });
            }
            out.push(SerialSystem {
                retailer: r,
                demand: demand.clone(),
                backorder_cost: s.params[r].b,
                stages,
            });
        }
    }
    Ok(out)
}

/// Memoized per-period order stream seen by each stock point under
/// base-stock operation.
#[derive(Debug, Default)]
pub struct DemandPropagation {
    cache: HashMap<NodeId, Pmf>,
}

impl DemandPropagation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Per-period demand arriving at `u`: the convolution over customers of
    /// their pass-through streams, each thinned by the customer's supplier
    /// count. For a retailer this is its external demand.
    pub fn demand_at(&mut self, s: &ScenarioConfig, u: NodeId) -> Result<Pmf> {
        if let Some(p) = self.cache.get(&u) {
            return Ok(p.clone());
        }
        let t = &s.topology;
        let pmf = if t.is_retailer(u) {
            s.demand_pmf[u]
                .clone()
                .ok_or_else(|| Error::Preconditions(vec![format!("{}: no demand law", t.name(u))]))?
        } else {
            let mut acc = Pmf::point(0);
            for d in t.successors(u) {
                let stream = self.demand_at(s, d)?;
                acc = acc.convolve(&thin_random_routing(&stream, t.supplier_edges(d).len())?);
            }
            acc
        };
        self.cache.insert(u, pmf.clone());
        Ok(pmf)
    }
}

/// Order stream arriving at non-retailer `u`.
pub fn upstream_demand_pmf(s: &ScenarioConfig, u: NodeId) -> Result<Pmf> {
    if s.topology.is_retailer(u) {
        return Err(invalid(format!("{} is a retailer", s.topology.name(u))));
    }
    DemandPropagation::new().demand_at(s, u)
}

/// Order-to-arrival time of `p` when it picks among its suppliers uniformly.
pub fn node_effective_lead(s: &ScenarioConfig, p: NodeId) -> Pmf {
    let edges = s.topology.supplier_edges(p);
    let leads: Vec<Pmf> = edges.iter().map(|&e| effective_lead(&s.lead_pmf[e])).collect();
    let parts: Vec<(f64, &Pmf)> = leads.iter().map(|l| (1.0, l)).collect();
    Pmf::mixture(&parts).expect("every stock point has a supplier")
}

/// Smallest `S >= 0` minimizing `|ES(S) - target|` for a non-increasing
/// shortfall curve.
pub fn match_shortfall(ltd: &Pmf, target: f64) -> i64 {
    let hi_bound = ltd.max_support() as i64;
    if ltd.expected_shortfall(0) <= target {
        return 0;
    }
    // smallest S with ES(S) <= target
    let (mut lo, mut hi) = (0i64, hi_bound);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if ltd.expected_shortfall(mid) <= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let above = (ltd.expected_shortfall(lo - 1) - target).abs();
    let below = (ltd.expected_shortfall(lo) - target).abs();
    if above <= below {
        lo - 1
    } else {
        lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedLevels {
    /// Installation base-stock level per stock point.
    pub installation: Vec<i64>,
    /// Echelon level per stock point: own level plus the mean echelon level
    /// of its customers.
    pub echelon: Vec<i64>,
    /// Expected installation backorders at the chosen level.
    pub expected_backorders: Vec<f64>,
    /// Target shortfall per stock point (sum over serial counterparts).
    pub target_backorders: Vec<f64>,
}

/// Aggregates serial solutions into network levels. Retailers keep their
/// serial levels; every upstream stock point gets the level whose expected
/// shortfall over its aggregate lead-time demand matches the summed
/// shortfall of its serial counterparts.
pub fn backorder_match(
    s: &ScenarioConfig,
    systems: &[SerialSystem],
    solutions: &[BaseStockSolution],
) -> Result<MatchedLevels> {
    if systems.len() != solutions.len() {
        return Err(invalid("one solution per serial system required"));
    }
    let t = &s.topology;
    let n = t.len();
    let mut installation = vec![0i64; n];
    let mut expected = vec![0.0; n];
    let mut target = vec![0.0; n];
    let mut prop = DemandPropagation::new();

    for p in 0..n {
        let hits: Vec<(&SerialSystem, usize, &BaseStockSolution)> = systems
            .iter()
            .zip(solutions)
            .filter_map(|(sys, sol)| {
                sys.stages
                    .iter()
                    .position(|st| st.node == p)
                    .map(|j| (sys, j, sol))
            })
            .collect();
        if hits.is_empty() {
            return Err(Error::Validation(format!(
                "{} lies on no path from a retailer",
                t.name(p)
            )));
        }
        if t.is_retailer(p) {
            let sum: i64 = hits.iter().map(|(_, j, sol)| sol.installation[*j]).sum();
            let k = hits.len() as i64;
            installation[p] = (2 * sum + k).div_euclid(2 * k);
            let ltd = compound_lead_time_demand(&s.demand_pmf[p].clone().unwrap(), &node_effective_lead(s, p));
            expected[p] = ltd.expected_shortfall(installation[p]);
            target[p] = hits.iter().map(|(_, j, sol)| sol.expected_backorders[*j]).sum::<f64>() / k as f64;
            continue;
        }
        let mut tgt = 0.0;
        for (sys, j, sol) in &hits {
            let st = &sys.stages[*j];
            let count = (1.0 / st.routing).round() as usize;
            let stream = thin_random_routing(&sys.demand, count)?;
            tgt += compound_lead_time_demand(&stream, &st.lead).expected_shortfall(sol.installation[*j]);
        }
        let agg = compound_lead_time_demand(&prop.demand_at(s, p)?, &node_effective_lead(s, p));
        let level = match_shortfall(&agg, tgt);
        installation[p] = level;
        expected[p] = agg.expected_shortfall(level);
        target[p] = tgt;
    }

    let mut echelon = vec![0i64; n];
    for p in t.downstream_first() {
        let succ = t.successors(p);
        let below = if succ.is_empty() {
            0.0
        } else {
            succ.iter().map(|&c| echelon[c] as f64).sum::<f64>() / succ.len() as f64
        };
        echelon[p] = installation[p] + below.round() as i64;
    }

    Ok(MatchedLevels {
        installation,
        echelon,
        expected_backorders: expected,
        target_backorders: target,
    })
}

/// Order-up-to policy: order `clamp(bsl - IP, 0, o_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseStockPolicy {
    pub bsl: Vec<i64>,
    pub o_max: Vec<i64>,
}

impl BaseStockPolicy {
    pub fn new(bsl: Vec<i64>, o_max: Vec<i64>) -> Self {
        BaseStockPolicy { bsl, o_max }
    }

    pub fn for_scenario(s: &ScenarioConfig, bsl: Vec<i64>) -> Self {
        let o_max = s.params.iter().map(|p| p.o_max).collect();
        Self::new(bsl, o_max)
    }

    pub fn raw_order(&self, p: usize, ip: i64) -> i64 {
        (self.bsl[p] - ip).clamp(0, self.o_max[p])
    }
}

impl Policy for BaseStockPolicy {
    fn act(&mut self, obs: &Observation, out: &mut [f64]) {
        assert_eq!(obs.ip.len(), self.bsl.len(), "observation covers every stock point");
        for (p, a) in out.iter_mut().enumerate() {
            *a = encode_action(self.raw_order(p, obs.ip[p]), self.o_max[p]);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicResult {
    pub levels: MatchedLevels,
    pub benchmark: EvalResult,
    pub eval_seed: u64,
}

impl HeuristicResult {
    pub fn bsl(&self) -> &[i64] {
        &self.levels.installation
    }
}

/// Base-stock levels only (no evaluation run).
pub fn heuristic_levels(s: &ScenarioConfig) -> Result<MatchedLevels> {
    let report = validate_heuristic_preconditions(s);
    if !report.is_ok() {
        return Err(Error::Preconditions(report.violations));
    }
    let systems = decompose(s)?;
    let solutions = systems
        .iter()
        .map(shang_song_serial)
        .collect::<Result<Vec<_>>>()?;
    backorder_match(s, &systems, &solutions)
}

/// Full heuristic: levels plus the simulated benchmark cost under the
/// scenario's evaluation protocol. Returns the scenario with levels filled in.
pub fn da_heuristic(s: &ScenarioConfig, eval_seed: u64) -> Result<(Arc<ScenarioConfig>, HeuristicResult)> {
    let levels = heuristic_levels(s)?;
    let scenario = Arc::new(s.with_bsl(&levels.installation)?);
    let mut policy = BaseStockPolicy::for_scenario(&scenario, levels.installation.clone());
    let benchmark = evaluate_policy(&mut policy, &scenario, scenario.eval, eval_seed)?;
    Ok((
        scenario,
        HeuristicResult {
            levels,
            benchmark,
            eval_seed,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::make_poisson;
    use crate::network::build_scenario;
    use approx::assert_abs_diff_eq;

    fn stage(node: usize, lead: Pmf, h: f64) -> SerialStage {
        SerialStage {
            node,
            edge: node,
            lead,
            local_h: h,
            routing: 1.0,
        }
    }

    #[test]
    fn echelon_costs() {
        let e = echelon_holding_costs(&[1.0, 0.6, 0.4]).unwrap();
        for (a, b) in e.iter().zip([0.4, 0.2, 0.4]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_eq!(echelon_holding_costs(&[1.0]).unwrap(), vec![1.0]);
        let e = echelon_holding_costs(&[1.0, 0.6]).unwrap();
        assert_abs_diff_eq!(e[0], 0.4, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 0.6, epsilon = 1e-12);
        assert!(echelon_holding_costs(&[0.6, 1.0]).is_err());
        assert!(echelon_holding_costs(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn deterministic_single_stage() {
        let sys = SerialSystem {
            retailer: 0,
            demand: Pmf::point(10),
            backorder_cost: 19.0,
            stages: vec![stage(0, Pmf::point(2), 1.0)],
        };
        let sol = shang_song_serial(&sys).unwrap();
        assert_eq!(sol.echelon, vec![20]);
        assert_eq!(sol.installation, vec![20]);
        assert_eq!(sol.expected_backorders, vec![0.0]);
    }

    #[test]
    fn single_stage_uses_95_percent_fractile() {
        let d = make_poisson(10.0, 1e-12).unwrap();
        let sys = SerialSystem {
            retailer: 0,
            demand: d.clone(),
            backorder_cost: 19.0,
            stages: vec![stage(0, Pmf::point(2), 1.0)],
        };
        let sol = shang_song_serial(&sys).unwrap();
        // cumulative-sum oracle on Poisson(20)
        let mut cum = 0.0;
        let mut term = (-20.0f64).exp();
        let mut k = 0;
        loop {
            cum += term;
            if cum >= 0.95 {
                break;
            }
            k += 1;
            term *= 20.0 / k as f64;
        }
        assert_eq!(sol.echelon[0], k);
    }

    #[test]
    fn decomposition_counts() {
        let a1 = build_scenario("A1", None).unwrap();
        let systems = decompose(&a1).unwrap();
        assert_eq!(systems.len(), 3);
        assert!(systems.iter().all(|s| s.len() == 2));

        let b1 = build_scenario("B1", None).unwrap();
        let systems = decompose(&b1).unwrap();
        // path-enumeration oracle: one system per inbound edge of each
        // retailer, since every warehouse is fed by the outside source
        let expected: usize = b1
            .topology
            .retailers()
            .iter()
            .map(|&r| b1.topology.supplier_edges(r).len())
            .sum();
        assert_eq!(systems.len(), expected);
        let r2 = b1.topology.index_of("R2").unwrap();
        assert_eq!(systems.iter().filter(|s| s.retailer == r2).count(), 2);
        for s in systems.iter().filter(|s| s.retailer == r2) {
            assert_eq!(s.stages[1].routing, 0.5);
        }
    }

    #[test]
    fn serial_chain_is_one_system() {
        let text = r#"
nodes = ["T", "M", "R"]
edges = [["EXT", "T"], ["T", "M"], ["M", "R"]]
"#;
        let s = ScenarioConfig::from_config("chain", text, None).unwrap();
        let systems = decompose(&s).unwrap();
        assert_eq!(systems.len(), 1);
        assert_eq!(systems[0].len(), 3);
    }

    #[test]
    fn upstream_streams() {
        let text = r#"
nodes = ["W", "R"]
edges = [["EXT", "W"], ["W", "R"]]
[demand.default]
kind = "point"
value = 10
"#;
        let s = ScenarioConfig::from_config("x", text, None).unwrap();
        assert_eq!(upstream_demand_pmf(&s, 0).unwrap(), Pmf::point(10));
        assert!(upstream_demand_pmf(&s, 1).is_err());

        let text = r#"
nodes = ["W", "R1", "R2"]
edges = [["EXT", "W"], ["W", "R1"], ["W", "R2"]]
[demand.default]
kind = "point"
value = 10
"#;
        let s = ScenarioConfig::from_config("x", text, None).unwrap();
        assert_eq!(upstream_demand_pmf(&s, 0).unwrap(), Pmf::point(20));

        let text = r#"
nodes = ["W1", "W2", "R"]
edges = [["EXT", "W1"], ["EXT", "W2"], ["W1", "R"], ["W2", "R"]]
[demand.default]
kind = "point"
value = 10
"#;
        let s = ScenarioConfig::from_config("x", text, None).unwrap();
        for w in [0, 1] {
            let d = upstream_demand_pmf(&s, w).unwrap();
            assert_eq!(d.p(0), 0.5);
            assert_eq!(d.p(10), 0.5);
        }
    }

    #[test]
    fn shortfall_matching_is_monotone() {
        let ltd = compound_lead_time_demand(&make_poisson(20.0, 1e-12).unwrap(), &Pmf::point(2));
        let mut last = i64::MAX;
        for i in 0..60 {
            let target = 0.05 * i as f64;
            let s = match_shortfall(&ltd, target);
            assert!(s <= last, "target {target}: {s} > {last}");
            last = s;
        }
        for s in [30, 40, 45, 55] {
            assert_eq!(match_shortfall(&ltd, ltd.expected_shortfall(s)), s);
        }
    }

    #[test]
    fn base_stock_policy_orders() {
        let mut pol = BaseStockPolicy::new(vec![40], vec![50]);
        let mut out = [0.0];
        for (ip, q) in [(40, 0), (33, 7), (40 - 60, 50), (55, 0)] {
            pol.act(&Observation { ip: vec![ip], scaled: vec![0.0] }, &mut out);
            assert_eq!(crate::simulator::decode_action(out[0], 50).0, q);
        }
    }

    #[test]
    fn refuses_on_precondition_violation() {
        let mut s = build_scenario("A1", None).unwrap();
        s.params[0].b = 3.0;
        assert!(matches!(heuristic_levels(&s), Err(Error::Preconditions(_))));
    }

    #[test]
    fn a1_levels() {
        let a1 = build_scenario("A1", None).unwrap();
        let lv = heuristic_levels(&a1).unwrap();
        assert_eq!(lv.installation.len(), 4);
        assert!(lv.installation.iter().all(|s| *s > 0), "{:?}", lv);
        let r = a1.topology.retailers();
        assert!(r.iter().all(|&p| lv.installation[p] == lv.installation[r[0]]));
    }
}
