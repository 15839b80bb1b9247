//! The inventory MDP: event-sequenced transitions, costs, observation and
//! action codecs, and policy evaluation.
//!
//! Each period runs three events in order:
//!
//! 1. shipments due this period arrive;
//! 2. every stock point (all echelons in parallel, from post-arrival stock)
//!    serves its backlog and then last period's new orders, rationing scarce
//!    stock to customers in ascending inventory-position order;
//! 3. every stock point orders from one uniformly chosen supplier and
//!    retailers record this period's external demand.
//!
//! External suppliers have unlimited stock but obey the same timing, so an
//! order placed in period `t` ships in `t + 1` and arrives in `t + 1 + lead`.

use std::io::Write;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{EvalProtocol, ScenarioConfig, Supplier};

/// Rewards handed to the learner are costs divided by this.
pub const REWARD_SCALE: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimState {
    /// Last completed period (0 after reset).
    pub period: usize,
    /// On-hand stock per stock point after the last fulfillment event.
    pub on_hand: Vec<i64>,
    /// Per edge, ring buffer of quantities keyed by `arrival_period % len`.
    pub pipeline: Vec<Vec<i64>>,
    /// Per edge, units the supplier owes the customer.
    pub backorders: Vec<i64>,
    /// Per stock point, units owed to external customers.
    pub ext_backorders: Vec<i64>,
    /// Per edge, the order placed by the customer in the previous period.
    pub open_orders: Vec<i64>,
    /// Per stock point, external demand recorded in the previous period.
    pub ext_open: Vec<i64>,
    /// Per stock point, units ordered that have not yet arrived.
    pub on_order: Vec<i64>,
}

impl SimState {
    pub fn in_transit(&self) -> i64 {
        self.pipeline.iter().flatten().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub ip: Vec<i64>,
    pub scaled: Vec<f64>,
}

/// Cost breakdown and bookkeeping for one period.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub period: usize,
    pub holding: Vec<f64>,
    pub backorder: Vec<f64>,
    /// `holding + backorder` per stock point.
    pub node_cost: Vec<f64>,
    pub total_cost: f64,
    pub orders: Vec<i64>,
    pub action_clamped: bool,
    pub external_injected: i64,
    pub external_shipped: i64,
    /// Units owed to any customer after fulfillment, per stock point.
    pub backlog: Vec<i64>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f64,
    pub info: StepInfo,
}

/// Maps scaled actions in [-1, 1] to integer order quantities.
pub fn decode_action(a: f64, o_max: i64) -> (i64, bool) {
    let clamped = if a.is_nan() { -1.0 } else { a.clamp(-1.0, 1.0) };
    let raw = ((clamped + 1.0) / 2.0 * o_max as f64).round() as i64;
    (raw.clamp(0, o_max), clamped != a)
}

/// Inverse of [`decode_action`] for a raw quantity.
pub fn encode_action(order: i64, o_max: i64) -> f64 {
    if o_max <= 0 {
        return -1.0;
    }
    (2.0 * order.clamp(0, o_max) as f64 / o_max as f64 - 1.0).clamp(-1.0, 1.0)
}

/// Scales an inventory position into [-1, 1].
pub fn scale_ip(ip: i64, ip_min: i64, ip_max: i64) -> f64 {
    let span = (ip_max - ip_min) as f64;
    if span <= 0.0 {
        return 0.0;
    }
    (2.0 * (ip - ip_min) as f64 / span - 1.0).clamp(-1.0, 1.0)
}

/// A deterministic decision rule mapping an observation to scaled actions.
pub trait Policy {
    fn act(&mut self, obs: &Observation, out: &mut [f64]);
}

impl<F: FnMut(&Observation, &mut [f64])> Policy for F {
    fn act(&mut self, obs: &Observation, out: &mut [f64]) {
        self(obs, out)
    }
}

/// Static per-node wiring precomputed from the topology.
#[derive(Debug)]
struct Wiring {
    /// Internal outbound edges per node.
    customers: Vec<Vec<usize>>,
    /// Inbound edges per node.
    suppliers: Vec<Vec<usize>>,
    /// Edges whose supplier is the outside source.
    external_edges: Vec<usize>,
    retailer: Vec<bool>,
    ring: usize,
}

pub struct Simulator {
    scenario: Arc<ScenarioConfig>,
    initial: Vec<i64>,
    wiring: Wiring,
    state: SimState,
    rng: ChaCha8Rng,
    // per-period draws
    lead_draw: Vec<usize>,
    route_draw: Vec<usize>,
    demand_draw: Vec<i64>,
    ip_buf: Vec<i64>,
    order_buf: Vec<i64>,
    ship_buf: Vec<i64>,
    cust_buf: Vec<(i64, usize)>,
    zero_lead: Vec<(usize, i64)>,
}

impl Simulator {
    /// Environment starting every episode with on-hand stock at the
    /// scenario's base-stock levels.
    pub fn new(scenario: Arc<ScenarioConfig>, seed: u64) -> Result<Self> {
        let bsl = scenario
            .bsl()
            .ok_or_else(|| Error::Config("scenario has no base-stock levels; run the heuristic first".into()))?;
        Self::with_initial(scenario, bsl, seed)
    }

    /// Environment starting every episode with on-hand stock `initial`.
    pub fn with_initial(scenario: Arc<ScenarioConfig>, initial: Vec<i64>, seed: u64) -> Result<Self> {
        let t = &scenario.topology;
        let n = t.len();
        if initial.len() != n {
            return Err(Error::Config(format!(
                "initial stock has {} entries for {} stock points",
                initial.len(),
                n
            )));
        }
        let m = t.edges().len();
        let max_lead = scenario.lead_pmf.iter().map(|p| p.max_support()).max().unwrap_or(0);
        let wiring = Wiring {
            customers: (0..n).map(|p| t.customer_edges(p).to_vec()).collect(),
            suppliers: (0..n).map(|p| t.supplier_edges(p).to_vec()).collect(),
            external_edges: (0..m)
                .filter(|&e| t.edge(e).supplier == Supplier::External)
                .collect(),
            retailer: (0..n).map(|p| t.is_retailer(p)).collect(),
            ring: max_lead + 1,
        };
        let state = SimState {
            period: 0,
            on_hand: initial.clone(),
            pipeline: vec![vec![0; wiring.ring]; m],
            backorders: vec![0; m],
            ext_backorders: vec![0; n],
            open_orders: vec![0; m],
            ext_open: vec![0; n],
            on_order: vec![0; n],
        };
        Ok(Simulator {
            scenario,
            initial,
            wiring,
            state,
            rng: ChaCha8Rng::seed_from_u64(seed),
            lead_draw: vec![0; m],
            route_draw: vec![0; n],
            demand_draw: vec![0; n],
            ip_buf: vec![0; n],
            order_buf: vec![0; n],
            ship_buf: Vec::new(),
            cust_buf: Vec::new(),
            zero_lead: Vec::new(),
        })
    }

    pub fn scenario(&self) -> &Arc<ScenarioConfig> {
        &self.scenario
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    /// Direct state access for scripted scenarios and tests.
    pub fn state_mut(&mut self) -> &mut SimState {
        &mut self.state
    }

    pub fn num_stock_points(&self) -> usize {
        self.state.on_hand.len()
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Restores the initial state: stock at the initial levels, nothing in
    /// transit, no orders or backorders.
    pub fn reset(&mut self) -> Observation {
        let s = &mut self.state;
        s.period = 0;
        s.on_hand.copy_from_slice(&self.initial);
        for ring in &mut s.pipeline {
            ring.iter_mut().for_each(|x| *x = 0);
        }
        for v in [
            &mut s.backorders,
            &mut s.ext_backorders,
            &mut s.open_orders,
            &mut s.ext_open,
            &mut s.on_order,
        ] {
            v.iter_mut().for_each(|x| *x = 0);
        }
        self.observe()
    }

    /// Inventory position: on-hand plus on-order minus everything owed to
    /// customers (unprocessed orders and backorders).
    pub fn inventory_position(&self, p: usize) -> i64 {
        let s = &self.state;
        let mut owed = s.ext_open[p] + s.ext_backorders[p];
        for &e in &self.wiring.customers[p] {
            owed += s.open_orders[e] + s.backorders[e];
        }
        s.on_hand[p] + s.on_order[p] - owed
    }

    pub fn inventory_positions(&self) -> Vec<i64> {
        (0..self.num_stock_points()).map(|p| self.inventory_position(p)).collect()
    }

    pub fn observe(&self) -> Observation {
        let ip = self.inventory_positions();
        let scaled = ip
            .iter()
            .zip(&self.scenario.params)
            .map(|(&v, sp)| scale_ip(v, sp.ip_min, sp.ip_max()))
            .collect();
        Observation { ip, scaled }
    }

    /// Advances one period using scaled actions.
    pub fn step(&mut self, action: &[f64]) -> StepOutcome {
        assert_eq!(action.len(), self.num_stock_points(), "action dimension");
        let mut clamped = false;
        let mut orders = std::mem::take(&mut self.order_buf);
        for (p, a) in action.iter().enumerate() {
            let (q, c) = decode_action(*a, self.scenario.params[p].o_max);
            orders[p] = q;
            clamped |= c;
        }
        let mut out = self.step_orders(&orders, None);
        self.order_buf = orders;
        out.info.action_clamped = clamped;
        out
    }

    /// Advances one period with raw integer orders. `demand` overrides the
    /// sampled external demand per stock point (ignored for non-retailers).
    pub fn step_orders(&mut self, orders: &[i64], demand: Option<&[i64]>) -> StepOutcome {
        let n = self.num_stock_points();
        assert_eq!(orders.len(), n, "order dimension");
        self.draw_randomness();
        if let Some(d) = demand {
            self.demand_draw[..n].copy_from_slice(&d[..n]);
        }
        let t = self.state.period + 1;
        let mut info = StepInfo {
            period: t,
            holding: vec![0.0; n],
            backorder: vec![0.0; n],
            node_cost: vec![0.0; n],
            orders: vec![0; n],
            backlog: vec![0; n],
            ..Default::default()
        };

        self.receive(t);
        self.fulfill(t, &mut info);

        let sc = Arc::clone(&self.scenario);
        let s = &self.state;
        let mut total = 0.0;
        for p in 0..n {
            let h = sc.params[p].h * s.on_hand[p] as f64;
            let b = sc.params[p].b * s.ext_backorders[p] as f64;
            info.holding[p] = h;
            info.backorder[p] = b;
            info.node_cost[p] = h + b;
            total += h + b;
            let mut backlog = s.ext_backorders[p];
            for &e in &self.wiring.customers[p] {
                backlog += s.backorders[e];
            }
            info.backlog[p] = backlog;
        }
        info.total_cost = total;

        self.place_orders(orders, &mut info);
        self.state.period = t;

        StepOutcome {
            observation: self.observe(),
            reward: -total / REWARD_SCALE,
            info,
        }
    }

    /// A fixed number of uniform draws per period regardless of policy, so
    /// two policies run on the same seed see identical demand, lead times and
    /// routing choices.
    fn draw_randomness(&mut self) {
        let sc = &self.scenario;
        for (e, pmf) in sc.lead_pmf.iter().enumerate() {
            let u: f64 = self.rng.gen();
            self.lead_draw[e] = pmf.sample_with(u);
        }
        for p in 0..self.route_draw.len() {
            let u: f64 = self.rng.gen();
            let k = self.wiring.suppliers[p].len();
            self.route_draw[p] = ((u * k as f64) as usize).min(k - 1);
        }
        for p in 0..self.demand_draw.len() {
            let u: f64 = self.rng.gen();
            self.demand_draw[p] = match &sc.demand_pmf[p] {
                Some(pmf) => pmf.sample_with(u) as i64,
                None => 0,
            };
        }
    }

    fn receive(&mut self, t: usize) {
        let ring = self.wiring.ring;
        let s = &mut self.state;
        for (e, slots) in s.pipeline.iter_mut().enumerate() {
            let q = std::mem::take(&mut slots[t % ring]);
            if q != 0 {
                let c = self.scenario.topology.edge(e).customer;
                s.on_hand[c] += q;
                s.on_order[c] -= q;
            }
        }
    }

    fn ship(&mut self, e: usize, q: i64, t: usize) {
        if q == 0 {
            return;
        }
        let lead = self.lead_draw[e];
        if lead == 0 {
            self.zero_lead.push((e, q));
        } else {
            let slot = (t + lead) % self.wiring.ring;
            self.state.pipeline[e][slot] += q;
        }
    }

    fn fulfill(&mut self, t: usize, info: &mut StepInfo) {
        let n = self.num_stock_points();
        for p in 0..n {
            self.ip_buf[p] = self.inventory_position(p);
        }

        // outside source: ships every open order in full
        for i in 0..self.wiring.external_edges.len() {
            let e = self.wiring.external_edges[i];
            let q = std::mem::take(&mut self.state.open_orders[e]);
            info.external_injected += q;
            self.ship(e, q, t);
        }

        for p in 0..n {
            let mut avail = self.state.on_hand[p];
            if self.wiring.retailer[p] {
                // single external customer
                let s = &mut self.state;
                let owed = s.ext_backorders[p] + std::mem::take(&mut s.ext_open[p]);
                let sent = owed.min(avail);
                avail -= sent;
                s.ext_backorders[p] = owed - sent;
                info.external_shipped += sent;
            }
            if !self.wiring.customers[p].is_empty() {
                let mut custs = std::mem::take(&mut self.cust_buf);
                custs.clear();
                custs.extend(
                    self.wiring.customers[p]
                        .iter()
                        .map(|&e| (self.ip_buf[self.scenario.topology.edge(e).customer], e)),
                );
                custs.sort_unstable();
                let mut shipped = std::mem::take(&mut self.ship_buf);
                shipped.clear();
                shipped.resize(custs.len(), 0);
                // backlog first, then last period's orders
                for (i, &(_, e)) in custs.iter().enumerate() {
                    let q = self.state.backorders[e].min(avail);
                    self.state.backorders[e] -= q;
                    avail -= q;
                    shipped[i] += q;
                }
                for (i, &(_, e)) in custs.iter().enumerate() {
                    let o = std::mem::take(&mut self.state.open_orders[e]);
                    let q = o.min(avail);
                    self.state.backorders[e] += o - q;
                    avail -= q;
                    shipped[i] += q;
                }
                for (i, &(_, e)) in custs.iter().enumerate() {
                    self.ship(e, shipped[i], t);
                }
                self.ship_buf = shipped;
                self.cust_buf = custs;
            }
            self.state.on_hand[p] = avail;
        }

        // zero-lead shipments land after all stock points have shipped
        for (e, q) in std::mem::take(&mut self.zero_lead) {
            let c = self.scenario.topology.edge(e).customer;
            self.state.on_hand[c] += q;
            self.state.on_order[c] -= q;
        }
    }

    fn place_orders(&mut self, orders: &[i64], info: &mut StepInfo) {
        let n = self.num_stock_points();
        for p in 0..n {
            let q = orders[p].max(0);
            info.orders[p] = q;
            let e = self.wiring.suppliers[p][self.route_draw[p]];
            self.state.open_orders[e] += q;
            self.state.on_order[p] += q;
            if self.wiring.retailer[p] {
                self.state.ext_open[p] = self.demand_draw[p].max(0);
            }
        }
    }
}

/// Mean and per-episode cost of a deterministic policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub mean_cost: f64,
    pub std_cost: f64,
    pub episode_costs: Vec<f64>,
    /// Mean scored-window cost per stock point.
    pub node_costs: Vec<f64>,
}

/// Seed of evaluation episode `i`; shared by every policy evaluated with the
/// same master seed (common random numbers).
pub fn episode_seed(seed: u64, i: usize) -> u64 {
    crate::rng::derive_seed(seed, &[0x45_56_41_4c, i as u64])
}

/// Runs `protocol.episodes` episodes of `protocol.steps` periods and scores
/// the unscaled cost summed over the periods after the warm-up.
pub fn evaluate_policy(
    policy: &mut dyn Policy,
    scenario: &Arc<ScenarioConfig>,
    protocol: EvalProtocol,
    seed: u64,
) -> Result<EvalResult> {
    if protocol.warmup >= protocol.steps {
        return Err(Error::InvalidParameter(format!(
            "warm-up {} must be shorter than episode length {}",
            protocol.warmup, protocol.steps
        )));
    }
    let mut sim = Simulator::new(Arc::clone(scenario), seed)?;
    evaluate_with(&mut sim, policy, protocol, seed)
}

/// [`evaluate_policy`] on an existing simulator (keeps its initial levels).
pub fn evaluate_with(
    sim: &mut Simulator,
    policy: &mut dyn Policy,
    protocol: EvalProtocol,
    seed: u64,
) -> Result<EvalResult> {
    let n = sim.num_stock_points();
    let mut action = vec![0.0; n];
    let mut episode_costs = Vec::with_capacity(protocol.episodes);
    let mut node_costs = vec![0.0; n];
    for i in 0..protocol.episodes {
        sim.reseed(episode_seed(seed, i));
        let mut obs = sim.reset();
        let mut cost = 0.0;
        for step in 0..protocol.steps {
            policy.act(&obs, &mut action);
            let out = sim.step(&action);
            if step >= protocol.warmup {
                cost += out.info.total_cost;
                for (acc, c) in node_costs.iter_mut().zip(&out.info.node_cost) {
                    *acc += c;
                }
            }
            obs = out.observation;
        }
        episode_costs.push(cost);
    }
    let k = protocol.episodes.max(1) as f64;
    let mean_cost = episode_costs.iter().sum::<f64>() / k;
    let std_cost = (episode_costs.iter().map(|c| (c - mean_cost).powi(2)).sum::<f64>() / k).sqrt();
    node_costs.iter_mut().for_each(|c| *c /= k);
    Ok(EvalResult {
        mean_cost,
        std_cost,
        episode_costs,
        node_costs,
    })
}

/// A decision rule applied to many observations at once (one output row of
/// scaled actions per observation).
pub trait BatchPolicy {
    fn act_batch(&mut self, obs: &[Observation], out: &mut [f64]);
}

/// Lifts a single-observation policy to batches.
pub struct PerRow<P>(pub P);

impl<P: Policy> BatchPolicy for PerRow<P> {
    fn act_batch(&mut self, obs: &[Observation], out: &mut [f64]) {
        let n = out.len() / obs.len().max(1);
        for (o, row) in obs.iter().zip(out.chunks_mut(n)) {
            self.0.act(o, row);
        }
    }
}

/// Same protocol and seeds as [`evaluate_policy`], stepping all episodes in
/// lockstep so the policy sees one batch per period.
pub fn evaluate_batched(
    policy: &mut dyn BatchPolicy,
    scenario: &Arc<ScenarioConfig>,
    protocol: EvalProtocol,
    seed: u64,
) -> Result<EvalResult> {
    if protocol.warmup >= protocol.steps {
        return Err(Error::InvalidParameter(format!(
            "warm-up {} must be shorter than episode length {}",
            protocol.warmup, protocol.steps
        )));
    }
    let n = scenario.topology.len();
    let k = protocol.episodes;
    let mut sims = Vec::with_capacity(k);
    let mut obs = Vec::with_capacity(k);
    for i in 0..k {
        let mut sim = Simulator::new(Arc::clone(scenario), episode_seed(seed, i))?;
        obs.push(sim.reset());
        sims.push(sim);
    }
    let mut actions = vec![0.0; k * n];
    let mut episode_costs = vec![0.0; k];
    let mut per_episode_nodes = vec![0.0; k * n];
    for step in 0..protocol.steps {
        policy.act_batch(&obs, &mut actions);
        for (i, sim) in sims.iter_mut().enumerate() {
            let out = sim.step(&actions[i * n..(i + 1) * n]);
            if step >= protocol.warmup {
                episode_costs[i] += out.info.total_cost;
                for (acc, c) in per_episode_nodes[i * n..(i + 1) * n].iter_mut().zip(&out.info.node_cost) {
                    *acc += c;
                }
            }
            obs[i] = out.observation;
        }
    }
    let kf = k.max(1) as f64;
    let mean_cost = episode_costs.iter().sum::<f64>() / kf;
    let std_cost = (episode_costs.iter().map(|c| (c - mean_cost).powi(2)).sum::<f64>() / kf).sqrt();
    let mut node_costs = vec![0.0; n];
    for row in per_episode_nodes.chunks(n.max(1)) {
        node_costs.iter_mut().zip(row).for_each(|(a, c)| *a += c);
    }
    node_costs.iter_mut().for_each(|c| *c /= kf);
    Ok(EvalResult {
        mean_cost,
        std_cost,
        episode_costs,
        node_costs,
    })
}

/// One row of the optional trajectory dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub period: usize,
    pub stock_point: String,
    pub on_hand: i64,
    pub ip: i64,
    pub order_placed: i64,
    pub backlog: i64,
    pub cost: f64,
}

/// Rows for one step, taken right after it.
pub fn trajectory_rows(sim: &Simulator, info: &StepInfo) -> Vec<TrajectoryRow> {
    let t = &sim.scenario().topology;
    (0..sim.num_stock_points())
        .map(|p| TrajectoryRow {
            period: info.period,
            stock_point: t.name(p).to_string(),
            on_hand: sim.state().on_hand[p],
            ip: sim.inventory_position(p),
            order_placed: info.orders[p],
            backlog: info.backlog[p],
            cost: info.node_cost[p],
        })
        .collect()
}

pub fn write_trajectory_csv<W: Write>(rows: &[TrajectoryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(["period", "stock_point", "on_hand", "ip", "order_placed", "backlog", "cost"])?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Pmf;
    use crate::network::{build_scenario, ScenarioConfig};

    fn single_retailer() -> Arc<ScenarioConfig> {
        let text = r#"
nodes = ["R"]
edges = [["EXT", "R"]]
[demand.default]
kind = "point"
value = 0
"#;
        let s = ScenarioConfig::from_config("single", text, None).unwrap();
        Arc::new(s.with_bsl(&[20]).unwrap())
    }

    #[test]
    fn single_retailer_trace() {
        let sc = single_retailer();
        let mut sim = Simulator::new(sc, 0).unwrap();
        sim.reset();
        let o1 = sim.step_orders(&[5], Some(&[7]));
        let o2 = sim.step_orders(&[0], Some(&[0]));
        let o3 = sim.step_orders(&[0], Some(&[0]));
        let costs: Vec<f64> = [&o1, &o2, &o3].iter().map(|o| -o.reward * REWARD_SCALE).collect();
        assert_eq!(costs, vec![20.0, 13.0, 18.0]);
        assert_eq!(o1.info.total_cost, 20.0);
        // IP ledger: 20 + 5 - 7, unchanged, unchanged
        assert_eq!(o1.observation.ip, vec![18]);
        assert_eq!(o2.observation.ip, vec![18]);
        assert_eq!(o3.observation.ip, vec![18]);
        assert_eq!(sim.state().on_order, vec![0]);
    }

    #[test]
    fn retailer_stockout_backorders() {
        let sc = single_retailer();
        let mut sim = Simulator::new(sc, 0).unwrap();
        sim.reset();
        sim.state_mut().on_hand[0] = 3;
        sim.state_mut().ext_open[0] = 7;
        let out = sim.step_orders(&[0], Some(&[0]));
        assert_eq!(out.info.external_shipped, 3);
        assert_eq!(sim.state().ext_backorders, vec![4]);
        assert_eq!(out.info.holding, vec![0.0]);
        assert_eq!(out.info.backorder, vec![76.0]);
    }

    #[test]
    fn lowest_ip_served_first() {
        let sc = Arc::new(build_scenario("A1", None).unwrap().with_bsl(&[0, 0, 0, 0]).unwrap());
        let mut sim = Simulator::new(Arc::clone(&sc), 0).unwrap();
        sim.reset();
        let t = &sc.topology;
        let w = t.index_of("W1").unwrap();
        let r1 = t.index_of("R1").unwrap();
        let r2 = t.index_of("R2").unwrap();
        let e1 = t.supplier_edges(r1)[0];
        let e2 = t.supplier_edges(r2)[0];
        {
            let s = sim.state_mut();
            s.on_hand[w] = 5;
            s.open_orders[e1] = 4;
            s.open_orders[e2] = 4;
            s.on_order[r1] = 4;
            s.on_order[r2] = 4;
            s.ext_open[r1] = 2;
            s.ext_open[r2] = 5;
        }
        assert_eq!(sim.inventory_position(r1), 2);
        assert_eq!(sim.inventory_position(r2), -1);
        sim.step_orders(&[0; 4], Some(&[0; 4]));
        let s = sim.state();
        assert_eq!(s.in_transit(), 5);
        assert_eq!(s.backorders[e2], 0);
        assert_eq!(s.backorders[e1], 3);
        assert_eq!(s.pipeline[e2].iter().sum::<i64>(), 4);
        assert_eq!(s.pipeline[e1].iter().sum::<i64>(), 1);
    }

    #[test]
    fn reset_and_positions() {
        let sc = Arc::new(build_scenario("A1", None).unwrap().with_bsl(&[40, 25, 25, 25]).unwrap());
        let mut sim = Simulator::new(Arc::clone(&sc), 3).unwrap();
        let obs = sim.reset();
        assert_eq!(obs.ip, vec![40, 25, 25, 25]);
        let before = sim.inventory_position(0);
        sim.step_orders(&[5, 0, 0, 0], Some(&[0; 4]));
        assert_eq!(sim.inventory_position(0), before + 5);

        let zero = Arc::new(build_scenario("A1", None).unwrap().with_bsl(&[0; 4]).unwrap());
        let obs = Simulator::new(Arc::clone(&zero), 0).unwrap().reset();
        for (p, v) in obs.scaled.iter().enumerate() {
            let sp = &zero.params[p];
            assert_eq!(*v, scale_ip(0, sp.ip_min, sp.ip_max()));
        }

        let mut a = Simulator::new(Arc::clone(&sc), 11).unwrap();
        let mut b = Simulator::new(Arc::clone(&sc), 11).unwrap();
        assert_eq!(a.reset(), b.reset());
        assert!(Simulator::with_initial(sc, vec![1, 2], 0).is_err());
    }

    #[test]
    fn action_codec() {
        assert_eq!(decode_action(-1.0, 50), (0, false));
        assert_eq!(decode_action(1.0, 50), (50, false));
        assert_eq!(decode_action(0.0, 50), (25, false));
        assert_eq!(decode_action(3.0, 50), (50, true));
        assert_eq!(decode_action(f64::NAN, 50).0, 0);
        for q in 0..=50 {
            assert_eq!(decode_action(encode_action(q, 50), 50).0, q);
        }
        assert_eq!(scale_ip(-100, -100, 50), -1.0);
        assert_eq!(scale_ip(50, -100, 50), 1.0);
        assert_eq!(scale_ip(500, -100, 50), 1.0);
    }

    #[test]
    fn zero_demand_eval_is_pure_holding() {
        let text = r#"
nodes = ["W", "R1", "R2"]
edges = [["EXT", "W"], ["W", "R1"], ["W", "R2"]]
[demand.default]
kind = "point"
value = 0
"#;
        let s = ScenarioConfig::from_config("zero", text, None).unwrap();
        let s = Arc::new(s.with_bsl(&[30, 12, 9]).unwrap());
        let mut hold = |_: &Observation, out: &mut [f64]| out.iter_mut().for_each(|a| *a = -1.0);
        let res = evaluate_policy(&mut hold, &s, EvalProtocol::default(), 1).unwrap();
        let expect = 50.0 * (0.6 * 30.0 + 12.0 + 9.0);
        assert_eq!(res.mean_cost, expect);
        assert!(res.episode_costs.iter().all(|c| *c == expect));
        assert_eq!(res.episode_costs.len(), 100);
    }

    #[test]
    fn batched_eval_matches_sequential() {
        let s = Arc::new(build_scenario("A1", None).unwrap().with_bsl(&[61, 34, 34, 34]).unwrap());
        let pol = crate::heuristic::BaseStockPolicy::for_scenario(&s, vec![61, 34, 34, 34]);
        let proto = EvalProtocol { episodes: 12, steps: 40, warmup: 10 };
        let a = evaluate_policy(&mut pol.clone(), &s, proto, 5).unwrap();
        let b = evaluate_batched(&mut PerRow(pol), &s, proto, 5).unwrap();
        assert_eq!(a.episode_costs, b.episode_costs);
        assert_eq!(a.mean_cost, b.mean_cost);
        for (x, y) in a.node_costs.iter().zip(&b.node_costs) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn eval_rejects_bad_warmup() {
        let s = single_retailer();
        let mut p = |_: &Observation, _: &mut [f64]| {};
        let proto = EvalProtocol { episodes: 1, steps: 5, warmup: 5 };
        assert!(evaluate_policy(&mut p, &s, proto, 0).is_err());
    }

    #[test]
    fn zero_lead_lands_same_period() {
        let text = r#"
nodes = ["R"]
edges = [["EXT", "R"]]
[demand.default]
kind = "point"
value = 0
[lead_time.default]
kind = "static"
periods = 0
"#;
        let s = ScenarioConfig::from_config("z", text, None).unwrap();
        let s = Arc::new(s.with_bsl(&[0]).unwrap());
        assert_eq!(s.lead_pmf[0], Pmf::point(0));
        let mut sim = Simulator::new(s, 0).unwrap();
        sim.reset();
        sim.step_orders(&[4], None);
        let out = sim.step_orders(&[0], None);
        assert_eq!(sim.state().on_hand, vec![4]);
        assert_eq!(out.info.holding, vec![4.0]);
    }

    #[test]
    fn trajectory_csv_has_header() {
        let mut buf = Vec::new();
        write_trajectory_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            "period,stock_point,on_hand,ip,order_placed,backlog,cost"
        );
    }
}
