//! Supply-network topology and scenario construction.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::{DemandSpec, EmpiricalData, LeadTimeSpec, Pmf};
use crate::error::{Error, Result};

pub type NodeId = usize;

/// Name accepted in config edges for the unlimited outside source.
pub const EXTERNAL: &str = "EXT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Supplier {
    External,
    Node(NodeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub supplier: Supplier,
    pub customer: NodeId,
}

/// Validated supply network. Echelon 1 is the customer-facing retailer layer.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    names: Vec<String>,
    edges: Vec<Edge>,
    echelon: Vec<usize>,
    inbound: Vec<Vec<usize>>,
    outbound: Vec<Vec<usize>>,
}

impl NetworkTopology {
    /// Validates nodes and `(supplier, customer)` name pairs. `retailers`
    /// optionally lists nodes declared as facing external demand.
    pub fn new(
        nodes: &[String],
        edges: &[(String, String)],
        echelon_overrides: &BTreeMap<String, usize>,
        declared_retailers: &BTreeSet<String>,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Validation("network has no stock points".into()));
        }
        let mut index = HashMap::new();
        for (i, n) in nodes.iter().enumerate() {
            if n == EXTERNAL {
                return Err(Error::Validation(format!("{EXTERNAL} is reserved for the outside supplier")));
            }
            if index.insert(n.as_str(), i).is_some() {
                return Err(Error::Validation(format!("duplicate stock point {n}")));
            }
        }
        let lookup = |name: &str| -> Result<NodeId> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| Error::Validation(format!("edge references unknown stock point {name}")))
        };

        let mut parsed = BTreeSet::new();
        for (u, p) in edges {
            let customer = lookup(p)?;
            let supplier = if u == EXTERNAL {
                Supplier::External
            } else {
                let s = lookup(u)?;
                if s == customer {
                    return Err(Error::Validation(format!("self-loop at {u}")));
                }
                Supplier::Node(s)
            };
            if !parsed.insert((customer, supplier)) {
                return Err(Error::Validation(format!("duplicate edge {u} -> {p}")));
            }
        }
        // canonical order: by customer, then supplier (external first)
        let edges: Vec<Edge> = parsed
            .into_iter()
            .map(|(customer, supplier)| Edge { supplier, customer })
            .collect();

        let n = nodes.len();
        let mut inbound = vec![Vec::new(); n];
        let mut outbound = vec![Vec::new(); n];
        for (i, e) in edges.iter().enumerate() {
            inbound[e.customer].push(i);
            if let Supplier::Node(s) = e.supplier {
                outbound[s].push(i);
            }
        }

        for p in 0..n {
            if inbound[p].is_empty() {
                return Err(Error::Validation(format!("orphan stock point {} has no supplier", nodes[p])));
            }
            let ext = inbound[p]
                .iter()
                .filter(|&&e| edges[e].supplier == Supplier::External)
                .count();
            if ext > 0 && ext < inbound[p].len() {
                return Err(Error::Validation(format!(
                    "stock point {} mixes external and internal suppliers",
                    nodes[p]
                )));
            }
            if declared_retailers.contains(&nodes[p]) && !outbound[p].is_empty() {
                return Err(Error::Validation(format!(
                    "retailer {} has internal customers",
                    nodes[p]
                )));
            }
        }

        // Kahn's algorithm from the outside source; leftovers sit on a cycle
        // or hang off one.
        let mut indeg: Vec<usize> = (0..n)
            .map(|p| {
                inbound[p]
                    .iter()
                    .filter(|&&e| matches!(edges[e].supplier, Supplier::Node(_)))
                    .count()
            })
            .collect();
        let mut queue: VecDeque<NodeId> = (0..n).filter(|&p| indeg[p] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(p) = queue.pop_front() {
            order.push(p);
            for &e in &outbound[p] {
                let c = edges[e].customer;
                indeg[c] -= 1;
                if indeg[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if order.len() < n {
            let stuck = (0..n).find(|p| indeg[*p] > 0).unwrap();
            return Err(Error::Validation(format!(
                "cycle detected through stock point {}",
                nodes[stuck]
            )));
        }

        let mut echelon = vec![1usize; n];
        for &p in order.iter().rev() {
            echelon[p] = outbound[p]
                .iter()
                .map(|&e| echelon[edges[e].customer] + 1)
                .max()
                .unwrap_or(1);
        }
        for (name, lvl) in echelon_overrides {
            let p = lookup(name)?;
            if *lvl == 0 {
                return Err(Error::Validation(format!("echelon override for {name} must be >= 1")));
            }
            echelon[p] = *lvl;
        }

        Ok(NetworkTopology {
            names: nodes.to_vec(),
            edges,
            echelon,
            inbound,
            outbound,
        })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, p: NodeId) -> &str {
        &self.names[p]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<NodeId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Edge {
        self.edges[e]
    }

    /// Inbound edge indices of `p` (U_p).
    pub fn supplier_edges(&self, p: NodeId) -> &[usize] {
        &self.inbound[p]
    }

    /// Outbound internal edge indices of `p` (internal part of D_p).
    pub fn customer_edges(&self, p: NodeId) -> &[usize] {
        &self.outbound[p]
    }

    pub fn is_retailer(&self, p: NodeId) -> bool {
        self.outbound[p].is_empty()
    }

    pub fn is_top(&self, p: NodeId) -> bool {
        self.inbound[p]
            .iter()
            .any(|&e| self.edges[e].supplier == Supplier::External)
    }

    pub fn retailers(&self) -> Vec<NodeId> {
        (0..self.len()).filter(|&p| self.is_retailer(p)).collect()
    }

    pub fn echelon(&self, p: NodeId) -> usize {
        self.echelon[p]
    }

    pub fn echelons(&self) -> &[usize] {
        &self.echelon
    }

    pub fn num_echelons(&self) -> usize {
        self.echelon.iter().copied().max().unwrap_or(0)
    }

    /// Internal suppliers of `p`.
    pub fn predecessors(&self, p: NodeId) -> Vec<NodeId> {
        self.inbound[p]
            .iter()
            .filter_map(|&e| match self.edges[e].supplier {
                Supplier::Node(s) => Some(s),
                Supplier::External => None,
            })
            .collect()
    }

    /// Internal customers of `p`.
    pub fn successors(&self, p: NodeId) -> Vec<NodeId> {
        self.outbound[p].iter().map(|&e| self.edges[e].customer).collect()
    }

    /// All stock points strictly downstream of `p`, ascending.
    pub fn descendants(&self, p: NodeId) -> Vec<NodeId> {
        let mut seen = BTreeSet::new();
        let mut stack = self.successors(p);
        while let Some(c) = stack.pop() {
            if seen.insert(c) {
                stack.extend(self.successors(c));
            }
        }
        seen.into_iter().collect()
    }

    /// Stock points ordered from retailers upward (ascending echelon, then
    /// index).
    pub fn downstream_first(&self) -> Vec<NodeId> {
        let mut v: Vec<NodeId> = (0..self.len()).collect();
        v.sort_by_key(|&p| (self.echelon[p], p));
        v
    }

    /// Largest number of suppliers any stock point has.
    pub fn max_in_degree(&self) -> usize {
        self.inbound.iter().map(Vec::len).max().unwrap_or(0)
    }
}

impl fmt::Display for NetworkTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.edges {
            let u = match e.supplier {
                Supplier::External => EXTERNAL,
                Supplier::Node(s) => &self.names[s],
            };
            writeln!(f, "{u} -> {}", self.names[e.customer])?;
        }
        Ok(())
    }
}

/// Per-echelon values, index 0 = echelon 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostTable {
    pub holding: Vec<f64>,
    pub backorder: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsTable {
    pub order_max: Vec<i64>,
    pub ip_min: Vec<i64>,
    pub ip_max_offset: Vec<i64>,
}

impl Default for CostTable {
    fn default() -> Self {
        CostTable {
            holding: vec![1.0, 0.6, 0.4],
            backorder: vec![19.0, 0.0, 0.0],
        }
    }
}

impl Default for BoundsTable {
    fn default() -> Self {
        BoundsTable {
            order_max: vec![50, 150, 500],
            ip_min: vec![-100, -300, -1000],
            ip_max_offset: vec![50, 150, 500],
        }
    }
}

/// Structured-text network/scenario document.
///
/// ```toml
/// nodes = ["W1", "R1"]
/// edges = [["EXT", "W1"], ["W1", "R1"]]
/// [demand.default]
/// kind = "poisson-uniform-mixture"
/// lo = 5
/// hi = 15
/// [lead_time.default]
/// kind = "static"
/// periods = 1
/// ```
///
/// `demand` and `lead_time` are keyed by `default`, a stock-point name, or
/// (lead times only) an edge `U->P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub nodes: Vec<String>,
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub echelon_overrides: BTreeMap<String, usize>,
    #[serde(default)]
    pub demand: BTreeMap<String, DemandSpec>,
    #[serde(default)]
    pub lead_time: BTreeMap<String, LeadTimeSpec>,
    #[serde(default)]
    pub costs: Option<CostTable>,
    #[serde(default)]
    pub bounds: Option<BoundsTable>,
}

impl NetworkConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    fn declared_retailers(&self) -> BTreeSet<String> {
        self.demand.keys().filter(|k| *k != "default").cloned().collect()
    }

    pub fn topology(&self) -> Result<NetworkTopology> {
        NetworkTopology::new(
            &self.nodes,
            &self.edges,
            &self.echelon_overrides,
            &self.declared_retailers(),
        )
    }
}

/// Parses and validates a network document.
pub fn load_topology(config_text: &str) -> Result<NetworkTopology> {
    NetworkConfig::parse(config_text)?.topology()
}

/// Shipped network structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Structure {
    SmallDivergent,
    SmallGeneral,
    LargeDivergent,
    LargeGeneral,
}

impl Structure {
    pub fn config_text(self) -> &'static str {
        match self {
            Structure::SmallDivergent => include_str!("../configs/small_divergent.toml"),
            Structure::SmallGeneral => include_str!("../configs/small_general.toml"),
            Structure::LargeDivergent => include_str!("../configs/large_divergent.toml"),
            Structure::LargeGeneral => include_str!("../configs/large_general.toml"),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Structure::SmallDivergent => "small divergent",
            Structure::SmallGeneral => "small general",
            Structure::LargeDivergent => "large divergent",
            Structure::LargeGeneral => "large general",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum DemandKind {
    PoissonUniform,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LeadKind {
    StaticOne,
    UniformOneFive,
    Empirical,
}

/// The named scenario grid.
pub const SCENARIO_IDS: [&str; 13] = [
    "A1", "A2", "A3", "A4", "B1", "B2", "B3", "B4", "C1", "C2", "C3", "C4", "D1",
];

fn scenario_row(id: &str) -> Option<(Structure, DemandKind, LeadKind)> {
    use Structure::*;
    const P: DemandKind = DemandKind::PoissonUniform;
    const E: DemandKind = DemandKind::Empirical;
    const S1: LeadKind = LeadKind::StaticOne;
    const U15: LeadKind = LeadKind::UniformOneFive;
    const EL: LeadKind = LeadKind::Empirical;
    let row = match id {
        "A1" => (SmallDivergent, P, S1),
        "A2" => (SmallDivergent, E, S1),
        "A3" => (SmallDivergent, P, U15),
        "A4" => (SmallDivergent, E, EL),
        "B1" => (SmallGeneral, P, S1),
        "B2" => (SmallGeneral, E, S1),
        "B3" => (SmallGeneral, P, U15),
        "B4" => (SmallGeneral, E, EL),
        "C1" => (LargeDivergent, P, S1),
        "C2" => (LargeDivergent, E, S1),
        "C3" => (LargeDivergent, P, U15),
        "C4" => (LargeDivergent, E, EL),
        "D1" => (LargeGeneral, P, S1),
        _ => return None,
    };
    Some(row)
}

pub fn scenario_structure(id: &str) -> Option<Structure> {
    scenario_row(id).map(|r| r.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalProtocol {
    pub episodes: usize,
    pub steps: usize,
    pub warmup: usize,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        EvalProtocol {
            episodes: 100,
            steps: 75,
            warmup: 25,
        }
    }
}

/// Training episode length.
pub const TRAIN_EPISODE_LENGTH: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StockPointParams {
    pub h: f64,
    pub b: f64,
    pub demand: Option<DemandSpec>,
    pub o_max: i64,
    pub ip_min: i64,
    pub ip_max_offset: i64,
    pub bsl: Option<i64>,
}

impl StockPointParams {
    pub fn ip_max(&self) -> i64 {
        self.bsl.unwrap_or(0) + self.ip_max_offset
    }
}

/// A fully resolved scenario: topology, parameters, and the distributions
/// driving the simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub id: String,
    pub topology: NetworkTopology,
    pub params: Vec<StockPointParams>,
    /// Lead-time law per edge, aligned with `topology.edges()`.
    pub lead: Vec<LeadTimeSpec>,
    pub demand_pmf: Vec<Option<Pmf>>,
    pub lead_pmf: Vec<Pmf>,
    pub episode_length: usize,
    pub eval: EvalProtocol,
    /// SHA-256 of the network document the topology came from.
    pub topology_hash: String,
}

impl ScenarioConfig {
    pub fn len(&self) -> usize {
        self.topology.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topology.is_empty()
    }

    pub fn bsl(&self) -> Option<Vec<i64>> {
        self.params.iter().map(|p| p.bsl).collect()
    }

    /// Copy with base-stock levels filled in (which also fixes `ip_max`).
    pub fn with_bsl(&self, bsl: &[i64]) -> Result<Self> {
        if bsl.len() != self.len() {
            return Err(Error::Config(format!(
                "expected {} base-stock levels, got {}",
                self.len(),
                bsl.len()
            )));
        }
        let mut s = self.clone();
        for (p, l) in s.params.iter_mut().zip(bsl) {
            p.bsl = Some(*l);
        }
        Ok(s)
    }

    pub fn total_holding_rate(&self) -> f64 {
        self.params.iter().map(|p| p.h).sum()
    }

    /// Builds a scenario from a network document. Missing sections fall back
    /// to the Poisson-uniform demand, unit lead time and the default
    /// per-echelon cost and bound tables.
    pub fn from_config(
        id: &str,
        text: &str,
        data: Option<&EmpiricalData>,
    ) -> Result<Self> {
        let cfg = NetworkConfig::parse(text)?;
        let topology = cfg.topology()?;
        let hash = hex_digest(text);
        let costs = cfg.costs.clone().unwrap_or_default();
        let bounds = cfg.bounds.clone().unwrap_or_default();
        let default_demand = cfg
            .demand
            .get("default")
            .cloned()
            .unwrap_or(DemandSpec::PoissonUniformMixture { lo: 5, hi: 15 });
        let default_lead = cfg
            .lead_time
            .get("default")
            .cloned()
            .unwrap_or(LeadTimeSpec::Static { periods: 1 });

        for key in cfg.demand.keys().filter(|k| *k != "default") {
            if topology.index_of(key).is_none() {
                return Err(Error::Validation(format!("demand given for unknown stock point {key}")));
            }
        }

        let mut params = Vec::with_capacity(topology.len());
        for p in 0..topology.len() {
            let ech = topology.echelon(p);
            let at = |v: &Vec<f64>, what: &str| -> Result<f64> {
                v.get(ech - 1).copied().ok_or_else(|| {
                    Error::Config(format!("no {what} for echelon {ech} ({})", topology.name(p)))
                })
            };
            let at_i = |v: &Vec<i64>, what: &str| -> Result<i64> {
                v.get(ech - 1).copied().ok_or_else(|| {
                    Error::Config(format!("no {what} for echelon {ech} ({})", topology.name(p)))
                })
            };
            let demand = topology.is_retailer(p).then(|| {
                cfg.demand
                    .get(topology.name(p))
                    .cloned()
                    .unwrap_or_else(|| default_demand.clone())
            });
            params.push(StockPointParams {
                h: at(&costs.holding, "holding cost")?,
                b: at(&costs.backorder, "backorder cost")?,
                demand,
                o_max: at_i(&bounds.order_max, "order bound")?,
                ip_min: at_i(&bounds.ip_min, "ip_min")?,
                ip_max_offset: at_i(&bounds.ip_max_offset, "ip_max offset")?,
                bsl: None,
            });
        }

        let lead: Vec<LeadTimeSpec> = topology
            .edges()
            .iter()
            .map(|e| {
                let sup = match e.supplier {
                    Supplier::External => EXTERNAL,
                    Supplier::Node(s) => topology.name(s),
                };
                let cust = topology.name(e.customer);
                cfg.lead_time
                    .get(&format!("{sup}->{cust}"))
                    .or_else(|| cfg.lead_time.get(cust))
                    .cloned()
                    .unwrap_or_else(|| default_lead.clone())
            })
            .collect();

        Self::assemble(id, topology, params, lead, hash, data)
    }

    fn assemble(
        id: &str,
        topology: NetworkTopology,
        params: Vec<StockPointParams>,
        lead: Vec<LeadTimeSpec>,
        topology_hash: String,
        data: Option<&EmpiricalData>,
    ) -> Result<Self> {
        let demand_pmf = params
            .iter()
            .map(|p| p.demand.as_ref().map(|d| d.resolve(data)).transpose())
            .collect::<Result<Vec<_>>>()?;
        let lead_pmf = lead
            .iter()
            .map(|l| l.resolve(data))
            .collect::<Result<Vec<_>>>()?;
        Ok(ScenarioConfig {
            id: id.to_string(),
            topology,
            params,
            lead,
            demand_pmf,
            lead_pmf,
            episode_length: TRAIN_EPISODE_LENGTH,
            eval: EvalProtocol::default(),
            topology_hash,
        })
    }
}

fn hex_digest(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Builds one of the named grid scenarios (`A1` ... `D1`). Real-life-data
/// scenarios need `data`.
pub fn build_scenario(id: &str, data: Option<&EmpiricalData>) -> Result<ScenarioConfig> {
    let (structure, demand_kind, lead_kind) = scenario_row(id)
        .ok_or_else(|| Error::Config(format!("unknown scenario id {id}")))?;
    let text = structure.config_text();
    let base = ScenarioConfig::from_config(id, text, None)?;
    let topology = base.topology;
    let mut params = base.params;
    for (p, sp) in params.iter_mut().enumerate() {
        if sp.demand.is_some() {
            sp.demand = Some(match demand_kind {
                DemandKind::PoissonUniform => DemandSpec::PoissonUniformMixture { lo: 5, hi: 15 },
                DemandKind::Empirical => DemandSpec::Empirical { column: p },
            });
        }
    }
    let lead = topology
        .edges()
        .iter()
        .map(|e| match lead_kind {
            LeadKind::StaticOne => LeadTimeSpec::Static { periods: 1 },
            LeadKind::UniformOneFive => LeadTimeSpec::Uniform { lo: 1, hi: 5 },
            LeadKind::Empirical => LeadTimeSpec::Empirical { column: e.customer },
        })
        .collect();
    ScenarioConfig::assemble(id, topology, params, lead, hex_digest(text), data)
}

/// Resolves a `--scenario` argument: a named id or a path to a network
/// document.
pub fn resolve_scenario(arg: &str, data: Option<&EmpiricalData>) -> Result<ScenarioConfig> {
    if scenario_row(arg).is_some() {
        return build_scenario(arg, data);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| Error::Config(format!("cannot read scenario {arg}: {e}")))?;
    let id = std::path::Path::new(arg)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| arg.to_string());
    ScenarioConfig::from_config(&id, &text, data)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreconditionReport {
    pub violations: Vec<String>,
}

impl PreconditionReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the cost structure the decomposition heuristic relies on.
pub fn validate_heuristic_preconditions(s: &ScenarioConfig) -> PreconditionReport {
    let t = &s.topology;
    let mut violations = Vec::new();
    for p in 0..t.len() {
        let sp = &s.params[p];
        if sp.h < 0.0 || sp.b < 0.0 {
            violations.push(format!("{}: negative cost", t.name(p)));
        }
        if t.is_retailer(p) {
            if s.demand_pmf[p].is_none() {
                violations.push(format!("{}: retailer without demand law", t.name(p)));
            }
        } else {
            if sp.b > 0.0 {
                violations.push(format!("{}: backorder cost {} at a non-retailer", t.name(p), sp.b));
            }
            if s.demand_pmf[p].is_some() {
                violations.push(format!("{}: external demand at a non-retailer", t.name(p)));
            }
        }
    }
    for e in t.edges() {
        if let Supplier::Node(u) = e.supplier {
            if s.params[u].h >= s.params[e.customer].h {
                violations.push(format!(
                    "holding cost does not strictly increase from {} ({}) to {} ({})",
                    t.name(u),
                    s.params[u].h,
                    t.name(e.customer),
                    s.params[e.customer].h
                ));
            }
        }
    }
    PreconditionReport { violations }
}
