//! Actor-critic policy learning: single-agent PPO over the whole network,
//! multi-agent PPO with a shared critic, and iterative multi-agent training.

pub mod imarl;
pub mod model;
pub mod nn;
pub mod ppo;
pub mod trainer;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use imarl::{train_imarl, ImarlInit, ImarlOrder, IterationLog};
pub use model::{ActorCritic, AgentSpec, Ensemble, Workspace};
pub use nn::MlpShape;
pub use ppo::TrainConfig;
pub use trainer::{CurvePoint, Score};

use crate::error::{Error, Result};
use crate::heuristic::BaseStockPolicy;
use crate::network::{EvalProtocol, ScenarioConfig};
use crate::rng::{derive_seed, label};
use crate::simulator::{evaluate_batched, EvalResult};

/// Decision models compared in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sarl,
    Marl,
    Imarl,
    Heuristic,
    Random,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Heuristic,
        ModelKind::Random,
        ModelKind::Sarl,
        ModelKind::Marl,
        ModelKind::Imarl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Sarl => "sarl",
            ModelKind::Marl => "marl",
            ModelKind::Imarl => "imarl",
            ModelKind::Heuristic => "heuristic",
            ModelKind::Random => "random",
        }
    }

    pub fn learns(self) -> bool {
        matches!(self, ModelKind::Sarl | ModelKind::Marl | ModelKind::Imarl)
    }

    /// Default hidden widths.
    pub fn hidden(self) -> Vec<usize> {
        match self {
            ModelKind::Sarl => vec![256, 256],
            _ => vec![64, 64],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sarl" => Ok(ModelKind::Sarl),
            "marl" | "mappo" => Ok(ModelKind::Marl),
            "imarl" => Ok(ModelKind::Imarl),
            "heuristic" | "benchmark" => Ok(ModelKind::Heuristic),
            "random" => Ok(ModelKind::Random),
            _ => Err(Error::InvalidParameter(format!(
                "unknown model '{s}' (expected sarl, marl, imarl, heuristic or random)"
            ))),
        }
    }
}

/// Training episodes by scenario and model (per iteration for IMARL).
pub fn default_episodes(scenario_id: &str, kind: ModelKind) -> usize {
    match kind {
        ModelKind::Marl => 20_000,
        ModelKind::Imarl => 25_000,
        ModelKind::Heuristic | ModelKind::Random => 0,
        ModelKind::Sarl => match scenario_id {
            "A1" | "A2" => 25_000,
            "A3" | "A4" | "B1" | "B2" | "C1" | "C2" => 75_000,
            "B3" | "B4" | "C3" | "C4" => 150_000,
            "D1" => 300_000,
            _ => 25_000,
        },
    }
}

/// One central agent observing every scaled IP and ordering for every
/// stock point.
pub fn sarl_model(s: &ScenarioConfig, hidden: &[usize]) -> Result<ActorCritic> {
    let n = s.topology.len();
    let all: Vec<usize> = (0..n).collect();
    let agent = AgentSpec {
        name: "central".into(),
        actor: 0,
        obs: all.clone(),
        act: all.clone(),
        reward: all.clone(),
        head: 0,
    };
    ActorCritic::new(
        vec![MlpShape::new(n, hidden, n)],
        MlpShape::new(n, hidden, 1),
        all,
        vec![agent],
    )
}

/// One agent per stock point observing its own IP. Retailers share actor 0;
/// every other stock point has its own actor. The critic sees all IPs and
/// has one head per agent. Retailers are rewarded with their own cost,
/// upstream agents with the network cost.
pub fn mappo_model(s: &ScenarioConfig, hidden: &[usize]) -> Result<ActorCritic> {
    let t = &s.topology;
    let n = t.len();
    let all: Vec<usize> = (0..n).collect();
    let has_retailer = (0..n).any(|p| t.is_retailer(p));
    let mut actors = Vec::new();
    if has_retailer {
        actors.push(MlpShape::new(1, hidden, 1));
    }
    let mut agents = Vec::with_capacity(n);
    for p in 0..n {
        let actor = if t.is_retailer(p) {
            0
        } else {
            actors.push(MlpShape::new(1, hidden, 1));
            actors.len() - 1
        };
        agents.push(AgentSpec {
            name: t.name(p).to_string(),
            actor,
            obs: vec![p],
            act: vec![p],
            reward: if t.is_retailer(p) { vec![p] } else { all.clone() },
            head: p,
        });
    }
    ActorCritic::new(actors, MlpShape::new(n, hidden, n), all, agents)
}

/// Deterministic decision rule: networks on top of an optional base-stock
/// fallback for stock points no network controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyBundle {
    pub nets: Vec<ActorCritic>,
    pub base_bsl: Option<Vec<i64>>,
}

impl PolicyBundle {
    pub fn ensemble<'a>(&'a self, s: &ScenarioConfig) -> Ensemble<'a> {
        let base = self
            .base_bsl
            .as_ref()
            .map(|b| BaseStockPolicy::for_scenario(s, b.clone()));
        Ensemble::new(self.nets.iter().collect(), base)
    }

    pub fn evaluate(&self, s: &Arc<ScenarioConfig>, protocol: EvalProtocol, seed: u64) -> Result<EvalResult> {
        evaluate_batched(&mut self.ensemble(s), s, protocol, seed)
    }

    pub fn check_shapes(&self, n: usize) -> Result<()> {
        if let Some(b) = &self.base_bsl {
            if b.len() != n {
                return Err(Error::Shape(format!("base-stock vector has {} entries for {n} stock points", b.len())));
            }
        }
        let mut covered = vec![self.base_bsl.is_some(); n];
        for net in &self.nets {
            for a in &net.agents {
                for &p in a.obs.iter().chain(&a.act).chain(&net.critic_obs) {
                    if p >= n {
                        return Err(Error::Shape(format!("network refers to stock point {p} of {n}")));
                    }
                }
                a.act.iter().for_each(|&p| covered[p] = true);
            }
        }
        if covered.iter().any(|c| !c) {
            return Err(Error::Shape("some stock points have no decision rule".into()));
        }
        Ok(())
    }
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct TrainResult {
    pub kind: ModelKind,
    pub bundle: PolicyBundle,
    pub curve: Vec<CurvePoint>,
    /// Evaluation of `bundle`.
    pub best_eval: EvalResult,
    pub episodes: usize,
    pub diverged: Option<String>,
    /// Iterative scheme only.
    pub iterations: Vec<IterationLog>,
    /// False when the iterative scheme hit its iteration cap.
    pub converged: bool,
}

fn hidden_for(cfg: &TrainConfig, kind: ModelKind) -> Vec<usize> {
    cfg.hidden.clone().unwrap_or_else(|| kind.hidden())
}

fn train_joint(s: &Arc<ScenarioConfig>, cfg: &TrainConfig, seed: u64, kind: ModelKind) -> Result<TrainResult> {
    let hidden = hidden_for(cfg, kind);
    let mut model = match kind {
        ModelKind::Sarl => sarl_model(s, &hidden)?,
        _ => mappo_model(s, &hidden)?,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[label("init")]));
    model.init(cfg.log_std_init, &mut rng);
    let episodes = cfg.episodes.unwrap_or_else(|| default_episodes(&s.id, kind));
    let mut score = |m: &ActorCritic| -> Result<Score> {
        let eval = evaluate_batched(&mut Ensemble::new(vec![m], None), s, s.eval, cfg.eval_seed)?;
        Ok(Score { key: eval.mean_cost, eval })
    };
    let out = trainer::run_ppo(s, model, None, cfg, episodes, seed, &mut score)?;
    Ok(TrainResult {
        kind,
        bundle: PolicyBundle {
            nets: vec![out.best],
            base_bsl: None,
        },
        curve: out.curve,
        best_eval: out.best_score.eval,
        episodes: out.episodes,
        diverged: out.diverged,
        iterations: Vec::new(),
        converged: true,
    })
}

/// Single-agent PPO. The scenario must carry base-stock levels (used for
/// episode starts).
pub fn train_sarl(s: &Arc<ScenarioConfig>, cfg: &TrainConfig, seed: u64) -> Result<TrainResult> {
    train_joint(s, cfg, seed, ModelKind::Sarl)
}

/// Multi-agent PPO with a shared critic.
pub fn train_mappo(s: &Arc<ScenarioConfig>, cfg: &TrainConfig, seed: u64) -> Result<TrainResult> {
    train_joint(s, cfg, seed, ModelKind::Marl)
}

/// Dispatches on the model kind (heuristic-initialized, downstream-first
/// order for the iterative scheme).
pub fn train(s: &Arc<ScenarioConfig>, kind: ModelKind, cfg: &TrainConfig, seed: u64) -> Result<TrainResult> {
    match kind {
        ModelKind::Sarl => train_sarl(s, cfg, seed),
        ModelKind::Marl => train_mappo(s, cfg, seed),
        ModelKind::Imarl => train_imarl(s, cfg, seed, ImarlInit::Heuristic, ImarlOrder::DownstreamUp),
        _ => Err(Error::InvalidParameter(format!("model {kind} is not trained"))),
    }
}

/// Hash of the training configuration, model kind and network.
pub fn config_hash(cfg: &TrainConfig, kind: ModelKind, scenario_id: &str, topology_hash: &str) -> String {
    let doc = serde_json::json!({
        "train": cfg,
        "model": kind,
        "scenario": scenario_id,
        "topology": topology_hash,
    });
    let digest = Sha256::digest(doc.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub const CHECKPOINT_FORMAT: &str = "meio-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Structured-text dump of a trained decision rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub scenario: String,
    pub topology_hash: String,
    pub model: ModelKind,
    pub config_hash: String,
    pub train_config: TrainConfig,
    pub bundle: PolicyBundle,
}

impl Checkpoint {
    pub fn new(s: &ScenarioConfig, kind: ModelKind, cfg: &TrainConfig, bundle: PolicyBundle) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            scenario: s.id.clone(),
            topology_hash: s.topology_hash.clone(),
            model: kind,
            config_hash: config_hash(cfg, kind, &s.id, &s.topology_hash),
            train_config: cfg.clone(),
            bundle,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Checkpoint = serde_json::from_str(text)?;
        if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint {} v{}",
                c.format, c.version
            )));
        }
        if c.bundle.nets.iter().any(|n| !n.is_finite()) {
            return Err(Error::Config("checkpoint holds non-finite weights".into()));
        }
        Ok(c)
    }

    /// Confirms the checkpoint was trained for `s` and is internally
    /// consistent.
    pub fn check(&self, s: &ScenarioConfig) -> Result<()> {
        if self.topology_hash != s.topology_hash {
            return Err(Error::Config(format!(
                "checkpoint was trained on a different network ({})",
                self.scenario
            )));
        }
        if config_hash(&self.train_config, self.model, &self.scenario, &self.topology_hash) != self.config_hash {
            return Err(Error::Config("checkpoint config hash does not match its contents".into()));
        }
        self.bundle.check_shapes(s.topology.len())
    }
}

pub fn write_curve_csv<W: Write>(curve: &[CurvePoint], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["episode", "eval_mean_cost", "eval_std"])?;
    for p in curve {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::build_scenario;

    #[test]
    fn a1_marl_has_two_actors_one_critic() {
        let s = build_scenario("A1", None).unwrap();
        let m = mappo_model(&s, &[64, 64]).unwrap();
        assert_eq!(m.actors.len(), 2);
        assert_eq!(m.critic.output(), 4);
        let retailers: Vec<_> = m.agents.iter().filter(|a| a.actor == 0).collect();
        assert_eq!(retailers.len(), 3);
        assert!(retailers.iter().all(|a| a.reward == a.act));
        let w = m.agents.iter().find(|a| a.actor == 1).unwrap();
        assert_eq!(w.reward, vec![0, 1, 2, 3]);
    }

    #[test]
    fn retailer_scopes_plus_upstream_holding_is_total() {
        // every stock point's cost is counted once across retailer scopes
        // and the upstream nodes
        let s = build_scenario("B1", None).unwrap();
        let m = mappo_model(&s, &[8]).unwrap();
        let mut count = vec![0; s.topology.len()];
        for a in m.agents.iter().filter(|a| a.actor == 0) {
            a.reward.iter().for_each(|&p| count[p] += 1);
        }
        for p in 0..s.topology.len() {
            if !s.topology.is_retailer(p) {
                count[p] += 1;
            }
        }
        assert!(count.iter().all(|&c| c == 1));
    }

    #[test]
    fn model_kind_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.as_str().parse::<ModelKind>().unwrap(), k);
        }
        assert!("gnn".parse::<ModelKind>().is_err());
    }

    #[test]
    fn checkpoint_round_trip() {
        let s = build_scenario("A1", None).unwrap();
        let mut m = sarl_model(&s, &[4]).unwrap();
        m.init(0.0, &mut ChaCha8Rng::seed_from_u64(1));
        let cfg = TrainConfig::default();
        let c = Checkpoint::new(&s, ModelKind::Sarl, &cfg, PolicyBundle { nets: vec![m], base_bsl: None });
        let back = Checkpoint::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(back, c);
        back.check(&s).unwrap();
        let other = build_scenario("B1", None).unwrap();
        assert!(back.check(&other).is_err());
    }

    #[test]
    fn curve_csv_header() {
        let mut buf = Vec::new();
        write_curve_csv(&[CurvePoint { episode: 100, eval_mean_cost: 1.5, eval_std: 0.25 }], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "episode,eval_mean_cost,eval_std\n100,1.5,0.25\n");
    }
}
