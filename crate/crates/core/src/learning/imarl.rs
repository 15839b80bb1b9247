//! Iterative multi-agent training: one stock point learns at a time while
//! the others act deterministically; improvements re-queue neighbours.

use std::collections::VecDeque;
use std::str::FromStr;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::{ActorCritic, AgentSpec, Ensemble};
use super::nn::MlpShape;
use super::ppo::TrainConfig;
use super::trainer::{run_ppo, CurvePoint, Score};
use super::{default_episodes, ModelKind, PolicyBundle, TrainResult};
use crate::error::{Error, Result};
use crate::heuristic::BaseStockPolicy;
use crate::network::ScenarioConfig;
use crate::rng::{derive_seed, label};
use crate::simulator::{evaluate_batched, EvalResult};

/// Base policy of agents that have not been trained yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImarlInit {
    /// Order-up-to the benchmark levels.
    Heuristic,
    /// Deterministic output of a freshly initialized network.
    Random,
}

/// Initial order of the job list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImarlOrder {
    DownstreamUp,
    UpstreamDown,
}

impl FromStr for ImarlInit {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heuristic" => Ok(ImarlInit::Heuristic),
            "random" => Ok(ImarlInit::Random),
            _ => Err(Error::InvalidParameter(format!("unknown init '{s}'"))),
        }
    }
}

impl FromStr for ImarlOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "downstream-up" => Ok(ImarlOrder::DownstreamUp),
            "upstream-down" => Ok(ImarlOrder::UpstreamDown),
            _ => Err(Error::InvalidParameter(format!("unknown order '{s}'"))),
        }
    }
}

/// One training iteration of one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub agent: String,
    pub episodes: usize,
    /// Own-scope cost of the saved ensemble before the iteration.
    pub saved_scope_cost: f64,
    /// Own-scope cost of the best candidate (infinite when every candidate
    /// raised the network cost).
    pub candidate_scope_cost: f64,
    pub accepted: bool,
    /// Network cost of the saved ensemble after the iteration.
    pub ensemble_cost: f64,
    pub enqueued: Vec<String>,
}

/// Stock point `p` and everything downstream of it, ascending.
fn scope(s: &ScenarioConfig, p: usize) -> Vec<usize> {
    let mut v = s.topology.descendants(p);
    v.push(p);
    v.sort_unstable();
    v.dedup();
    v
}

/// The agent for stock point `p`: sees and pays for its own scope.
pub fn imarl_agent_model(s: &ScenarioConfig, p: usize, hidden: &[usize]) -> Result<ActorCritic> {
    let sc = scope(s, p);
    let agent = AgentSpec {
        name: s.topology.name(p).to_string(),
        actor: 0,
        obs: sc.clone(),
        act: vec![p],
        reward: sc.clone(),
        head: 0,
    };
    ActorCritic::new(
        vec![MlpShape::new(sc.len(), hidden, 1)],
        MlpShape::new(sc.len(), hidden, 1),
        sc,
        vec![agent],
    )
}

fn scope_cost(eval: &EvalResult, sc: &[usize]) -> f64 {
    sc.iter().map(|&p| eval.node_costs[p]).sum()
}

/// Runs the iterative scheme. Each job trains one agent for the episode
/// budget against the saved policies of all others. The best candidate is
/// accepted if it lowers the agent's own-scope cost by the relative margin
/// `cfg.imarl_epsilon` without raising the network cost (both under common
/// random numbers); acceptance queues the agent's suppliers and customers.
/// Stops when the queue empties; an agent that reached its iteration cap is
/// skipped and the result is flagged as not converged.
pub fn train_imarl(
    s: &Arc<ScenarioConfig>,
    cfg: &TrainConfig,
    seed: u64,
    init: ImarlInit,
    order: ImarlOrder,
) -> Result<TrainResult> {
    cfg.validate()?;
    let t = &s.topology;
    let n = t.len();
    let hidden = cfg.hidden.clone().unwrap_or_else(|| ModelKind::Imarl.hidden());
    let episodes = cfg.episodes.unwrap_or_else(|| default_episodes(&s.id, ModelKind::Imarl));
    let bsl = s.bsl();
    let base_bsl = match init {
        ImarlInit::Heuristic => Some(bsl.clone().ok_or_else(|| {
            Error::Config("heuristic initialization needs base-stock levels".into())
        })?),
        ImarlInit::Random => None,
    };
    let mut saved: Vec<Option<ActorCritic>> = vec![None; n];
    if init == ImarlInit::Random {
        for (p, slot) in saved.iter_mut().enumerate() {
            let mut m = imarl_agent_model(s, p, &hidden)?;
            m.init(cfg.log_std_init, &mut ChaCha8Rng::seed_from_u64(derive_seed(seed, &[label("init"), p as u64])));
            *slot = Some(m);
        }
    }
    let bundle_of = |saved: &[Option<ActorCritic>]| PolicyBundle {
        nets: saved.iter().flatten().cloned().collect(),
        base_bsl: base_bsl.clone(),
    };
    let mut saved_eval = bundle_of(&saved).evaluate(s, s.eval, cfg.eval_seed)?;
    let mut curve = vec![CurvePoint {
        episode: 0,
        eval_mean_cost: saved_eval.mean_cost,
        eval_std: saved_eval.std_cost,
    }];

    let mut jobs: VecDeque<usize> = t.downstream_first().into();
    if order == ImarlOrder::UpstreamDown {
        jobs = jobs.into_iter().rev().collect();
    }
    let mut iterations = vec![0usize; n];
    let mut log = Vec::new();
    let mut total_episodes = 0;
    let mut converged = true;
    let mut diverged = None;
    while let Some(p) = jobs.pop_front() {
        if iterations[p] >= cfg.imarl_max_iterations_per_agent {
            converged = false;
            continue;
        }
        iterations[p] += 1;
        let sc = scope(s, p);
        let saved_scope = scope_cost(&saved_eval, &sc);
        let saved_global = saved_eval.mean_cost;
        let iter_seed = derive_seed(seed, &[label("iteration"), log.len() as u64]);
        let candidate = match &saved[p] {
            Some(m) => m.clone(),
            None => {
                let mut m = imarl_agent_model(s, p, &hidden)?;
                m.init(cfg.log_std_init, &mut ChaCha8Rng::seed_from_u64(derive_seed(iter_seed, &[label("init")])));
                m
            }
        };
        let others: Vec<&ActorCritic> = saved
            .iter()
            .enumerate()
            .filter(|(q, _)| *q != p)
            .filter_map(|(_, m)| m.as_ref())
            .collect();
        let base = || base_bsl.as_ref().map(|b| BaseStockPolicy::for_scenario(s, b.clone()));
        let mut rollout_base = Ensemble::new(others.clone(), base());
        let mut score = |m: &ActorCritic| -> Result<Score> {
            let mut nets = others.clone();
            nets.push(m);
            let eval = evaluate_batched(&mut Ensemble::new(nets, base()), s, s.eval, cfg.eval_seed)?;
            let key = if eval.mean_cost <= saved_global {
                scope_cost(&eval, &sc)
            } else {
                f64::INFINITY
            };
            Ok(Score { key, eval })
        };
        let out = run_ppo(s, candidate, Some(&mut rollout_base), cfg, episodes, iter_seed, &mut score)?;
        drop(rollout_base);
        let offset = total_episodes;
        curve.extend(out.curve.iter().skip(1).map(|c| CurvePoint {
            episode: c.episode + offset,
            ..c.clone()
        }));
        total_episodes += out.episodes;
        let candidate_scope = out.best_score.key;
        let accepted = candidate_scope.is_finite() && candidate_scope < (1.0 - cfg.imarl_epsilon) * saved_scope;
        let mut enqueued = Vec::new();
        if accepted {
            saved[p] = Some(out.best);
            saved_eval = out.best_score.eval;
            let mut nb = t.predecessors(p);
            nb.extend(t.successors(p));
            for q in nb {
                if !jobs.contains(&q) {
                    jobs.push_back(q);
                    enqueued.push(t.name(q).to_string());
                }
            }
        }
        log::info!(
            "agent {} iteration {}: scope cost {:.1} -> {:.1} ({})",
            t.name(p),
            iterations[p],
            saved_scope,
            candidate_scope,
            if accepted { "accepted" } else { "kept" }
        );
        log.push(IterationLog {
            iteration: log.len(),
            agent: t.name(p).to_string(),
            episodes: out.episodes,
            saved_scope_cost: saved_scope,
            candidate_scope_cost: candidate_scope,
            accepted,
            ensemble_cost: saved_eval.mean_cost,
            enqueued,
        });
        if let Some(d) = out.diverged {
            diverged = Some(d);
        }
    }
    Ok(TrainResult {
        kind: ModelKind::Imarl,
        bundle: bundle_of(&saved),
        curve,
        best_eval: saved_eval,
        episodes: total_episodes,
        diverged,
        iterations: log,
        converged,
    })
}
