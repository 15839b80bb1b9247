//! Vectorized rollouts and the generic PPO training loop.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::{ActorCritic, Workspace};
use super::ppo::{ppo_update, Adam, RolloutBatch, TrainConfig};
use crate::error::Result;
use crate::network::ScenarioConfig;
use crate::rng::{derive_seed, label};
use crate::simulator::{BatchPolicy, EvalResult, Observation, Simulator, REWARD_SCALE};

/// One point of a learning curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub episode: usize,
    pub eval_mean_cost: f64,
    pub eval_std: f64,
}

/// Outcome of evaluating a candidate. Lower `key` is better; the curve
/// records `eval`.
#[derive(Debug, Clone, PartialEq)]
pub struct Score {
    pub key: f64,
    pub eval: EvalResult,
}

/// Parallel training environments stepped in lockstep.
pub struct Envs {
    sims: Vec<Simulator>,
    obs: Vec<Observation>,
    episode_step: usize,
    episodes_started: Vec<u64>,
    values: Vec<f64>,
    seed: u64,
}

impl Envs {
    pub fn new(scenario: &Arc<ScenarioConfig>, count: usize, seed: u64) -> Result<Self> {
        let mut sims = Vec::with_capacity(count);
        let mut obs = Vec::with_capacity(count);
        for e in 0..count {
            let mut sim = Simulator::new(Arc::clone(scenario), 0)?;
            sim.reseed(derive_seed(seed, &[label("train"), e as u64, 0]));
            obs.push(sim.reset());
            sims.push(sim);
        }
        Ok(Envs {
            sims,
            obs,
            episode_step: 0,
            episodes_started: vec![1; count],
            values: Vec::new(),
            seed,
        })
    }

    fn scaled(&self, out: &mut Vec<f64>) {
        out.clear();
        for o in &self.obs {
            out.extend_from_slice(&o.scaled);
        }
    }
}

fn agent_values(model: &ActorCritic, obs: &[f64], n: usize, rows: usize, ws: &mut Workspace) -> Vec<f64> {
    let heads = model.critic.output();
    let v = model.critic_pass(obs, n, rows, ws);
    let mut out = Vec::with_capacity(rows * model.agents.len());
    for r in 0..rows {
        out.extend(model.agents.iter().map(|a| v[r * heads + a.head]));
    }
    out
}

/// Collects `steps_per_env` transitions from every environment. Stock
/// points no agent controls follow `base` (or order nothing without one).
/// Returns the number of episodes completed.
#[allow(clippy::too_many_arguments)]
pub fn collect<'b>(
    model: &ActorCritic,
    mut base: Option<&mut (dyn BatchPolicy + 'b)>,
    envs: &mut Envs,
    steps: usize,
    episode_length: usize,
    batch: &mut RolloutBatch,
    ws: &mut Workspace,
    rng: &mut ChaCha8Rng,
) -> usize {
    let rows = envs.sims.len();
    let n = batch.nodes;
    let na = batch.agents;
    let len = rows * steps;
    batch.len = len;
    batch.obs = vec![0.0; len * n];
    batch.actions = vec![0.0; len * n];
    batch.log_probs = vec![0.0; len * na];
    batch.rewards = vec![0.0; len * na];
    batch.values = vec![0.0; len * na];
    batch.next_values = vec![0.0; len * na];
    batch.ends = vec![false; len];
    let mut x = Vec::new();
    envs.scaled(&mut x);
    if envs.values.len() != rows * na {
        envs.values = agent_values(model, &x, n, rows, ws);
    }
    let mut act = vec![0.0; rows * n];
    let mut raw = vec![0.0; rows * n];
    let mut logp = vec![0.0; rows * na];
    let mut completed = 0;
    for step in 0..steps {
        envs.scaled(&mut x);
        match base.as_deref_mut() {
            Some(b) => b.act_batch(&envs.obs, &mut act),
            None => act.iter_mut().for_each(|a| *a = -1.0),
        }
        for k in 0..model.actors.len() {
            model.actor_pass(k, &x, n, rows, ws);
            let w = model.actors[k].output();
            let log_std = &model.params[model.log_std_range(k)];
            let y = ws.actor[k].output();
            for (j, &(r, i)) in ws.rows.iter().enumerate() {
                let mut lp = 0.0;
                for (d, &p) in model.agents[i].act.iter().enumerate() {
                    let z: f64 = StandardNormal.sample(rng);
                    let a = y[j * w + d] + log_std[d].exp() * z;
                    raw[r * n + p] = a;
                    act[r * n + p] = a.clamp(-1.0, 1.0);
                    lp += -0.5 * z * z - log_std[d] - 0.5 * super::ppo::LN_2PI;
                }
                logp[r * na + i] = lp;
            }
        }
        let end = envs.episode_step + 1 == episode_length || step + 1 == steps;
        for r in 0..rows {
            let t = r * steps + step;
            batch.obs[t * n..(t + 1) * n].copy_from_slice(&x[r * n..(r + 1) * n]);
            batch.actions[t * n..(t + 1) * n].copy_from_slice(&raw[r * n..(r + 1) * n]);
            batch.log_probs[t * na..(t + 1) * na].copy_from_slice(&logp[r * na..(r + 1) * na]);
            batch.values[t * na..(t + 1) * na].copy_from_slice(&envs.values[r * na..(r + 1) * na]);
            batch.ends[t] = end;
            let out = envs.sims[r].step(&act[r * n..(r + 1) * n]);
            for (i, a) in model.agents.iter().enumerate() {
                let c: f64 = a.reward.iter().map(|&p| out.info.node_cost[p]).sum();
                batch.rewards[t * na + i] = -c / REWARD_SCALE;
            }
            envs.obs[r] = out.observation;
        }
        envs.scaled(&mut x);
        let next = agent_values(model, &x, n, rows, ws);
        for r in 0..rows {
            let t = r * steps + step;
            batch.next_values[t * na..(t + 1) * na].copy_from_slice(&next[r * na..(r + 1) * na]);
        }
        envs.episode_step += 1;
        if envs.episode_step == episode_length {
            envs.episode_step = 0;
            completed += rows;
            for r in 0..rows {
                let c = envs.episodes_started[r];
                envs.episodes_started[r] += 1;
                envs.sims[r].reseed(derive_seed(envs.seed, &[label("train"), r as u64, c]));
                envs.obs[r] = envs.sims[r].reset();
            }
            envs.scaled(&mut x);
            envs.values = agent_values(model, &x, n, rows, ws);
        } else {
            envs.values = next;
        }
    }
    completed
}

/// Result of one PPO run.
#[derive(Debug, Clone)]
pub struct PpoOutcome {
    /// Parameters with the lowest score key seen (including the start).
    pub best: ActorCritic,
    pub best_score: Score,
    pub initial_score: Score,
    pub curve: Vec<CurvePoint>,
    pub episodes: usize,
    /// Set when training stopped on non-finite values.
    pub diverged: Option<String>,
}

/// Trains `model` for `episodes` episodes, scoring it at the start and
/// whenever the episode count crosses a multiple of `cfg.eval_every`.
pub fn run_ppo(
    scenario: &Arc<ScenarioConfig>,
    mut model: ActorCritic,
    mut base: Option<&mut dyn BatchPolicy>,
    cfg: &TrainConfig,
    episodes: usize,
    seed: u64,
    score: &mut dyn FnMut(&ActorCritic) -> Result<Score>,
) -> Result<PpoOutcome> {
    cfg.validate()?;
    let n = scenario.topology.len();
    let mut envs = Envs::new(scenario, cfg.num_envs, derive_seed(seed, &[label("envs")]))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[label("policy")]));
    let mut batch = RolloutBatch::new(n, model.agents.len());
    let mut ws = Workspace::default();
    let mut adam = Adam::new(model.num_params(), cfg.learning_rate, cfg.adam_eps);
    let initial = score(&model)?;
    let mut curve = vec![CurvePoint {
        episode: 0,
        eval_mean_cost: initial.eval.mean_cost,
        eval_std: initial.eval.std_cost,
    }];
    let mut best = model.clone();
    let mut best_score = initial.clone();
    let mut done = 0;
    let mut next_eval = cfg.eval_every;
    let mut diverged = None;
    while done < episodes {
        done += collect(
            &model,
            base.as_deref_mut(),
            &mut envs,
            cfg.steps_per_env,
            scenario.episode_length,
            &mut batch,
            &mut ws,
            &mut rng,
        );
        batch.compute_advantages(cfg.gamma, cfg.gae_lambda);
        if let Err(e) = ppo_update(&mut model, &batch, cfg, &mut adam, &mut ws, &mut rng) {
            log::warn!("training stopped after {done} episodes: {e}");
            diverged = Some(e.to_string());
            break;
        }
        if done >= next_eval {
            let label = done / cfg.eval_every * cfg.eval_every;
            next_eval = label + cfg.eval_every;
            let s = score(&model)?;
            log::debug!("episode {label}: cost {:.1} (key {:.3})", s.eval.mean_cost, s.key);
            curve.push(CurvePoint {
                episode: label,
                eval_mean_cost: s.eval.mean_cost,
                eval_std: s.eval.std_cost,
            });
            let reached = cfg.stop_at_cost.is_some_and(|c| s.eval.mean_cost <= c);
            if s.key < best_score.key {
                best = model.clone();
                best_score = s;
            }
            if reached {
                break;
            }
        }
    }
    Ok(PpoOutcome {
        best,
        best_score,
        initial_score: initial,
        curve,
        episodes: done,
        diverged,
    })
}
