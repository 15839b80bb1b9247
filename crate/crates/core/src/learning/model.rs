//! Actor-critic parameter container shared by all training schemes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::{self, MlpCache, MlpShape};
use crate::error::{Error, Result};
use crate::heuristic::BaseStockPolicy;
use crate::simulator::{BatchPolicy, Observation, Policy};

/// One decision maker: which actor it runs, what it sees, what it controls,
/// which stock-point costs form its reward and which critic head scores it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub name: String,
    pub actor: usize,
    /// Stock points whose scaled IPs form the actor input, in order.
    pub obs: Vec<usize>,
    /// Stock points whose orders the actor outputs, in order.
    pub act: Vec<usize>,
    /// Stock points whose costs are summed into the agent's reward.
    pub reward: Vec<usize>,
    pub head: usize,
}

/// Actors with state-independent log-std, one critic with one output head
/// per value stream. All weights live in one flat vector laid out as
/// `[actor 0 | log_std 0 | actor 1 | log_std 1 | .. | critic]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub actors: Vec<MlpShape>,
    pub critic: MlpShape,
    /// Stock points whose scaled IPs form the critic input.
    pub critic_obs: Vec<usize>,
    pub agents: Vec<AgentSpec>,
    pub params: Vec<f64>,
}

/// Forward-pass output for a single observation.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentOutputs {
    /// Per agent: action means (unbounded).
    pub mean: Vec<Vec<f64>>,
    /// Per agent: log standard deviations.
    pub log_std: Vec<Vec<f64>>,
    /// Per agent: value estimate from its head.
    pub value: Vec<f64>,
}

/// Reusable buffers for forward passes.
#[derive(Debug, Default, Clone)]
pub struct Workspace {
    pub(crate) actor: Vec<MlpCache>,
    pub(crate) critic: MlpCache,
    pub(crate) x: Vec<f64>,
    /// Row -> (observation row, agent) for the last actor pass.
    pub(crate) rows: Vec<(usize, usize)>,
}

impl ActorCritic {
    pub fn new(
        actors: Vec<MlpShape>,
        critic: MlpShape,
        critic_obs: Vec<usize>,
        agents: Vec<AgentSpec>,
    ) -> Result<Self> {
        if critic_obs.len() != critic.input() {
            return Err(Error::Shape(format!(
                "critic expects {} inputs, {} stock points given",
                critic.input(),
                critic_obs.len()
            )));
        }
        for a in &agents {
            let shape = actors
                .get(a.actor)
                .ok_or_else(|| Error::Shape(format!("agent {} refers to missing actor {}", a.name, a.actor)))?;
            if a.obs.len() != shape.input() || a.act.len() != shape.output() {
                return Err(Error::Shape(format!(
                    "agent {} has {} observations / {} actions for an actor with {} / {}",
                    a.name,
                    a.obs.len(),
                    a.act.len(),
                    shape.input(),
                    shape.output()
                )));
            }
            if a.head >= critic.output() {
                return Err(Error::Shape(format!("agent {} uses missing critic head {}", a.name, a.head)));
            }
        }
        let total = actors.iter().map(|s| s.num_params() + s.output()).sum::<usize>() + critic.num_params();
        Ok(ActorCritic {
            actors,
            critic,
            critic_obs,
            agents,
            params: vec![0.0; total],
        })
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn actor_range(&self, k: usize) -> std::ops::Range<usize> {
        let start: usize = self.actors[..k].iter().map(|s| s.num_params() + s.output()).sum();
        start..start + self.actors[k].num_params()
    }

    pub fn log_std_range(&self, k: usize) -> std::ops::Range<usize> {
        let r = self.actor_range(k);
        r.end..r.end + self.actors[k].output()
    }

    pub fn critic_range(&self) -> std::ops::Range<usize> {
        let start = self.params.len() - self.critic.num_params();
        start..self.params.len()
    }

    /// Orthogonal weights (actor output gain 0.01, critic output gain 1),
    /// log-std set to `log_std`.
    pub fn init<R: Rng>(&mut self, log_std: f64, rng: &mut R) {
        for k in 0..self.actors.len() {
            let r = self.actor_range(k);
            self.actors[k].init(&mut self.params[r], 0.01, rng);
            let r = self.log_std_range(k);
            self.params[r].iter_mut().for_each(|v| *v = log_std);
        }
        let r = self.critic_range();
        self.critic.init(&mut self.params[r], 1.0, rng);
    }

    /// Stock points driven by some agent.
    pub fn controlled(&self, n: usize) -> Vec<bool> {
        let mut c = vec![false; n];
        for a in &self.agents {
            for &p in &a.act {
                c[p] = true;
            }
        }
        c
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }

    /// Runs actor `k` on every (row, agent) pair that uses it. `obs` holds
    /// `rows` scaled observation vectors of width `n`. Rows of the result
    /// are listed in `ws.rows`; the output sits in `ws.actor[k]`.
    pub(crate) fn actor_pass(&self, k: usize, obs: &[f64], n: usize, rows: usize, ws: &mut Workspace) {
        let shape = &self.actors[k];
        ws.rows.clear();
        ws.x.clear();
        for r in 0..rows {
            for (i, a) in self.agents.iter().enumerate() {
                if a.actor == k {
                    ws.rows.push((r, i));
                    ws.x.extend(a.obs.iter().map(|&p| obs[r * n + p]));
                }
            }
        }
        if ws.actor.len() < self.actors.len() {
            ws.actor.resize_with(self.actors.len(), MlpCache::default);
        }
        let m = ws.rows.len();
        nn::forward(shape, &self.params[self.actor_range(k)], &ws.x, m, &mut ws.actor[k]);
    }

    /// Critic output for `rows` observations; `heads` values per row.
    pub(crate) fn critic_pass<'w>(&self, obs: &[f64], n: usize, rows: usize, ws: &'w mut Workspace) -> &'w [f64] {
        ws.x.clear();
        for r in 0..rows {
            ws.x.extend(self.critic_obs.iter().map(|&p| obs[r * n + p]));
        }
        nn::forward(&self.critic, &self.params[self.critic_range()], &ws.x, rows, &mut ws.critic);
        ws.critic.output()
    }

    /// Action means, log-stds and per-agent values for one observation.
    pub fn forward(&self, scaled: &[f64]) -> AgentOutputs {
        let n = scaled.len();
        let mut ws = Workspace::default();
        let mut mean = vec![Vec::new(); self.agents.len()];
        for k in 0..self.actors.len() {
            self.actor_pass(k, scaled, n, 1, &mut ws);
            let out = self.actors[k].output();
            for (j, &(_, i)) in ws.rows.iter().enumerate() {
                mean[i] = ws.actor[k].output()[j * out..(j + 1) * out].to_vec();
            }
        }
        let log_std = self
            .agents
            .iter()
            .map(|a| self.params[self.log_std_range(a.actor)].to_vec())
            .collect();
        let v = self.critic_pass(scaled, n, 1, &mut ws).to_vec();
        let value = self.agents.iter().map(|a| v[a.head]).collect();
        AgentOutputs { mean, log_std, value }
    }

    /// Writes clamped action means into the controlled columns of `out`
    /// (`rows x n`); other columns are left untouched.
    pub fn act_deterministic(&self, obs: &[f64], n: usize, rows: usize, out: &mut [f64], ws: &mut Workspace) {
        for k in 0..self.actors.len() {
            self.actor_pass(k, obs, n, rows, ws);
            let w = self.actors[k].output();
            let y = ws.actor[k].output();
            for (j, &(r, i)) in ws.rows.iter().enumerate() {
                for (d, &p) in self.agents[i].act.iter().enumerate() {
                    out[r * n + p] = y[j * w + d].clamp(-1.0, 1.0);
                }
            }
        }
    }
}

/// Deterministic execution of a set of networks on top of an optional base
/// policy that covers the stock points no network controls.
pub struct Ensemble<'a> {
    pub nets: Vec<&'a ActorCritic>,
    pub base: Option<BaseStockPolicy>,
    ws: Workspace,
    scaled: Vec<f64>,
}

impl<'a> Ensemble<'a> {
    pub fn new(nets: Vec<&'a ActorCritic>, base: Option<BaseStockPolicy>) -> Self {
        Ensemble {
            nets,
            base,
            ws: Workspace::default(),
            scaled: Vec::new(),
        }
    }
}

impl BatchPolicy for Ensemble<'_> {
    fn act_batch(&mut self, obs: &[Observation], out: &mut [f64]) {
        let rows = obs.len();
        if rows == 0 {
            return;
        }
        let n = out.len() / rows;
        if let Some(b) = self.base.as_mut() {
            for (o, row) in obs.iter().zip(out.chunks_mut(n)) {
                b.act(o, row);
            }
        } else {
            out.iter_mut().for_each(|a| *a = 0.0);
        }
        self.scaled.clear();
        for o in obs {
            self.scaled.extend_from_slice(&o.scaled);
        }
        for net in &self.nets {
            net.act_deterministic(&self.scaled, n, rows, out, &mut self.ws);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_agent() -> ActorCritic {
        let agents = vec![
            AgentSpec { name: "a".into(), actor: 0, obs: vec![0], act: vec![0], reward: vec![0], head: 0 },
            AgentSpec { name: "b".into(), actor: 0, obs: vec![1], act: vec![1], reward: vec![1], head: 1 },
        ];
        ActorCritic::new(
            vec![MlpShape::new(1, &[4], 1)],
            MlpShape::new(2, &[4], 2),
            vec![0, 1],
            agents,
        )
        .unwrap()
    }

    #[test]
    fn zero_params_zero_outputs() {
        let m = two_agent();
        let out = m.forward(&[0.5, -0.5]);
        assert_eq!(out.mean, vec![vec![0.0], vec![0.0]]);
        assert_eq!(out.value, vec![0.0, 0.0]);
    }

    #[test]
    fn shared_actor_identical_inputs_identical_outputs() {
        let mut m = two_agent();
        m.init(0.0, &mut ChaCha8Rng::seed_from_u64(2));
        let out = m.forward(&[0.3, 0.3]);
        assert_eq!(out.mean[0], out.mean[1]);
        assert!(out.value.iter().all(|v| v.is_finite()));
        assert_eq!(out.log_std[0], vec![0.0]);
    }

    #[test]
    fn layout_is_contiguous() {
        let m = two_agent();
        assert_eq!(m.actor_range(0), 0..13);
        assert_eq!(m.log_std_range(0), 13..14);
        assert_eq!(m.critic_range(), 14..m.num_params());
        assert_eq!(m.num_params(), 14 + (2 * 4 + 4) + (4 * 2 + 2));
    }

    #[test]
    fn shape_errors() {
        let bad = vec![AgentSpec { name: "x".into(), actor: 0, obs: vec![0, 1], act: vec![0], reward: vec![0], head: 0 }];
        assert!(matches!(
            ActorCritic::new(vec![MlpShape::new(1, &[4], 1)], MlpShape::new(2, &[4], 1), vec![0, 1], bad),
            Err(Error::Shape(_))
        ));
    }
}
