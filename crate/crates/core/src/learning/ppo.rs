//! Clipped-surrogate PPO with generalized advantage estimation.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::model::{ActorCritic, Workspace};
use super::nn;
use crate::error::{Error, Result};

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// PPO hyperparameters and run budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub num_envs: usize,
    pub steps_per_env: usize,
    pub epochs: usize,
    pub minibatches: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub ent_coef: f64,
    pub vf_coef: f64,
    pub max_grad_norm: f64,
    pub adam_eps: f64,
    pub log_std_init: f64,
    /// Training episodes (per iteration for the iterative scheme). `None`
    /// picks the default for the scenario and model.
    pub episodes: Option<usize>,
    pub eval_every: usize,
    /// Seed of the evaluation episodes, shared by every model so costs are
    /// compared under common random numbers.
    pub eval_seed: u64,
    /// Hidden widths; `None` picks the model default.
    pub hidden: Option<Vec<usize>>,
    /// Iterative scheme: relative own-scope improvement needed to accept.
    pub imarl_epsilon: f64,
    pub imarl_max_iterations_per_agent: usize,
    /// Stop a run early once an evaluation costs at most this much.
    pub stop_at_cost: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            num_envs: 4,
            steps_per_env: 256,
            epochs: 4,
            minibatches: 16,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            ent_coef: 0.0,
            vf_coef: 0.5,
            max_grad_norm: 0.5,
            adam_eps: 1e-5,
            log_std_init: 0.0,
            episodes: None,
            eval_every: 100,
            eval_seed: 7,
            hidden: None,
            imarl_epsilon: 1e-3,
            imarl_max_iterations_per_agent: 20,
            stop_at_cost: None,
        }
    }
}

impl TrainConfig {
    pub fn batch_size(&self) -> usize {
        self.num_envs * self.steps_per_env
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.num_envs == 0 || self.steps_per_env == 0 || self.epochs == 0 || self.minibatches == 0 {
            return bad("num_envs, steps_per_env, epochs and minibatches must be positive");
        }
        if !self.batch_size().is_multiple_of(self.minibatches) {
            return bad("minibatches must divide num_envs * steps_per_env");
        }
        if self.eval_every == 0 {
            return bad("eval_every must be positive");
        }
        if !(self.learning_rate >= 0.0 && self.clip > 0.0 && self.max_grad_norm > 0.0) {
            return bad("learning_rate must be >= 0, clip and max_grad_norm > 0");
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma and gae_lambda must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Draw from a diagonal Gaussian head.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadSample {
    /// Sample clamped to [-1, 1].
    pub action: Vec<f64>,
    /// Pre-clamp sample.
    pub raw: Vec<f64>,
    /// Log density at the pre-clamp sample.
    pub log_prob: f64,
    pub entropy: f64,
}

pub fn gaussian_log_prob(x: &[f64], mean: &[f64], log_std: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(log_std)
        .map(|((x, m), s)| {
            let z = (x - m) / s.exp();
            -0.5 * z * z - s - 0.5 * LN_2PI
        })
        .sum()
}

pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|s| 0.5 * (LN_2PI + 1.0) + s).sum()
}

pub fn gaussian_head<R: Rng>(mean: &[f64], log_std: &[f64], rng: &mut R) -> HeadSample {
    let raw: Vec<f64> = mean
        .iter()
        .zip(log_std)
        .map(|(m, s)| m + s.exp() * rng.sample::<f64, _>(StandardNormal))
        .collect();
    HeadSample {
        action: raw.iter().map(|a| a.clamp(-1.0, 1.0)).collect(),
        log_prob: gaussian_log_prob(&raw, mean, log_std),
        entropy: gaussian_entropy(log_std),
        raw,
    }
}

/// Generalized advantage estimation over one or more concatenated
/// sequences. `next_values[t]` is the value of the state reached by step
/// `t`; `ends[t]` cuts the recursion after `t` (truncation: the bootstrap
/// through `next_values[t]` is kept). Returns (advantages, return targets).
pub fn gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    ends: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let t = rewards.len();
    assert!(values.len() == t && next_values.len() == t && ends.len() == t, "aligned sequences");
    let mut adv = vec![0.0; t];
    let mut acc = 0.0;
    for i in (0..t).rev() {
        if ends[i] {
            acc = 0.0;
        }
        let delta = rewards[i] + gamma * next_values[i] - values[i];
        acc = delta + gamma * lambda * acc;
        adv[i] = acc;
    }
    let ret = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, ret)
}

/// Shifts and scales to zero mean and unit (population) standard deviation.
pub fn normalize(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let std = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let scale = if std > 1e-12 { 1.0 / std } else { 0.0 };
    x.iter_mut().for_each(|v| *v = (*v - mean) * scale);
}

/// Scales `g` so its Euclidean norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm(g: &mut [f64], max_norm: f64) -> f64 {
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        g.iter_mut().for_each(|v| *v *= s);
    }
    norm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, lr: f64, eps: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Transitions from `num_envs` parallel environments, environment-major
/// (`t = env * steps + step`). Per-transition arrays of width `nodes`
/// (observations, pre-clamp actions) or `agents` (everything else).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RolloutBatch {
    pub nodes: usize,
    pub agents: usize,
    pub len: usize,
    pub obs: Vec<f64>,
    pub actions: Vec<f64>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    pub next_values: Vec<f64>,
    /// Sequence cut after this transition (episode or segment end).
    pub ends: Vec<bool>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl RolloutBatch {
    pub fn new(nodes: usize, agents: usize) -> Self {
        RolloutBatch {
            nodes,
            agents,
            ..Default::default()
        }
    }

    pub fn clear(&mut self) {
        let (n, a) = (self.nodes, self.agents);
        *self = RolloutBatch::new(n, a);
    }

    /// Advantages and targets per agent stream, then per-agent
    /// normalization of the advantages.
    pub fn compute_advantages(&mut self, gamma: f64, lambda: f64) {
        let (t, a) = (self.len, self.agents);
        self.advantages = vec![0.0; t * a];
        self.returns = vec![0.0; t * a];
        for i in 0..a {
            let col = |v: &[f64]| (0..t).map(|s| v[s * a + i]).collect::<Vec<_>>();
            let (adv, ret) = gae(
                &col(&self.rewards),
                &col(&self.values),
                &col(&self.next_values),
                &self.ends,
                gamma,
                lambda,
            );
            let mut adv = adv;
            normalize(&mut adv);
            for s in 0..t {
                self.advantages[s * a + i] = adv[s];
                self.returns[s * a + i] = ret[s];
            }
        }
    }
}

/// Components of the minibatch loss.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossParts {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    pub clip_fraction: f64,
}

/// PPO loss on transitions `idx` and, if `grad` is given, its exact
/// gradient (accumulated). Loss per (transition, agent) sample:
/// `-min(r A, clip(r) A) + vf * 0.5 * max((V-R)^2, (Vc-R)^2) - ent * H`.
pub fn loss_and_grad(
    model: &ActorCritic,
    batch: &RolloutBatch,
    idx: &[usize],
    cfg: &TrainConfig,
    ws: &mut Workspace,
    mut grad: Option<&mut [f64]>,
) -> LossParts {
    let (n, na) = (batch.nodes, batch.agents);
    assert_eq!(na, model.agents.len(), "batch agent count");
    let samples = (idx.len() * na) as f64;
    let mut parts = LossParts::default();
    // gather observations once
    let mut obs = Vec::with_capacity(idx.len() * n);
    for &t in idx {
        obs.extend_from_slice(&batch.obs[t * n..(t + 1) * n]);
    }
    let mut d_out = Vec::new();
    let mut clipped = 0usize;
    for k in 0..model.actors.len() {
        model.actor_pass(k, &obs, n, idx.len(), ws);
        let w = model.actors[k].output();
        let log_std = &model.params[model.log_std_range(k)];
        let inv_var: Vec<f64> = log_std.iter().map(|s| (-2.0 * s).exp()).collect();
        let y = ws.actor[k].output();
        let m = ws.rows.len();
        d_out.clear();
        d_out.resize(m * w, 0.0);
        let mut d_log_std = vec![0.0; w];
        for (j, &(r, i)) in ws.rows.iter().enumerate() {
            let t = idx[r];
            let agent = &model.agents[i];
            let mut logp = 0.0;
            for (d, &p) in agent.act.iter().enumerate() {
                let z = batch.actions[t * n + p] - y[j * w + d];
                logp += -0.5 * z * z * inv_var[d] - log_std[d] - 0.5 * LN_2PI;
            }
            let ratio = (logp - batch.log_probs[t * na + i]).exp();
            let adv = batch.advantages[t * na + i];
            let pg1 = ratio * adv;
            let pg2 = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * adv;
            parts.policy -= pg1.min(pg2);
            if (ratio - 1.0).abs() > cfg.clip {
                clipped += 1;
            }
            parts.entropy += gaussian_entropy(log_std);
            if pg1 <= pg2 {
                // d loss / d logp for this sample
                let g = -pg1 / samples;
                for (d, &p) in agent.act.iter().enumerate() {
                    let z = batch.actions[t * n + p] - y[j * w + d];
                    d_out[j * w + d] = g * z * inv_var[d];
                    d_log_std[d] += g * (z * z * inv_var[d] - 1.0);
                }
            }
            for dl in d_log_std.iter_mut() {
                *dl -= cfg.ent_coef / samples;
            }
        }
        if let Some(g) = grad.as_deref_mut() {
            let r = model.actor_range(k);
            nn::backward(&model.actors[k], &model.params[r.clone()], &mut ws.actor[k], &d_out, &mut g[r]);
            for (gl, dl) in g[model.log_std_range(k)].iter_mut().zip(&d_log_std) {
                *gl += dl;
            }
        }
    }
    let heads = model.critic.output();
    let v = model.critic_pass(&obs, n, idx.len(), ws).to_vec();
    d_out.clear();
    d_out.resize(idx.len() * heads, 0.0);
    for (r, &t) in idx.iter().enumerate() {
        for (i, agent) in model.agents.iter().enumerate() {
            let h = r * heads + agent.head;
            let (old, ret) = (batch.values[t * na + i], batch.returns[t * na + i]);
            let vc = old + (v[h] - old).clamp(-cfg.clip, cfg.clip);
            let (l1, l2) = ((v[h] - ret).powi(2), (vc - ret).powi(2));
            parts.value += 0.5 * l1.max(l2);
            let dv = if l1 >= l2 {
                v[h] - ret
            } else if (v[h] - old).abs() < cfg.clip {
                vc - ret
            } else {
                0.0
            };
            d_out[h] += cfg.vf_coef * dv / samples;
        }
    }
    if let Some(g) = grad {
        let r = model.critic_range();
        nn::backward(&model.critic, &model.params[r.clone()], &mut ws.critic, &d_out, &mut g[r]);
    }
    parts.policy /= samples;
    parts.value /= samples;
    parts.entropy /= samples;
    parts.clip_fraction = clipped as f64 / samples;
    parts.total = parts.policy + cfg.vf_coef * parts.value - cfg.ent_coef * parts.entropy;
    parts
}

/// Summary of one update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UpdateStats {
    pub loss: f64,
    pub grad_norm: f64,
    pub clip_fraction: f64,
}

/// `epochs` passes of shuffled minibatch steps over the batch.
pub fn ppo_update<R: Rng>(
    model: &mut ActorCritic,
    batch: &RolloutBatch,
    cfg: &TrainConfig,
    adam: &mut Adam,
    ws: &mut Workspace,
    rng: &mut R,
) -> Result<UpdateStats> {
    let mb = batch.len / cfg.minibatches;
    if mb == 0 || mb * cfg.minibatches != batch.len {
        return Err(Error::Shape(format!(
            "{} transitions do not split into {} minibatches",
            batch.len, cfg.minibatches
        )));
    }
    let mut perm: Vec<usize> = (0..batch.len).collect();
    let mut grad = vec![0.0; model.num_params()];
    let mut stats = UpdateStats::default();
    let steps = (cfg.epochs * cfg.minibatches) as f64;
    for _ in 0..cfg.epochs {
        perm.shuffle(rng);
        for chunk in perm.chunks(mb) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let parts = loss_and_grad(model, batch, chunk, cfg, ws, Some(&mut grad));
            if !parts.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training(format!(
                    "non-finite loss {} (policy {}, value {})",
                    parts.total, parts.policy, parts.value
                )));
            }
            let norm = clip_grad_norm(&mut grad, cfg.max_grad_norm);
            adam.step(&mut model.params, &grad);
            stats.loss += parts.total / steps;
            stats.grad_norm += norm / steps;
            stats.clip_fraction += parts.clip_fraction / steps;
        }
    }
    if !model.is_finite() {
        return Err(Error::Training("parameters became non-finite".into()));
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::model::AgentSpec;
    use crate::learning::nn::MlpShape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn head_identities() {
        let lp = gaussian_log_prob(&[0.3, -0.2], &[0.3, -0.2], &[0.0, 0.0]);
        assert!((lp - 2.0 * (-0.5 * LN_2PI)).abs() < 1e-15);
        let h = gaussian_entropy(&[0.0]);
        assert!((h - 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln()).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = gaussian_head(&[3.0, 0.1], &[-60.0, -60.0], &mut rng);
        assert_eq!(s.action, vec![1.0, 0.1]);
    }

    #[test]
    fn gae_small_cases() {
        // one step: A = r + gamma V' - V
        let (a, r) = gae(&[1.0], &[0.5], &[2.0], &[true], 0.9, 0.95);
        assert!((a[0] - (1.0 + 0.9 * 2.0 - 0.5)).abs() < 1e-15);
        assert!((r[0] - (a[0] + 0.5)).abs() < 1e-15);
        // gamma = lambda = 1 with a zero terminal value: reward-to-go minus value
        let rw = [1.0, -2.0, 0.5];
        let v = [0.1, 0.2, 0.3];
        let (a, _) = gae(&rw, &v, &[0.2, 0.3, 0.0], &[false, false, true], 1.0, 1.0);
        assert!((a[0] - (-0.5 - 0.1)).abs() < 1e-12);
        assert!((a[1] - (-1.5 - 0.2)).abs() < 1e-12);
    }

    #[test]
    fn normalization_moments() {
        let mut x: Vec<f64> = (0..37).map(|i| (i as f64 * 0.7).sin() * 3.0 + 2.0).collect();
        normalize(&mut x);
        let m = x.iter().sum::<f64>() / 37.0;
        let s = (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 37.0).sqrt();
        assert!(m.abs() < 1e-6 && (s - 1.0).abs() < 1e-6);
    }

    pub(crate) fn tiny_problem(seed: u64) -> (ActorCritic, RolloutBatch) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let agents = vec![
            AgentSpec { name: "a".into(), actor: 0, obs: vec![0, 2], act: vec![0], reward: vec![0], head: 0 },
            AgentSpec { name: "b".into(), actor: 1, obs: vec![1, 2], act: vec![1, 2], reward: vec![1, 2], head: 1 },
        ];
        let mut m = ActorCritic::new(
            vec![MlpShape::new(2, &[4, 4], 1), MlpShape::new(2, &[4, 4], 2)],
            MlpShape::new(3, &[4, 4], 2),
            vec![0, 1, 2],
            agents,
        )
        .unwrap();
        m.init(-0.3, &mut rng);
        // move away from the tiny output gain so every weight matters
        m.params.iter_mut().for_each(|p| *p += rng.gen_range(-0.3..0.3));
        let (len, n, na) = (8, 3, 2);
        let u = |rng: &mut ChaCha8Rng, k: usize| (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>();
        let mut b = RolloutBatch::new(n, na);
        b.len = len;
        b.obs = u(&mut rng, len * n);
        b.actions = u(&mut rng, len * n);
        b.log_probs = u(&mut rng, len * na).iter().map(|v| v - 1.0).collect();
        b.values = u(&mut rng, len * na);
        b.advantages = u(&mut rng, len * na);
        b.returns = u(&mut rng, len * na);
        (m, b)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (mut m, b) = tiny_problem(11);
        let cfg = TrainConfig { ent_coef: 0.01, ..Default::default() };
        let idx: Vec<usize> = (0..b.len).collect();
        let mut ws = Workspace::default();
        let mut g = vec![0.0; m.num_params()];
        loss_and_grad(&m, &b, &idx, &cfg, &mut ws, Some(&mut g));
        let mut worst = 0.0f64;
        for k in 0..m.num_params() {
            let p0 = m.params[k];
            let h = 1e-6;
            m.params[k] = p0 + h;
            let up = loss_and_grad(&m, &b, &idx, &cfg, &mut ws, None).total;
            m.params[k] = p0 - h;
            let dn = loss_and_grad(&m, &b, &idx, &cfg, &mut ws, None).total;
            m.params[k] = p0;
            let fd = (up - dn) / (2.0 * h);
            let err = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-6);
            worst = worst.max(err);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn surrogate_identity_at_unit_ratio() {
        let (m, mut b) = tiny_problem(5);
        // make stored log-probs those of the current policy: ratio = 1
        let mut ws = Workspace::default();
        for t in 0..b.len {
            let out = m.forward(&b.obs[t * 3..t * 3 + 3]);
            for (i, a) in m.agents.iter().enumerate() {
                let x: Vec<f64> = a.act.iter().map(|&p| b.actions[t * 3 + p]).collect();
                b.log_probs[t * 2 + i] = gaussian_log_prob(&x, &out.mean[i], &out.log_std[i]);
            }
        }
        let idx: Vec<usize> = (0..b.len).collect();
        let parts = loss_and_grad(&m, &b, &idx, &TrainConfig::default(), &mut ws, None);
        let mean_adv = b.advantages.iter().sum::<f64>() / b.advantages.len() as f64;
        assert!((parts.policy + mean_adv).abs() < 1e-12);
        assert_eq!(parts.clip_fraction, 0.0);
    }

    #[test]
    fn clipped_positive_advantage_has_no_policy_gradient() {
        let (m, mut b) = tiny_problem(9);
        b.advantages.iter_mut().for_each(|a| *a = a.abs() + 0.1);
        // stored log-probs far below current: ratio >> 1.2
        b.log_probs.iter_mut().for_each(|l| *l = -50.0);
        let cfg = TrainConfig { vf_coef: 0.0, ..Default::default() };
        let idx: Vec<usize> = (0..b.len).collect();
        let mut g = vec![0.0; m.num_params()];
        loss_and_grad(&m, &b, &idx, &cfg, &mut Workspace::default(), Some(&mut g));
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn value_loss_touches_only_critic() {
        let (m, mut b) = tiny_problem(4);
        b.advantages.iter_mut().for_each(|a| *a = 0.0);
        let idx: Vec<usize> = (0..b.len).collect();
        let mut g = vec![0.0; m.num_params()];
        loss_and_grad(&m, &b, &idx, &TrainConfig::default(), &mut Workspace::default(), Some(&mut g));
        let c = m.critic_range();
        assert!(g[..c.start].iter().all(|v| *v == 0.0));
        assert!(g[c].iter().any(|v| *v != 0.0));
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let (mut m, mut b) = tiny_problem(6);
        b.ends = vec![false; b.len];
        let before = m.params.clone();
        let cfg = TrainConfig { learning_rate: 0.0, minibatches: 2, ..Default::default() };
        let mut adam = Adam::new(m.num_params(), 0.0, cfg.adam_eps);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        ppo_update(&mut m, &b, &cfg, &mut adam, &mut Workspace::default(), &mut rng).unwrap();
        assert_eq!(m.params, before);
    }

    #[test]
    fn non_finite_batch_is_reported() {
        let (mut m, mut b) = tiny_problem(6);
        b.returns[0] = f64::NAN;
        let cfg = TrainConfig { minibatches: 1, ..Default::default() };
        let mut adam = Adam::new(m.num_params(), 1e-4, 1e-5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let e = ppo_update(&mut m, &b, &cfg, &mut adam, &mut Workspace::default(), &mut rng);
        assert!(matches!(e, Err(Error::Training(_))));
    }
}
