//! Clipped-surrogate PPO objective.
//!
//! The surrogate `min(ratio·A, clip(ratio, 1-ε, 1+ε)·A)` is averaged over
//! agents and timesteps and negated for descent. The critic is fitted with
//! a squared-error term and an entropy bonus keeps exploration alive:
//!
//! `loss = -surr + c_v·(G - V)² - c_e·entropy`

use alloc::string::String;
use alloc::vec::Vec;

use super::graph::{Graph, Tensor, Var};
use super::net::PolicyNet;
use crate::observation::OBS_SIZE;
use crate::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct PpoConfig {
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Timesteps per minibatch; every agent of a timestep goes together.
    pub minibatch: usize,
    /// Global gradient-norm cap; non-positive disables it.
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            gamma: 0.99,
            learning_rate: 3e-4,
            epochs: 4,
            minibatch: 256,
            max_grad_norm: 0.5,
            normalize_advantages: true,
        }
    }
}

/// Reward-to-go `G(t) = Σ_{τ≥t} γ^{τ-t} r(τ)`.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = alloc::vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for (o, &r) in out.iter_mut().zip(rewards).rev() {
        acc = r + gamma * acc;
        *o = acc;
    }
    out
}

/// Samples in timestep-major order: sample `t * group + i` is agent `i` at
/// step `t`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBatch {
    pub group: usize,
    pub channels: usize,
    /// Normalized observation per sample, `channels * 25 * 25` each.
    pub inputs: Vec<f64>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<f64>,
    pub returns: Vec<f64>,
    pub values: Vec<f64>,
    /// `returns - values`, before any normalization.
    pub advantages: Vec<f64>,
}

impl RolloutBatch {
    pub fn new(group: usize, channels: usize) -> Self {
        RolloutBatch { group, channels, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.len().checked_div(self.group).unwrap_or(0)
    }

    fn sample_width(&self) -> usize {
        self.channels * OBS_SIZE * OBS_SIZE
    }

    /// Appends another batch with the same layout.
    pub fn extend(&mut self, other: &RolloutBatch) {
        self.inputs.extend_from_slice(&other.inputs);
        self.actions.extend_from_slice(&other.actions);
        self.old_log_probs.extend_from_slice(&other.old_log_probs);
        self.returns.extend_from_slice(&other.returns);
        self.values.extend_from_slice(&other.values);
        self.advantages.extend_from_slice(&other.advantages);
    }

    /// Zero-mean, unit-variance copy of the advantages.
    pub fn normalized_advantages(&self) -> Vec<f64> {
        let n = self.advantages.len() as f64;
        if n == 0.0 {
            return Vec::new();
        }
        let mean = self.advantages.iter().sum::<f64>() / n;
        let var = self.advantages.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / n;
        let std = libm::sqrt(var) + 1e-8;
        self.advantages.iter().map(|a| (a - mean) / std).collect()
    }

    fn check(&self) -> Result<()> {
        let n = self.len();
        if n == 0 || self.group == 0 || !n.is_multiple_of(self.group) {
            return Err(Error::InvalidParameter(alloc::format!(
                "batch of {n} samples does not split into groups of {}",
                self.group
            )));
        }
        let lens = [self.old_log_probs.len(), self.returns.len(), self.values.len(), self.advantages.len()];
        if lens.iter().any(|&l| l != n) || self.inputs.len() != n * self.sample_width() {
            return Err(Error::Shape(String::from("rollout batch fields have mismatched lengths")));
        }
        for (name, vals) in [
            ("inputs", &self.inputs),
            ("old_log_probs", &self.old_log_probs),
            ("returns", &self.returns),
            ("values", &self.values),
            ("advantages", &self.advantages),
        ] {
            if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite(alloc::format!("rollout batch field {name} at index {i}: {}", vals[i])));
            }
        }
        Ok(())
    }
}

/// Scalar pieces of the loss, for logging.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct LossParts {
    pub total: f64,
    /// Mean clipped surrogate (to be maximized).
    pub surrogate: f64,
    pub value: f64,
    pub entropy: f64,
}

/// Builds the loss over timesteps `steps` of `batch` using `advantages`
/// (one per sample, possibly normalized). Returns the graph, the scalar
/// loss node and its parts.
pub fn ppo_objective(
    net: &PolicyNet,
    batch: &RolloutBatch,
    steps: &[usize],
    advantages: &[f64],
    cfg: &PpoConfig,
) -> Result<(Graph, Var, LossParts)> {
    batch.check()?;
    if advantages.len() != batch.len() {
        return Err(Error::Shape(String::from("advantage count differs from batch size")));
    }
    let n = batch.group;
    let width = batch.sample_width();
    let rows = steps.len() * n;
    let mut inputs = Vec::with_capacity(rows * width);
    let (mut actions, mut old, mut adv, mut ret) =
        (Vec::with_capacity(rows), Vec::with_capacity(rows), Vec::with_capacity(rows), Vec::with_capacity(rows));
    for &t in steps {
        let r = t * n..(t + 1) * n;
        inputs.extend_from_slice(&batch.inputs[r.start * width..r.end * width]);
        actions.extend_from_slice(&batch.actions[r.clone()]);
        old.extend_from_slice(&batch.old_log_probs[r.clone()]);
        adv.extend_from_slice(&advantages[r.clone()]);
        ret.extend_from_slice(&batch.returns[r]);
    }
    let mut g = Graph::new();
    let input = Tensor::new(&[rows, batch.channels, OBS_SIZE, OBS_SIZE], inputs)?;
    let out = net.forward(&mut g, input, n)?;

    let log_probs = g.log_softmax(out.logits)?;
    let logp = g.gather(log_probs, &actions)?;
    let old = g.input(Tensor::new(&[rows], old)?);
    let adv = g.input(Tensor::new(&[rows], adv)?);
    let diff = g.sub(logp, old)?;
    let ratio = g.exp(diff);
    let unclipped = g.mul(ratio, adv)?;
    let clipped_ratio = g.clamp(ratio, 1.0 - cfg.clip, 1.0 + cfg.clip);
    let clipped = g.mul(clipped_ratio, adv)?;
    let surr = g.min(unclipped, clipped)?;
    let surr = g.mean(surr);

    let value = g.reshape(out.value, &[rows])?;
    let ret = g.input(Tensor::new(&[rows], ret)?);
    let err = g.sub(value, ret)?;
    let err = g.square(err);
    let value_loss = g.mean(err);

    let probs = g.exp(log_probs);
    let plogp = g.mul(probs, log_probs)?;
    let neg_entropy = g.sum_rows(plogp)?;
    let neg_entropy = g.mean(neg_entropy);

    let policy_term = g.scale(surr, -1.0);
    let value_term = g.scale(value_loss, cfg.value_coef);
    let entropy_term = g.scale(neg_entropy, cfg.entropy_coef);
    let loss = g.add(policy_term, value_term)?;
    let loss = g.add(loss, entropy_term)?;

    let parts = LossParts {
        total: g.value(loss).data[0],
        surrogate: g.value(surr).data[0],
        value: g.value(value_loss).data[0],
        entropy: -g.value(neg_entropy).data[0],
    };
    if !parts.total.is_finite() {
        return Err(Error::NonFinite(alloc::format!("ppo loss {parts:?}")));
    }
    Ok((g, loss, parts))
}

/// Loss over the whole batch with its stored advantages.
pub fn ppo_loss(batch: &RolloutBatch, cfg: &PpoConfig, net: &PolicyNet) -> Result<LossParts> {
    let steps: Vec<usize> = (0..batch.steps()).collect();
    ppo_objective(net, batch, &steps, &batch.advantages, cfg).map(|(_, _, parts)| parts)
}
