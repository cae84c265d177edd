//! Episode collection and the PPO update loop.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::{clip_grad_norm, Adam};
use super::net::PolicyNet;
use super::policy::{joint_forward, sample_index};
use super::ppo::{discounted_returns, ppo_objective, LossParts, PpoConfig, RolloutBatch};
use super::softmax;
use crate::grid::{Action, GridMap};
use crate::world::{WorldConfig, WorldState};
use crate::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub episodes: usize,
    /// Horizon `T`.
    pub steps: usize,
    pub n_agents: usize,
    pub ppo: PpoConfig,
    pub episodes_per_update: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { episodes: 500, steps: 100, n_agents: 1, ppo: PpoConfig::default(), episodes_per_update: 1 }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct EpisodeStats {
    pub episode: usize,
    /// `Σ_t |shared reward|` over the episode.
    pub cumulative_penalty: f64,
    /// Loss parts of the last minibatch of the update that followed this
    /// episode, if one did.
    pub loss: Option<LossParts>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainReport {
    pub stats: Vec<EpisodeStats>,
    /// Set when a non-finite loss or parameter stopped training; the
    /// network holds the last finite parameters.
    pub diverged: bool,
}

/// Plays one episode with the stochastic policy and records PPO samples.
/// Rewards are scaled by `1 / (free cells · r_max)` before discounting.
/// Returns the batch and the cumulative penalty magnitude.
pub fn collect_episode(
    net: &PolicyNet,
    world: &mut WorldState,
    steps: usize,
    gamma: f64,
    rng: &mut dyn RngCore,
) -> Result<(RolloutBatch, f64)> {
    let n = world.n_agents();
    let mut batch = RolloutBatch::new(n, net.config().mode.channels());
    let scale = 1.0 / (world.map().free_count() as f64 * world.config().r_max);
    let mut rewards = Vec::with_capacity(steps);
    let mut total = 0.0;
    for _ in 0..steps {
        let fwd = joint_forward(net, world)?;
        let mut joint = Vec::with_capacity(n);
        for logits in &fwd.logits {
            let probs = softmax(logits);
            let a = sample_index(&probs, rng);
            batch.actions.push(a);
            batch.old_log_probs.push(libm::log(probs[a]));
            joint.push(Action::from_index(a).unwrap_or(Action::Stay));
        }
        batch.inputs.extend_from_slice(&fwd.inputs);
        batch.values.extend_from_slice(&fwd.values);
        let out = world.step(&joint)?;
        total -= out.reward;
        rewards.push(out.reward * scale);
    }
    for g in discounted_returns(&rewards, gamma) {
        batch.returns.extend(core::iter::repeat_n(g, n));
    }
    batch.advantages = batch.returns.iter().zip(&batch.values).map(|(g, v)| g - v).collect();
    Ok((batch, total))
}

fn all_finite(net: &PolicyNet) -> bool {
    net.params().tensors().iter().all(|t| t.data.iter().all(|v| v.is_finite()))
}

/// Runs the PPO update on `batch`; returns the last minibatch's loss.
fn update(
    net: &mut PolicyNet,
    adam: &mut Adam,
    batch: &RolloutBatch,
    cfg: &PpoConfig,
    rng: &mut ChaCha8Rng,
) -> Result<LossParts> {
    let advantages = if cfg.normalize_advantages { batch.normalized_advantages() } else { batch.advantages.clone() };
    let mut order: Vec<usize> = (0..batch.steps()).collect();
    let mut last = LossParts::default();
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch.max(1)) {
            let (g, loss, parts) = ppo_objective(net, batch, chunk, &advantages, cfg)?;
            let mut grads = g.backward(loss)?.for_params(net.params());
            let norm = clip_grad_norm(&mut grads, cfg.max_grad_norm);
            if !norm.is_finite() {
                return Err(Error::NonFinite(alloc::format!("gradient norm {norm}")));
            }
            adam.step(net.params_mut(), &grads)?;
            if !all_finite(net) {
                return Err(Error::NonFinite(alloc::string::String::from("parameters after update")));
            }
            last = parts;
        }
    }
    Ok(last)
}

/// Trains `net` in place. Each episode starts from fresh uniform-random
/// positions. Everything is driven by `seed`, so two runs with the same
/// inputs produce identical curves. `on_episode` sees each episode's stats
/// and the network as it stands after that episode.
pub fn train(
    map: Arc<GridMap>,
    world_cfg: WorldConfig,
    net: &mut PolicyNet,
    cfg: &TrainConfig,
    seed: u64,
    on_episode: &mut dyn FnMut(&EpisodeStats, &PolicyNet),
) -> Result<TrainReport> {
    if cfg.n_agents == 0 || cfg.steps == 0 {
        return Err(Error::InvalidParameter(alloc::string::String::from("need at least one agent and one step")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut adam = Adam::new(cfg.ppo.learning_rate);
    let mut report = TrainReport::default();
    let mut pending = RolloutBatch::new(cfg.n_agents, net.config().mode.channels());
    let per_update = cfg.episodes_per_update.max(1);
    for episode in 0..cfg.episodes {
        let mut world = WorldState::with_random_starts(map.clone(), cfg.n_agents, world_cfg, &mut rng)?;
        let (batch, total) = collect_episode(net, &mut world, cfg.steps, cfg.ppo.gamma, &mut rng)?;
        pending.extend(&batch);
        let mut stats = EpisodeStats { episode, cumulative_penalty: total, loss: None };
        if (episode + 1) % per_update == 0 || episode + 1 == cfg.episodes {
            let good = net.params().clone();
            match update(net, &mut adam, &pending, &cfg.ppo, &mut rng) {
                Ok(parts) => stats.loss = Some(parts),
                Err(Error::NonFinite(_)) => {
                    *net.params_mut() = good;
                    report.diverged = true;
                }
                Err(e) => return Err(e),
            }
            pending = RolloutBatch::new(cfg.n_agents, net.config().mode.channels());
        }
        on_episode(&stats, net);
        report.stats.push(stats);
        if report.diverged {
            break;
        }
    }
    Ok(report)
}
