//! Graph-attention actor-critic trained with clipped PPO.
//!
//! Every agent runs the same network: a small CNN turns its observation into
//! a feature vector `h`, a multi-head graph-attention layer mixes in the
//! other agents' features as `h'`, and actor/critic heads read `[h ; h']`.

mod adam;
mod gat;
mod graph;
mod layers;
mod net;
mod policy;
mod ppo;
mod train;

pub use adam::{clip_grad_norm, Adam};
pub use gat::{GatLayer, LEAKY_SLOPE};
pub use graph::{Gradients, Graph, ParamId, ParamSet, Tensor, Var};
pub use layers::{Conv2d, Linear};
pub use net::{NetConfig, NetOutput, PolicyNet};
pub use policy::NetPolicy;
pub use ppo::{discounted_returns, ppo_loss, ppo_objective, LossParts, PpoConfig, RolloutBatch};
pub use train::{collect_episode, train, EpisodeStats, TrainConfig, TrainReport};

/// Numerically stable softmax of one logit row.
pub fn softmax(logits: &[f64]) -> alloc::vec::Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: alloc::vec::Vec<f64> = logits.iter().map(|&v| libm::exp(v - m)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}
