use alloc::vec::Vec;

use rand::{Rng, RngCore};

use super::graph::Graph;
use super::net::PolicyNet;
use super::softmax;
use crate::grid::Action;
use crate::observation::make_observation;
use crate::policy::JointPolicy;
use crate::world::WorldState;
use crate::Result;

/// One forward pass for every agent of `state`.
pub(crate) struct JointForward {
    /// Normalized inputs, agent-major.
    pub inputs: Vec<f64>,
    /// Action logits per agent.
    pub logits: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

pub(crate) fn joint_forward(net: &PolicyNet, state: &WorldState) -> Result<JointForward> {
    let n = state.n_agents();
    let observations = (0..n).map(|i| make_observation(state, i, net.config().mode)).collect::<Result<Vec<_>>>()?;
    let input = net.input_tensor(&observations)?;
    let inputs = input.data.clone();
    let mut g = Graph::new();
    let out = net.forward(&mut g, input, n)?;
    let logits = g.value(out.logits).data.chunks(Action::COUNT).map(<[f64]>::to_vec).collect();
    let values = g.value(out.value).data.clone();
    Ok(JointForward { inputs, logits, values })
}

/// Draws an index from `probs`.
pub(crate) fn sample_index(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

/// Runs a trained network: sampled actions by default, arg-max when
/// `greedy` is set.
#[derive(Clone, Debug)]
pub struct NetPolicy {
    pub net: PolicyNet,
    pub greedy: bool,
}

impl NetPolicy {
    pub fn new(net: PolicyNet) -> Self {
        NetPolicy { net, greedy: false }
    }
}

impl JointPolicy for NetPolicy {
    fn name(&self) -> &str {
        "net"
    }

    fn act(&mut self, state: &WorldState, rng: &mut dyn RngCore) -> Result<Vec<Action>> {
        let fwd = joint_forward(&self.net, state)?;
        Ok(fwd
            .logits
            .iter()
            .map(|l| {
                let i = if self.greedy {
                    // first maximum
                    l.iter().enumerate().fold(0, |best, (i, &v)| if v > l[best] { i } else { best })
                } else {
                    sample_index(&softmax(l), rng)
                };
                Action::from_index(i).unwrap_or(Action::Stay)
            })
            .collect())
    }
}
