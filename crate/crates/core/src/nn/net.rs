use alloc::vec::Vec;

use rand::Rng;

use super::gat::GatLayer;
use super::graph::{Graph, ParamSet, Tensor, Var};
use super::layers::{Conv2d, Linear};
use crate::grid::Action;
use crate::observation::{Observation, ObservationMode, OBS_SIZE};
use crate::{Error, Result};

pub const CONV1_FILTERS: usize = 8;
pub const CONV2_FILTERS: usize = 16;
const KERNEL: usize = 3;
const STRIDE: usize = 2;

const fn conv_out(n: usize) -> usize {
    (n - KERNEL) / STRIDE + 1
}

/// Flattened width after the two convolutions.
pub const CONV_FLAT: usize = CONV2_FILTERS * conv_out(conv_out(OBS_SIZE)) * conv_out(conv_out(OBS_SIZE));

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct NetConfig {
    pub mode: ObservationMode,
    /// Width of `h` and `h'`.
    pub features: usize,
    pub heads: usize,
    /// Hidden width of the actor and critic heads.
    pub hidden: usize,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig { mode: ObservationMode::Both, features: 128, heads: 3, hidden: 128 }
    }
}

/// Shared parameters for every agent.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyNet {
    config: NetConfig,
    params: ParamSet,
    conv1: Conv2d,
    conv2: Conv2d,
    encoder: Linear,
    gat: GatLayer,
    actor_hidden: Linear,
    actor_out: Linear,
    critic_hidden: Linear,
    critic_out: Linear,
}

pub struct NetOutput {
    /// `[B, F]`
    pub h: Var,
    /// `[B, F]`
    pub h_prime: Var,
    /// `[B, 5]`
    pub logits: Var,
    /// `[B, 1]`
    pub value: Var,
}

impl PolicyNet {
    pub fn new<R: Rng + ?Sized>(config: NetConfig, rng: &mut R) -> Self {
        let mut ps = ParamSet::new();
        let c = config.mode.channels();
        let f = config.features;
        let conv1 = Conv2d::new(&mut ps, "cnn.conv1", c, CONV1_FILTERS, KERNEL, STRIDE, rng);
        let conv2 = Conv2d::new(&mut ps, "cnn.conv2", CONV1_FILTERS, CONV2_FILTERS, KERNEL, STRIDE, rng);
        let encoder = Linear::new(&mut ps, "cnn.fc", CONV_FLAT, f, 1.0, rng);
        let gat = GatLayer::new(&mut ps, "gat", f, f, config.heads, rng);
        let actor_hidden = Linear::new(&mut ps, "actor.hidden", 2 * f, config.hidden, 1.0, rng);
        let actor_out = Linear::new(&mut ps, "actor.out", config.hidden, Action::COUNT, 0.01, rng);
        let critic_hidden = Linear::new(&mut ps, "critic.hidden", 2 * f, config.hidden, 1.0, rng);
        let critic_out = Linear::new(&mut ps, "critic.out", config.hidden, 1, 1.0, rng);
        PolicyNet { config, params: ps, conv1, conv2, encoder, gat, actor_hidden, actor_out, critic_hidden, critic_out }
    }

    /// Rebuilds a network around stored parameters; names and shapes must
    /// match the layout `config` implies.
    pub fn from_params(config: NetConfig, params: ParamSet) -> Result<Self> {
        let mut net = Self::new(config, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0));
        if net.params.len() != params.len() {
            return Err(Error::Shape(alloc::format!(
                "expected {} parameter tensors, got {}",
                net.params.len(),
                params.len()
            )));
        }
        for ((name, want), (got_name, got)) in net.params.iter().zip(params.iter()) {
            if name != got_name || want.shape != got.shape {
                return Err(Error::Shape(alloc::format!(
                    "parameter {got_name} {:?} does not match {name} {:?}",
                    got.shape,
                    want.shape
                )));
            }
        }
        net.params = params;
        Ok(net)
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn gat(&self) -> &GatLayer {
        &self.gat
    }

    /// Stacks observations into a `[B, C, 25, 25]` input tensor.
    pub fn input_tensor(&self, observations: &[Observation]) -> Result<Tensor> {
        let c = self.config.mode.channels();
        let mut data = Vec::with_capacity(observations.len() * c * OBS_SIZE * OBS_SIZE);
        for obs in observations {
            if obs.mode != self.config.mode {
                return Err(Error::Shape(alloc::format!(
                    "observation mode {} but the network expects {}",
                    obs.mode.name(),
                    self.config.mode.name()
                )));
            }
            obs.write_input(&mut data);
        }
        Tensor::new(&[observations.len(), c, OBS_SIZE, OBS_SIZE], data)
    }

    /// CNN feature extractor: `[B, C, 25, 25] -> [B, F]`.
    pub fn encode(&self, g: &mut Graph, x: Var) -> Result<Var> {
        let ps = &self.params;
        let y = self.conv1.forward(g, ps, x)?;
        let y = g.relu(y);
        let y = self.conv2.forward(g, ps, y)?;
        let y = g.relu(y);
        let b = g.shape(y)[0];
        let y = g.reshape(y, &[b, CONV_FLAT])?;
        self.encoder.forward(g, ps, y)
    }

    /// Actor logits and critic value from `[h ; h']`.
    pub fn heads(&self, g: &mut Graph, h: Var, h_prime: Var) -> Result<(Var, Var)> {
        let ps = &self.params;
        let z = g.concat(h, h_prime)?;
        let a = self.actor_hidden.forward(g, ps, z)?;
        let a = g.relu(a);
        let logits = self.actor_out.forward(g, ps, a)?;
        let c = self.critic_hidden.forward(g, ps, z)?;
        let c = g.relu(c);
        let value = self.critic_out.forward(g, ps, c)?;
        Ok((logits, value))
    }

    /// Full pass over `input [G*group, C, 25, 25]`, where each consecutive
    /// block of `group` rows is one timestep's agents in id order.
    pub fn forward(&self, g: &mut Graph, input: Tensor, group: usize) -> Result<NetOutput> {
        let x = g.input(input);
        let h = self.encode(g, x)?;
        let h_prime = self.gat.forward(g, &self.params, h, group)?;
        let (logits, value) = self.heads(g, h, h_prime)?;
        Ok(NetOutput { h, h_prime, logits, value })
    }

    /// Feature vector for one observation.
    pub fn cnn_encode(&self, obs: &Observation) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let x = g.input(self.input_tensor(core::slice::from_ref(obs))?);
        let h = self.encode(&mut g, x)?;
        Ok(g.value(h).data.clone())
    }

    /// Builds one attention group holding `me` and its neighbours, sorted
    /// by agent id so the result does not depend on the order given.
    fn group_input(&self, me: (usize, &[f64]), neighbors: &[(usize, &[f64])]) -> Result<(Tensor, Vec<usize>, usize)> {
        let f = self.config.features;
        let mut members: Vec<(usize, &[f64])> = Vec::with_capacity(neighbors.len() + 1);
        members.push(me);
        members.extend_from_slice(neighbors);
        members.sort_by_key(|m| m.0);
        if members.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParameter(alloc::string::String::from("duplicate agent id in neighbourhood")));
        }
        let mut data = Vec::with_capacity(members.len() * f);
        for (_, h) in &members {
            if h.len() != f {
                return Err(Error::Shape(alloc::format!("feature length {} != {}", h.len(), f)));
            }
            data.extend_from_slice(h);
        }
        let ids: Vec<usize> = members.iter().map(|m| m.0).collect();
        let row = ids.iter().position(|&id| id == me.0).unwrap();
        Ok((Tensor::new(&[members.len(), f], data)?, ids, row))
    }

    /// Attention weights `α_ij` of agent `me` over `neighbors`, returned in
    /// the order given.
    pub fn gat_attention(&self, me: (usize, &[f64]), neighbors: &[(usize, &[f64])], head: usize) -> Result<Vec<f64>> {
        if head >= self.gat.heads.len() {
            return Err(Error::InvalidParameter(alloc::format!("head {head} out of range")));
        }
        let (input, ids, row) = self.group_input(me, neighbors)?;
        let n = ids.len();
        let mut g = Graph::new();
        let h = g.input(input);
        let (alpha, _) = self.gat.attention(&mut g, &self.params, h, n, head)?;
        let weights = &g.value(alpha).data[row * n..(row + 1) * n];
        Ok(neighbors.iter().map(|(id, _)| weights[ids.iter().position(|x| x == id).unwrap()]).collect())
    }

    /// Head-averaged aggregate `h'` for agent `me`.
    pub fn gat_aggregate(&self, me: (usize, &[f64]), neighbors: &[(usize, &[f64])]) -> Result<Vec<f64>> {
        let (input, ids, row) = self.group_input(me, neighbors)?;
        let n = ids.len();
        let f = self.config.features;
        let mut g = Graph::new();
        let h = g.input(input);
        let hp = self.gat.forward(&mut g, &self.params, h, n)?;
        Ok(g.value(hp).data[row * f..(row + 1) * f].to_vec())
    }

    /// Action logits and state value for one agent.
    pub fn actor_critic(&self, h: &[f64], h_prime: &[f64]) -> Result<(Vec<f64>, f64)> {
        let f = self.config.features;
        let mut g = Graph::new();
        let hv = g.input(Tensor::new(&[1, f], h.to_vec())?);
        let hpv = g.input(Tensor::new(&[1, f], h_prime.to_vec())?);
        let (logits, value) = self.heads(&mut g, hv, hpv)?;
        Ok((g.value(logits).data.clone(), g.value(value).data[0]))
    }
}
