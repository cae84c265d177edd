//! Versioned JSON checkpoints.
//!
//! A checkpoint stores every parameter array with its name and shape, the
//! network layout, the observation normalization constants the weights were
//! trained against, and the hash of the config that produced them.

use std::path::Path;

use serde::{Deserialize, Serialize};
use vpm_core::nn::{NetConfig, ParamSet, PolicyNet, Tensor};
use vpm_core::observation::{ObservationMode, AGENT_INPUT, OBSTACLE_INPUT};

use crate::error::{io_err, Error, Result};

pub const FORMAT: &str = "vpm-checkpoint";
pub const VERSION: u32 = 1;
/// Normalized input of a penalty at `-r_max`.
pub const PENALTY_INPUT_MAX: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub obstacle: f64,
    pub agent: f64,
    pub penalty_max: f64,
    pub r_max: f64,
}

impl Normalization {
    pub fn current(r_max: f64) -> Self {
        Normalization { obstacle: OBSTACLE_INPUT, agent: AGENT_INPUT, penalty_max: PENALTY_INPUT_MAX, r_max }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSpec {
    pub obs_mode: String,
    pub features: usize,
    pub heads: usize,
    pub hidden: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub config_hash: String,
    /// Agents the network was trained with.
    pub n_agents: usize,
    pub episode: usize,
    pub net: NetSpec,
    pub normalization: Normalization,
    pub params: Vec<ParamRecord>,
}

impl Checkpoint {
    pub fn from_net(net: &PolicyNet, config_hash: &str, n_agents: usize, episode: usize, r_max: f64) -> Self {
        let c = net.config();
        Checkpoint {
            format: FORMAT.into(),
            version: VERSION,
            config_hash: config_hash.into(),
            n_agents,
            episode,
            net: NetSpec { obs_mode: c.mode.name().into(), features: c.features, heads: c.heads, hidden: c.hidden },
            normalization: Normalization::current(r_max),
            params: net
                .params()
                .iter()
                .map(|(name, t)| ParamRecord { name: name.into(), shape: t.shape.clone(), data: t.data.clone() })
                .collect(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)?;
        std::fs::write(path, text).map_err(io_err(path))
    }

    /// Reads and checks a checkpoint. With `expected_hash`, the stored
    /// config hash must match it.
    pub fn load(path: &Path, expected_hash: Option<&str>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        let ck: Checkpoint = serde_json::from_str(&text)?;
        ck.verify(expected_hash)?;
        Ok(ck)
    }

    pub fn verify(&self, expected_hash: Option<&str>) -> Result<()> {
        if self.format != FORMAT || self.version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported format {} v{}", self.format, self.version)));
        }
        if let Some(h) = expected_hash {
            if h != self.config_hash {
                return Err(Error::Checkpoint(format!("config hash {} does not match {h}", self.config_hash)));
            }
        }
        let now = Normalization::current(self.normalization.r_max);
        if self.normalization != now {
            return Err(Error::Checkpoint(format!(
                "trained with normalization {:?}, this build uses {:?}",
                self.normalization, now
            )));
        }
        Ok(())
    }

    pub fn net_config(&self) -> Result<NetConfig> {
        let mode = ObservationMode::parse(&self.net.obs_mode)
            .ok_or_else(|| Error::Checkpoint(format!("unknown observation mode {:?}", self.net.obs_mode)))?;
        Ok(NetConfig { mode, features: self.net.features, heads: self.net.heads, hidden: self.net.hidden })
    }

    pub fn to_net(&self) -> Result<PolicyNet> {
        let mut ps = ParamSet::new();
        for p in &self.params {
            ps.add(p.name.clone(), Tensor::new(&p.shape, p.data.clone())?);
        }
        Ok(PolicyNet::from_params(self.net_config()?, ps)?)
    }
}
