//! Flat `key = value` configuration (TOML syntax, no tables).
//!
//! Every key is optional; missing keys take the defaults below. Unknown
//! keys are rejected so typos do not silently fall back to a default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vpm_core::nn::{NetConfig, PpoConfig, TrainConfig};
use vpm_core::observation::ObservationMode;
use vpm_core::planners::DEFAULT_D_MIN;
use vpm_core::WorldConfig;

use crate::error::{io_err, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    // world
    pub fov: usize,
    pub decay: f64,
    pub r_max: f64,

    // compare
    /// Bundled map names or paths.
    pub maps: Vec<String>,
    pub policies: Vec<String>,
    /// Agent counts to deploy with (N_test).
    pub agents: Vec<usize>,
    pub seeds: u64,
    pub seed_base: u64,
    pub steps: usize,
    pub d_min: f64,
    /// Checkpoints evaluated by the `net` policy; each contributes its
    /// training agent count as N_train.
    pub checkpoints: Vec<String>,
    pub net_greedy: bool,

    // network
    pub obs_mode: String,
    pub features: usize,
    pub heads: usize,
    pub hidden: usize,

    // PPO
    pub clip: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub gamma: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub minibatch: usize,
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,

    // training
    pub train_map: String,
    pub train_agents: usize,
    pub train_steps: usize,
    pub episodes: usize,
    pub episodes_per_update: usize,
    pub train_seed: u64,
    pub checkpoint: String,
    /// Episodes between checkpoint writes; 0 writes only the final one.
    pub checkpoint_every: usize,
    pub train_log: String,
}

impl Default for Config {
    fn default() -> Self {
        let world = WorldConfig::default();
        let net = NetConfig::default();
        let ppo = PpoConfig::default();
        let train = TrainConfig::default();
        Config {
            fov: world.fov,
            decay: world.decay,
            r_max: world.r_max,
            maps: vec!["open_20".into()],
            policies: vec!["random".into(), "gcs".into(), "tspc".into()],
            agents: vec![2],
            seeds: 10,
            seed_base: 0,
            steps: 500,
            d_min: DEFAULT_D_MIN,
            checkpoints: Vec::new(),
            net_greedy: false,
            obs_mode: net.mode.name().into(),
            features: net.features,
            heads: net.heads,
            hidden: net.hidden,
            clip: ppo.clip,
            value_coef: ppo.value_coef,
            entropy_coef: ppo.entropy_coef,
            gamma: ppo.gamma,
            learning_rate: ppo.learning_rate,
            epochs: ppo.epochs,
            minibatch: ppo.minibatch,
            max_grad_norm: ppo.max_grad_norm,
            normalize_advantages: ppo.normalize_advantages,
            train_map: "open_50".into(),
            train_agents: 2,
            train_steps: train.steps,
            episodes: train.episodes,
            episodes_per_update: train.episodes_per_update,
            train_seed: 0,
            checkpoint: "checkpoint.json".into(),
            checkpoint_every: 0,
            train_log: "train_log.csv".into(),
        }
    }
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path).map_err(io_err(path))?)
    }

    /// Canonical text form: every key, in declaration order.
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("flat config always serializes")
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.fov.is_multiple_of(2) {
            return Err(Error::Config(format!("fov must be odd, got {}", self.fov)));
        }
        if ObservationMode::parse(&self.obs_mode).is_none() {
            return Err(Error::Config(format!("obs_mode must be local, mini or both, got {:?}", self.obs_mode)));
        }
        if self.heads == 0 || self.features == 0 || self.hidden == 0 {
            return Err(Error::Config("heads, features and hidden must be positive".into()));
        }
        Ok(())
    }

    pub fn world(&self) -> WorldConfig {
        WorldConfig { fov: self.fov, decay: self.decay, r_max: self.r_max }
    }

    pub fn net(&self) -> NetConfig {
        NetConfig {
            mode: ObservationMode::parse(&self.obs_mode).unwrap_or(ObservationMode::Both),
            features: self.features,
            heads: self.heads,
            hidden: self.hidden,
        }
    }

    pub fn ppo(&self) -> PpoConfig {
        PpoConfig {
            clip: self.clip,
            value_coef: self.value_coef,
            entropy_coef: self.entropy_coef,
            gamma: self.gamma,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            minibatch: self.minibatch,
            max_grad_norm: self.max_grad_norm,
            normalize_advantages: self.normalize_advantages,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            episodes: self.episodes,
            steps: self.train_steps,
            n_agents: self.train_agents,
            ppo: self.ppo(),
            episodes_per_update: self.episodes_per_update,
        }
    }
}
