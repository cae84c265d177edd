use alloc::string::String;
use alloc::vec::Vec;

use rand::RngCore;

use crate::grid::{Action, Cell};
use crate::policy::JointPolicy;
use crate::world::WorldState;
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EpisodeMeta {
    pub map_id: String,
    pub policy_id: String,
    pub seed: u64,
    pub steps: usize,
    pub height: usize,
    pub width: usize,
}

/// One episode: `steps + 1` position records and `steps` actions and
/// rewards.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrajectoryLog {
    pub meta: EpisodeMeta,
    pub positions: Vec<Vec<Cell>>,
    pub actions: Vec<Vec<Action>>,
    pub rewards: Vec<f64>,
}

impl TrajectoryLog {
    pub fn n_agents(&self) -> usize {
        self.positions.first().map_or(0, Vec::len)
    }

    /// Path of one agent over time.
    pub fn agent_path(&self, agent: usize) -> Result<Vec<Cell>> {
        if agent >= self.n_agents() {
            return Err(Error::InvalidAgent(agent));
        }
        Ok(self.positions.iter().map(|p| p[agent]).collect())
    }

    /// Row coordinate of one agent over time.
    pub fn y_series(&self, agent: usize) -> Result<Vec<f64>> {
        Ok(self.agent_path(agent)?.iter().map(|c| c.row as f64).collect())
    }

    pub fn cumulative_penalty(&self) -> f64 {
        self.rewards.iter().map(|r| r.abs()).sum()
    }

    /// Checks the length and sign invariants.
    pub fn validate(&self) -> Result<()> {
        let t = self.meta.steps;
        let n = self.n_agents();
        if self.positions.len() != t + 1 || self.actions.len() != t || self.rewards.len() != t {
            return Err(Error::Shape(alloc::format!(
                "log for {t} steps has {} position records, {} action records, {} rewards",
                self.positions.len(),
                self.actions.len(),
                self.rewards.len()
            )));
        }
        if self.positions.iter().any(|p| p.len() != n) || self.actions.iter().any(|a| a.len() != n) {
            return Err(Error::Shape(String::from("agent count changes within the log")));
        }
        if let Some(r) = self.rewards.iter().find(|r| r.is_nan() || **r > 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("positive or NaN reward {r}")));
        }
        Ok(())
    }
}

/// Resets `policy`, then steps `world` `steps` times. Returns the log and
/// `Σ_t |r(t)|`. `meta.steps` and the map size are filled in here.
pub fn run_episode(
    policy: &mut dyn JointPolicy,
    world: &mut WorldState,
    steps: usize,
    meta: EpisodeMeta,
    rng: &mut dyn RngCore,
) -> Result<(TrajectoryLog, f64)> {
    policy.reset(world)?;
    let mut log = TrajectoryLog {
        meta: EpisodeMeta { steps, height: world.map().height(), width: world.map().width(), ..meta },
        positions: Vec::with_capacity(steps + 1),
        actions: Vec::with_capacity(steps),
        rewards: Vec::with_capacity(steps),
    };
    log.positions.push(world.positions());
    let mut total = 0.0;
    for _ in 0..steps {
        let actions = policy.act(world, rng)?;
        if actions.len() != world.n_agents() {
            return Err(Error::ActionCount { expected: world.n_agents(), found: actions.len() });
        }
        let out = world.step(&actions)?;
        total += out.reward.abs();
        log.actions.push(actions);
        log.rewards.push(out.reward);
        log.positions.push(world.positions());
    }
    Ok((log, total))
}
