//! The joint-action interface every planner and the learned policy share.

use alloc::vec::Vec;

use rand::RngCore;

use crate::grid::{Action, Cell};
use crate::world::WorldState;
use crate::Result;

pub trait JointPolicy {
    fn name(&self) -> &str;

    /// Called before an episode starts.
    fn reset(&mut self, _state: &WorldState) -> Result<()> {
        Ok(())
    }

    /// One action per agent, in agent-id order.
    fn act(&mut self, state: &WorldState, rng: &mut dyn RngCore) -> Result<Vec<Action>>;

    /// Start cells the policy requires, if it dictates placement.
    fn start_positions(&self, _n_agents: usize) -> Option<Vec<Cell>> {
        None
    }
}
