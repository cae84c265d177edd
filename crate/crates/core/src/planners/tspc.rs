use alloc::vec::Vec;

use rand::RngCore;

use super::tsp::Tour;
use crate::grid::{Action, Cell};
use crate::policy::JointPolicy;
use crate::world::WorldState;
use crate::{Error, Result};

/// Agents spaced evenly along a closed tour, all advancing one cell per step.
#[derive(Clone, Debug)]
pub struct TspcPolicy {
    cycle: Vec<Cell>,
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl TspcPolicy {
    /// Agent `i` starts at cycle index `floor(i * len / n)`.
    pub fn new(tour: &Tour, n_agents: usize) -> Self {
        let len = tour.cycle.len();
        let offsets: Vec<usize> = (0..n_agents).map(|i| i * len / n_agents).collect();
        TspcPolicy { cycle: tour.cycle.clone(), indices: offsets.clone(), offsets }
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn cycle(&self) -> &[Cell] {
        &self.cycle
    }
}

impl JointPolicy for TspcPolicy {
    fn name(&self) -> &str {
        "tspc"
    }

    fn reset(&mut self, _state: &WorldState) -> Result<()> {
        self.indices.clone_from(&self.offsets);
        Ok(())
    }

    fn act(&mut self, state: &WorldState, _rng: &mut dyn RngCore) -> Result<Vec<Action>> {
        if state.n_agents() != self.indices.len() {
            return Err(Error::ActionCount { expected: state.n_agents(), found: self.indices.len() });
        }
        let len = self.cycle.len();
        let mut actions = Vec::with_capacity(self.indices.len());
        for (agent, k) in state.agents().iter().zip(self.indices.iter_mut()) {
            if agent.position != self.cycle[*k] {
                return Err(Error::InvalidParameter(alloc::format!(
                    "agent {} at {} is off its tour cell {}",
                    agent.id,
                    agent.position,
                    self.cycle[*k]
                )));
            }
            let next = (*k + 1) % len;
            actions.push(Action::between(self.cycle[*k], self.cycle[next]).unwrap_or(Action::Stay));
            *k = next;
        }
        Ok(actions)
    }

    fn start_positions(&self, n_agents: usize) -> Option<Vec<Cell>> {
        let len = self.cycle.len();
        Some((0..n_agents).map(|i| self.cycle[i * len / n_agents]).collect())
    }
}
