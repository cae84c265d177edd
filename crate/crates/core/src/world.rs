//! Full Markov state of an episode and the joint transition.

use alloc::sync::Arc;
use alloc::vec::Vec;

use rand::seq::index;
use rand::{Rng, RngCore};

use crate::grid::{apply_action, Action, Cell, GridMap};
use crate::penalty::PenaltyField;
use crate::visibility::{joint_visibility, VisibilityMask};
use crate::{Error, Result};

/// Environment constants: field-of-view side, decay rate and penalty cap.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct WorldConfig {
    pub fov: usize,
    pub decay: f64,
    pub r_max: f64,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig { fov: 25, decay: 1.0, r_max: 400.0 }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct AgentState {
    pub id: usize,
    pub position: Cell,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorldState {
    map: Arc<GridMap>,
    penalties: PenaltyField,
    agents: Vec<AgentState>,
    t: u64,
    config: WorldConfig,
}

/// What one transition produced.
#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    /// Shared reward of the updated field (non-positive).
    pub reward: f64,
    /// Joint visibility at the post-move positions.
    pub visible: VisibilityMask,
}

/// `n` start cells drawn uniformly over free cells, distinct while the map
/// has room.
pub fn random_starts<R: Rng + ?Sized>(map: &GridMap, n: usize, rng: &mut R) -> Vec<Cell> {
    let free: Vec<Cell> = map.free_cells().collect();
    if n <= free.len() {
        index::sample(rng, free.len(), n).into_iter().map(|i| free[i]).collect()
    } else {
        (0..n).map(|_| free[rng.random_range(0..free.len())]).collect()
    }
}

impl WorldState {
    pub fn new(map: Arc<GridMap>, starts: &[Cell], config: WorldConfig) -> Result<Self> {
        if config.fov.is_multiple_of(2) {
            return Err(Error::InvalidFieldOfView(config.fov));
        }
        for &p in starts {
            map.check(p)?;
            if !map.is_free(p) {
                return Err(Error::NotFree { row: p.row, col: p.col });
            }
        }
        let penalties = PenaltyField::new(&map, config.decay, config.r_max)?;
        let agents = starts.iter().enumerate().map(|(id, &position)| AgentState { id, position }).collect();
        Ok(WorldState { map, penalties, agents, t: 0, config })
    }

    /// Fresh episode with seeded uniform-random starts.
    pub fn with_random_starts(
        map: Arc<GridMap>,
        n_agents: usize,
        config: WorldConfig,
        rng: &mut dyn RngCore,
    ) -> Result<Self> {
        let starts = random_starts(&map, n_agents, rng);
        Self::new(map, &starts, config)
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn map_arc(&self) -> &Arc<GridMap> {
        &self.map
    }

    pub fn penalties(&self) -> &PenaltyField {
        &self.penalties
    }

    pub fn penalties_mut(&mut self) -> &mut PenaltyField {
        &mut self.penalties
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn n_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn positions(&self) -> Vec<Cell> {
        self.agents.iter().map(|a| a.position).collect()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn config(&self) -> &WorldConfig {
        &self.config
    }

    pub fn shared_reward(&self) -> f64 {
        self.penalties.shared_reward()
    }

    /// Advances one timestep: all moves are applied simultaneously, the
    /// joint field of view is taken at the new positions and the penalty
    /// field is updated with it.
    pub fn step(&mut self, joint_action: &[Action]) -> Result<StepOutcome> {
        if joint_action.len() != self.agents.len() {
            return Err(Error::ActionCount { expected: self.agents.len(), found: joint_action.len() });
        }
        for (agent, &a) in self.agents.iter_mut().zip(joint_action) {
            agent.position = apply_action(agent.position, a, &self.map);
        }
        let positions = self.positions();
        let visible = joint_visibility(&self.map, &positions, self.config.fov)?;
        self.penalties.update(&visible)?;
        self.t += 1;
        Ok(StepOutcome { reward: self.penalties.shared_reward(), visible })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn world(h: usize, w: usize, starts: &[Cell], fov: usize) -> WorldState {
        let map = Arc::new(GridMap::open(h, w).unwrap());
        WorldState::new(map, starts, WorldConfig { fov, ..Default::default() }).unwrap()
    }

    #[test]
    fn full_coverage_keeps_zero() {
        let mut w = world(5, 5, &[Cell::new(2, 2)], 5);
        for _ in 0..20 {
            assert_eq!(w.step(&[Action::Stay]).unwrap().reward, 0.0);
        }
    }

    #[test]
    fn stationary_center_of_fifty() {
        let mut w = world(50, 50, &[Cell::new(25, 25)], 25);
        let out = w.step(&[Action::Stay]).unwrap();
        assert_eq!(out.reward, -(2500.0 - 625.0));
        assert_eq!(w.t(), 1);
    }

    #[test]
    fn action_count_checked() {
        let mut w = world(5, 5, &[Cell::new(2, 2)], 5);
        assert_eq!(w.step(&[]), Err(Error::ActionCount { expected: 1, found: 0 }));
    }

    #[test]
    fn random_starts_are_free_and_distinct() {
        let map = GridMap::with_obstacles(4, 4, &[Cell::new(1, 1), Cell::new(2, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let starts = random_starts(&map, 14, &mut rng);
        assert_eq!(starts.len(), 14);
        let mut sorted = starts.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 14);
        assert!(starts.iter().all(|&c| map.is_free(c)));
    }

    #[test]
    fn rejects_obstacle_start() {
        let map = Arc::new(GridMap::with_obstacles(3, 3, &[Cell::new(0, 0)]).unwrap());
        assert!(WorldState::new(map, &[Cell::new(0, 0)], WorldConfig { fov: 3, ..Default::default() }).is_err());
    }
}
