//! Per-agent network inputs: the ego-centric local map and the coarse
//! global mini-map.
//!
//! Raw cell codes are 150 for obstacles (and anything the agent cannot see),
//! 200 for agents, and the penalty magnitude `|R|` for free cells. Cells are
//! kept as [`ObsCell`] so a penalty of exactly 150 or 200 is never confused
//! with a code.
//!
//! Network normalization (frozen; checkpoints depend on it):
//! penalty `p` maps to `0.5 * p / r_max` in `[0, 0.5]`, obstacle to 0.75,
//! agent to 1.0.

use alloc::vec::Vec;

use crate::grid::Cell;
use crate::visibility::line_of_sight;
use crate::world::WorldState;
use crate::{Error, Result};

pub const OBSTACLE_CODE: f64 = 150.0;
pub const AGENT_CODE: f64 = 200.0;
pub const OBSTACLE_INPUT: f64 = 0.75;
pub const AGENT_INPUT: f64 = 1.0;
/// Side of both rendered grids.
pub const OBS_SIZE: usize = 25;
const CENTER: usize = OBS_SIZE / 2;

#[derive(Copy, Clone, Debug, PartialEq)]
pub enum ObsCell {
    Obstacle,
    Agent,
    Penalty(f64),
}

impl ObsCell {
    /// The raw image code.
    pub fn raw(self) -> f64 {
        match self {
            ObsCell::Obstacle => OBSTACLE_CODE,
            ObsCell::Agent => AGENT_CODE,
            ObsCell::Penalty(p) => p,
        }
    }

    pub fn normalized(self, r_max: f64) -> f64 {
        match self {
            ObsCell::Obstacle => OBSTACLE_INPUT,
            ObsCell::Agent => AGENT_INPUT,
            ObsCell::Penalty(p) => 0.5 * penalty_scale(p, r_max),
        }
    }
}

/// Penalty magnitude relative to the cap, in `[0, 1]`.
pub fn penalty_scale(magnitude: f64, r_max: f64) -> f64 {
    magnitude / r_max
}

/// Which channels the network sees.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum ObservationMode {
    Local,
    Mini,
    Both,
}

impl ObservationMode {
    pub fn channels(self) -> usize {
        match self {
            ObservationMode::Both => 2,
            _ => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ObservationMode::Local => "local",
            ObservationMode::Mini => "mini",
            ObservationMode::Both => "both",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "local" => Some(ObservationMode::Local),
            "mini" => Some(ObservationMode::Mini),
            "both" => Some(ObservationMode::Both),
            _ => None,
        }
    }
}

/// A `OBS_SIZE`×`OBS_SIZE` grid, row-major.
pub type ObsGrid = Vec<ObsCell>;

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub mode: ObservationMode,
    pub local: Option<ObsGrid>,
    pub mini: Option<ObsGrid>,
    pub r_max: f64,
}

impl Observation {
    pub fn channels(&self) -> usize {
        self.mode.channels()
    }

    /// Channel-major normalized input, local first.
    pub fn to_input(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.channels() * OBS_SIZE * OBS_SIZE);
        self.write_input(&mut out);
        out
    }

    pub fn write_input(&self, out: &mut Vec<f64>) {
        for grid in [&self.local, &self.mini].into_iter().flatten() {
            out.extend(grid.iter().map(|c| c.normalized(self.r_max)));
        }
    }
}

fn agent_position(state: &WorldState, agent_id: usize) -> Result<Cell> {
    state.agents().get(agent_id).map(|a| a.position).ok_or(Error::InvalidAgent(agent_id))
}

/// Ego-centric window with the agent at the centre. Off-map and occluded
/// cells read as obstacles; visible agents are drawn.
pub fn render_local(state: &WorldState, agent_id: usize) -> Result<ObsGrid> {
    let pos = agent_position(state, agent_id)?;
    let map = state.map();
    let penalties = state.penalties();
    let positions = state.positions();
    let mut grid = alloc::vec![ObsCell::Obstacle; OBS_SIZE * OBS_SIZE];
    for wr in 0..OBS_SIZE {
        for wc in 0..OBS_SIZE {
            let (Some(row), Some(col)) = ((pos.row + wr).checked_sub(CENTER), (pos.col + wc).checked_sub(CENTER))
            else {
                continue;
            };
            let cell = Cell::new(row, col);
            if !map.is_free(cell) {
                continue;
            }
            let slot = &mut grid[wr * OBS_SIZE + wc];
            if (wr, wc) == (CENTER, CENTER) {
                *slot = ObsCell::Agent;
            } else if line_of_sight(map, pos, cell)? {
                *slot = if positions.contains(&cell) {
                    ObsCell::Agent
                } else {
                    ObsCell::Penalty(penalties.get(map.index(cell)).abs())
                };
            }
        }
    }
    Ok(grid)
}

/// Coarse global view: each output cell summarises a block of the map.
/// Obstacles dominate, then this agent's own position, then the largest
/// penalty magnitude in the block. Other agents are not drawn.
pub fn render_mini(state: &WorldState, agent_id: usize) -> Result<ObsGrid> {
    let pos = agent_position(state, agent_id)?;
    let map = state.map();
    let (h, w) = (map.height(), map.width());
    if h % OBS_SIZE != 0 || w % OBS_SIZE != 0 {
        return Err(Error::MiniMapDivisibility { height: h, width: w, size: OBS_SIZE });
    }
    let (bh, bw) = (h / OBS_SIZE, w / OBS_SIZE);
    let penalties = state.penalties();
    let mut grid = Vec::with_capacity(OBS_SIZE * OBS_SIZE);
    for br in 0..OBS_SIZE {
        for bc in 0..OBS_SIZE {
            let mut obstacle = false;
            let mut own = false;
            let mut worst = 0.0f64;
            for r in br * bh..(br + 1) * bh {
                for c in bc * bw..(bc + 1) * bw {
                    let cell = Cell::new(r, c);
                    if !map.is_free(cell) {
                        obstacle = true;
                    } else {
                        own |= cell == pos;
                        worst = worst.max(penalties.get(map.index(cell)).abs());
                    }
                }
            }
            grid.push(if obstacle {
                ObsCell::Obstacle
            } else if own {
                ObsCell::Agent
            } else {
                ObsCell::Penalty(worst)
            });
        }
    }
    Ok(grid)
}

pub fn make_observation(state: &WorldState, agent_id: usize, mode: ObservationMode) -> Result<Observation> {
    let local = match mode {
        ObservationMode::Local | ObservationMode::Both => Some(render_local(state, agent_id)?),
        ObservationMode::Mini => None,
    };
    let mini = match mode {
        ObservationMode::Mini | ObservationMode::Both => Some(render_mini(state, agent_id)?),
        ObservationMode::Local => None,
    };
    Ok(Observation { mode, local, mini, r_max: state.config().r_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridMap;
    use crate::world::WorldConfig;
    use alloc::sync::Arc;

    fn state(map: GridMap, starts: &[Cell]) -> WorldState {
        WorldState::new(Arc::new(map), starts, WorldConfig::default()).unwrap()
    }

    #[test]
    fn fresh_local_is_zero_with_center_agent() {
        let s = state(GridMap::open(50, 50).unwrap(), &[Cell::new(25, 25)]);
        let g = render_local(&s, 0).unwrap();
        for (i, c) in g.iter().enumerate() {
            if i == CENTER * OBS_SIZE + CENTER {
                assert_eq!(c.raw(), 200.0);
            } else {
                assert_eq!(c.raw(), 0.0);
            }
        }
    }

    #[test]
    fn corner_agent_pads_three_quadrants() {
        let s = state(GridMap::open(50, 50).unwrap(), &[Cell::new(0, 0)]);
        let g = render_local(&s, 0).unwrap();
        for wr in 0..OBS_SIZE {
            for wc in 0..OBS_SIZE {
                let v = g[wr * OBS_SIZE + wc].raw();
                if wr < CENTER || wc < CENTER {
                    assert_eq!(v, OBSTACLE_CODE);
                } else if (wr, wc) == (CENTER, CENTER) {
                    assert_eq!(v, AGENT_CODE);
                } else {
                    assert_eq!(v, 0.0);
                }
            }
        }
    }

    #[test]
    fn other_agents_drawn_in_local() {
        let s = state(GridMap::open(50, 50).unwrap(), &[Cell::new(25, 25), Cell::new(25, 28)]);
        let g = render_local(&s, 0).unwrap();
        assert_eq!(g[CENTER * OBS_SIZE + CENTER + 3], ObsCell::Agent);
    }

    #[test]
    fn mini_marks_own_agent_only() {
        let mut s = state(GridMap::open(50, 50).unwrap(), &[Cell::new(0, 0), Cell::new(49, 49)]);
        let g = render_mini(&s, 0).unwrap();
        assert_eq!(g[0], ObsCell::Agent);
        assert_eq!(g[OBS_SIZE * OBS_SIZE - 1], ObsCell::Penalty(0.0));
        // block (1,1) covers cells (2..4, 2..4)
        for (i, v) in [(2 * 50 + 2, -10.0), (2 * 50 + 3, -40.0), (3 * 50 + 2, -5.0)] {
            s.penalties_mut().set(i, v);
        }
        let g = render_mini(&s, 0).unwrap();
        assert_eq!(g[OBS_SIZE + 1], ObsCell::Penalty(40.0));
    }

    #[test]
    fn mini_obstacle_dominates() {
        let map = GridMap::with_obstacles(50, 50, &[Cell::new(0, 1)]).unwrap();
        let s = state(map, &[Cell::new(0, 0)]);
        assert_eq!(render_mini(&s, 0).unwrap()[0], ObsCell::Obstacle);
    }

    #[test]
    fn mini_requires_divisible_map() {
        let s = state(GridMap::open(20, 20).unwrap(), &[Cell::new(0, 0)]);
        assert!(matches!(render_mini(&s, 0), Err(Error::MiniMapDivisibility { .. })));
        assert!(matches!(render_local(&s, 3), Err(Error::InvalidAgent(3))));
    }

    #[test]
    fn modes_and_normalization() {
        let s = state(GridMap::open(50, 50).unwrap(), &[Cell::new(10, 10)]);
        let both = make_observation(&s, 0, ObservationMode::Both).unwrap();
        assert_eq!(both.channels(), 2);
        assert_eq!(both.to_input().len(), 2 * 625);
        let local = make_observation(&s, 0, ObservationMode::Local).unwrap();
        assert!(local.mini.is_none());
        assert_eq!(local.to_input().len(), 625);
        assert_eq!(penalty_scale(400.0, 400.0), 1.0);
        assert_eq!(ObsCell::Penalty(400.0).normalized(400.0), 0.5);
        assert_eq!(ObsCell::Obstacle.normalized(400.0), 0.75);
        assert_eq!(ObsCell::Agent.normalized(400.0), 1.0);
    }
}
