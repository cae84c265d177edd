//! Greedy centralized search.
//!
//! Every step: drop assignments whose target was reached or no longer
//! carries a penalty, build a spread-out candidate list of high-penalty
//! cells, then hand each unassigned agent (in id order) the closest
//! unclaimed candidate by path length. Agents walk their committed shortest
//! path.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use rand::RngCore;

use super::path::{distance_field, shortest_path, UNREACHABLE};
use crate::grid::{Action, Cell};
use crate::policy::JointPolicy;
use crate::world::WorldState;
use crate::{Error, Result};

/// Suppression radius used when none is configured.
pub const DEFAULT_D_MIN: f64 = 12.0;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assignment {
    pub targets: Vec<Option<Cell>>,
    /// Remaining cells to step onto, per agent.
    pub paths: Vec<VecDeque<Cell>>,
}

impl Assignment {
    pub fn new(n_agents: usize) -> Self {
        Assignment { targets: alloc::vec![None; n_agents], paths: alloc::vec![VecDeque::new(); n_agents] }
    }

    fn clear(&mut self, agent: usize) {
        self.targets[agent] = None;
        self.paths[agent].clear();
    }
}

/// Candidate destinations: cells with a nonzero penalty, taken greedily by
/// descending magnitude (row-major on ties); each pick removes every
/// remaining cell closer than `d_min` in Euclidean distance.
pub fn gcs_select_candidates(state: &WorldState, d_min: f64) -> Vec<Cell> {
    let map = state.map();
    let field = state.penalties();
    let mut pool: Vec<(Cell, f64)> = map
        .free_cells()
        .filter_map(|c| {
            let v = field.get(map.index(c));
            (v != 0.0).then_some((c, v.abs()))
        })
        .collect();
    // stable: row-major order survives among equal penalties
    pool.sort_by(|a, b| b.1.total_cmp(&a.1));
    let d_min_sq = d_min * d_min;
    let mut chosen = Vec::new();
    let mut alive = alloc::vec![true; pool.len()];
    for i in 0..pool.len() {
        if !alive[i] {
            continue;
        }
        let c = pool[i].0;
        chosen.push(c);
        for (j, &(other, _)) in pool.iter().enumerate().skip(i + 1) {
            if alive[j] && (c.euclidean_sq(other) as f64) < d_min_sq {
                alive[j] = false;
            }
        }
    }
    chosen
}

/// One GCS decision for every agent. Returns the joint action and the
/// updated assignment.
pub fn gcs_step(state: &WorldState, assignment: &Assignment, d_min: f64) -> Result<(Vec<Action>, Assignment)> {
    if d_min.is_nan() || d_min <= 0.0 {
        return Err(Error::InvalidParameter(alloc::format!("d_min must be positive, got {d_min}")));
    }
    let map = state.map();
    let field = state.penalties();
    let n = state.n_agents();
    let mut next = assignment.clone();
    next.targets.resize(n, None);
    next.paths.resize(n, VecDeque::new());

    for agent in state.agents() {
        if let Some(target) = next.targets[agent.id] {
            if agent.position == target || field.get(map.index(target)) == 0.0 {
                next.clear(agent.id);
            }
        }
    }

    let candidates = gcs_select_candidates(state, d_min);
    let mut claimed: Vec<Cell> = next.targets.iter().flatten().copied().collect();
    for agent in state.agents() {
        if next.targets[agent.id].is_some() {
            continue;
        }
        let dist = distance_field(map, agent.position);
        let best = candidates
            .iter()
            .filter(|c| !claimed.contains(c))
            .map(|&c| (dist[map.index(c)], c))
            .filter(|&(d, _)| d != UNREACHABLE)
            .min_by_key(|&(d, _)| d);
        if let Some((_, target)) = best {
            next.targets[agent.id] = Some(target);
            next.paths[agent.id] = shortest_path(map, agent.position, target)?.into();
            claimed.push(target);
        }
    }

    let mut actions = Vec::with_capacity(n);
    for agent in state.agents() {
        let path = &mut next.paths[agent.id];
        let stale = path.front().is_some_and(|&c| c.manhattan(agent.position) != 1);
        if stale {
            if let Some(target) = next.targets[agent.id] {
                *path = shortest_path(map, agent.position, target)?.into();
            }
        }
        let action = match path.pop_front() {
            Some(c) => Action::between(agent.position, c).unwrap_or(Action::Stay),
            None => Action::Stay,
        };
        actions.push(action);
    }
    Ok((actions, next))
}

#[derive(Clone, Debug)]
pub struct GcsPolicy {
    pub d_min: f64,
    pub assignment: Assignment,
}

impl GcsPolicy {
    pub fn new(d_min: f64) -> Self {
        GcsPolicy { d_min, assignment: Assignment::default() }
    }
}

impl Default for GcsPolicy {
    fn default() -> Self {
        Self::new(DEFAULT_D_MIN)
    }
}

impl JointPolicy for GcsPolicy {
    fn name(&self) -> &str {
        "gcs"
    }

    fn reset(&mut self, state: &WorldState) -> Result<()> {
        self.assignment = Assignment::new(state.n_agents());
        Ok(())
    }

    fn act(&mut self, state: &WorldState, _rng: &mut dyn RngCore) -> Result<Vec<Action>> {
        let (actions, next) = gcs_step(state, &self.assignment, self.d_min)?;
        self.assignment = next;
        Ok(actions)
    }
}
