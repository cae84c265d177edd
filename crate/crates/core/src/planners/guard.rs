use alloc::vec::Vec;

use crate::grid::{Cell, GridMap};
use crate::visibility::visible_cells;
use crate::Result;

/// Greedy set cover of the free cells by fields of view: repeatedly take
/// the free cell that sees the most still-uncovered free cells (row-major
/// on ties) until everything is covered.
pub fn guard_points(map: &GridMap, side: usize) -> Result<Vec<Cell>> {
    let free: Vec<Cell> = map.free_cells().collect();
    let mut slot = alloc::vec![usize::MAX; map.len()];
    for (k, &c) in free.iter().enumerate() {
        slot[map.index(c)] = k;
    }
    let mut sees: Vec<Vec<usize>> = Vec::with_capacity(free.len());
    for &c in &free {
        let mask = visible_cells(map, c, side)?;
        sees.push(mask.cells().filter(|&v| map.is_free(v)).map(|v| slot[map.index(v)]).collect());
    }

    let mut covered = alloc::vec![false; free.len()];
    let mut remaining = free.len();
    // Gains only shrink, so a stale upper bound lets most candidates be
    // skipped without recounting.
    let mut bound: Vec<usize> = sees.iter().map(Vec::len).collect();
    let mut picks = Vec::new();
    while remaining > 0 {
        let mut best: Option<(usize, usize)> = None;
        for k in 0..free.len() {
            if best.is_some_and(|(_, g)| bound[k] <= g) {
                continue;
            }
            let gain = sees[k].iter().filter(|&&v| !covered[v]).count();
            bound[k] = gain;
            if best.is_none_or(|(_, g)| gain > g) {
                best = Some((k, gain));
            }
        }
        let (k, _) = best.expect("a free cell always sees itself");
        for &v in &sees[k] {
            if !covered[v] {
                covered[v] = true;
                remaining -= 1;
            }
        }
        picks.push(free[k]);
    }
    Ok(picks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::visibility::joint_visibility;

    #[test]
    fn single_window_covers_small_map() {
        let map = GridMap::open(25, 25).unwrap();
        assert_eq!(guard_points(&map, 25).unwrap(), [Cell::new(12, 12)]);
    }

    #[test]
    fn fifty_needs_four() {
        let map = GridMap::open(50, 50).unwrap();
        let g = guard_points(&map, 25).unwrap();
        assert_eq!(g, [Cell::new(12, 12), Cell::new(12, 37), Cell::new(37, 12), Cell::new(37, 37)]);
    }

    #[test]
    fn two_rooms() {
        // two 7x7 rooms joined by a one-cell door in the dividing wall
        let mut obstacles = Vec::new();
        for r in 0..7 {
            if r != 3 {
                obstacles.push(Cell::new(r, 7));
            }
        }
        let map = GridMap::with_obstacles(7, 15, &obstacles).unwrap();
        let g = guard_points(&map, 15).unwrap();
        assert!(g.len() >= 2);
        assert!(g.iter().any(|c| c.col < 7) && g.iter().any(|c| c.col > 7));
        let mask = joint_visibility(&map, &g, 15).unwrap();
        assert!(map.free_cells().all(|c| mask.get(c)));
    }
}
