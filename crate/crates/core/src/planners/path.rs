use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::grid::{Cell, GridMap};
use crate::{Error, Result};

pub const UNREACHABLE: usize = usize::MAX;

/// Breadth-first search over 4-connected free cells. Returns step counts
/// from `start` (indexed by map index) and the parent of each reached cell.
fn bfs(map: &GridMap, start: Cell, goal: Option<Cell>) -> (Vec<usize>, Vec<usize>) {
    let mut dist = alloc::vec![UNREACHABLE; map.len()];
    let mut parent = alloc::vec![UNREACHABLE; map.len()];
    let s = map.index(start);
    dist[s] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(cell) = queue.pop_front() {
        if Some(cell) == goal {
            break;
        }
        let d = dist[map.index(cell)];
        for next in map.neighbors(cell) {
            let ni = map.index(next);
            if dist[ni] == UNREACHABLE {
                dist[ni] = d + 1;
                parent[ni] = map.index(cell);
                queue.push_back(next);
            }
        }
    }
    (dist, parent)
}

/// Step counts from `start` to every cell; [`UNREACHABLE`] where no path
/// exists.
pub fn distance_field(map: &GridMap, start: Cell) -> Vec<usize> {
    bfs(map, start, None).0
}

/// Minimum-step path from `start` to `goal`, excluding `start` itself, so
/// the path length equals the number of moves. Unit edge weights make
/// breadth-first search equivalent to Dijkstra; neighbours are expanded in
/// the order Up, Down, Left, Right, which fixes the tie-breaking.
pub fn shortest_path(map: &GridMap, start: Cell, goal: Cell) -> Result<Vec<Cell>> {
    map.check(start)?;
    map.check(goal)?;
    let unreachable = || Error::Unreachable(start.row, start.col, goal.row, goal.col);
    if !map.is_free(start) || !map.is_free(goal) {
        return Err(unreachable());
    }
    let (dist, parent) = bfs(map, start, Some(goal));
    let gi = map.index(goal);
    if dist[gi] == UNREACHABLE {
        return Err(unreachable());
    }
    let mut path = Vec::with_capacity(dist[gi]);
    let mut at = gi;
    let si = map.index(start);
    while at != si {
        path.push(map.cell_at(at));
        at = parent[at];
    }
    path.reverse();
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_and_manhattan() {
        let map = GridMap::open(10, 10).unwrap();
        assert!(shortest_path(&map, Cell::new(3, 3), Cell::new(3, 3)).unwrap().is_empty());
        let p = shortest_path(&map, Cell::new(0, 0), Cell::new(3, 4)).unwrap();
        assert_eq!(p.len(), 7);
        assert_eq!(*p.last().unwrap(), Cell::new(3, 4));
        let mut prev = Cell::new(0, 0);
        for &c in &p {
            assert_eq!(prev.manhattan(c), 1);
            prev = c;
        }
    }

    #[test]
    fn tie_break_prefers_vertical_first() {
        let map = GridMap::open(3, 3).unwrap();
        let p = shortest_path(&map, Cell::new(1, 1), Cell::new(0, 0)).unwrap();
        // Up is expanded before Left
        assert_eq!(p, [Cell::new(0, 1), Cell::new(0, 0)]);
    }

    #[test]
    fn walled_off_goal() {
        let map = GridMap::with_obstacles(3, 3, &[Cell::new(0, 1), Cell::new(1, 1), Cell::new(2, 1)]).unwrap();
        assert!(matches!(shortest_path(&map, Cell::new(0, 0), Cell::new(0, 2)), Err(Error::Unreachable(..))));
        assert_eq!(distance_field(&map, Cell::new(0, 0))[2], UNREACHABLE);
    }

    #[test]
    fn detours_around_wall() {
        let map = GridMap::with_obstacles(3, 3, &[Cell::new(0, 1), Cell::new(1, 1)]).unwrap();
        assert_eq!(shortest_path(&map, Cell::new(0, 0), Cell::new(0, 2)).unwrap().len(), 6);
    }
}
