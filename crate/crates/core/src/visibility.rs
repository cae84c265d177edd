//! Occlusion-aware square field of view.
//!
//! Line of sight runs between cell centres and is blocked by any obstacle in
//! a cell the ideal segment touches (the supercover of the segment). When the
//! segment passes exactly through a cell corner both cells sharing that
//! corner count as touched, so diagonal gaps between two obstacles that only
//! meet at a corner do not leak visibility. Agents are transparent.

use alloc::vec::Vec;

use crate::grid::{Cell, GridMap};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VisibilityMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl VisibilityMask {
    pub fn empty(height: usize, width: usize) -> Self {
        VisibilityMask { width, height, bits: alloc::vec![false; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width && self.bits[cell.row * self.width + cell.col]
    }

    pub fn get_index(&self, index: usize) -> bool {
        self.bits[index]
    }

    pub fn set(&mut self, cell: Cell) {
        self.bits[cell.row * self.width + cell.col] = true;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    /// Cellwise OR.
    pub fn union_with(&mut self, other: &VisibilityMask) {
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        let w = self.width;
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| Cell::new(i / w, i % w))
    }
}

/// Calls `visit` on every cell strictly between `a` and `b` that the
/// segment joining their centres touches, stopping early when `visit`
/// returns false. Returns false iff stopped early.
pub(crate) fn walk_between(a: Cell, b: Cell, mut visit: impl FnMut(Cell) -> bool) -> bool {
    let dr = b.row as isize - a.row as isize;
    let dc = b.col as isize - a.col as isize;
    let (nr, nc) = (dr.abs(), dc.abs());
    let (sr, sc) = (dr.signum(), dc.signum());
    let (mut r, mut c) = (a.row as isize, a.col as isize);
    let (mut ir, mut ic) = (0isize, 0isize);
    let cell = |r: isize, c: isize| Cell::new(r as usize, c as usize);
    while ir < nr || ic < nc {
        // Compare parametric positions of the next column and row boundary.
        let decision = (1 + 2 * ic) * nr - (1 + 2 * ir) * nc;
        if decision == 0 {
            if !visit(cell(r, c + sc)) || !visit(cell(r + sr, c)) {
                return false;
            }
            r += sr;
            c += sc;
            ir += 1;
            ic += 1;
        } else if decision < 0 {
            c += sc;
            ic += 1;
        } else {
            r += sr;
            ir += 1;
        }
        if (ir < nr || ic < nc) && !visit(cell(r, c)) {
            return false;
        }
    }
    true
}

#[inline]
fn sight_unchecked(map: &GridMap, a: Cell, b: Cell) -> bool {
    a.chebyshev(b) <= 1 || walk_between(a, b, |c| map.is_free(c))
}

/// True iff no obstacle lies strictly between `a` and `b`. The endpoints
/// themselves may be obstacles: walls are seen but hide what is behind them.
pub fn line_of_sight(map: &GridMap, a: Cell, b: Cell) -> Result<bool> {
    map.check(a)?;
    map.check(b)?;
    Ok(sight_unchecked(map, a, b))
}

fn check_side(side: usize) -> Result<usize> {
    if side % 2 == 1 {
        Ok(side / 2)
    } else {
        Err(Error::InvalidFieldOfView(side))
    }
}

fn mark_visible(map: &GridMap, pos: Cell, half: usize, mask: &mut VisibilityMask) {
    let r0 = pos.row.saturating_sub(half);
    let r1 = (pos.row + half).min(map.height() - 1);
    let c0 = pos.col.saturating_sub(half);
    let c1 = (pos.col + half).min(map.width() - 1);
    for r in r0..=r1 {
        for c in c0..=c1 {
            let target = Cell::new(r, c);
            if !mask.get(target) && sight_unchecked(map, pos, target) {
                mask.set(target);
            }
        }
    }
}

/// Cells inside the `side`×`side` window centred on `pos` that `pos` can see.
pub fn visible_cells(map: &GridMap, pos: Cell, side: usize) -> Result<VisibilityMask> {
    let half = check_side(side)?;
    map.check(pos)?;
    let mut mask = VisibilityMask::empty(map.height(), map.width());
    mark_visible(map, pos, half, &mut mask);
    Ok(mask)
}

/// Union of every agent's field of view.
pub fn joint_visibility(map: &GridMap, positions: &[Cell], side: usize) -> Result<VisibilityMask> {
    let half = check_side(side)?;
    let mut mask = VisibilityMask::empty(map.height(), map.width());
    for &p in positions {
        map.check(p)?;
        mark_visible(map, p, half, &mut mask);
    }
    Ok(mask)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_and_corridor() {
        let map = GridMap::open(5, 5).unwrap();
        assert!(line_of_sight(&map, Cell::new(2, 2), Cell::new(2, 2)).unwrap());
        assert!(line_of_sight(&map, Cell::new(0, 0), Cell::new(0, 4)).unwrap());
    }

    #[test]
    fn axis_block() {
        let map = GridMap::with_obstacles(5, 5, &[Cell::new(0, 2)]).unwrap();
        assert!(!line_of_sight(&map, Cell::new(0, 0), Cell::new(0, 4)).unwrap());
        // the wall itself is seen
        assert!(line_of_sight(&map, Cell::new(0, 0), Cell::new(0, 2)).unwrap());
    }

    #[test]
    fn diagonal_corner_is_blocked() {
        let map = GridMap::with_obstacles(3, 3, &[Cell::new(0, 1), Cell::new(1, 0)]).unwrap();
        // the diagonal neighbour is always seen
        assert!(line_of_sight(&map, Cell::new(0, 0), Cell::new(1, 1)).unwrap());
        let map = GridMap::with_obstacles(4, 4, &[Cell::new(1, 2), Cell::new(2, 1)]).unwrap();
        assert!(!line_of_sight(&map, Cell::new(0, 0), Cell::new(3, 3)).unwrap());
    }

    #[test]
    fn out_of_bounds() {
        let map = GridMap::open(3, 3).unwrap();
        assert!(line_of_sight(&map, Cell::new(0, 0), Cell::new(3, 0)).is_err());
    }

    #[test]
    fn walk_matches_knight_move() {
        // (0,0) -> (1,2): crosses the column boundary at 0.5 first, then the
        // row boundary exactly at the centre of (0,1)/(1,1)'s shared edge.
        let mut seen = Vec::new();
        walk_between(Cell::new(0, 0), Cell::new(1, 2), |c| {
            seen.push(c);
            true
        });
        assert_eq!(seen, [Cell::new(0, 1), Cell::new(1, 1)]);
    }

    #[test]
    fn open_center_window() {
        let map = GridMap::open(50, 50).unwrap();
        let mask = visible_cells(&map, Cell::new(25, 25), 25).unwrap();
        assert_eq!(mask.count(), 625);
        let mask = visible_cells(&map, Cell::new(25, 25), 1).unwrap();
        assert_eq!(mask.count(), 1);
        assert!(mask.get(Cell::new(25, 25)));
    }

    #[test]
    fn even_side_rejected() {
        let map = GridMap::open(5, 5).unwrap();
        assert_eq!(visible_cells(&map, Cell::new(2, 2), 4), Err(Error::InvalidFieldOfView(4)));
        assert_eq!(visible_cells(&map, Cell::new(2, 2), 0), Err(Error::InvalidFieldOfView(0)));
    }

    #[test]
    fn clipped_at_corner() {
        let map = GridMap::open(50, 50).unwrap();
        assert_eq!(visible_cells(&map, Cell::new(0, 0), 25).unwrap().count(), 13 * 13);
    }

    #[test]
    fn wall_hides_far_side() {
        // vertical wall in column 3, rows 0..=8; viewer at (4, 2)
        let wall: Vec<Cell> = (0..9).map(|r| Cell::new(r, 3)).collect();
        let map = GridMap::with_obstacles(9, 9, &wall).unwrap();
        let mask = visible_cells(&map, Cell::new(4, 2), 9).unwrap();
        for r in 0..9 {
            assert!(mask.get(Cell::new(r, 2)));
            for c in 4..9 {
                assert!(!mask.get(Cell::new(r, c)), "({r},{c}) should be hidden");
            }
        }
        assert!(mask.get(Cell::new(4, 3)));
    }

    #[test]
    fn joint_examples() {
        let map = GridMap::open(30, 30).unwrap();
        assert_eq!(joint_visibility(&map, &[], 5).unwrap().count(), 0);
        let a = Cell::new(5, 5);
        let b = Cell::new(20, 20);
        let ja = joint_visibility(&map, &[a], 5).unwrap();
        let jab = joint_visibility(&map, &[a, b], 5).unwrap();
        assert_eq!(jab.count(), 50);
        assert_eq!(joint_visibility(&map, &[a, a], 5).unwrap(), ja);
    }
}
