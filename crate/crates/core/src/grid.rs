//! Static occupancy grid, cell coordinates and agent moves.

use alloc::vec::Vec;
use core::fmt;

use crate::{Error, Result};

/// A grid cell addressed as (row, col). Ordering is row-major.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Cell { row, col }
    }

    /// Chebyshev distance.
    pub fn chebyshev(self, other: Cell) -> usize {
        self.row.abs_diff(other.row).max(self.col.abs_diff(other.col))
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn euclidean_sq(self, other: Cell) -> usize {
        let dr = self.row.abs_diff(other.row);
        let dc = self.col.abs_diff(other.col);
        dr * dr + dc * dc
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum CellKind {
    Free,
    Obstacle,
}

/// One of the five agent actions. The discriminant is the network's action
/// index.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Up = 0,
    Down = 1,
    Left = 2,
    Right = 3,
    Stay = 4,
}

impl Action {
    pub const ALL: [Action; 5] = [Action::Up, Action::Down, Action::Left, Action::Right, Action::Stay];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    /// (drow, dcol) offset.
    pub fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
            Action::Stay => (0, 0),
        }
    }

    /// The move that takes `from` to the 4-neighbour (or same cell) `to`.
    pub fn between(from: Cell, to: Cell) -> Option<Action> {
        let dr = to.row as isize - from.row as isize;
        let dc = to.col as isize - from.col as isize;
        Action::ALL.into_iter().find(|a| a.delta() == (dr, dc))
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Left => "left",
            Action::Right => "right",
            Action::Stay => "stay",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<CellKind>,
}

/// Result of parsing a map file: the grid plus the declared agent starts in
/// row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedMap {
    pub map: GridMap,
    pub starts: Vec<Cell>,
}

/// Parses the text map format: `.` free, `#` obstacle, `A` free with an
/// agent start. Trailing blank lines and `\r` are ignored.
pub fn load_map(text: &str) -> Result<ParsedMap> {
    let mut rows: Vec<&str> = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l)).collect();
    while rows.last().is_some_and(|l| l.is_empty()) {
        rows.pop();
    }
    if rows.is_empty() {
        return Err(Error::EmptyMap);
    }
    let width = rows[0].chars().count();
    if width == 0 {
        return Err(Error::EmptyMap);
    }
    let mut cells = Vec::with_capacity(width * rows.len());
    let mut starts = Vec::new();
    for (r, line) in rows.iter().enumerate() {
        let found = line.chars().count();
        if found != width {
            return Err(Error::RaggedRow { row: r, expected: width, found });
        }
        for (c, ch) in line.chars().enumerate() {
            let kind = match ch {
                '.' => CellKind::Free,
                '#' => CellKind::Obstacle,
                'A' => {
                    starts.push(Cell::new(r, c));
                    CellKind::Free
                }
                _ => return Err(Error::UnknownChar { ch, row: r, col: c }),
            };
            cells.push(kind);
        }
    }
    let map = GridMap::from_cells(width, rows.len(), cells)?;
    Ok(ParsedMap { map, starts })
}

impl GridMap {
    pub fn from_cells(width: usize, height: usize, cells: Vec<CellKind>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyMap);
        }
        if cells.len() != width * height {
            return Err(Error::InvalidParameter(alloc::format!(
                "{} cells for a {}x{} map",
                cells.len(),
                height,
                width
            )));
        }
        if !cells.contains(&CellKind::Free) {
            return Err(Error::NoFreeCells);
        }
        Ok(GridMap { width, height, cells })
    }

    /// An obstacle-free map.
    pub fn open(height: usize, width: usize) -> Result<Self> {
        Self::from_cells(width, height, alloc::vec![CellKind::Free; width * height])
    }

    /// Builds a map from `(row, col)` obstacle coordinates.
    pub fn with_obstacles(height: usize, width: usize, obstacles: &[Cell]) -> Result<Self> {
        let mut cells = alloc::vec![CellKind::Free; width * height];
        for o in obstacles {
            if o.row >= height || o.col >= width {
                return Err(Error::OutOfBounds { row: o.row, col: o.col, height, width });
            }
            cells[o.row * width + o.col] = CellKind::Obstacle;
        }
        Self::from_cells(width, height, cells)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.width + cell.col
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.width, index % self.width)
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.row < self.height && cell.col < self.width
    }

    pub fn check(&self, cell: Cell) -> Result<()> {
        if self.contains(cell) {
            Ok(())
        } else {
            Err(Error::OutOfBounds { row: cell.row, col: cell.col, height: self.height, width: self.width })
        }
    }

    pub fn kind(&self, cell: Cell) -> CellKind {
        self.cells[self.index(cell)]
    }

    /// False for off-map cells.
    pub fn is_free(&self, cell: Cell) -> bool {
        self.contains(cell) && self.cells[self.index(cell)] == CellKind::Free
    }

    pub fn is_free_index(&self, index: usize) -> bool {
        self.cells[index] == CellKind::Free
    }

    pub fn free_count(&self) -> usize {
        self.cells.iter().filter(|&&k| k == CellKind::Free).count()
    }

    /// Free cells in row-major order.
    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cells.len()).filter(|&i| self.is_free_index(i)).map(|i| self.cell_at(i))
    }

    /// The cell one step along `action`, or `None` when it leaves the map.
    pub fn offset(&self, cell: Cell, action: Action) -> Option<Cell> {
        let (dr, dc) = action.delta();
        let row = cell.row.checked_add_signed(dr)?;
        let col = cell.col.checked_add_signed(dc)?;
        let next = Cell::new(row, col);
        self.contains(next).then_some(next)
    }

    /// Free 4-neighbours in the fixed order Up, Down, Left, Right.
    pub fn neighbors(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        [Action::Up, Action::Down, Action::Left, Action::Right]
            .into_iter()
            .filter_map(move |a| self.offset(cell, a))
            .filter(move |&c| self.is_free(c))
    }

    /// Renders back to the text format (without agent markers).
    pub fn to_text(&self) -> alloc::string::String {
        let mut s = alloc::string::String::with_capacity((self.width + 1) * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                s.push(if self.is_free(Cell::new(r, c)) { '.' } else { '#' });
            }
            s.push('\n');
        }
        s
    }
}

/// Moves one cell along `action`; blocked or off-map moves leave the agent
/// where it is.
pub fn apply_action(position: Cell, action: Action, map: &GridMap) -> Cell {
    match map.offset(position, action) {
        Some(next) if map.is_free(next) => next,
        _ => position,
    }
}
