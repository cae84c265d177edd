//! Closed tour through a set of points using shortest-path distances:
//! nearest-neighbour construction followed by 2-opt until no move helps.

use alloc::vec::Vec;

use super::path::{distance_field, shortest_path, UNREACHABLE};
use crate::grid::{Cell, GridMap};
use crate::{Error, Result};

/// Symmetric step-count matrix between points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<usize>,
}

impl DistanceMatrix {
    pub fn between(map: &GridMap, points: &[Cell]) -> Result<Self> {
        let n = points.len();
        let mut d = alloc::vec![0; n * n];
        for (i, &p) in points.iter().enumerate() {
            map.check(p)?;
            let field = distance_field(map, p);
            for (j, &q) in points.iter().enumerate() {
                map.check(q)?;
                let v = field[map.index(q)];
                if v == UNREACHABLE || !map.is_free(q) {
                    return Err(Error::Unreachable(p.row, p.col, q.row, q.col));
                }
                d[i * n + j] = v;
            }
        }
        Ok(DistanceMatrix { n, d })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> usize) -> Self {
        let d = (0..n * n).map(|k| f(k / n, k % n)).collect();
        DistanceMatrix { n, d }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.d[i * self.n + j]
    }
}

/// Length of the closed tour visiting `order`.
pub fn tour_length(dist: &DistanceMatrix, order: &[usize]) -> usize {
    if order.len() < 2 {
        return 0;
    }
    order.iter().zip(order.iter().cycle().skip(1)).map(|(&a, &b)| dist.get(a, b)).sum()
}

/// Greedy tour from point 0; ties go to the lower index.
pub fn nearest_neighbor_order(dist: &DistanceMatrix) -> Vec<usize> {
    let n = dist.len();
    if n == 0 {
        return Vec::new();
    }
    let mut visited = alloc::vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut at = 0;
    visited[0] = true;
    order.push(0);
    for _ in 1..n {
        let next = (0..n).filter(|&j| !visited[j]).min_by_key(|&j| dist.get(at, j)).unwrap();
        visited[next] = true;
        order.push(next);
        at = next;
    }
    order
}

/// First-improvement 2-opt on a closed tour, repeated until no segment
/// reversal shortens it.
pub fn two_opt(dist: &DistanceMatrix, order: &mut [usize]) {
    let n = order.len();
    if n < 4 {
        return;
    }
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 1 {
            for j in i + 2..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (order[i], order[i + 1]);
                let (c, d) = (order[j], order[(j + 1) % n]);
                let before = dist.get(a, b) + dist.get(c, d);
                let after = dist.get(a, c) + dist.get(b, d);
                if after < before {
                    order[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tour {
    /// Points in visiting order.
    pub points: Vec<Cell>,
    /// Cell-level closed walk starting at `points[0]`; consecutive cells
    /// (and last to first) are 4-adjacent. A single point gives `[p]`.
    pub cycle: Vec<Cell>,
    /// Total steps around the cycle.
    pub length: usize,
}

impl Tour {
    /// Number of cells in one period of the cycle (at least 1).
    pub fn period(&self) -> usize {
        self.cycle.len()
    }
}

/// Tours `points` and stitches the cycle with shortest paths.
pub fn tsp_tour(points: &[Cell], map: &GridMap) -> Result<Tour> {
    if points.is_empty() {
        return Err(Error::EmptyTour);
    }
    let dist = DistanceMatrix::between(map, points)?;
    let mut order = nearest_neighbor_order(&dist);
    two_opt(&dist, &mut order);
    let length = tour_length(&dist, &order);
    let ordered: Vec<Cell> = order.iter().map(|&i| points[i]).collect();
    let mut cycle = alloc::vec![ordered[0]];
    if ordered.len() > 1 {
        for k in 0..ordered.len() {
            let (from, to) = (ordered[k], ordered[(k + 1) % ordered.len()]);
            cycle.extend(shortest_path(map, from, to)?);
        }
        // the last leg ends back on the first point
        cycle.pop();
    }
    if cycle.is_empty() {
        cycle.push(ordered[0]);
    }
    Ok(Tour { points: ordered, cycle, length })
}
