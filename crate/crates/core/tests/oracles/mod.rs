//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls the code under test except to
//! read inputs.

#![allow(dead_code)]

use rand::Rng;
use vpm_core::grid::{Cell, GridMap};
use vpm_core::nn::{Graph, ParamSet, Tensor, Var};

/// Map with each cell an obstacle with probability `density`.
pub fn random_map<R: Rng>(rng: &mut R, h: usize, w: usize, density: f64) -> GridMap {
    let obstacles: Vec<Cell> =
        (0..h).flat_map(|r| (0..w).map(move |c| Cell::new(r, c))).filter(|_| rng.random::<f64>() < density).collect();
    GridMap::with_obstacles(h, w, &obstacles).unwrap()
}

fn orient(ax: i64, ay: i64, bx: i64, by: i64, px: i64, py: i64) -> i64 {
    (bx - ax) * (py - ay) - (by - ay) * (px - ax)
}

/// Whether the segment between the centres of `a` and `b` meets the closed
/// unit square of `cell`. Coordinates are doubled so every quantity is an
/// integer: centres sit at odd values, cell edges at even ones.
pub fn segment_touches_cell(a: Cell, b: Cell, cell: Cell) -> bool {
    let (ax, ay) = (2 * a.col as i64 + 1, 2 * a.row as i64 + 1);
    let (bx, by) = (2 * b.col as i64 + 1, 2 * b.row as i64 + 1);
    let (x0, x1) = (2 * cell.col as i64, 2 * cell.col as i64 + 2);
    let (y0, y1) = (2 * cell.row as i64, 2 * cell.row as i64 + 2);
    if ax.max(bx) < x0 || ax.min(bx) > x1 || ay.max(by) < y0 || ay.min(by) > y1 {
        return false;
    }
    let s: Vec<i64> = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
        .iter()
        .map(|&(px, py)| orient(ax, ay, bx, by, px, py).signum())
        .collect();
    !(s.iter().all(|&v| v > 0) || s.iter().all(|&v| v < 0))
}

/// Brute-force line of sight: every cell other than the endpoints is tested
/// against the segment.
pub fn oracle_los(map: &GridMap, a: Cell, b: Cell) -> bool {
    if a.chebyshev(b) <= 1 {
        return true;
    }
    let (r0, r1) = (a.row.min(b.row), a.row.max(b.row));
    let (c0, c1) = (a.col.min(b.col), a.col.max(b.col));
    for r in r0..=r1 {
        for c in c0..=c1 {
            let cell = Cell::new(r, c);
            if cell != a && cell != b && !map.is_free(cell) && segment_touches_cell(a, b, cell) {
                return false;
            }
        }
    }
    true
}

/// Row-major visibility of every map cell from `pos` with a `side`×`side`
/// window.
pub fn oracle_visible(map: &GridMap, pos: Cell, side: usize) -> Vec<bool> {
    let half = (side / 2) as i64;
    let mut out = vec![false; map.len()];
    for r in 0..map.height() {
        for c in 0..map.width() {
            let cell = Cell::new(r, c);
            let inside = (r as i64 - pos.row as i64).abs() <= half && (c as i64 - pos.col as i64).abs() <= half;
            out[r * map.width() + c] = inside && oracle_los(map, pos, cell);
        }
    }
    out
}

/// `G(t) = Σ_{τ≥t} γ^{τ-t} r(τ)` by direct double sum.
pub fn naive_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    (0..rewards.len()).map(|t| (t..rewards.len()).map(|k| gamma.powi((k - t) as i32) * rewards[k]).sum()).collect()
}

/// Shortest closed tour through all points of a symmetric distance
/// function, by enumerating every permutation with point 0 fixed.
pub fn exhaustive_tour(n: usize, dist: impl Fn(usize, usize) -> usize) -> usize {
    fn rec(
        order: &mut Vec<usize>,
        used: &mut [bool],
        len: usize,
        best: &mut usize,
        dist: &dyn Fn(usize, usize) -> usize,
    ) {
        let n = used.len();
        let last = *order.last().unwrap();
        if order.len() == n {
            *best = (*best).min(len + dist(last, order[0]));
            return;
        }
        for next in 1..n {
            if !used[next] {
                used[next] = true;
                order.push(next);
                rec(order, used, len + dist(last, next), best, dist);
                order.pop();
                used[next] = false;
            }
        }
    }
    if n <= 1 {
        return 0;
    }
    let mut used = vec![false; n];
    used[0] = true;
    let mut best = usize::MAX;
    rec(&mut vec![0], &mut used, 0, &mut best, &dist);
    best
}

/// Cumulative |penalty| when `unseen` cells are never observed for `t`
/// steps: each contributes `Σ_{k=1..t} min(k·d, r_max)`.
pub fn stationary_penalty(unseen: u64, t: u64, d: u64, r_max: u64) -> u64 {
    unseen * (1..=t).map(|k| (k * d).min(r_max)).sum::<u64>()
}

/// Relative error with a small floor so two near-zero values compare equal.
pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Largest relative error between reverse-mode and central-difference
/// gradients of `build` with respect to the listed parameter elements and
/// every element of every input. `build` returns a scalar node.
pub fn gradient_error<F>(ps: &ParamSet, inputs: &[Tensor], param_elems: &[(usize, usize)], build: F) -> f64
where
    F: Fn(&mut Graph, &ParamSet, &[Var]) -> Var,
{
    let eval = |ps: &ParamSet, inputs: &[Tensor]| {
        let mut g = Graph::new();
        let vars: Vec<Var> = inputs.iter().map(|t| g.input(t.clone())).collect();
        let out = build(&mut g, ps, &vars);
        g.value(out).data[0]
    };
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.input(t.clone())).collect();
    let out = build(&mut g, ps, &vars);
    let grads = g.backward(out).unwrap();
    let pgrads = grads.for_params(ps);
    let eps = 1e-5;
    let mut worst = 0.0f64;
    for &(p, i) in param_elems {
        let mut plus = ps.clone();
        plus.tensors_mut()[p].data[i] += eps;
        let mut minus = ps.clone();
        minus.tensors_mut()[p].data[i] -= eps;
        let numeric = (eval(&plus, inputs) - eval(&minus, inputs)) / (2.0 * eps);
        worst = worst.max(rel_err(pgrads[p][i], numeric));
    }
    for (k, t) in inputs.iter().enumerate() {
        let analytic = grads.wrt(vars[k]).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; t.len()]);
        for (i, &a) in analytic.iter().enumerate() {
            let mut plus = inputs.to_vec();
            plus[k].data[i] += eps;
            let mut minus = inputs.to_vec();
            minus[k].data[i] -= eps;
            let numeric = (eval(ps, &plus) - eval(ps, &minus)) / (2.0 * eps);
            worst = worst.max(rel_err(a, numeric));
        }
    }
    worst
}

/// Every `(tensor, element)` pair of `ps`.
pub fn all_param_elems(ps: &ParamSet) -> Vec<(usize, usize)> {
    ps.tensors().iter().enumerate().flat_map(|(p, t)| (0..t.len()).map(move |i| (p, i))).collect()
}

/// `count` random `(tensor, element)` pairs of `ps`.
pub fn sample_param_elems<R: Rng>(ps: &ParamSet, count: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let all = all_param_elems(ps);
    (0..count).map(|_| all[rng.random_range(0..all.len())]).collect()
}

pub fn random_tensor<R: Rng>(rng: &mut R, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).unwrap()
}
