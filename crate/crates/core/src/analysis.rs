//! Periodicity tools for trajectory series.

use alloc::vec::Vec;

use crate::episode::TrajectoryLog;
use crate::{Error, Result};

/// Autocorrelation needed before a lag counts as a period.
pub const PERIOD_THRESHOLD: f64 = 0.8;

/// Pearson correlation of two equal-length slices; `None` when either has
/// zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len().min(b.len());
    if n < 2 {
        return None;
    }
    let (a, b) = (&a[..n], &b[..n]);
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 1e-12 * n as f64 || sbb <= 1e-12 * n as f64 {
        return None;
    }
    Some(sab / libm::sqrt(saa * sbb))
}

fn autocorr(series: &[f64], lag: usize) -> f64 {
    pearson(&series[..series.len() - lag], &series[lag..]).unwrap_or(0.0)
}

/// Smallest lag in `[2, len/2]` whose autocorrelation is a local peak of
/// at least [`PERIOD_THRESHOLD`]. Series shorter than 4 or with zero
/// variance have no period.
pub fn detect_period(series: &[f64]) -> Option<usize> {
    let n = series.len();
    if n < 4 || pearson(series, series).is_none() {
        return None;
    }
    let max_lag = n / 2;
    let r: Vec<f64> = (0..=max_lag + 1).map(|l| if l < n - 1 { autocorr(series, l) } else { 0.0 }).collect();
    (2..=max_lag).find(|&l| r[l] >= PERIOD_THRESHOLD && r[l] > r[l - 1] && (l == max_lag || r[l] >= r[l + 1]))
}

/// Shift `s ∈ [0, period)` that best aligns `b` with `a`, i.e. maximizes
/// the correlation of `a[t]` with `b[t + s]`. A signal delayed by `d`
/// steps gives `d mod period`.
pub fn phase_difference(a: &[f64], b: &[f64], period: usize) -> Result<usize> {
    let n = a.len().min(b.len());
    if period == 0 || a.len() != b.len() || n < 2 * period {
        return Err(Error::InvalidPeriod { period, len: n });
    }
    let mut best = (0, f64::NEG_INFINITY);
    for s in 0..period {
        let r = pearson(&a[..n - s], &b[s..]).unwrap_or(f64::NEG_INFINITY);
        if r > best.1 {
            best = (s, r);
        }
    }
    Ok(best.0)
}

/// `sin θ` of one agent around the map centre, where
/// `θ = atan2(row - centre_row, col - centre_col)`. At the exact centre the
/// previous angle is held (0 if the agent starts there).
pub fn polar_series(log: &TrajectoryLog, agent: usize) -> Result<Vec<f64>> {
    let path = log.agent_path(agent)?;
    let cr = (log.meta.height as f64 - 1.0) / 2.0;
    let cc = (log.meta.width as f64 - 1.0) / 2.0;
    let mut theta = 0.0;
    Ok(path
        .iter()
        .map(|c| {
            let (dy, dx) = (c.row as f64 - cr, c.col as f64 - cc);
            if dy != 0.0 || dx != 0.0 {
                theta = libm::atan2(dy, dx);
            }
            libm::sin(theta)
        })
        .collect())
}
