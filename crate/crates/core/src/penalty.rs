//! Per-cell penalty field and the decay/reset recurrence.

use alloc::vec::Vec;

use crate::grid::GridMap;
use crate::visibility::VisibilityMask;
use crate::{Error, Result};

/// Per-cell reward `R(k) ∈ [-r_max, 0]`. Obstacle cells hold 0 and are
/// never read.
#[derive(Clone, Debug, PartialEq)]
pub struct PenaltyField {
    width: usize,
    height: usize,
    values: Vec<f64>,
    free: Vec<bool>,
    decay: f64,
    r_max: f64,
}

/// One step of the recurrence for a single cell.
#[inline]
pub fn next_penalty(value: f64, visible: bool, decay: f64, r_max: f64) -> f64 {
    if visible {
        0.0
    } else {
        let decayed = value - decay;
        if decayed < -r_max {
            -r_max
        } else {
            decayed
        }
    }
}

impl PenaltyField {
    /// All cells start at 0.
    pub fn new(map: &GridMap, decay: f64, r_max: f64) -> Result<Self> {
        if !(decay >= 0.0 && decay.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("decay rate {decay} must be >= 0")));
        }
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("r_max {r_max} must be > 0")));
        }
        Ok(PenaltyField {
            width: map.width(),
            height: map.height(),
            values: alloc::vec![0.0; map.len()],
            free: (0..map.len()).map(|i| map.is_free_index(i)).collect(),
            decay,
            r_max,
        })
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Raw values, row-major; obstacle entries are 0.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Sets a free cell's value, clamped into `[-r_max, 0]`. Used to script
    /// scenarios; obstacle cells are ignored.
    pub fn set(&mut self, index: usize, value: f64) {
        if self.free[index] {
            self.values[index] = value.clamp(-self.r_max, 0.0);
        }
    }

    /// Applies one step of the recurrence using the joint visibility mask.
    pub fn update(&mut self, visible: &VisibilityMask) -> Result<()> {
        if visible.width() != self.width || visible.height() != self.height {
            return Err(Error::MaskShape {
                found_h: visible.height(),
                found_w: visible.width(),
                height: self.height,
                width: self.width,
            });
        }
        let (decay, r_max) = (self.decay, self.r_max);
        for (i, v) in self.values.iter_mut().enumerate() {
            if self.free[i] {
                *v = next_penalty(*v, visible.get_index(i), decay, r_max);
            }
        }
        Ok(())
    }

    /// Sum of `R(k)` over every free cell (non-positive).
    pub fn shared_reward(&self) -> f64 {
        self.values.iter().zip(&self.free).filter(|(_, &f)| f).map(|(v, _)| v).sum()
    }

    pub fn free_count(&self) -> usize {
        self.free.iter().filter(|&&f| f).count()
    }
}
