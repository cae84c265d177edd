use alloc::vec::Vec;

use super::graph::ParamSet;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: Vec::new(), v: Vec::new() }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update. `grads` lines up with `params.tensors()`.
    pub fn step(&mut self, params: &mut ParamSet, grads: &[Vec<f64>]) -> Result<()> {
        let tensors = params.tensors_mut();
        if grads.len() != tensors.len() {
            return Err(Error::Shape(alloc::format!("{} gradients for {} parameters", grads.len(), tensors.len())));
        }
        if self.m.is_empty() {
            self.m = tensors.iter().map(|t| alloc::vec![0.0; t.len()]).collect();
            self.v = self.m.clone();
        }
        for (t, g) in tensors.iter().zip(grads) {
            if t.len() != g.len() {
                return Err(Error::Shape(alloc::format!("gradient of length {} for a tensor of {}", g.len(), t.len())));
            }
        }
        self.t += 1;
        if self.lr == 0.0 {
            return Ok(());
        }
        let t = self.t as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        for (k, (tensor, g)) in tensors.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for i in 0..g.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                tensor.data[i] -= self.lr * mh / (libm::sqrt(vh) + self.eps);
            }
        }
        Ok(())
    }
}

/// Scales `grads` in place so their global L2 norm is at most `max_norm`.
/// Returns the norm before scaling.
pub fn clip_grad_norm(grads: &mut [Vec<f64>], max_norm: f64) -> f64 {
    let norm = libm::sqrt(grads.iter().flatten().map(|g| g * g).sum::<f64>());
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().flatten().for_each(|g| *g *= s);
    }
    norm
}
