use alloc::string::String;

use rand::Rng;

use super::graph::{Graph, ParamId, ParamSet, Tensor, Var};
use crate::Result;

fn uniform<R: Rng + ?Sized>(rng: &mut R, n: usize, bound: f64) -> alloc::vec::Vec<f64> {
    (0..n).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound).collect()
}

/// Fully connected layer, `y = x·Wᵀ + b`, weight `[out, in]`.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub inputs: usize,
    pub outputs: usize,
}

impl Linear {
    /// Glorot-uniform weights multiplied by `gain`; zero bias.
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamSet,
        name: &str,
        inputs: usize,
        outputs: usize,
        gain: f64,
        rng: &mut R,
    ) -> Self {
        let bound = gain * libm::sqrt(6.0 / (inputs + outputs) as f64);
        let w = ps.add(
            String::from(name) + ".w",
            Tensor { shape: alloc::vec![outputs, inputs], data: uniform(rng, inputs * outputs, bound) },
        );
        let b = ps.add(String::from(name) + ".b", Tensor::zeros(&[outputs]));
        Linear { w, b, inputs, outputs }
    }

    pub fn forward(&self, g: &mut Graph, ps: &ParamSet, x: Var) -> Result<Var> {
        let w = g.param(ps, self.w);
        let b = g.param(ps, self.b);
        let y = g.linear(x, w)?;
        g.add_row_bias(y, b)
    }
}

/// Square-kernel convolution without padding.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Conv2d {
    pub w: ParamId,
    pub b: ParamId,
    pub stride: usize,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamSet,
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        rng: &mut R,
    ) -> Self {
        let fan_in = in_channels * kernel * kernel;
        let fan_out = out_channels * kernel * kernel;
        let bound = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
        let n = out_channels * in_channels * kernel * kernel;
        let w = ps.add(
            String::from(name) + ".w",
            Tensor { shape: alloc::vec![out_channels, in_channels, kernel, kernel], data: uniform(rng, n, bound) },
        );
        let b = ps.add(String::from(name) + ".b", Tensor::zeros(&[out_channels]));
        Conv2d { w, b, stride }
    }

    pub fn forward(&self, g: &mut Graph, ps: &ParamSet, x: Var) -> Result<Var> {
        let w = g.param(ps, self.w);
        let b = g.param(ps, self.b);
        g.conv2d(x, w, b, self.stride)
    }
}
