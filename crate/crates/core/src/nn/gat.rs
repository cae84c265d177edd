//! Multi-head graph attention over a fully connected agent graph.
//!
//! For head `m`, agent `i` scores every other agent `j` with
//! `LeakyReLU(a_self·W h_i + a_neigh·W h_j)` (a single linear layer on the
//! concatenation `[W h_i ; W h_j]`), normalises the scores with a softmax
//! over `j ≠ i`, and sums `α_ij W h_j`. Head outputs are averaged. An agent
//! with no neighbours aggregates to the zero vector.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use super::graph::{Graph, ParamId, ParamSet, Tensor, Var};
use crate::Result;

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GatHead {
    /// `[F', F]`
    pub w: ParamId,
    /// `[1, F']`, applied to the receiving agent.
    pub a_self: ParamId,
    /// `[1, F']`, applied to the neighbour.
    pub a_neigh: ParamId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GatLayer {
    pub heads: Vec<GatHead>,
    pub in_features: usize,
    pub out_features: usize,
}

fn glorot<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Tensor {
    let bound = libm::sqrt(6.0 / (rows + cols) as f64);
    Tensor {
        shape: alloc::vec![rows, cols],
        data: (0..rows * cols).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * bound).collect(),
    }
}

impl GatLayer {
    pub fn new<R: Rng + ?Sized>(
        ps: &mut ParamSet,
        name: &str,
        f_in: usize,
        f_out: usize,
        heads: usize,
        rng: &mut R,
    ) -> Self {
        let heads = (0..heads)
            .map(|m| {
                let prefix = alloc::format!("{name}.head{m}");
                GatHead {
                    w: ps.add(prefix.clone() + ".w", glorot(rng, f_out, f_in)),
                    a_self: ps.add(prefix.clone() + ".a_self", glorot(rng, 1, f_out)),
                    a_neigh: ps.add(prefix + ".a_neigh", glorot(rng, 1, f_out)),
                }
            })
            .collect();
        GatLayer { heads, in_features: f_in, out_features: f_out }
    }

    /// Attention weights `[G, N, N]` for one head; `h` is `[G*N, F]` with
    /// groups of `group` agents that attend to each other.
    pub fn attention(&self, g: &mut Graph, ps: &ParamSet, h: Var, group: usize, head: usize) -> Result<(Var, Var)> {
        let hd = &self.heads[head];
        let w = g.param(ps, hd.w);
        let wh = g.linear(h, w)?;
        let a_self = g.param(ps, hd.a_self);
        let a_neigh = g.param(ps, hd.a_neigh);
        let s = g.linear(wh, a_self)?;
        let t = g.linear(wh, a_neigh)?;
        let e = g.pair_sum(s, t, group)?;
        let e = g.leaky_relu(e, LEAKY_SLOPE);
        let alpha = g.neighbor_softmax(e)?;
        Ok((alpha, wh))
    }

    /// Head-averaged aggregate `h'`, `[G*N, F']`.
    pub fn forward(&self, g: &mut Graph, ps: &ParamSet, h: Var, group: usize) -> Result<Var> {
        let mut total: Option<Var> = None;
        for m in 0..self.heads.len() {
            let (alpha, wh) = self.attention(g, ps, h, group, m)?;
            let agg = g.group_matmul(alpha, wh, group)?;
            total = Some(match total {
                None => agg,
                Some(t) => g.add(t, agg)?,
            });
        }
        let total = total.ok_or_else(|| crate::Error::InvalidParameter(String::from("GAT needs at least one head")))?;
        Ok(g.scale(total, 1.0 / self.heads.len() as f64))
    }
}
