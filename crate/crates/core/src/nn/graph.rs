//! Tape-based reverse-mode automatic differentiation over dense `f64`
//! tensors.
//!
//! A [`Graph`] records every operation as a node holding its forward value.
//! [`Graph::backward`] walks the tape in reverse, accumulating gradients.
//! Parameter leaves remember which [`ParamId`] they came from so gradients
//! can be routed back to a [`ParamSet`].

use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major dense tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(alloc::format!("shape {:?} needs {} values, got {}", shape, n, data.len())));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: shape.to_vec(), data: alloc::vec![0.0; shape.iter().product()] }
    }

    pub fn scalar(v: f64) -> Self {
        Tensor { shape: Vec::new(), data: alloc::vec![v] }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(pub usize);

/// Named, ordered parameter tensors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, tensor: Tensor) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(tensor);
        ParamId(self.tensors.len() - 1)
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn total_len(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Min(Var, Var),
    Scale(Var, f64),
    /// `x [B, N] + b [N]`
    AddRowBias(Var, Var),
    /// `x [B, K] · wᵀ` for `w [N, K]`
    Linear(Var, Var),
    /// `x [B, C, H, W]`, `w [O, C, K, K]`, `b [O]`, no padding.
    Conv2d {
        x: Var,
        w: Var,
        b: Var,
        stride: usize,
    },
    Relu(Var),
    LeakyRelu(Var, f64),
    Exp(Var),
    Square(Var),
    Clamp(Var, f64, f64),
    Reshape(Var),
    /// `[B, N1] ++ [B, N2]` along the last axis.
    Concat(Var, Var),
    /// Row-wise over the last axis of a 2-D tensor.
    LogSoftmax(Var),
    /// `out[b] = x[b, idx[b]]`
    Gather(Var, Vec<usize>),
    /// `[B, K] -> [B]`
    SumRows(Var),
    Sum(Var),
    Mean(Var),
    /// `s, t [G*N, 1] -> [G, N, N]` with `out[g,i,j] = s[g,i] + t[g,j]`.
    PairSum {
        s: Var,
        t: Var,
        group: usize,
    },
    /// Softmax over each row of `[G, N, N]`, excluding the diagonal, which
    /// is 0. A row with no off-diagonal entries is all zeros.
    NeighborSoftmax(Var),
    /// `alpha [G, N, N]`, `v [G*N, F] -> [G*N, F]`, blockwise `alpha · v`.
    GroupMatMul {
        alpha: Var,
        v: Var,
        group: usize,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    param: Option<ParamId>,
}

/// Gradients for every node of one backward pass.
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    params: Vec<(usize, ParamId)>,
}

impl Gradients {
    pub fn wrt(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    /// Per-parameter gradients aligned with `set`; unused parameters get
    /// zeros.
    pub fn for_params(&self, set: &ParamSet) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = set.tensors().iter().map(|t| alloc::vec![0.0; t.len()]).collect();
        for &(node, pid) in &self.params {
            if let Some(g) = &self.grads[node] {
                for (o, &v) in out[pid.0].iter_mut().zip(g) {
                    *o += v;
                }
            }
        }
        out
    }
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn shape_err(msg: impl Into<String>) -> Error {
    Error::Shape(msg.into())
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.nodes[v.0].value.shape
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op, param: None });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(t, Op::Leaf)
    }

    pub fn param(&mut self, set: &ParamSet, id: ParamId) -> Var {
        let v = self.push(set.get(id).clone(), Op::Leaf);
        self.nodes[v.0].param = Some(id);
        v
    }

    fn data(&self, v: Var) -> &[f64] {
        &self.nodes[v.0].value.data
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(alloc::format!("{what}: {:?} vs {:?}", self.shape(a), self.shape(b))));
        }
        Ok(())
    }

    fn zip_with(&mut self, a: Var, b: Var, op: Op, f: impl Fn(f64, f64) -> f64) -> Var {
        let data = self.data(a).iter().zip(self.data(b)).map(|(&x, &y)| f(x, y)).collect();
        let shape = self.shape(a).to_vec();
        self.push(Tensor { shape, data }, op)
    }

    fn map(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let data = self.data(a).iter().map(|&x| f(x)).collect();
        let shape = self.shape(a).to_vec();
        self.push(Tensor { shape, data }, op)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        Ok(self.zip_with(a, b, Op::Add(a, b), |x, y| x + y))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        Ok(self.zip_with(a, b, Op::Sub(a, b), |x, y| x - y))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        Ok(self.zip_with(a, b, Op::Mul(a, b), |x, y| x * y))
    }

    /// Elementwise minimum; the gradient goes to `a` on ties.
    pub fn min(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "min")?;
        Ok(self.zip_with(a, b, Op::Min(a, b), |x, y| if x <= y { x } else { y }))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        self.map(a, Op::Scale(a, c), |x| x * c)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, Op::Relu(a), |x| if x > 0.0 { x } else { 0.0 })
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        self.map(a, Op::LeakyRelu(a, slope), |x| if x > 0.0 { x } else { slope * x })
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.map(a, Op::Exp(a), libm::exp)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.map(a, Op::Square(a), |x| x * x)
    }

    /// Clamp with zero gradient outside `[lo, hi]`.
    pub fn clamp(&mut self, a: Var, lo: f64, hi: f64) -> Var {
        self.map(a, Op::Clamp(a, lo, hi), |x| x.clamp(lo, hi))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        if shape.iter().product::<usize>() != self.value(a).len() {
            return Err(shape_err(alloc::format!("reshape {:?} -> {:?}", self.shape(a), shape)));
        }
        let data = self.data(a).to_vec();
        Ok(self.push(Tensor { shape: shape.to_vec(), data }, Op::Reshape(a)))
    }

    fn dims2(&self, a: Var, what: &str) -> Result<(usize, usize)> {
        match *self.shape(a) {
            [r, c] => Ok((r, c)),
            ref s => Err(shape_err(alloc::format!("{what}: expected 2-D, got {s:?}"))),
        }
    }

    pub fn add_row_bias(&mut self, x: Var, b: Var) -> Result<Var> {
        let (rows, cols) = self.dims2(x, "bias input")?;
        if self.shape(b) != [cols] {
            return Err(shape_err(alloc::format!("bias {:?} for {} columns", self.shape(b), cols)));
        }
        let bias = self.data(b);
        let data = self.data(x).chunks(cols).flat_map(|row| row.iter().zip(bias).map(|(v, c)| v + c)).collect();
        Ok(self.push(Tensor { shape: alloc::vec![rows, cols], data }, Op::AddRowBias(x, b)))
    }

    /// `x [B, K]` times `w [N, K]` transposed.
    pub fn linear(&mut self, x: Var, w: Var) -> Result<Var> {
        let (b, k) = self.dims2(x, "linear input")?;
        let (n, k2) = self.dims2(w, "linear weight")?;
        if k != k2 {
            return Err(shape_err(alloc::format!("linear: input width {k}, weight width {k2}")));
        }
        let (xd, wd) = (self.data(x), self.data(w));
        let mut out = alloc::vec![0.0; b * n];
        for r in 0..b {
            let xr = &xd[r * k..(r + 1) * k];
            for o in 0..n {
                out[r * n + o] = dot(xr, &wd[o * k..(o + 1) * k]);
            }
        }
        Ok(self.push(Tensor { shape: alloc::vec![b, n], data: out }, Op::Linear(x, w)))
    }

    pub fn conv2d(&mut self, x: Var, w: Var, b: Var, stride: usize) -> Result<Var> {
        let &[bn, c, h, wd] = self.shape(x) else {
            return Err(shape_err(alloc::format!("conv input {:?}", self.shape(x))));
        };
        let &[o, c2, k, k2] = self.shape(w) else {
            return Err(shape_err(alloc::format!("conv weight {:?}", self.shape(w))));
        };
        if c != c2 || k != k2 || self.shape(b) != [o] || k > h || k > wd || stride == 0 {
            return Err(shape_err(alloc::format!(
                "conv: input {:?}, weight {:?}, bias {:?}",
                self.shape(x),
                self.shape(w),
                self.shape(b)
            )));
        }
        let ho = (h - k) / stride + 1;
        let wo = (wd - k) / stride + 1;
        let (xd, kd, bd) = (self.data(x), self.data(w), self.data(b));
        let mut out = alloc::vec![0.0; bn * o * ho * wo];
        for n in 0..bn {
            for oc in 0..o {
                let dst = &mut out[(n * o + oc) * ho * wo..(n * o + oc + 1) * ho * wo];
                dst.iter_mut().for_each(|v| *v = bd[oc]);
                for ic in 0..c {
                    let src = &xd[(n * c + ic) * h * wd..(n * c + ic + 1) * h * wd];
                    let ker = &kd[(oc * c + ic) * k * k..(oc * c + ic + 1) * k * k];
                    for i in 0..ho {
                        for j in 0..wo {
                            let mut acc = 0.0;
                            for di in 0..k {
                                let row = &src[(i * stride + di) * wd + j * stride..];
                                acc += dot(&row[..k], &ker[di * k..(di + 1) * k]);
                            }
                            dst[i * wo + j] += acc;
                        }
                    }
                }
            }
        }
        let op = Op::Conv2d { x, w, b, stride };
        Ok(self.push(Tensor { shape: alloc::vec![bn, o, ho, wo], data: out }, op))
    }

    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ra, ca) = self.dims2(a, "concat")?;
        let (rb, cb) = self.dims2(b, "concat")?;
        if ra != rb {
            return Err(shape_err(alloc::format!("concat rows {ra} vs {rb}")));
        }
        let (ad, bd) = (self.data(a), self.data(b));
        let mut data = Vec::with_capacity(ra * (ca + cb));
        for r in 0..ra {
            data.extend_from_slice(&ad[r * ca..(r + 1) * ca]);
            data.extend_from_slice(&bd[r * cb..(r + 1) * cb]);
        }
        Ok(self.push(Tensor { shape: alloc::vec![ra, ca + cb], data }, Op::Concat(a, b)))
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        let (rows, cols) = self.dims2(a, "log_softmax")?;
        let mut data = self.data(a).to_vec();
        for row in data.chunks_mut(cols) {
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + libm::log(row.iter().map(|&v| libm::exp(v - m)).sum::<f64>());
            row.iter_mut().for_each(|v| *v -= lse);
        }
        Ok(self.push(Tensor { shape: alloc::vec![rows, cols], data }, Op::LogSoftmax(a)))
    }

    pub fn gather(&mut self, a: Var, idx: &[usize]) -> Result<Var> {
        let (rows, cols) = self.dims2(a, "gather")?;
        if idx.len() != rows || idx.iter().any(|&i| i >= cols) {
            return Err(shape_err("gather index out of range"));
        }
        let d = self.data(a);
        let data = idx.iter().enumerate().map(|(r, &i)| d[r * cols + i]).collect();
        Ok(self.push(Tensor { shape: alloc::vec![rows], data }, Op::Gather(a, idx.to_vec())))
    }

    pub fn sum_rows(&mut self, a: Var) -> Result<Var> {
        let (rows, cols) = self.dims2(a, "sum_rows")?;
        let data = self.data(a).chunks(cols).map(|r| r.iter().sum()).collect();
        Ok(self.push(Tensor { shape: alloc::vec![rows], data }, Op::SumRows(a)))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len().max(1) as f64;
        let s: f64 = self.data(a).iter().sum();
        self.push(Tensor::scalar(s / n), Op::Mean(a))
    }

    pub fn pair_sum(&mut self, s: Var, t: Var, group: usize) -> Result<Var> {
        let (rows, one) = self.dims2(s, "pair_sum")?;
        if one != 1 || self.shape(t) != self.shape(s) || group == 0 || rows % group != 0 {
            return Err(shape_err(alloc::format!("pair_sum {:?} {:?} group {group}", self.shape(s), self.shape(t))));
        }
        let g = rows / group;
        let (sd, td) = (self.data(s), self.data(t));
        let mut data = Vec::with_capacity(g * group * group);
        for gi in 0..g {
            for i in 0..group {
                for j in 0..group {
                    data.push(sd[gi * group + i] + td[gi * group + j]);
                }
            }
        }
        Ok(self.push(Tensor { shape: alloc::vec![g, group, group], data }, Op::PairSum { s, t, group }))
    }

    pub fn neighbor_softmax(&mut self, a: Var) -> Result<Var> {
        let &[g, n, n2] = self.shape(a) else {
            return Err(shape_err(alloc::format!("neighbor_softmax {:?}", self.shape(a))));
        };
        if n != n2 {
            return Err(shape_err("neighbor_softmax needs square blocks"));
        }
        let mut data = self.data(a).to_vec();
        for (r, row) in data.chunks_mut(n).enumerate() {
            let i = r % n;
            if n == 1 {
                row[0] = 0.0;
                continue;
            }
            let m = row.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).fold(f64::NEG_INFINITY, f64::max);
            let mut total = 0.0;
            for (j, v) in row.iter_mut().enumerate() {
                if j == i {
                    *v = 0.0;
                } else {
                    *v = libm::exp(*v - m);
                    total += *v;
                }
            }
            row.iter_mut().for_each(|v| *v /= total);
        }
        Ok(self.push(Tensor { shape: alloc::vec![g, n, n], data }, Op::NeighborSoftmax(a)))
    }

    pub fn group_matmul(&mut self, alpha: Var, v: Var, group: usize) -> Result<Var> {
        let &[g, n, n2] = self.shape(alpha) else {
            return Err(shape_err(alloc::format!("group_matmul alpha {:?}", self.shape(alpha))));
        };
        let (rows, f) = self.dims2(v, "group_matmul values")?;
        if n != group || n2 != group || rows != g * group {
            return Err(shape_err(alloc::format!("group_matmul {:?} x {:?}", self.shape(alpha), self.shape(v))));
        }
        let (ad, vd) = (self.data(alpha), self.data(v));
        let mut data = alloc::vec![0.0; rows * f];
        for gi in 0..g {
            for i in 0..n {
                let out = &mut data[(gi * n + i) * f..(gi * n + i + 1) * f];
                // fixed j order keeps the sum independent of caller ordering
                for j in 0..n {
                    let w = ad[(gi * n + i) * n + j];
                    if w != 0.0 {
                        let src = &vd[(gi * n + j) * f..(gi * n + j + 1) * f];
                        out.iter_mut().zip(src).for_each(|(o, s)| *o += w * s);
                    }
                }
            }
        }
        Ok(self.push(Tensor { shape: alloc::vec![rows, f], data }, Op::GroupMatMul { alpha, v, group }))
    }

    /// Reverse pass from a scalar `root`.
    pub fn backward(&self, root: Var) -> Result<Gradients> {
        if self.value(root).len() != 1 {
            return Err(shape_err(alloc::format!("backward from non-scalar {:?}", self.shape(root))));
        }
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(alloc::vec![1.0]);
        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            self.propagate(idx, &g, &mut grads);
            grads[idx] = Some(g);
        }
        let params = self.nodes.iter().enumerate().filter_map(|(i, n)| n.param.map(|p| (i, p))).collect();
        Ok(Gradients { grads, params })
    }

    fn propagate(&self, idx: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[idx];
        let out = &node.value.data;
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [f64])| {
            let slot = grads[v.0].get_or_insert_with(|| alloc::vec![0.0; self.nodes[v.0].value.len()]);
            f(slot);
        };
        match node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                acc(a, &mut |ga| add_into(ga, g));
                acc(b, &mut |gb| add_into(gb, g));
            }
            Op::Sub(a, b) => {
                acc(a, &mut |ga| add_into(ga, g));
                acc(b, &mut |gb| gb.iter_mut().zip(g).for_each(|(o, v)| *o -= v));
            }
            Op::Mul(a, b) => {
                let (ad, bd) = (self.data(a), self.data(b));
                acc(a, &mut |ga| ga.iter_mut().zip(g).zip(bd).for_each(|((o, v), y)| *o += v * y));
                acc(b, &mut |gb| gb.iter_mut().zip(g).zip(ad).for_each(|((o, v), x)| *o += v * x));
            }
            Op::Min(a, b) => {
                let (ad, bd) = (self.data(a), self.data(b));
                acc(a, &mut |ga| {
                    for i in 0..ga.len() {
                        if ad[i] <= bd[i] {
                            ga[i] += g[i];
                        }
                    }
                });
                acc(b, &mut |gb| {
                    for i in 0..gb.len() {
                        if ad[i] > bd[i] {
                            gb[i] += g[i];
                        }
                    }
                });
            }
            Op::Scale(a, c) => acc(a, &mut |ga| ga.iter_mut().zip(g).for_each(|(o, v)| *o += c * v)),
            Op::AddRowBias(x, b) => {
                let cols = self.shape(b)[0];
                acc(x, &mut |gx| add_into(gx, g));
                acc(b, &mut |gb| {
                    for row in g.chunks(cols) {
                        add_into(gb, row);
                    }
                });
            }
            Op::Linear(x, w) => {
                let (b, k) = (self.shape(x)[0], self.shape(x)[1]);
                let n = self.shape(w)[0];
                let (xd, wd) = (self.data(x), self.data(w));
                acc(x, &mut |gx| {
                    for r in 0..b {
                        let gxr = &mut gx[r * k..(r + 1) * k];
                        for o in 0..n {
                            let go = g[r * n + o];
                            if go != 0.0 {
                                axpy(gxr, go, &wd[o * k..(o + 1) * k]);
                            }
                        }
                    }
                });
                acc(w, &mut |gw| {
                    for r in 0..b {
                        let xr = &xd[r * k..(r + 1) * k];
                        for o in 0..n {
                            let go = g[r * n + o];
                            if go != 0.0 {
                                axpy(&mut gw[o * k..(o + 1) * k], go, xr);
                            }
                        }
                    }
                });
            }
            Op::Conv2d { x, w, b, stride } => {
                let (bn, c, h, wd) = {
                    let s = self.shape(x);
                    (s[0], s[1], s[2], s[3])
                };
                let (o, k) = (self.shape(w)[0], self.shape(w)[2]);
                let (ho, wo) = (node.value.shape[2], node.value.shape[3]);
                let (xd, kd) = (self.data(x), self.data(w));
                acc(b, &mut |gb| {
                    for n in 0..bn {
                        for oc in 0..o {
                            gb[oc] += g[(n * o + oc) * ho * wo..(n * o + oc + 1) * ho * wo].iter().sum::<f64>();
                        }
                    }
                });
                acc(w, &mut |gw| {
                    for n in 0..bn {
                        for oc in 0..o {
                            let go = &g[(n * o + oc) * ho * wo..(n * o + oc + 1) * ho * wo];
                            for ic in 0..c {
                                let src = &xd[(n * c + ic) * h * wd..(n * c + ic + 1) * h * wd];
                                let gk = &mut gw[(oc * c + ic) * k * k..(oc * c + ic + 1) * k * k];
                                for i in 0..ho {
                                    for j in 0..wo {
                                        let gv = go[i * wo + j];
                                        if gv == 0.0 {
                                            continue;
                                        }
                                        for di in 0..k {
                                            let row = &src[(i * stride + di) * wd + j * stride..][..k];
                                            axpy(&mut gk[di * k..(di + 1) * k], gv, row);
                                        }
                                    }
                                }
                            }
                        }
                    }
                });
                acc(x, &mut |gx| {
                    for n in 0..bn {
                        for oc in 0..o {
                            let go = &g[(n * o + oc) * ho * wo..(n * o + oc + 1) * ho * wo];
                            for ic in 0..c {
                                let dst = &mut gx[(n * c + ic) * h * wd..(n * c + ic + 1) * h * wd];
                                let ker = &kd[(oc * c + ic) * k * k..(oc * c + ic + 1) * k * k];
                                for i in 0..ho {
                                    for j in 0..wo {
                                        let gv = go[i * wo + j];
                                        if gv == 0.0 {
                                            continue;
                                        }
                                        for di in 0..k {
                                            let row = &mut dst[(i * stride + di) * wd + j * stride..][..k];
                                            axpy(row, gv, &ker[di * k..(di + 1) * k]);
                                        }
                                    }
                                }
                            }
                        }
                    }
                });
            }
            Op::Relu(a) => {
                let ad = self.data(a);
                acc(a, &mut |ga| {
                    for i in 0..ga.len() {
                        if ad[i] > 0.0 {
                            ga[i] += g[i];
                        }
                    }
                });
            }
            Op::LeakyRelu(a, slope) => {
                let ad = self.data(a);
                acc(a, &mut |ga| {
                    for i in 0..ga.len() {
                        ga[i] += if ad[i] > 0.0 { g[i] } else { slope * g[i] };
                    }
                });
            }
            Op::Exp(a) => acc(a, &mut |ga| ga.iter_mut().zip(g).zip(out).for_each(|((o, v), y)| *o += v * y)),
            Op::Square(a) => {
                let ad = self.data(a);
                acc(a, &mut |ga| ga.iter_mut().zip(g).zip(ad).for_each(|((o, v), x)| *o += 2.0 * x * v));
            }
            Op::Clamp(a, lo, hi) => {
                let ad = self.data(a);
                acc(a, &mut |ga| {
                    for i in 0..ga.len() {
                        if ad[i] >= lo && ad[i] <= hi {
                            ga[i] += g[i];
                        }
                    }
                });
            }
            Op::Reshape(a) => acc(a, &mut |ga| add_into(ga, g)),
            Op::Concat(a, b) => {
                let (ca, cb) = (self.shape(a)[1], self.shape(b)[1]);
                acc(a, &mut |ga| {
                    for (r, row) in ga.chunks_mut(ca).enumerate() {
                        add_into(row, &g[r * (ca + cb)..r * (ca + cb) + ca]);
                    }
                });
                acc(b, &mut |gb| {
                    for (r, row) in gb.chunks_mut(cb).enumerate() {
                        add_into(row, &g[r * (ca + cb) + ca..(r + 1) * (ca + cb)]);
                    }
                });
            }
            Op::LogSoftmax(a) => {
                let cols = node.value.shape[1];
                acc(a, &mut |ga| {
                    for ((gr, gout), y) in ga.chunks_mut(cols).zip(g.chunks(cols)).zip(out.chunks(cols)) {
                        let total: f64 = gout.iter().sum();
                        for j in 0..cols {
                            gr[j] += gout[j] - libm::exp(y[j]) * total;
                        }
                    }
                });
            }
            Op::Gather(a, ref idx) => {
                let cols = self.shape(a)[1];
                acc(a, &mut |ga| {
                    for (r, &i) in idx.iter().enumerate() {
                        ga[r * cols + i] += g[r];
                    }
                });
            }
            Op::SumRows(a) => {
                let cols = self.shape(a)[1];
                acc(a, &mut |ga| {
                    for (row, &v) in ga.chunks_mut(cols).zip(g) {
                        row.iter_mut().for_each(|o| *o += v);
                    }
                });
            }
            Op::Sum(a) => acc(a, &mut |ga| ga.iter_mut().for_each(|o| *o += g[0])),
            Op::Mean(a) => {
                let n = self.value(a).len().max(1) as f64;
                acc(a, &mut |ga| ga.iter_mut().for_each(|o| *o += g[0] / n));
            }
            Op::PairSum { s, t, group } => {
                let blocks = self.shape(s)[0] / group;
                acc(s, &mut |gs| {
                    for gi in 0..blocks {
                        for i in 0..group {
                            let base = (gi * group + i) * group;
                            gs[gi * group + i] += g[base..base + group].iter().sum::<f64>();
                        }
                    }
                });
                acc(t, &mut |gt| {
                    for gi in 0..blocks {
                        for i in 0..group {
                            let base = (gi * group + i) * group;
                            for j in 0..group {
                                gt[gi * group + j] += g[base + j];
                            }
                        }
                    }
                });
            }
            Op::NeighborSoftmax(a) => {
                let n = node.value.shape[1];
                acc(a, &mut |ga| {
                    for (r, ((gr, gout), y)) in ga.chunks_mut(n).zip(g.chunks(n)).zip(out.chunks(n)).enumerate() {
                        let i = r % n;
                        let dotp: f64 = (0..n).filter(|&j| j != i).map(|j| gout[j] * y[j]).sum();
                        for j in 0..n {
                            if j != i {
                                gr[j] += y[j] * (gout[j] - dotp);
                            }
                        }
                    }
                });
            }
            Op::GroupMatMul { alpha, v, group } => {
                let f = self.shape(v)[1];
                let blocks = self.shape(v)[0] / group;
                let (ad, vd) = (self.data(alpha), self.data(v));
                acc(alpha, &mut |galpha| {
                    for gi in 0..blocks {
                        for i in 0..group {
                            let go = &g[(gi * group + i) * f..(gi * group + i + 1) * f];
                            for j in 0..group {
                                let src = &vd[(gi * group + j) * f..(gi * group + j + 1) * f];
                                galpha[(gi * group + i) * group + j] += dot(go, src);
                            }
                        }
                    }
                });
                acc(v, &mut |gv| {
                    for gi in 0..blocks {
                        for i in 0..group {
                            let go = &g[(gi * group + i) * f..(gi * group + i + 1) * f];
                            for j in 0..group {
                                let w = ad[(gi * group + i) * group + j];
                                if w != 0.0 {
                                    axpy(&mut gv[(gi * group + j) * f..(gi * group + j + 1) * f], w, go);
                                }
                            }
                        }
                    }
                });
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(o, v)| *o += a * v);
}

#[inline]
fn add_into(y: &mut [f64], x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(o, v)| *o += v);
}
