//! Operation tape: forward builds a topologically ordered node list,
//! backward replays it in exact reverse order.

use super::{ensure_finite, Tensor};
use crate::error::{Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Saved LSTM activations needed by the backward pass.
#[derive(Debug, Clone)]
struct LstmSaved {
    /// Post-nonlinearity gates, packed `[i; f; g; o]`, each of width H.
    gates: Vec<f64>,
    /// `tanh(c_t)`.
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    /// Valid true convolution of a 1-D signal with a 1-D kernel.
    Conv1d { signal: Var, kernel: Var },
    /// Filter-and-sum: per-channel filter banks convolved and summed
    /// over channels. frame: C×M, bank: C×P×N, out: P×(M−N+1).
    FilterSumConv { frame: Var, bank: Var },
    /// Multi-kernel valid convolution with bias over a 1-D input.
    /// x: L, kernels: K×W, bias: K, out: K×(L−W+1).
    ConvBank { x: Var, kernels: Var, bias: Var },
    /// Per-row max pooling over the last axis; ties go to the lowest index.
    MaxPool { x: Var, argmax: Vec<usize> },
    Relu { x: Var },
    /// W·x + b with W: out×in.
    Linear { x: Var, w: Var, b: Var },
    /// One LSTM step; node value is `[h_t; c_t]` (length 2H).
    LstmCell {
        x: Var,
        h_prev: Var,
        c_prev: Var,
        w_ih: Var,
        w_hh: Var,
        bias: Var,
        saved: LstmSaved,
    },
    /// Contiguous sub-range view of a 1-D node.
    Slice { x: Var, offset: usize },
    /// Same data, new shape; gradient passes through.
    Reshape { x: Var },
    Add { a: Var, b: Var },
    /// Weighted negative log-softmax of the target class.
    SoftmaxCrossEntropy {
        logits: Var,
        target: usize,
        weight: f64,
        softmax: Vec<f64>,
    },
}

struct Node {
    value: Tensor,
    op: Op,
    needs_grad: bool,
}

/// Records operations in construction order; construction order is the
/// topological order used (reversed) by [`Tape::backward`].
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Value of a recorded node.
    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Result<Var> {
        value.ensure_finite("tape node")?;
        let id = self.nodes.len();
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Ok(Var(id))
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Insert an input node. `requires_grad` marks trainable leaves.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Result<Var> {
        self.push(value, Op::Leaf, requires_grad)
    }

    /// Valid convolution: out[i] = Σ_j kernel[N−1−j]·signal[i+j],
    /// i.e. true convolution restricted to fully overlapped positions.
    pub fn conv1d_valid(&mut self, signal: Var, kernel: Var) -> Result<Var> {
        let s = self.value(signal);
        let k = self.value(kernel);
        if s.shape().len() != 1 || k.shape().len() != 1 {
            return Err(Error::Dimension("conv1d_valid expects 1-D tensors".into()));
        }
        let (t, n) = (s.len(), k.len());
        if n == 0 || t < n {
            return Err(Error::Dimension(format!(
                "conv1d_valid: signal length {t} < kernel length {n}"
            )));
        }
        let mut out = vec![0.0; t - n + 1];
        conv_valid_accumulate(s.data(), k.data(), &mut out);
        let needs = self.needs(signal) || self.needs(kernel);
        self.push(Tensor::vector(&out), Op::Conv1d { signal, kernel }, needs)
    }

    /// Filter-and-sum front-end kernel: y[p] = Σ_c conv1d_valid(x_c, h_c^p).
    pub fn filter_sum_conv(&mut self, frame: Var, bank: Var) -> Result<Var> {
        let f = self.value(frame);
        let b = self.value(bank);
        if f.shape().len() != 2 || b.shape().len() != 3 {
            return Err(Error::Dimension(
                "filter_sum_conv expects frame C×M and bank C×P×N".into(),
            ));
        }
        let (c, m) = (f.shape()[0], f.shape()[1]);
        let (bc, p, n) = (b.shape()[0], b.shape()[1], b.shape()[2]);
        if bc != c {
            return Err(Error::Dimension(format!(
                "filter_sum_conv: frame has {c} channels, bank has {bc}"
            )));
        }
        if n == 0 || m < n {
            return Err(Error::Dimension(format!(
                "filter_sum_conv: frame length {m} < filter length {n}"
            )));
        }
        let o = m - n + 1;
        let mut y = vec![0.0; p * o];
        for ch in 0..c {
            let x_row = &f.data()[ch * m..(ch + 1) * m];
            for filt in 0..p {
                let k_row = &b.data()[(ch * p + filt) * n..(ch * p + filt + 1) * n];
                conv_valid_accumulate(x_row, k_row, &mut y[filt * o..(filt + 1) * o]);
            }
        }
        let needs = self.needs(frame) || self.needs(bank);
        self.push(
            Tensor::new(vec![p, o], y)?,
            Op::FilterSumConv { frame, bank },
            needs,
        )
    }

    /// Convolution bank with bias: out[k] = bias[k] + conv1d_valid(x, kernels[k]).
    pub fn conv_bank(&mut self, x: Var, kernels: Var, bias: Var) -> Result<Var> {
        let xv = self.value(x);
        let kv = self.value(kernels);
        let bv = self.value(bias);
        if xv.shape().len() != 1 || kv.shape().len() != 2 || bv.shape().len() != 1 {
            return Err(Error::Dimension(
                "conv_bank expects x: L, kernels: K×W, bias: K".into(),
            ));
        }
        let l = xv.len();
        let (k, w) = (kv.shape()[0], kv.shape()[1]);
        if bv.len() != k {
            return Err(Error::Dimension(format!(
                "conv_bank: {k} kernels but {} biases",
                bv.len()
            )));
        }
        if w == 0 || l < w {
            return Err(Error::Dimension(format!(
                "conv_bank: input length {l} < kernel width {w}"
            )));
        }
        let o = l - w + 1;
        let mut out = vec![0.0; k * o];
        for ki in 0..k {
            let row = &mut out[ki * o..(ki + 1) * o];
            row.fill(bv.data()[ki]);
            conv_valid_accumulate(xv.data(), &kv.data()[ki * w..(ki + 1) * w], row);
        }
        let needs = self.needs(x) || self.needs(kernels) || self.needs(bias);
        self.push(
            Tensor::new(vec![k, o], out)?,
            Op::ConvBank { x, kernels, bias },
            needs,
        )
    }

    /// Max pooling over the last axis of a 1-D or 2-D tensor.
    /// Output length per row is floor((L−window)/stride)+1; gradient is
    /// routed to the first (lowest-index) maximum of each window.
    pub fn max_pool(&mut self, x: Var, window: usize, stride: usize) -> Result<Var> {
        let xv = self.value(x);
        let (rows, l) = match xv.shape() {
            [l] => (1, *l),
            [r, l] => (*r, *l),
            other => {
                return Err(Error::Dimension(format!(
                    "max_pool expects 1-D or 2-D input, got {other:?}"
                )))
            }
        };
        if window == 0 || stride == 0 {
            return Err(Error::Dimension("max_pool: window/stride must be ≥ 1".into()));
        }
        if window > l {
            return Err(Error::Dimension(format!(
                "max_pool: window {window} exceeds input length {l}"
            )));
        }
        let o = (l - window) / stride + 1;
        let mut out = vec![0.0; rows * o];
        let mut argmax = vec![0usize; rows * o];
        for r in 0..rows {
            let row = &xv.data()[r * l..(r + 1) * l];
            for i in 0..o {
                let start = i * stride;
                let mut best = row[start];
                let mut best_at = start;
                for (off, &v) in row[start..start + window].iter().enumerate() {
                    if v > best {
                        best = v;
                        best_at = start + off;
                    }
                }
                out[r * o + i] = best;
                argmax[r * o + i] = r * l + best_at;
            }
        }
        let shape = if xv.shape().len() == 1 {
            vec![o]
        } else {
            vec![rows, o]
        };
        let needs = self.needs(x);
        self.push(Tensor::new(shape, out)?, Op::MaxPool { x, argmax }, needs)
    }

    /// Global max over the last axis (window spans the whole row).
    pub fn global_max_pool(&mut self, x: Var) -> Result<Var> {
        let l = *self
            .value(x)
            .shape()
            .last()
            .ok_or_else(|| Error::Dimension("global_max_pool on empty shape".into()))?;
        self.max_pool(x, l, l)
    }

    /// Elementwise max(0, x); the subgradient at 0 is 0.
    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let out: Vec<f64> = xv.data().iter().map(|&v| v.max(0.0)).collect();
        let needs = self.needs(x);
        self.push(
            Tensor::new(xv.shape().to_vec(), out)?,
            Op::Relu { x },
            needs,
        )
    }

    /// Affine map W·x + b.
    pub fn linear(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xv = self.value(x);
        let wv = self.value(w);
        let bv = self.value(b);
        if xv.shape().len() != 1 || wv.shape().len() != 2 || bv.shape().len() != 1 {
            return Err(Error::Dimension(
                "linear expects x: in, W: out×in, b: out".into(),
            ));
        }
        let (out_dim, in_dim) = (wv.shape()[0], wv.shape()[1]);
        if xv.len() != in_dim || bv.len() != out_dim {
            return Err(Error::Dimension(format!(
                "linear: W is {out_dim}×{in_dim}, x has {}, b has {}",
                xv.len(),
                bv.len()
            )));
        }
        let mut out = bv.data().to_vec();
        matvec_accumulate(wv.data(), xv.data(), &mut out, out_dim, in_dim);
        let needs = self.needs(x) || self.needs(w) || self.needs(b);
        self.push(Tensor::vector(&out), Op::Linear { x, w, b }, needs)
    }

    /// One LSTM step with gate order `[i; f; g; o]`:
    /// c_t = f⊙c_prev + i⊙g, h_t = o⊙tanh(c_t).
    /// Returns `(h_t, c_t)` as slice views of the combined cell node.
    #[allow(clippy::too_many_arguments)]
    pub fn lstm_cell(
        &mut self,
        x: Var,
        h_prev: Var,
        c_prev: Var,
        w_ih: Var,
        w_hh: Var,
        bias: Var,
    ) -> Result<(Var, Var)> {
        let h_dim = self.value(h_prev).len();
        let in_dim = self.value(x).len();
        let wi = self.value(w_ih);
        let wh = self.value(w_hh);
        let bv = self.value(bias);
        if self.value(c_prev).len() != h_dim {
            return Err(Error::Dimension("lstm_cell: h/c size mismatch".into()));
        }
        if wi.shape() != [4 * h_dim, in_dim]
            || wh.shape() != [4 * h_dim, h_dim]
            || bv.len() != 4 * h_dim
        {
            return Err(Error::Dimension(format!(
                "lstm_cell: parameter shapes do not match input {in_dim}, hidden {h_dim}"
            )));
        }

        let mut pre = bv.data().to_vec();
        matvec_accumulate(wi.data(), self.value(x).data(), &mut pre, 4 * h_dim, in_dim);
        matvec_accumulate(
            wh.data(),
            self.value(h_prev).data(),
            &mut pre,
            4 * h_dim,
            h_dim,
        );

        let mut gates = vec![0.0; 4 * h_dim];
        for j in 0..h_dim {
            gates[j] = sigmoid(pre[j]);
            gates[h_dim + j] = sigmoid(pre[h_dim + j]);
            gates[2 * h_dim + j] = pre[2 * h_dim + j].tanh();
            gates[3 * h_dim + j] = sigmoid(pre[3 * h_dim + j]);
        }
        let c_prev_data = self.value(c_prev).data();
        let mut hc = vec![0.0; 2 * h_dim];
        let mut tanh_c = vec![0.0; h_dim];
        for j in 0..h_dim {
            let c_new = gates[h_dim + j] * c_prev_data[j] + gates[j] * gates[2 * h_dim + j];
            hc[h_dim + j] = c_new;
            tanh_c[j] = c_new.tanh();
            hc[j] = gates[3 * h_dim + j] * tanh_c[j];
        }

        let needs = self.needs(x)
            || self.needs(h_prev)
            || self.needs(c_prev)
            || self.needs(w_ih)
            || self.needs(w_hh)
            || self.needs(bias);
        let cell = self.push(
            Tensor::vector(&hc),
            Op::LstmCell {
                x,
                h_prev,
                c_prev,
                w_ih,
                w_hh,
                bias,
                saved: LstmSaved { gates, tanh_c },
            },
            needs,
        )?;
        let h = self.slice(cell, 0, h_dim)?;
        let c = self.slice(cell, h_dim, h_dim)?;
        Ok((h, c))
    }

    /// Contiguous slice of a node's flat data as a 1-D tensor.
    pub fn slice(&mut self, x: Var, offset: usize, len: usize) -> Result<Var> {
        let xv = self.value(x);
        if offset + len > xv.len() {
            return Err(Error::Dimension(format!(
                "slice [{offset}, {}) out of range for length {}",
                offset + len,
                xv.len()
            )));
        }
        let out = xv.data()[offset..offset + len].to_vec();
        let needs = self.needs(x);
        self.push(Tensor::vector(&out), Op::Slice { x, offset }, needs)
    }

    /// Reinterpret a node's data with a new shape of the same size.
    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let xv = self.value(x);
        let expected: usize = shape.iter().product();
        if expected != xv.len() {
            return Err(Error::Dimension(format!(
                "reshape to {shape:?} incompatible with {} values",
                xv.len()
            )));
        }
        let out = Tensor::new(shape, xv.data().to_vec())?;
        let needs = self.needs(x);
        self.push(out, Op::Reshape { x }, needs)
    }

    /// Elementwise sum of two same-shape nodes.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let av = self.value(a);
        let bv = self.value(b);
        if av.shape() != bv.shape() {
            return Err(Error::Dimension(format!(
                "add: shape {:?} vs {:?}",
                av.shape(),
                bv.shape()
            )));
        }
        let out: Vec<f64> = av
            .data()
            .iter()
            .zip(bv.data())
            .map(|(&x, &y)| x + y)
            .collect();
        let out = Tensor::new(av.shape().to_vec(), out)?;
        let needs = self.needs(a) || self.needs(b);
        self.push(out, Op::Add { a, b }, needs)
    }

    /// Weighted cross-entropy: −weight·log softmax(logits)[target],
    /// computed with max subtraction. Gradient is weight·(softmax − onehot).
    pub fn softmax_cross_entropy(
        &mut self,
        logits: Var,
        target: usize,
        weight: f64,
    ) -> Result<Var> {
        let lv = self.value(logits);
        if lv.shape().len() != 1 || lv.is_empty() {
            return Err(Error::Dimension("softmax_cross_entropy expects a 1-D logit vector".into()));
        }
        if target >= lv.len() {
            return Err(Error::InvalidInput(format!(
                "target class {target} out of range for {} logits",
                lv.len()
            )));
        }
        ensure_finite(lv.data(), "softmax_cross_entropy logits")?;
        let max = lv.data().iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = lv.data().iter().map(|&v| (v - max).exp()).sum();
        let softmax: Vec<f64> = lv.data().iter().map(|&v| (v - max).exp() / sum_exp).collect();
        let log_sum = sum_exp.ln();
        let loss = weight * (log_sum - (lv.data()[target] - max));
        let needs = self.needs(logits);
        self.push(
            Tensor::vector(&[loss]),
            Op::SoftmaxCrossEntropy {
                logits,
                target,
                weight,
                softmax,
            },
            needs,
        )
    }

    /// Reverse pass from a scalar root seeded with `seed`. Returns one
    /// gradient buffer per node (allocated only where a gradient flows).
    pub fn backward(&self, root: Var, seed: f64) -> Result<Vec<Option<Vec<f64>>>> {
        if self.value(root).len() != 1 {
            return Err(Error::Dimension("backward root must be scalar".into()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = self
            .nodes
            .iter()
            .map(|n| {
                if n.needs_grad {
                    Some(vec![0.0; n.value.len()])
                } else {
                    None
                }
            })
            .collect();
        if grads[root.0].is_none() {
            // Root does not depend on any trainable leaf; nothing to do.
            return Ok(grads);
        }
        grads[root.0].as_mut().unwrap()[0] = seed;

        for id in (0..self.nodes.len()).rev() {
            if grads[id].is_none() {
                continue;
            }
            // Take this node's gradient out so inputs can be borrowed mutably.
            let gout = grads[id].take().unwrap();
            self.backward_node(id, &gout, &mut grads);
            grads[id] = Some(gout);
        }
        Ok(grads)
    }

    fn backward_node(&self, id: usize, gout: &[f64], grads: &mut [Option<Vec<f64>>]) {
        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::Conv1d { signal, kernel } => {
                let s = self.value(*signal).data();
                let k = self.value(*kernel).data();
                let n = k.len();
                if let Some(gs) = grads[signal.0].as_deref_mut() {
                    // d/ds[i+j] += gout[i]·k[N−1−j]
                    for j in 0..n {
                        let kv = k[n - 1 - j];
                        for (i, &g) in gout.iter().enumerate() {
                            gs[i + j] += g * kv;
                        }
                    }
                }
                if let Some(gk) = grads[kernel.0].as_deref_mut() {
                    for j in 0..n {
                        let mut acc = 0.0;
                        for (i, &g) in gout.iter().enumerate() {
                            acc += g * s[i + j];
                        }
                        gk[n - 1 - j] += acc;
                    }
                }
            }
            Op::FilterSumConv { frame, bank } => {
                let f = self.value(*frame);
                let b = self.value(*bank);
                let (c, m) = (f.shape()[0], f.shape()[1]);
                let (p, n) = (b.shape()[1], b.shape()[2]);
                let o = m - n + 1;
                if let Some(gb) = grads[bank.0].as_deref_mut() {
                    for ch in 0..c {
                        let x_row = &f.data()[ch * m..(ch + 1) * m];
                        for filt in 0..p {
                            let gy = &gout[filt * o..(filt + 1) * o];
                            let gk = &mut gb[(ch * p + filt) * n..(ch * p + filt + 1) * n];
                            for j in 0..n {
                                let mut acc = 0.0;
                                for (i, &g) in gy.iter().enumerate() {
                                    acc += g * x_row[i + j];
                                }
                                gk[n - 1 - j] += acc;
                            }
                        }
                    }
                }
                if let Some(gf) = grads[frame.0].as_deref_mut() {
                    for ch in 0..c {
                        let gx = &mut gf[ch * m..(ch + 1) * m];
                        for filt in 0..p {
                            let k_row = &b.data()[(ch * p + filt) * n..(ch * p + filt + 1) * n];
                            let gy = &gout[filt * o..(filt + 1) * o];
                            for j in 0..n {
                                let kv = k_row[n - 1 - j];
                                for (i, &g) in gy.iter().enumerate() {
                                    gx[i + j] += g * kv;
                                }
                            }
                        }
                    }
                }
            }
            Op::ConvBank { x, kernels, bias } => {
                let xv = self.value(*x).data();
                let kv = self.value(*kernels);
                let (k, w) = (kv.shape()[0], kv.shape()[1]);
                let o = xv.len() - w + 1;
                if let Some(gb) = grads[bias.0].as_deref_mut() {
                    for ki in 0..k {
                        gb[ki] += gout[ki * o..(ki + 1) * o].iter().sum::<f64>();
                    }
                }
                if let Some(gk) = grads[kernels.0].as_deref_mut() {
                    for ki in 0..k {
                        let gy = &gout[ki * o..(ki + 1) * o];
                        let gk_row = &mut gk[ki * w..(ki + 1) * w];
                        for j in 0..w {
                            let mut acc = 0.0;
                            for (i, &g) in gy.iter().enumerate() {
                                acc += g * xv[i + j];
                            }
                            gk_row[w - 1 - j] += acc;
                        }
                    }
                }
                if let Some(gx) = grads[x.0].as_deref_mut() {
                    for ki in 0..k {
                        let k_row = &kv.data()[ki * w..(ki + 1) * w];
                        let gy = &gout[ki * o..(ki + 1) * o];
                        for j in 0..w {
                            let kval = k_row[w - 1 - j];
                            for (i, &g) in gy.iter().enumerate() {
                                gx[i + j] += g * kval;
                            }
                        }
                    }
                }
            }
            Op::MaxPool { x, argmax } => {
                if let Some(gx) = grads[x.0].as_deref_mut() {
                    for (slot, &src) in argmax.iter().enumerate() {
                        gx[src] += gout[slot];
                    }
                }
            }
            Op::Relu { x } => {
                let xv = self.value(*x).data();
                if let Some(gx) = grads[x.0].as_deref_mut() {
                    for (i, &g) in gout.iter().enumerate() {
                        if xv[i] > 0.0 {
                            gx[i] += g;
                        }
                    }
                }
            }
            Op::Linear { x, w, b } => {
                let xv = self.value(*x).data();
                let wv = self.value(*w);
                let (out_dim, in_dim) = (wv.shape()[0], wv.shape()[1]);
                if let Some(gb) = grads[b.0].as_deref_mut() {
                    for (gbv, &g) in gb.iter_mut().zip(gout) {
                        *gbv += g;
                    }
                }
                if let Some(gw) = grads[w.0].as_deref_mut() {
                    for r in 0..out_dim {
                        let g = gout[r];
                        let row = &mut gw[r * in_dim..(r + 1) * in_dim];
                        for (dst, &xval) in row.iter_mut().zip(xv) {
                            *dst += g * xval;
                        }
                    }
                }
                if let Some(gx) = grads[x.0].as_deref_mut() {
                    for r in 0..out_dim {
                        let g = gout[r];
                        let row = &wv.data()[r * in_dim..(r + 1) * in_dim];
                        for (dst, &wval) in gx.iter_mut().zip(row) {
                            *dst += g * wval;
                        }
                    }
                }
            }
            Op::LstmCell {
                x,
                h_prev,
                c_prev,
                w_ih,
                w_hh,
                bias,
                saved,
            } => {
                let h_dim = saved.tanh_c.len();
                let (gh, gc) = gout.split_at(h_dim);
                let gates = &saved.gates;
                let c_prev_data = self.value(*c_prev).data();

                // Back through h_t = o⊙tanh(c_t) and c_t = f⊙c_prev + i⊙g.
                let mut d_pre = vec![0.0; 4 * h_dim];
                let mut d_c_prev = vec![0.0; h_dim];
                for j in 0..h_dim {
                    let (i_g, f_g, g_g, o_g) = (
                        gates[j],
                        gates[h_dim + j],
                        gates[2 * h_dim + j],
                        gates[3 * h_dim + j],
                    );
                    let tc = saved.tanh_c[j];
                    let d_o = gh[j] * tc;
                    let d_c = gc[j] + gh[j] * o_g * (1.0 - tc * tc);
                    let d_i = d_c * g_g;
                    let d_f = d_c * c_prev_data[j];
                    let d_g = d_c * i_g;
                    d_c_prev[j] = d_c * f_g;
                    d_pre[j] = d_i * i_g * (1.0 - i_g);
                    d_pre[h_dim + j] = d_f * f_g * (1.0 - f_g);
                    d_pre[2 * h_dim + j] = d_g * (1.0 - g_g * g_g);
                    d_pre[3 * h_dim + j] = d_o * o_g * (1.0 - o_g);
                }

                if let Some(g) = grads[c_prev.0].as_deref_mut() {
                    for (dst, &v) in g.iter_mut().zip(&d_c_prev) {
                        *dst += v;
                    }
                }
                if let Some(g) = grads[bias.0].as_deref_mut() {
                    for (dst, &v) in g.iter_mut().zip(&d_pre) {
                        *dst += v;
                    }
                }
                let xv = self.value(*x).data();
                let hv = self.value(*h_prev).data();
                let in_dim = xv.len();
                if let Some(gw) = grads[w_ih.0].as_deref_mut() {
                    outer_accumulate(&d_pre, xv, gw, in_dim);
                }
                if let Some(gw) = grads[w_hh.0].as_deref_mut() {
                    outer_accumulate(&d_pre, hv, gw, h_dim);
                }
                if let Some(gx) = grads[x.0].as_deref_mut() {
                    matvec_transpose_accumulate(self.value(*w_ih).data(), &d_pre, gx, in_dim);
                }
                if let Some(gh_prev) = grads[h_prev.0].as_deref_mut() {
                    matvec_transpose_accumulate(self.value(*w_hh).data(), &d_pre, gh_prev, h_dim);
                }
            }
            Op::Slice { x, offset } => {
                if let Some(gx) = grads[x.0].as_deref_mut() {
                    for (i, &g) in gout.iter().enumerate() {
                        gx[offset + i] += g;
                    }
                }
            }
            Op::Reshape { x } => {
                if let Some(gx) = grads[x.0].as_deref_mut() {
                    for (dst, &g) in gx.iter_mut().zip(gout) {
                        *dst += g;
                    }
                }
            }
            Op::Add { a, b } => {
                for v in [a, b] {
                    if let Some(g) = grads[v.0].as_deref_mut() {
                        for (dst, &gv) in g.iter_mut().zip(gout) {
                            *dst += gv;
                        }
                    }
                }
            }
            Op::SoftmaxCrossEntropy {
                logits,
                target,
                weight,
                softmax,
            } => {
                if let Some(gl) = grads[logits.0].as_deref_mut() {
                    let g = gout[0] * weight;
                    for (i, (dst, &s)) in gl.iter_mut().zip(softmax).enumerate() {
                        let onehot = if i == *target { 1.0 } else { 0.0 };
                        *dst += g * (s - onehot);
                    }
                }
            }
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// out[i] += Σ_j kernel[N−1−j]·signal[i+j] for i in 0..len(out).
/// The j-outer/i-inner order keeps both reads and writes contiguous.
fn conv_valid_accumulate(signal: &[f64], kernel: &[f64], out: &mut [f64]) {
    let n = kernel.len();
    let o = out.len();
    for j in 0..n {
        let kv = kernel[n - 1 - j];
        let src = &signal[j..j + o];
        for (dst, &s) in out.iter_mut().zip(src) {
            *dst += kv * s;
        }
    }
}

/// out[r] += Σ_c m[r, c]·x[c] for a row-major out_dim×in_dim matrix.
fn matvec_accumulate(m: &[f64], x: &[f64], out: &mut [f64], out_dim: usize, in_dim: usize) {
    for r in 0..out_dim {
        let row = &m[r * in_dim..(r + 1) * in_dim];
        let mut acc = 0.0;
        for (mv, xv) in row.iter().zip(x) {
            acc += mv * xv;
        }
        out[r] += acc;
    }
}

/// out[c] += Σ_r m[r, c]·y[r] (transpose matvec), m row-major rows×cols.
fn matvec_transpose_accumulate(m: &[f64], y: &[f64], out: &mut [f64], cols: usize) {
    for (r, &yv) in y.iter().enumerate() {
        if yv == 0.0 {
            continue;
        }
        let row = &m[r * cols..(r + 1) * cols];
        for (dst, &mv) in out.iter_mut().zip(row) {
            *dst += yv * mv;
        }
    }
}

/// out[r, c] += y[r]·x[c], out row-major rows×cols.
fn outer_accumulate(y: &[f64], x: &[f64], out: &mut [f64], cols: usize) {
    for (r, &yv) in y.iter().enumerate() {
        if yv == 0.0 {
            continue;
        }
        let row = &mut out[r * cols..(r + 1) * cols];
        for (dst, &xv) in row.iter_mut().zip(x) {
            *dst += yv * xv;
        }
    }
}
