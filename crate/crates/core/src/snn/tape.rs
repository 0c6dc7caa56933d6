//! Reverse-mode tape over multi-step spiking layers.
//!
//! Every layer processes all timesteps at once. Rows of a tensor are laid
//! out time-major (`t` outermost), so a neuron layer sees `timesteps`
//! consecutive blocks of equal size and runs its recurrence across them.
//! The backward pass is BPTT: neuron nodes carry membrane and current
//! gradients backwards through time, with the step function replaced by
//! [`surrogate_grad`](super::neuron::surrogate_grad).

use std::f64::consts::PI;

use super::neuron::{NeuronConfig, NeuronKind, SpikeFn};
use super::params::{Gradients, SpikingUnit, BN_EPS};
use super::real::Real;
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch norm; running statistics are collected.
    Train,
    /// Running statistics in batch norm.
    Eval,
}

enum Op<S> {
    Leaf,
    Linear {
        x: NodeId,
        unit: usize,
    },
    BatchNorm {
        x: NodeId,
        unit: usize,
        xhat: Vec<S>,
        inv_std: Vec<S>,
        batch_stats: bool,
    },
    Neuron {
        x: NodeId,
        unit: usize,
        /// Pre-spike membrane potential `H` for every element.
        h: Vec<S>,
        decay: S,
    },
    Add {
        a: NodeId,
        b: NodeId,
    },
    Concat {
        a: NodeId,
        b: NodeId,
    },
    MaxPool {
        x: NodeId,
        argmax: Vec<u32>,
    },
    Vote {
        x: NodeId,
        block: usize,
    },
}

struct Node<S> {
    value: Tensor<S>,
    op: Op<S>,
}

/// Batch statistics observed by a batch-norm node in training mode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningUpdate {
    pub unit: usize,
    pub mean: Vec<f64>,
    /// Unbiased variance.
    pub var: Vec<f64>,
}

pub struct Graph<'a, S: Real> {
    units: &'a [SpikingUnit<S>],
    neuron: NeuronConfig,
    mode: Mode,
    timesteps: usize,
    nodes: Vec<Node<S>>,
    running: Vec<RunningUpdate>,
    rates: Vec<(usize, f64)>,
}

fn add_into<S: Real>(slot: &mut Option<Vec<S>>, g: Vec<S>) {
    match slot {
        Some(acc) => acc.iter_mut().zip(g).for_each(|(a, b)| *a += b),
        None => *slot = Some(g),
    }
}

#[inline]
fn surrogate_grad_s<S: Real>(x: S, pi: S) -> S {
    let px = pi * x;
    S::one() / (S::one() + px * px)
}

#[inline]
fn surrogate_s<S: Real>(x: S, pi: S) -> S {
    (pi * x).atan() / pi + S::lit(0.5)
}

impl<'a, S: Real> Graph<'a, S> {
    pub fn new(units: &'a [SpikingUnit<S>], neuron: NeuronConfig, mode: Mode, timesteps: usize) -> Self {
        Graph {
            units,
            neuron,
            mode,
            timesteps,
            nodes: Vec::new(),
            running: Vec::new(),
            rates: Vec::new(),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    fn push(&mut self, value: Tensor<S>, op: Op<S>) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn leaf(&mut self, value: Tensor<S>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    pub fn value(&self, id: NodeId) -> &Tensor<S> {
        &self.nodes[id].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Batch statistics gathered in training mode, in execution order.
    pub fn running_updates(&self) -> &[RunningUpdate] {
        &self.running
    }

    /// `(unit, fraction of non-zero inputs)` for every linear node.
    pub fn input_rates(&self) -> &[(usize, f64)] {
        &self.rates
    }

    fn unit(&self, unit: usize) -> Result<&'a SpikingUnit<S>> {
        self.units
            .get(unit)
            .ok_or_else(|| Error::Shape(format!("unit {unit} does not exist")))
    }

    pub fn linear(&mut self, x: NodeId, unit: usize) -> Result<NodeId> {
        let u = self.unit(unit)?;
        let (in_dim, out_dim) = (u.linear.in_dim, u.linear.out_dim);
        let input = &self.nodes[x].value;
        if input.cols() != in_dim {
            return Err(Error::Shape(format!(
                "{}: input has {} channels, layer expects {in_dim}",
                u.name,
                input.cols()
            )));
        }
        let rows = input.rows();
        self.rates.push((unit, input.nonzero_fraction()));
        let mut out = Vec::with_capacity(rows * out_dim);
        for _ in 0..rows {
            out.extend_from_slice(&u.linear.bias);
        }
        S::gemm(
            rows,
            in_dim,
            out_dim,
            &input.data,
            in_dim as isize,
            1,
            &u.linear.weight,
            1,
            in_dim as isize,
            S::one(),
            &mut out,
            out_dim as isize,
            1,
        );
        Ok(self.push(Tensor::matrix(rows, out_dim, out), Op::Linear { x, unit }))
    }

    pub fn batchnorm(&mut self, x: NodeId, unit: usize) -> Result<NodeId> {
        let u = self.unit(unit)?;
        let input = &self.nodes[x].value;
        let (rows, cols) = (input.rows(), input.cols());
        if cols != u.bn.gamma.len() {
            return Err(Error::Shape(format!("{}: batch norm width mismatch", u.name)));
        }
        let eps = BN_EPS;
        let (mean, var, batch_stats) = match self.mode {
            Mode::Train => {
                if rows < 2 {
                    return Err(Error::Shape(format!(
                        "{}: batch norm in training mode needs at least 2 rows per channel",
                        u.name
                    )));
                }
                let mut sum = vec![0.0f64; cols];
                for r in input.data.chunks_exact(cols) {
                    for (s, v) in sum.iter_mut().zip(r) {
                        *s += v.f64();
                    }
                }
                let mean: Vec<f64> = sum.iter().map(|s| s / rows as f64).collect();
                let mut ss = vec![0.0f64; cols];
                for r in input.data.chunks_exact(cols) {
                    for ((s, v), m) in ss.iter_mut().zip(r).zip(&mean) {
                        let d = v.f64() - m;
                        *s += d * d;
                    }
                }
                let var: Vec<f64> = ss.iter().map(|s| s / rows as f64).collect();
                self.running.push(RunningUpdate {
                    unit,
                    mean: mean.clone(),
                    var: ss.iter().map(|s| s / (rows - 1) as f64).collect(),
                });
                (mean, var, true)
            }
            Mode::Eval => (
                u.bn.running_mean.iter().map(|v| v.f64()).collect(),
                u.bn.running_var.iter().map(|v| v.f64()).collect(),
                false,
            ),
        };
        let mean_s: Vec<S> = mean.iter().map(|&m| S::lit(m)).collect();
        let inv_std: Vec<S> = var.iter().map(|&v| S::lit(1.0 / (v + eps).sqrt())).collect();
        let mut xhat = Vec::with_capacity(rows * cols);
        let mut out = Vec::with_capacity(rows * cols);
        for r in input.data.chunks_exact(cols) {
            for c in 0..cols {
                let xh = (r[c] - mean_s[c]) * inv_std[c];
                xhat.push(xh);
                out.push(u.bn.gamma[c] * xh + u.bn.beta[c]);
            }
        }
        let shape = input.shape.clone();
        Ok(self.push(
            Tensor { shape, data: out },
            Op::BatchNorm {
                x,
                unit,
                xhat,
                inv_std,
                batch_stats,
            },
        ))
    }

    fn decay_for(&self, unit: usize) -> Result<S> {
        Ok(match self.neuron.kind {
            NeuronKind::Plif => {
                let w = self.unit(unit)?.decay_logit;
                S::one() / (S::one() + (-w).exp())
            }
            _ => S::lit(self.neuron.initial_decay()),
        })
    }

    /// Multi-step neuron layer; rows must split into `timesteps` equal blocks.
    pub fn neuron(&mut self, x: NodeId, unit: usize) -> Result<NodeId> {
        let decay = self.decay_for(unit)?;
        let input = &self.nodes[x].value;
        let steps = self.timesteps;
        if input.len() % steps != 0 {
            return Err(Error::Shape(format!(
                "{} elements do not split into {steps} timesteps",
                input.len()
            )));
        }
        let block = input.len() / steps;
        let v_th = S::lit(self.neuron.v_th);
        let syn = S::lit(self.neuron.synaptic_decay());
        let pi = S::lit(PI);
        let smooth = self.neuron.spike_fn == SpikeFn::Smooth;
        let mut v = vec![S::zero(); block];
        let mut cur = vec![S::zero(); block];
        let mut h = Vec::with_capacity(input.len());
        let mut out = Vec::with_capacity(input.len());
        for t in 0..steps {
            let xs = &input.data[t * block..(t + 1) * block];
            for j in 0..block {
                cur[j] = syn * cur[j] + xs[j];
                let hj = decay * v[j] + cur[j];
                if !hj.is_finite() {
                    return Err(Error::Numeric(format!(
                        "{}: non-finite membrane potential at step {t}",
                        self.units[unit].name
                    )));
                }
                let s = if smooth {
                    surrogate_s(hj - v_th, pi)
                } else if hj >= v_th {
                    S::one()
                } else {
                    S::zero()
                };
                v[j] = hj - v_th * s;
                h.push(hj);
                out.push(s);
            }
        }
        let shape = input.shape.clone();
        Ok(self.push(Tensor { shape, data: out }, Op::Neuron { x, unit, h, decay }))
    }

    /// Linear, batch norm and neuron.
    pub fn spiking(&mut self, x: NodeId, unit: usize) -> Result<NodeId> {
        let y = self.linear(x, unit)?;
        let y = self.batchnorm(y, unit)?;
        self.neuron(y, unit)
    }

    /// Linear and batch norm without the neuron.
    pub fn preactivation(&mut self, x: NodeId, unit: usize) -> Result<NodeId> {
        let y = self.linear(x, unit)?;
        self.batchnorm(y, unit)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (&self.nodes[a].value, &self.nodes[b].value);
        if va.shape != vb.shape {
            return Err(Error::Shape(format!("add: {:?} vs {:?}", va.shape, vb.shape)));
        }
        let data = va.data.iter().zip(&vb.data).map(|(x, y)| *x + *y).collect();
        let shape = va.shape.clone();
        Ok(self.push(Tensor { shape, data }, Op::Add { a, b }))
    }

    pub fn concat(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (va, vb) = (&self.nodes[a].value, &self.nodes[b].value);
        if va.rows() != vb.rows() {
            return Err(Error::Shape(format!("concat: {} vs {} rows", va.rows(), vb.rows())));
        }
        let (ca, cb) = (va.cols(), vb.cols());
        let mut data = Vec::with_capacity(va.len() + vb.len());
        for r in 0..va.rows() {
            data.extend_from_slice(va.row(r));
            data.extend_from_slice(vb.row(r));
        }
        let rows = va.rows();
        Ok(self.push(Tensor::matrix(rows, ca + cb, data), Op::Concat { a, b }))
    }

    /// Max over consecutive blocks of `group` rows, per channel. Ties go to
    /// the first row.
    pub fn maxpool(&mut self, x: NodeId, group: usize) -> Result<NodeId> {
        let input = &self.nodes[x].value;
        let (rows, cols) = (input.rows(), input.cols());
        if group == 0 || rows % group != 0 {
            return Err(Error::Shape(format!("maxpool: {rows} rows not divisible by {group}")));
        }
        let out_rows = rows / group;
        let mut out = Vec::with_capacity(out_rows * cols);
        let mut argmax = Vec::with_capacity(out_rows * cols);
        for g in 0..out_rows {
            let base = g * group;
            out.extend_from_slice(input.row(base));
            argmax.extend(std::iter::repeat_n(base as u32, cols));
            let o = &mut out[g * cols..(g + 1) * cols];
            let a = &mut argmax[g * cols..(g + 1) * cols];
            for r in base + 1..base + group {
                for (c, &v) in input.row(r).iter().enumerate() {
                    if v > o[c] {
                        o[c] = v;
                        a[c] = r as u32;
                    }
                }
            }
        }
        Ok(self.push(
            Tensor::matrix(out_rows, cols, out),
            Op::MaxPool { x, argmax },
        ))
    }

    /// Averages disjoint blocks of `block` channels.
    pub fn vote(&mut self, x: NodeId, block: usize) -> Result<NodeId> {
        let input = &self.nodes[x].value;
        let (rows, cols) = (input.rows(), input.cols());
        if block == 0 || cols % block != 0 {
            return Err(Error::Shape(format!("vote: {cols} channels not divisible by {block}")));
        }
        let inv = S::one() / S::lit(block as f64);
        let data = input
            .data
            .chunks_exact(block)
            .map(|c| c.iter().copied().sum::<S>() * inv)
            .collect();
        Ok(self.push(Tensor::matrix(rows, cols / block, data), Op::Vote { x, block }))
    }

    /// Parameter gradients of `sum(grad * value(output))`.
    pub fn backward(&self, output: NodeId, grad: Vec<S>) -> Result<Gradients<S>> {
        Ok(self.backward_inner(output, grad, false)?.0)
    }

    /// Like [`backward`](Self::backward) but also returns the gradient
    /// reaching every node, leaves included.
    pub fn backward_with_nodes(
        &self,
        output: NodeId,
        grad: Vec<S>,
    ) -> Result<(Gradients<S>, Vec<Option<Vec<S>>>)> {
        self.backward_inner(output, grad, true)
    }

    fn backward_inner(
        &self,
        output: NodeId,
        grad: Vec<S>,
        leaf_grads: bool,
    ) -> Result<(Gradients<S>, Vec<Option<Vec<S>>>)> {
        if output >= self.nodes.len() {
            return Err(Error::Shape(format!("node {output} is not on the tape")));
        }
        if grad.len() != self.nodes[output].value.len() {
            return Err(Error::Shape(format!(
                "output gradient has {} elements, node has {}",
                grad.len(),
                self.nodes[output].value.len()
            )));
        }
        let mut params = Gradients::zeros_like(self.units);
        let mut grads: Vec<Option<Vec<S>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[output] = Some(grad);
        let needs = |id: NodeId| leaf_grads || !matches!(self.nodes[id].op, Op::Leaf);

        for id in (0..=output).rev() {
            let Some(gy) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            match &node.op {
                Op::Leaf => {
                    grads[id] = Some(gy);
                    continue;
                }
                Op::Linear { x, unit } => {
                    let u = &self.units[*unit];
                    let input = &self.nodes[*x].value;
                    let (rows, i, o) = (input.rows(), u.linear.in_dim, u.linear.out_dim);
                    let pg = &mut params.units[*unit];
                    // dW (o x i) += dY^T (o x rows) * X (rows x i)
                    S::gemm(o, rows, i, &gy, 1, o as isize, &input.data, i as isize, 1, S::one(), &mut pg.weight, i as isize, 1);
                    for r in gy.chunks_exact(o) {
                        pg.bias.iter_mut().zip(r).for_each(|(b, g)| *b += *g);
                    }
                    if needs(*x) {
                        let mut dx = vec![S::zero(); rows * i];
                        S::gemm(rows, o, i, &gy, o as isize, 1, &u.linear.weight, i as isize, 1, S::zero(), &mut dx, i as isize, 1);
                        add_into(&mut grads[*x], dx);
                    }
                }
                Op::BatchNorm { x, unit, xhat, inv_std, batch_stats } => {
                    let u = &self.units[*unit];
                    let cols = inv_std.len();
                    let rows = gy.len() / cols;
                    let pg = &mut params.units[*unit];
                    let mut sum_dxhat = vec![S::zero(); cols];
                    let mut sum_dxhat_xhat = vec![S::zero(); cols];
                    for (gr, xr) in gy.chunks_exact(cols).zip(xhat.chunks_exact(cols)) {
                        for c in 0..cols {
                            pg.gamma[c] += gr[c] * xr[c];
                            pg.beta[c] += gr[c];
                            let d = gr[c] * u.bn.gamma[c];
                            sum_dxhat[c] += d;
                            sum_dxhat_xhat[c] += d * xr[c];
                        }
                    }
                    if needs(*x) {
                        let mut dx = Vec::with_capacity(gy.len());
                        let n = S::lit(rows as f64);
                        for (gr, xr) in gy.chunks_exact(cols).zip(xhat.chunks_exact(cols)) {
                            for c in 0..cols {
                                let d = gr[c] * u.bn.gamma[c];
                                dx.push(if *batch_stats {
                                    inv_std[c] * (d - (sum_dxhat[c] + xr[c] * sum_dxhat_xhat[c]) / n)
                                } else {
                                    inv_std[c] * d
                                });
                            }
                        }
                        add_into(&mut grads[*x], dx);
                    }
                }
                Op::Neuron { x, unit, h, decay } => {
                    let steps = self.timesteps;
                    let block = h.len() / steps;
                    let v_th = S::lit(self.neuron.v_th);
                    let syn = S::lit(self.neuron.synaptic_decay());
                    let pi = S::lit(PI);
                    let s_out = &node.value.data;
                    let mut dx = vec![S::zero(); h.len()];
                    let mut dv = vec![S::zero(); block];
                    let mut di = vec![S::zero(); block];
                    let mut d_decay = S::zero();
                    for t in (0..steps).rev() {
                        let off = t * block;
                        for j in 0..block {
                            let k = off + j;
                            let sg = surrogate_grad_s(h[k] - v_th, pi);
                            let dh = gy[k] * sg + dv[j] * (S::one() - v_th * sg);
                            let dcur = dh + syn * di[j];
                            dx[k] = dcur;
                            di[j] = dcur;
                            dv[j] = dh * *decay;
                            if t > 0 {
                                let kp = k - block;
                                d_decay += dh * (h[kp] - v_th * s_out[kp]);
                            }
                        }
                    }
                    if self.neuron.kind == NeuronKind::Plif {
                        params.units[*unit].decay_logit += d_decay * *decay * (S::one() - *decay);
                    }
                    if needs(*x) {
                        add_into(&mut grads[*x], dx);
                    }
                }
                Op::Add { a, b } => {
                    if needs(*b) {
                        add_into(&mut grads[*b], gy.clone());
                    }
                    if needs(*a) {
                        add_into(&mut grads[*a], gy);
                    }
                }
                Op::Concat { a, b } => {
                    let ca = self.nodes[*a].value.cols();
                    let cb = self.nodes[*b].value.cols();
                    let mut ga = Vec::with_capacity(gy.len() / (ca + cb) * ca);
                    let mut gb = Vec::with_capacity(gy.len() / (ca + cb) * cb);
                    for r in gy.chunks_exact(ca + cb) {
                        ga.extend_from_slice(&r[..ca]);
                        gb.extend_from_slice(&r[ca..]);
                    }
                    if needs(*a) {
                        add_into(&mut grads[*a], ga);
                    }
                    if needs(*b) {
                        add_into(&mut grads[*b], gb);
                    }
                }
                Op::MaxPool { x, argmax } => {
                    if needs(*x) {
                        let input = &self.nodes[*x].value;
                        let cols = input.cols();
                        let mut dx = vec![S::zero(); input.len()];
                        for (k, (&r, g)) in argmax.iter().zip(&gy).enumerate() {
                            dx[r as usize * cols + k % cols] += *g;
                        }
                        add_into(&mut grads[*x], dx);
                    }
                }
                Op::Vote { x, block } => {
                    if needs(*x) {
                        let inv = S::one() / S::lit(*block as f64);
                        let dx = gy
                            .iter()
                            .flat_map(|&g| std::iter::repeat_n(g * inv, *block))
                            .collect();
                        add_into(&mut grads[*x], dx);
                    }
                }
            }
        }
        Ok((params, grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(in_dim: usize, out_dim: usize, seed: u64) -> SpikingUnit<f64> {
        SpikingUnit::new(format!("u{seed}"), in_dim, out_dim, 0.0, seed)
    }

    #[test]
    fn pointwise_matches_loops() {
        let units = vec![unit(5, 3, 1)];
        let mut g = Graph::new(&units, NeuronConfig::default(), Mode::Train, 1);
        let x: Vec<f64> = (0..4 * 3 * 5).map(|v| ((v * 7) % 11) as f64 / 10.0).collect();
        let xid = g.leaf(Tensor::from_vec(&[4, 3, 5], x.clone()).unwrap());
        let y = g.linear(xid, 0).unwrap();
        let out = g.value(y);
        let l = &units[0].linear;
        for r in 0..12 {
            for o in 0..3 {
                let want = l.bias[o] + (0..5).map(|i| l.weight[o * 5 + i] * x[r * 5 + i]).sum::<f64>();
                assert!((out.data[r * 3 + o] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_pointwise() {
        let mut u = unit(3, 3, 0);
        u.linear.weight = vec![1., 0., 0., 0., 1., 0., 0., 0., 1.];
        u.linear.bias = vec![0.; 3];
        let units = vec![u];
        let mut g = Graph::new(&units, NeuronConfig::default(), Mode::Train, 1);
        let x = Tensor::matrix(2, 3, vec![0.1, 0.2, 0.3, 1.0, 0.0, 2.0]);
        let id = g.leaf(x.clone());
        let y = g.linear(id, 0).unwrap();
        assert_eq!(g.value(y).data, x.data);
    }

    #[test]
    fn batchnorm_two_pass_reference() {
        let units = vec![unit(2, 2, 0)];
        let mut g = Graph::new(&units, NeuronConfig::default(), Mode::Train, 1);
        let data: Vec<f64> = (0..40).map(|v| ((v * 37) % 17) as f64 * 0.3 - 1.0).collect();
        let x = g.leaf(Tensor::matrix(20, 2, data.clone()));
        let y = g.batchnorm(x, 0).unwrap();
        let out = &g.value(y).data;
        for c in 0..2 {
            let col: Vec<f64> = (0..20).map(|r| data[r * 2 + c]).collect();
            let mean = col.iter().sum::<f64>() / 20.0;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 20.0;
            for r in 0..20 {
                let want = (col[r] - mean) / (var + BN_EPS).sqrt();
                assert!((out[r * 2 + c] - want).abs() < 1e-12);
            }
            let o: Vec<f64> = (0..20).map(|r| out[r * 2 + c]).collect();
            let om = o.iter().sum::<f64>() / 20.0;
            let ov = o.iter().map(|v| (v - om).powi(2)).sum::<f64>() / 20.0;
            assert!(om.abs() < 1e-6 && (ov - 1.0).abs() < 1e-4);
        }
        let upd = &g.running_updates()[0];
        assert_eq!(upd.unit, 0);
        assert_eq!(upd.mean.len(), 2);
    }

    #[test]
    fn batchnorm_needs_two_rows() {
        let units = vec![unit(2, 2, 0)];
        let mut g = Graph::new(&units, NeuronConfig::default(), Mode::Train, 1);
        let x = g.leaf(Tensor::matrix(1, 2, vec![1.0, 2.0]));
        assert!(g.batchnorm(x, 0).is_err());
    }

    #[test]
    fn neuron_layer_matches_scalar_reference() {
        use crate::snn::neuron::{neuron_step, NeuronState};
        let cfg = NeuronConfig {
            kind: NeuronKind::Lif,
            tau_syn: Some(3.0),
            ..NeuronConfig::default()
        };
        let units = vec![unit(1, 1, 0)];
        let steps = 6;
        let inputs: Vec<f64> = (0..steps * 4).map(|v| ((v * 5) % 9) as f64 * 0.2).collect();
        let mut g = Graph::new(&units, cfg, Mode::Train, steps);
        let x = g.leaf(Tensor::matrix(steps * 4, 1, inputs.clone()));
        let s = g.neuron(x, 0).unwrap();
        let decay = cfg.initial_decay();
        for j in 0..4 {
            let mut st = NeuronState::default();
            for t in 0..steps {
                let (spike, next) = neuron_step(&cfg, decay, st, inputs[t * 4 + j]).unwrap();
                assert_eq!(g.value(s).data[t * 4 + j], spike, "t={t} j={j}");
                st = next;
            }
        }
    }

    #[test]
    fn maxpool_vote_and_concat() {
        let units: Vec<SpikingUnit<f64>> = Vec::new();
        let mut g = Graph::new(&units, NeuronConfig::default(), Mode::Train, 1);
        let x = g.leaf(Tensor::matrix(4, 2, vec![0., 1., 1., 1., 2., 0., 0., 0.]));
        let p = g.maxpool(x, 2).unwrap();
        assert_eq!(g.value(p).data, vec![1., 1., 2., 0.]);
        let c = g.concat(p, p).unwrap();
        assert_eq!(g.value(c).cols(), 4);
        let v = g.vote(c, 2).unwrap();
        assert_eq!(g.value(v).data, vec![1., 1., 1., 1.]);
        let (_, grads) = g.backward_with_nodes(v, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        // Row 0 wins channel 1 on the tie; row 1 wins channel 0.
        assert_eq!(grads[x].as_ref().unwrap(), &vec![0., 1.5, 1.5, 0., 3.5, 3.5, 0., 0.]);
    }

    #[test]
    fn add_passes_gradient_unchanged() {
        let units: Vec<SpikingUnit<f64>> = Vec::new();
        let mut g = Graph::new(&units, NeuronConfig::default(), Mode::Train, 1);
        let a = g.leaf(Tensor::matrix(1, 3, vec![1., 0., 1.]));
        let b = g.leaf(Tensor::matrix(1, 3, vec![0., 0., 1.]));
        let s = g.add(a, b).unwrap();
        assert_eq!(g.value(s).data, vec![1., 0., 2.]);
        let up = vec![0.3, -1.7, 2.5];
        let (_, grads) = g.backward_with_nodes(s, up.clone()).unwrap();
        assert_eq!(grads[a].as_ref().unwrap(), &up);
        assert_eq!(grads[b].as_ref().unwrap(), &up);
    }
}
