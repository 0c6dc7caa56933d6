use super::config::{NetworkConfig, ResidualMode, Structure};
use super::params::{SpikingUnit, BN_MOMENTUM};
use super::real::Real;
use super::tape::{Graph, Mode, NodeId, RunningUpdate};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::pointcloud::{Branches, Fusion, GroupedInput, NegativeHandling};
use crate::rng::derive;
use crate::spike_coding::fires;

/// Neurons per class in the voting layer.
pub const VOTE_BLOCK: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Network<S: Real = f32> {
    pub config: NetworkConfig,
    pub units: Vec<SpikingUnit<S>>,
}

/// Class scores of a batch, laid out `[t][b][class]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scores {
    pub timesteps: usize,
    pub batch: usize,
    pub classes: usize,
    pub data: Vec<f64>,
}

impl Scores {
    pub fn at(&self, t: usize, b: usize, c: usize) -> f64 {
        self.data[(t * self.batch + b) * self.classes + c]
    }

    /// `T x classes` scores of sample `b`.
    pub fn per_timestep(&self, b: usize) -> Vec<Vec<f64>> {
        (0..self.timesteps)
            .map(|t| (0..self.classes).map(|c| self.at(t, b, c)).collect())
            .collect()
    }

    /// Scores of sample `b` averaged over time.
    pub fn mean(&self, b: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.classes];
        for t in 0..self.timesteps {
            for (c, v) in m.iter_mut().enumerate() {
                *v += self.at(t, b, c);
            }
        }
        m.iter_mut().for_each(|v| *v /= self.timesteps as f64);
        m
    }

    pub fn prediction(&self, b: usize) -> usize {
        argmax(&self.mean(b))
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub scores: Scores,
    pub predictions: Vec<usize>,
    /// Fraction of non-zero inputs seen by each unit, in plan order.
    pub fire_rates: Vec<(String, f64)>,
}

/// Mean squared error between per-timestep scores (`T x classes`) and the
/// one-hot target.
pub fn mse_loss(scores_per_timestep: &[Vec<f64>], label: usize, classes: usize) -> Result<f64> {
    if label >= classes {
        return Err(Error::Shape(format!("label {label} out of range for {classes} classes")));
    }
    if scores_per_timestep.is_empty() {
        return Err(Error::Shape("no timesteps".into()));
    }
    let mut total = 0.0;
    for row in scores_per_timestep {
        if row.len() != classes {
            return Err(Error::Shape(format!("score row has {} entries, expected {classes}", row.len())));
        }
        for (c, &y) in row.iter().enumerate() {
            let target = if c == label { 1.0 } else { 0.0 };
            total += (y - target) * (y - target);
        }
    }
    Ok(total / (scores_per_timestep.len() * classes) as f64)
}

/// Batch MSE averaged over samples, and its gradient with respect to the
/// score tensor.
pub fn batch_mse<S: Real>(scores: &Tensor<S>, labels: &[usize], timesteps: usize) -> Result<(f64, Vec<S>)> {
    let batch = labels.len();
    let classes = scores.cols();
    if scores.rows() != timesteps * batch {
        return Err(Error::Shape(format!(
            "score tensor has {} rows, expected {timesteps} x {batch}",
            scores.rows()
        )));
    }
    let n = (timesteps * batch * classes) as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(scores.len());
    for (r, row) in scores.data.chunks_exact(classes).enumerate() {
        let label = labels[r % batch];
        if label >= classes {
            return Err(Error::Shape(format!("label {label} out of range for {classes} classes")));
        }
        for (c, &y) in row.iter().enumerate() {
            let diff = y.f64() - if c == label { 1.0 } else { 0.0 };
            loss += diff * diff;
            grad.push(S::lit(2.0 * diff / n));
        }
    }
    Ok((loss / n, grad))
}

fn encode_into<S: Real>(dst: &mut [S], values: &[f64], seed: u64, t: usize) {
    for (d, (o, &v)) in dst.iter_mut().zip(values).enumerate() {
        if fires(v, seed, t, d) {
            *o = S::one();
        }
    }
}

impl<S: Real> Network<S> {
    pub fn new(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let logit = config.neuron.initial_decay_logit();
        let units = config
            .plan()
            .into_iter()
            .enumerate()
            .map(|(i, u)| SpikingUnit::new(u.name, u.in_dim, u.out_dim, logit, derive(seed, &[i as u64])))
            .collect();
        Ok(Network { config, units })
    }

    /// Same parameters in another floating-point type.
    pub fn cast<T: Real>(&self) -> Network<T> {
        let conv = |v: &[S]| v.iter().map(|x| T::lit(x.f64())).collect::<Vec<T>>();
        Network {
            config: self.config,
            units: self
                .units
                .iter()
                .map(|u| SpikingUnit {
                    name: u.name.clone(),
                    linear: super::params::LinearParams {
                        in_dim: u.linear.in_dim,
                        out_dim: u.linear.out_dim,
                        weight: conv(&u.linear.weight),
                        bias: conv(&u.linear.bias),
                    },
                    bn: super::params::BatchNormParams {
                        gamma: conv(&u.bn.gamma),
                        beta: conv(&u.bn.beta),
                        running_mean: conv(&u.bn.running_mean),
                        running_var: conv(&u.bn.running_var),
                    },
                    decay_logit: T::lit(u.decay_logit.f64()),
                })
                .collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.units.iter().map(SpikingUnit::param_count).sum()
    }

    pub fn unit_index(&self, name: &str) -> Result<usize> {
        self.units
            .iter()
            .position(|u| u.name == name)
            .ok_or_else(|| Error::Shape(format!("network has no unit named {name}")))
    }

    fn check_sample(&self, s: &GroupedInput) -> Result<()> {
        let g = &self.config.grouping;
        match self.config.structure {
            Structure::Full | Structure::LocalOnly => {
                if s.channel1.len() != g.m * g.k || s.channel2.len() != g.m {
                    return Err(Error::Shape(format!(
                        "grouped input is {} groups x {} members, network expects {} x {}",
                        s.m(),
                        s.k(),
                        g.m,
                        g.k
                    )));
                }
            }
            Structure::GlobalOnly | Structure::PointNet => {
                if s.points.len() != g.n {
                    return Err(Error::Shape(format!(
                        "sample has {} points, network expects {}",
                        s.points.len(),
                        g.n
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rate-codes `per_sample` value blocks into a time-major leaf tensor.
    fn encode(&self, blocks: &[Vec<f64>], seeds: &[u64], cols: usize) -> Tensor<S> {
        let steps = self.config.timesteps;
        let width = blocks.first().map_or(0, Vec::len);
        let mut data = vec![S::zero(); steps * blocks.len() * width];
        for t in 0..steps {
            for (b, (vals, &seed)) in blocks.iter().zip(seeds).enumerate() {
                let off = (t * blocks.len() + b) * width;
                encode_into(&mut data[off..off + width], vals, seed, t);
            }
        }
        Tensor::matrix(data.len() / cols, cols, data)
    }

    fn residual(&self, g: &mut Graph<'_, S>, x: NodeId, inner: &[&str]) -> Result<NodeId> {
        let ids = inner
            .iter()
            .map(|n| self.unit_index(n))
            .collect::<Result<Vec<_>>>()?;
        let (last, body) = ids.split_last().expect("residual block has units");
        let mut h = x;
        for &u in body {
            h = g.spiking(h, u)?;
        }
        match self.config.residual {
            ResidualMode::Identity => {
                let s = g.spiking(h, *last)?;
                g.add(s, x)
            }
            ResidualMode::AnnStyle => {
                let p = g.preactivation(h, *last)?;
                let sum = g.add(p, x)?;
                g.neuron(sum, *last)
            }
            ResidualMode::Plain => g.spiking(h, *last),
        }
    }

    fn spiking(&self, g: &mut Graph<'_, S>, x: NodeId, name: &str) -> Result<NodeId> {
        let u = self.unit_index(name)?;
        g.spiking(x, u)
    }

    /// Records the whole network on `g` and returns the score node
    /// (`T * batch` rows of class scores). `seeds[b]` drives the spike
    /// encoding of sample `b`.
    pub fn build<'a>(&'a self, g: &mut Graph<'a, S>, batch: &[&GroupedInput], seeds: &[u64]) -> Result<NodeId> {
        if batch.is_empty() || batch.len() != seeds.len() {
            return Err(Error::Shape(format!(
                "batch of {} samples with {} seeds",
                batch.len(),
                seeds.len()
            )));
        }
        for s in batch {
            self.check_sample(s)?;
        }
        let cfg = &self.config;
        let gcfg = &cfg.grouping;
        let variant = gcfg.variant;
        let pooled = match cfg.structure {
            Structure::Full | Structure::LocalOnly => {
                let clamp = variant.negative_handling == NegativeHandling::Raw;
                let ch1: Vec<Vec<f64>> = batch
                    .iter()
                    .map(|s| {
                        s.channel1
                            .iter()
                            .flatten()
                            .map(|&v| if clamp { v.max(0.0) } else { v })
                            .collect()
                    })
                    .collect();
                let s1: Vec<u64> = seeds.iter().map(|&s| derive(s, &[1])).collect();
                let x1 = g.leaf(self.encode(&ch1, &s1, 6));
                let f1 = self.spiking(g, x1, "local.conv")?;
                let f1 = self.residual(g, f1, &["local.resfb.reduce", "local.resfb.expand"])?;
                let local = g.maxpool(f1, gcfg.k)?;
                let fused = if variant.branches == Branches::Double {
                    let ch2: Vec<Vec<f64>> = batch
                        .iter()
                        .map(|s| s.channel2.iter().flatten().map(|&v| v.max(0.0)).collect())
                        .collect();
                    let s2: Vec<u64> = seeds.iter().map(|&s| derive(s, &[2])).collect();
                    let x2 = g.leaf(self.encode(&ch2, &s2, 3));
                    let f2 = self.spiking(g, x2, "centroid.conv")?;
                    let f2 = self.residual(g, f2, &["centroid.resfb.reduce", "centroid.resfb.expand"])?;
                    match variant.fusion {
                        Fusion::Add => g.add(local, f2)?,
                        Fusion::Concat => g.concat(local, f2)?,
                    }
                } else {
                    local
                };
                if cfg.structure == Structure::LocalOnly {
                    g.maxpool(fused, gcfg.m)?
                } else {
                    self.global(g, fused, gcfg.m)?
                }
            }
            Structure::GlobalOnly | Structure::PointNet => {
                let pts: Vec<Vec<f64>> = batch
                    .iter()
                    .map(|s| s.points.iter().flatten().copied().collect())
                    .collect();
                let s0: Vec<u64> = seeds.iter().map(|&s| derive(s, &[3])).collect();
                let x = g.leaf(self.encode(&pts, &s0, 3));
                self.global(g, x, gcfg.n)?
            }
        };
        let h = self.spiking(g, pooled, "classifier.fc1")?;
        let out = self.spiking(g, h, "classifier.fc2")?;
        g.vote(out, VOTE_BLOCK)
    }

    fn global(&self, g: &mut Graph<'_, S>, x: NodeId, positions: usize) -> Result<NodeId> {
        let stages = self.config.global_dims().len();
        let mut h = x;
        for i in 0..stages {
            h = self.spiking(g, h, &format!("global.conv{i}"))?;
            if i + 1 < stages {
                h = self.residual(g, h, &[&format!("global.resf{i}")])?;
            }
        }
        g.maxpool(h, positions)
    }

    /// Runs a batch and collects scores, predictions and fire rates.
    pub fn forward_batch(&self, batch: &[&GroupedInput], seeds: &[u64], mode: Mode) -> Result<ForwardOutput> {
        let mut g = Graph::new(&self.units, self.config.neuron, mode, self.config.timesteps);
        let out = self.build(&mut g, batch, seeds)?;
        let t = g.value(out);
        let scores = Scores {
            timesteps: self.config.timesteps,
            batch: batch.len(),
            classes: t.cols(),
            data: t.data.iter().map(|v| v.f64()).collect(),
        };
        let predictions = (0..batch.len()).map(|b| scores.prediction(b)).collect();
        let fire_rates = g
            .input_rates()
            .iter()
            .map(|&(u, r)| (self.units[u].name.clone(), r))
            .collect();
        Ok(ForwardOutput {
            scores,
            predictions,
            fire_rates,
        })
    }

    /// Inference on one sample.
    pub fn forward(&self, sample: &GroupedInput, seed: u64) -> Result<ForwardOutput> {
        self.forward_batch(&[sample], &[seed], Mode::Eval)
    }

    /// Folds training-mode batch statistics into the running estimates.
    pub fn apply_running(&mut self, updates: &[RunningUpdate]) {
        let m = BN_MOMENTUM;
        for up in updates {
            let bn = &mut self.units[up.unit].bn;
            for (r, &v) in bn.running_mean.iter_mut().zip(&up.mean) {
                *r = S::lit((1.0 - m) * r.f64() + m * v);
            }
            for (r, &v) in bn.running_var.iter_mut().zip(&up.var) {
                *r = S::lit((1.0 - m) * r.f64() + m * v);
            }
        }
    }
}
