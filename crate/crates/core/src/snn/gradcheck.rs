//! Finite-difference checks of the tape's gradients.
//!
//! Spikes from a Heaviside neuron are piecewise constant in the parameters,
//! so only the part of the graph downstream of the last neuron layer (the
//! readout) has a finite-difference derivative. That path is checked
//! directly. Everything else is checked with [`SpikeFn::Smooth`], where the
//! forward pass uses the surrogate itself and the backward pass is exact.

use rand::Rng;
use serde::Serialize;

use super::config::{NetworkConfig, ResidualMode};
use super::network::{batch_mse, Network};
use super::neuron::{surrogate, surrogate_grad, NeuronConfig, NeuronKind, SpikeFn};
use super::params::{Gradients, SpikingUnit};
use super::tape::{Graph, Mode};
use super::tensor::Tensor;
use crate::error::Result;
use crate::pointcloud::{group_window, GroupedInput, GroupingConfig};
use crate::rng::{derive, seeded};

const STEP: f64 = 1e-5;
const MIN_STEP: f64 = 1e-8;
/// Denominator floor of the relative error, so that gradients that are
/// zero up to rounding do not divide by zero.
const REL_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

#[derive(Debug, Clone, Serialize)]
pub struct GradcheckReport {
    pub surrogate_max_abs_error: f64,
    pub linear_path_max_rel_error: f64,
    pub smooth_toy_max_rel_error: f64,
    pub smooth_network_max_rel_error: f64,
    pub plif_decay_grad: f64,
    pub plif_sign_agrees: bool,
    pub checked_parameters: usize,
}

impl GradcheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.linear_path_max_rel_error
            .max(self.smooth_toy_max_rel_error)
            .max(self.smooth_network_max_rel_error)
    }

    pub fn passed(&self) -> bool {
        self.surrogate_max_abs_error < 1e-6
            && self.max_rel_error() < 1e-4
            && self.plif_decay_grad != 0.0
            && self.plif_sign_agrees
    }
}

/// Largest gap between the surrogate derivative and a central difference
/// of the surrogate over `count` random points in `[-3, 3]`.
pub fn surrogate_check(count: usize, seed: u64) -> f64 {
    let mut rng = seeded(seed);
    (0..count)
        .map(|_| {
            let x: f64 = rng.random_range(-3.0..3.0);
            let fd = (surrogate(x + STEP) - surrogate(x - STEP)) / (2.0 * STEP);
            (fd - surrogate_grad(x)).abs()
        })
        .fold(0.0, f64::max)
}

/// The two-layer toy problem: `timesteps * batch` rows of binary inputs,
/// a spiking hidden layer and a linear readout.
struct Toy {
    units: Vec<SpikingUnit<f64>>,
    input: Tensor<f64>,
    labels: Vec<usize>,
    timesteps: usize,
    neuron: NeuronConfig,
}

impl Toy {
    fn new(seed: u64, spike_fn: SpikeFn) -> Self {
        let (timesteps, batch, in_dim, hidden, out) = (4, 6, 5, 8, 3);
        let neuron = NeuronConfig {
            kind: NeuronKind::Plif,
            spike_fn,
            ..NeuronConfig::default()
        };
        let mut units = vec![
            SpikingUnit::new("hidden", in_dim, hidden, neuron.initial_decay_logit(), derive(seed, &[0])),
            SpikingUnit::new("readout", hidden, out, 0.0, derive(seed, &[1])),
        ];
        // Spread the hidden preactivations so some neurons cross threshold.
        units[0].bn.gamma.iter_mut().for_each(|g| *g = 1.5);
        units[0].bn.beta.iter_mut().for_each(|b| *b = 0.4);
        let mut rng = seeded(derive(seed, &[2]));
        let data = (0..timesteps * batch * in_dim)
            .map(|_| if rng.random_bool(0.4) { 1.0 } else { 0.0 })
            .collect();
        let labels = (0..batch).map(|b| b % out).collect();
        Toy {
            units,
            input: Tensor::matrix(timesteps * batch, in_dim, data),
            labels,
            timesteps,
            neuron,
        }
    }

    fn loss_and_grads(&self, units: &[SpikingUnit<f64>]) -> Result<(f64, Gradients<f64>)> {
        let mut g = Graph::new(units, self.neuron, Mode::Train, self.timesteps);
        let x = g.leaf(self.input.clone());
        let h = g.spiking(x, 0)?;
        let y = g.linear(h, 1)?;
        let (loss, dy) = batch_mse(g.value(y), &self.labels, self.timesteps)?;
        Ok((loss, g.backward(y, dy)?))
    }

    fn loss(&self, units: &[SpikingUnit<f64>]) -> Result<f64> {
        Ok(self.loss_and_grads(units)?.0)
    }
}

fn perturbed(units: &[SpikingUnit<f64>], unit: usize, slot: usize, idx: usize, delta: f64) -> Vec<SpikingUnit<f64>> {
    let mut u = units.to_vec();
    u[unit].trainable_mut()[slot][idx] += delta;
    u
}

/// Central difference of `f` in one parameter.
///
/// Max pooling makes the loss piecewise smooth. When the left and right
/// one-sided differences disagree, the step straddles a switch of the
/// pooling winner, so the step is shrunk until they agree.
fn central_difference(
    f: &dyn Fn(&[SpikingUnit<f64>]) -> Result<f64>,
    units: &[SpikingUnit<f64>],
    unit: usize,
    slot: usize,
    idx: usize,
) -> Result<f64> {
    let f0 = f(units)?;
    let mut h = STEP;
    loop {
        let right = (f(&perturbed(units, unit, slot, idx, h))? - f0) / h;
        let left = (f0 - f(&perturbed(units, unit, slot, idx, -h))?) / h;
        let smooth = (right - left).abs() <= 1e-3 * right.abs().max(left.abs()).max(REL_FLOOR);
        if smooth || h <= MIN_STEP {
            return Ok((right + left) / 2.0);
        }
        h /= 10.0;
    }
}

/// Compares the analytic gradient against central differences for the
/// chosen `(unit, slot)` tensors. Returns the largest relative error and
/// the number of entries checked. At most `per_tensor` entries are taken
/// from each tensor.
fn compare(
    f: &dyn Fn(&[SpikingUnit<f64>]) -> Result<f64>,
    units: &[SpikingUnit<f64>],
    grads: &Gradients<f64>,
    targets: &[(usize, usize)],
    per_tensor: usize,
) -> Result<(f64, usize)> {
    let mut worst = 0.0f64;
    let mut count = 0;
    for &(unit, slot) in targets {
        let analytic = grads.units[unit].slices()[slot];
        let stride = (analytic.len() / per_tensor).max(1);
        for idx in (0..analytic.len()).step_by(stride).take(per_tensor) {
            let numeric = central_difference(f, units, unit, slot, idx)?;
            worst = worst.max(relative_error(analytic[idx], numeric));
            count += 1;
        }
    }
    Ok((worst, count))
}

/// Readout weight and bias gradients of the Heaviside toy net against
/// finite differences. The hidden spikes do not depend on the readout, so
/// they stay frozen under the perturbation.
pub fn linear_path_check(seed: u64) -> Result<(f64, usize)> {
    let toy = Toy::new(seed, SpikeFn::Heaviside);
    let (_, grads) = toy.loss_and_grads(&toy.units)?;
    compare(&|u| toy.loss(u), &toy.units, &grads, &[(1, 0), (1, 1)], usize::MAX)
}

/// Every toy parameter, smooth spike function.
pub fn smooth_toy_check(seed: u64) -> Result<(f64, usize)> {
    let toy = Toy::new(seed, SpikeFn::Smooth);
    let (_, grads) = toy.loss_and_grads(&toy.units)?;
    let targets: Vec<(usize, usize)> = (0..2).flat_map(|u| (0..5).map(move |s| (u, s))).collect();
    compare(&|u| toy.loss(u), &toy.units, &grads, &targets, usize::MAX)
}

/// The PLIF decay gradient of the Heaviside toy net, and whether its sign
/// matches a finite difference taken with the smooth spike function.
pub fn plif_decay_check(seed: u64) -> Result<(f64, bool)> {
    let hard = Toy::new(seed, SpikeFn::Heaviside);
    let (_, g) = hard.loss_and_grads(&hard.units)?;
    let grad = g.units[0].decay_logit;
    let smooth = Toy::new(seed, SpikeFn::Smooth);
    let (_, gs) = smooth.loss_and_grads(&smooth.units)?;
    let fd = central_difference(&|u| smooth.loss(u), &smooth.units, 0, 4, 0)?;
    Ok((grad, gs.units[0].decay_logit.signum() == fd.signum() && fd != 0.0))
}

/// A tiny full network with the smooth spike function.
pub fn network_config() -> NetworkConfig {
    let mut cfg = NetworkConfig {
        classes: 2,
        timesteps: 3,
        residual: ResidualMode::Identity,
        ..NetworkConfig::default()
    };
    cfg.grouping = GroupingConfig {
        n: 16,
        m: 4,
        k: 3,
        ..GroupingConfig::default()
    };
    cfg.neuron.spike_fn = SpikeFn::Smooth;
    cfg
}

fn network_samples(cfg: &NetworkConfig, seed: u64) -> Result<Vec<GroupedInput>> {
    let mut rng = seeded(seed);
    (0..3)
        .map(|i| {
            let points = (0..40)
                .map(|_| [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()])
                .collect();
            let sample = crate::event_io::PointSample { points };
            group_window(&sample, &cfg.grouping, derive(seed, &[i]))
        })
        .collect()
}

/// Smooth-mode check of a sample of parameters from every unit of a small
/// full network (training-mode batch norm).
pub fn network_check(seed: u64, per_tensor: usize) -> Result<(f64, usize)> {
    let cfg = network_config();
    let net: Network<f64> = Network::new(cfg, seed)?;
    let samples = network_samples(&cfg, derive(seed, &[7]))?;
    let batch: Vec<&GroupedInput> = samples.iter().collect();
    let seeds: Vec<u64> = (0..batch.len() as u64).map(|i| derive(seed, &[8, i])).collect();
    let labels: Vec<usize> = (0..batch.len()).map(|i| i % cfg.classes).collect();
    let run = |units: &[SpikingUnit<f64>]| -> Result<(f64, Gradients<f64>)> {
        let probe = Network {
            config: cfg,
            units: units.to_vec(),
        };
        let mut g = Graph::new(&probe.units, cfg.neuron, Mode::Train, cfg.timesteps);
        let out = probe.build(&mut g, &batch, &seeds)?;
        let (loss, dy) = batch_mse(g.value(out), &labels, cfg.timesteps)?;
        let grads = g.backward(out, dy)?;
        Ok((loss, grads))
    };
    let (_, grads) = run(&net.units)?;
    let targets: Vec<(usize, usize)> = (0..net.units.len()).flat_map(|u| (0..5).map(move |s| (u, s))).collect();
    compare(&|u| Ok(run(u)?.0), &net.units, &grads, &targets, per_tensor)
}

pub fn run(seed: u64) -> Result<GradcheckReport> {
    let (lin, n1) = linear_path_check(seed)?;
    let (smooth, n2) = smooth_toy_check(seed)?;
    let (net, n3) = network_check(seed, 3)?;
    let (plif_decay_grad, plif_sign_agrees) = plif_decay_check(seed)?;
    Ok(GradcheckReport {
        surrogate_max_abs_error: surrogate_check(100, seed),
        linear_path_max_rel_error: lin,
        smooth_toy_max_rel_error: smooth,
        smooth_network_max_rel_error: net,
        plif_decay_grad,
        plif_sign_agrees,
        checked_parameters: n1 + n2 + n3,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_passes() {
        let r = run(3).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
