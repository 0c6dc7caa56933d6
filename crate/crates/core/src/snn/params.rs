use rand::Rng;

use super::real::Real;
use crate::rng::seeded;

pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

/// Pointwise (kernel size 1) convolution or fully connected layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams<S> {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `out_dim x in_dim`, row-major.
    pub weight: Vec<S>,
    pub bias: Vec<S>,
}

impl<S: Real> LinearParams<S> {
    /// Uniform in `+-1/sqrt(in_dim)` for weights and bias.
    pub fn init(in_dim: usize, out_dim: usize, seed: u64) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        let mut rng = seeded(seed);
        let mut draw = || S::lit(rng.random_range(-bound..bound));
        let weight = (0..in_dim * out_dim).map(|_| draw()).collect();
        let bias = (0..out_dim).map(|_| draw()).collect();
        LinearParams {
            in_dim,
            out_dim,
            weight,
            bias,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchNormParams<S> {
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
    pub running_mean: Vec<S>,
    pub running_var: Vec<S>,
}

impl<S: Real> BatchNormParams<S> {
    pub fn init(dim: usize) -> Self {
        BatchNormParams {
            gamma: vec![S::one(); dim],
            beta: vec![S::zero(); dim],
            running_mean: vec![S::zero(); dim],
            running_var: vec![S::one(); dim],
        }
    }
}

/// Conv/FC, batch norm and a spiking neuron layer: the network's basic unit.
#[derive(Debug, Clone, PartialEq)]
pub struct SpikingUnit<S> {
    pub name: String,
    pub linear: LinearParams<S>,
    pub bn: BatchNormParams<S>,
    /// Learnable decay logit (used by PLIF neurons only).
    pub decay_logit: S,
}

impl<S: Real> SpikingUnit<S> {
    pub fn new(name: impl Into<String>, in_dim: usize, out_dim: usize, decay_logit: f64, seed: u64) -> Self {
        SpikingUnit {
            name: name.into(),
            linear: LinearParams::init(in_dim, out_dim, seed),
            bn: BatchNormParams::init(out_dim),
            decay_logit: S::lit(decay_logit),
        }
    }

    pub fn param_count(&self) -> usize {
        self.linear.weight.len() + self.linear.bias.len() + 2 * self.bn.gamma.len() + 1
    }

    /// Trainable tensors in a fixed order (matches [`UnitGrad::slices`]).
    pub fn trainable_mut(&mut self) -> [&mut [S]; 5] {
        [
            &mut self.linear.weight,
            &mut self.linear.bias,
            &mut self.bn.gamma,
            &mut self.bn.beta,
            std::slice::from_mut(&mut self.decay_logit),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitGrad<S> {
    pub weight: Vec<S>,
    pub bias: Vec<S>,
    pub gamma: Vec<S>,
    pub beta: Vec<S>,
    pub decay_logit: S,
}

impl<S: Real> UnitGrad<S> {
    pub fn zeros_like(u: &SpikingUnit<S>) -> Self {
        UnitGrad {
            weight: vec![S::zero(); u.linear.weight.len()],
            bias: vec![S::zero(); u.linear.bias.len()],
            gamma: vec![S::zero(); u.bn.gamma.len()],
            beta: vec![S::zero(); u.bn.beta.len()],
            decay_logit: S::zero(),
        }
    }

    pub fn slices(&self) -> [&[S]; 5] {
        [
            &self.weight,
            &self.bias,
            &self.gamma,
            &self.beta,
            std::slice::from_ref(&self.decay_logit),
        ]
    }
}

/// Parameter gradients, one entry per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<S> {
    pub units: Vec<UnitGrad<S>>,
}

impl<S: Real> Gradients<S> {
    pub fn zeros_like(units: &[SpikingUnit<S>]) -> Self {
        Gradients {
            units: units.iter().map(UnitGrad::zeros_like).collect(),
        }
    }

    pub fn global_norm(&self) -> f64 {
        self.units
            .iter()
            .flat_map(|u| u.slices())
            .flat_map(|s| s.iter())
            .map(|v| v.f64() * v.f64())
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, k: S) {
        for u in &mut self.units {
            for v in u
                .weight
                .iter_mut()
                .chain(&mut u.bias)
                .chain(&mut u.gamma)
                .chain(&mut u.beta)
                .chain(std::iter::once(&mut u.decay_logit))
            {
                *v *= k;
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.units
            .iter()
            .flat_map(|u| u.slices())
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}
