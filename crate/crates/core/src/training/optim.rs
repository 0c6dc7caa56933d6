use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::snn::{Gradients, Real, SpikingUnit};

/// Learning rate at epoch `epoch` of a cosine decay from `lr` to zero over
/// `max_epochs`.
pub fn cosine_lr(lr: f64, epoch: usize, max_epochs: usize) -> f64 {
    if max_epochs == 0 {
        return lr;
    }
    lr * (1.0 + (PI * epoch as f64 / max_epochs as f64).cos()) / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction. Moments are kept in `f64`.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new<S: Real>(cfg: AdamConfig, units: &[SpikingUnit<S>]) -> Self {
        let sizes: Vec<usize> = units
            .iter()
            .flat_map(|u| {
                [
                    u.linear.weight.len(),
                    u.linear.bias.len(),
                    u.bn.gamma.len(),
                    u.bn.beta.len(),
                    1,
                ]
            })
            .collect();
        Adam {
            cfg,
            step: 0,
            m: sizes.iter().map(|&n| vec![0.0; n]).collect(),
            v: sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn step<S: Real>(&mut self, units: &mut [SpikingUnit<S>], grads: &Gradients<S>, lr: f64) {
        self.step += 1;
        let AdamConfig { beta1, beta2, eps } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let mut slot = 0;
        for (unit, g) in units.iter_mut().zip(&grads.units) {
            for (param, grad) in unit.trainable_mut().into_iter().zip(g.slices()) {
                let (m, v) = (&mut self.m[slot], &mut self.v[slot]);
                for i in 0..param.len() {
                    let gi = grad[i].f64();
                    m[i] = beta1 * m[i] + (1.0 - beta1) * gi;
                    v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi;
                    let update = lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
                    param[i] = S::lit(param[i].f64() - update);
                }
                slot += 1;
            }
        }
    }
}
