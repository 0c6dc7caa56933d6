//! Spiking neuron dynamics and the arctan surrogate.
//!
//! Discrete update per step `n`, with `x[n]` the weighted input:
//!
//! ```text
//! I[n] = syn * I[n-1] + x[n]
//! H[n] = decay * V[n-1] + I[n]
//! S[n] = heaviside(H[n] - v_th)
//! V[n] = H[n] - v_th * S[n]          (soft reset by subtraction)
//! ```

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuronKind {
    /// Leaky, fixed decay `exp(-dt / tau_mem)`.
    Lif,
    /// Non-leaky integrate-and-fire.
    If,
    /// Leaky with a learnable decay `sigmoid(w)` per layer; `w` starts at
    /// `logit(1 - 1 / tau_mem)`.
    Plif,
}

impl FromStr for NeuronKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lif" => Ok(NeuronKind::Lif),
            "if" => Ok(NeuronKind::If),
            "plif" => Ok(NeuronKind::Plif),
            _ => Err(Error::config(format!("unknown neuron kind `{s}`"))),
        }
    }
}

/// Forward spike nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpikeFn {
    #[default]
    Heaviside,
    /// Emits the surrogate primitive `sigma(H - v_th)` itself. The network
    /// becomes smooth and its exact derivative equals the surrogate
    /// backward pass, which is what gradient checks compare against.
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeuronConfig {
    pub kind: NeuronKind,
    pub v_th: f64,
    pub tau_mem: f64,
    /// Synaptic current time constant; `None` disables current filtering.
    pub tau_syn: Option<f64>,
    pub delta_t: f64,
    #[serde(default)]
    pub spike_fn: SpikeFn,
}

impl Default for NeuronConfig {
    fn default() -> Self {
        NeuronConfig {
            kind: NeuronKind::Plif,
            v_th: 1.0,
            tau_mem: 2.0,
            tau_syn: None,
            delta_t: 1.0,
            spike_fn: SpikeFn::Heaviside,
        }
    }
}

impl NeuronConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_th > 0.0) {
            return Err(Error::key("net.v_th", "threshold must be positive"));
        }
        if !(self.delta_t > 0.0) {
            return Err(Error::key("net.delta_t", "time step must be positive"));
        }
        if self.kind == NeuronKind::Plif && !(self.tau_mem > 1.0) {
            return Err(Error::key("net.tau_mem", "PLIF needs tau_mem > 1"));
        }
        if self.kind == NeuronKind::Lif && !(self.tau_mem > 0.0) {
            return Err(Error::key("net.tau_mem", "tau_mem must be positive"));
        }
        if let Some(t) = self.tau_syn {
            if !(t > 0.0) {
                return Err(Error::key("net.tau_syn", "tau_syn must be positive"));
            }
        }
        Ok(())
    }

    /// Membrane decay for non-learnable kinds; the PLIF initial decay.
    pub fn initial_decay(&self) -> f64 {
        match self.kind {
            NeuronKind::Lif => (-self.delta_t / self.tau_mem).exp(),
            NeuronKind::If => 1.0,
            NeuronKind::Plif => 1.0 - 1.0 / self.tau_mem,
        }
    }

    /// Initial value of the learnable decay logit.
    pub fn initial_decay_logit(&self) -> f64 {
        let d = self.initial_decay();
        match self.kind {
            NeuronKind::Plif => (d / (1.0 - d)).ln(),
            _ => 0.0,
        }
    }

    pub fn synaptic_decay(&self) -> f64 {
        self.tau_syn.map_or(0.0, |t| (-self.delta_t / t).exp())
    }
}

/// `1` when `u_minus_vth >= 0`.
#[inline]
pub fn heaviside_spike(u_minus_vth: f64) -> f64 {
    if u_minus_vth >= 0.0 {
        1.0
    } else {
        0.0
    }
}

/// The smooth stand-in for the step: `atan(pi x) / pi + 1/2`.
#[inline]
pub fn surrogate(x: f64) -> f64 {
    (PI * x).atan() / PI + 0.5
}

/// Derivative of [`surrogate`]: `1 / (1 + (pi x)^2)`.
#[inline]
pub fn surrogate_grad(x: f64) -> f64 {
    let px = PI * x;
    1.0 / (1.0 + px * px)
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NeuronState {
    pub v: f64,
    pub i: f64,
}

/// One scalar update; the reference the layer kernels are checked against.
pub fn neuron_step(
    cfg: &NeuronConfig,
    decay: f64,
    state: NeuronState,
    input: f64,
) -> Result<(f64, NeuronState)> {
    if !state.v.is_finite() || !state.i.is_finite() || !input.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite neuron state (v = {}, i = {}, input = {input})",
            state.v, state.i
        )));
    }
    let i = cfg.synaptic_decay() * state.i + input;
    let h = decay * state.v + i;
    let s = match cfg.spike_fn {
        SpikeFn::Heaviside => heaviside_spike(h - cfg.v_th),
        SpikeFn::Smooth => surrogate(h - cfg.v_th),
    };
    Ok((s, NeuronState { v: h - cfg.v_th * s, i }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn heaviside_boundary() {
        assert_eq!(heaviside_spike(0.0), 1.0);
        assert_eq!(heaviside_spike(-0.3), 0.0);
        assert_eq!(heaviside_spike(2.7), 1.0);
    }

    #[test]
    fn surrogate_values() {
        assert_eq!(surrogate_grad(0.0), 1.0);
        assert!((surrogate_grad(1.0 / PI) - 0.5).abs() < 1e-15);
        let mut rng = crate::rng::seeded(0);
        for _ in 0..100 {
            let x: f64 = rng.random_range(-3.0..3.0);
            let h = 1e-5;
            let fd = (surrogate(x + h) - surrogate(x - h)) / (2.0 * h);
            assert!((fd - surrogate_grad(x)).abs() < 1e-6);
            let g = surrogate_grad(x);
            assert!(g > 0.0 && g <= 1.0);
        }
    }

    fn run(cfg: &NeuronConfig, decay: f64, input: f64, steps: usize) -> (Vec<f64>, Vec<f64>) {
        let mut st = NeuronState::default();
        let mut spikes = Vec::new();
        let mut pre = Vec::new();
        for _ in 0..steps {
            pre.push(decay * st.v + input);
            let (s, next) = neuron_step(cfg, decay, st, input).unwrap();
            spikes.push(s);
            st = next;
        }
        (spikes, pre)
    }

    #[test]
    fn silent_without_input() {
        let cfg = NeuronConfig::default();
        assert!(run(&cfg, 0.5, 0.0, 20).0.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn integrate_and_fire_every_second_step() {
        let cfg = NeuronConfig {
            kind: NeuronKind::If,
            ..NeuronConfig::default()
        };
        let (spikes, _) = run(&cfg, cfg.initial_decay(), 0.5, 8);
        assert_eq!(spikes, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn leaky_sequence() {
        let cfg = NeuronConfig::default();
        let (spikes, pre) = run(&cfg, 0.5, 0.6, 4);
        assert!((pre[0] - 0.6).abs() < 1e-12);
        assert!((pre[1] - 0.9).abs() < 1e-12);
        assert!((pre[2] - 1.05).abs() < 1e-12);
        assert_eq!(&spikes[..3], &[0.0, 0.0, 1.0]);
        // After the subtraction reset V = 0.05, so H = 0.625.
        assert!((pre[3] - 0.625).abs() < 1e-12);
    }

    #[test]
    fn plif_initial_decay_is_half() {
        let cfg = NeuronConfig::default();
        assert!((sigmoid(cfg.initial_decay_logit()) - 0.5).abs() < 1e-15);
        let bad = NeuronConfig {
            tau_mem: 1.0,
            ..cfg
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn non_finite_state_rejected() {
        let cfg = NeuronConfig::default();
        let st = NeuronState { v: f64::NAN, i: 0.0 };
        assert!(matches!(neuron_step(&cfg, 0.5, st, 0.1), Err(Error::Numeric(_))));
    }
}
