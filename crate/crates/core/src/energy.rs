//! Operation counts and an energy model for spiking and conventional
//! inference.
//!
//! A spiking layer performs `firerate * T * FLOPs` synaptic operations,
//! each an accumulate priced at `e_ac`. A conventional network performs its
//! FLOPs once, each a multiply-accumulate priced at `e_mac`. Static energy
//! charges every stored parameter bit at `spp_bit` watts for the duration
//! of a sample.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pointcloud::GroupedInput;
use crate::rng::derive;
use crate::snn::{Network, NetworkConfig, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyConstants {
    /// Joules per multiply-accumulate.
    pub e_mac: f64,
    /// Joules per accumulate.
    pub e_ac: f64,
    /// Static power per stored bit, in watts.
    pub spp_bit: f64,
    pub bits_per_param: f64,
    /// Duration of one sample in seconds.
    pub l_sample_s: f64,
}

impl Default for EnergyConstants {
    fn default() -> Self {
        EnergyConstants {
            e_mac: 4.6e-12,
            e_ac: 0.9e-12,
            spp_bit: 12.991e-12,
            bits_per_param: 32.0,
            l_sample_s: 1.0,
        }
    }
}

impl EnergyConstants {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("energy.e_mac", self.e_mac),
            ("energy.e_ac", self.e_ac),
            ("energy.spp_bit", self.spp_bit),
            ("energy.bits_per_param", self.bits_per_param),
            ("energy.l_sample_s", self.l_sample_s),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::key(key, format!("must be a non-negative number, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Snn,
    Ann,
}

/// MACs of a pointwise layer mapping `cin` to `cout` channels at
/// `positions` positions.
pub fn pointwise_flops(positions: usize, cin: usize, cout: usize) -> u64 {
    (positions as u64) * (cin as u64) * (cout as u64)
}

/// Per-layer MACs of one sample for one timestep, in execution order.
/// Batch norm and pooling are not counted.
pub fn count_flops(cfg: &NetworkConfig) -> Vec<(String, u64)> {
    cfg.plan()
        .into_iter()
        .map(|u| {
            let f = pointwise_flops(u.positions, u.in_dim, u.out_dim);
            (u.name, f)
        })
        .collect()
}

/// Mean non-zero fraction of every layer's input over `samples`, each
/// encoded with a seed derived from `seed` and its index.
pub fn measure_firerate<S: Real>(net: &Network<S>, samples: &[GroupedInput], seed: u64) -> Result<Vec<(String, f64)>> {
    if samples.is_empty() {
        return Err(Error::Degenerate("fire-rate measurement needs at least one sample".into()));
    }
    let mut totals: Vec<(String, f64)> = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        let out = net.forward(s, derive(seed, &[i as u64]))?;
        if totals.is_empty() {
            totals = out.fire_rates.iter().map(|(n, _)| (n.clone(), 0.0)).collect();
        }
        for (acc, (_, r)) in totals.iter_mut().zip(&out.fire_rates) {
            acc.1 += r;
        }
    }
    let n = samples.len() as f64;
    totals.iter_mut().for_each(|t| t.1 /= n);
    Ok(totals)
}

/// Energy of `ops` operations: SOPs priced at `e_ac` or FLOPs at `e_mac`.
pub fn op_energy(ops: f64, regime: Regime, c: &EnergyConstants) -> f64 {
    match regime {
        Regime::Snn => ops * c.e_ac,
        Regime::Ann => ops * c.e_mac,
    }
}

/// `params * bits_per_param * spp_bit * l_sample_s`.
pub fn static_energy(params: f64, bits_per_param: f64, spp_bit: f64, l_sample_s: f64) -> Result<f64> {
    for (name, v) in [
        ("params", params),
        ("bits_per_param", bits_per_param),
        ("spp_bit", spp_bit),
        ("l_sample_s", l_sample_s),
    ] {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} must be non-negative, got {v}")));
        }
    }
    Ok(params * bits_per_param * spp_bit * l_sample_s)
}

/// The bit-seconds per parameter that make a reference model's static
/// energy come out as `static_j`.
pub fn calibrate_bit_seconds(params: f64, static_j: f64, spp_bit: f64) -> Result<f64> {
    if !(params > 0.0 && spp_bit > 0.0 && static_j >= 0.0) {
        return Err(Error::Domain(format!(
            "calibration needs positive params and spp (params = {params}, spp = {spp_bit}, static = {static_j})"
        )));
    }
    Ok(static_j / params / spp_bit)
}

/// Static energy from calibrated bit-seconds per parameter.
pub fn static_energy_calibrated(params: f64, bit_seconds: f64, spp_bit: f64) -> f64 {
    params * bit_seconds * spp_bit
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerReport {
    pub name: String,
    pub flops: u64,
    pub firerate: f64,
    pub sops: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub flops: u64,
    pub sops: f64,
    pub params: usize,
    pub dynamic_snn_j: f64,
    pub dynamic_ann_j: f64,
    pub static_j: f64,
    /// Bit-seconds per parameter behind `static_j`.
    pub bit_seconds_per_param: f64,
    pub calibrated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub timesteps: usize,
    pub layers: Vec<LayerReport>,
    pub totals: Totals,
    pub constants: EnergyConstants,
}

impl EnergyReport {
    /// Assembles a report from per-layer FLOPs and fire rates.
    /// `reference` switches static energy to calibration mode.
    pub fn build(
        flops: &[(String, u64)],
        rates: &[(String, f64)],
        timesteps: usize,
        params: usize,
        constants: EnergyConstants,
        reference: Option<(f64, f64)>,
    ) -> Result<Self> {
        constants.validate()?;
        let mut layers = Vec::with_capacity(flops.len());
        for (name, f) in flops {
            let firerate = rates
                .iter()
                .find(|(n, _)| n == name)
                .map(|r| r.1)
                .ok_or_else(|| Error::Shape(format!("no fire rate measured for layer {name}")))?;
            layers.push(LayerReport {
                name: name.clone(),
                flops: *f,
                firerate,
                sops: firerate * timesteps as f64 * *f as f64,
            });
        }
        let total_flops = layers.iter().map(|l| l.flops).sum();
        let sops: f64 = layers.iter().map(|l| l.sops).sum();
        let (bit_seconds, static_j) = match reference {
            Some((p, j)) => {
                let bs = calibrate_bit_seconds(p, j, constants.spp_bit)?;
                (bs, static_energy_calibrated(params as f64, bs, constants.spp_bit))
            }
            None => (
                constants.bits_per_param * constants.l_sample_s,
                static_energy(params as f64, constants.bits_per_param, constants.spp_bit, constants.l_sample_s)?,
            ),
        };
        Ok(EnergyReport {
            timesteps,
            totals: Totals {
                flops: total_flops,
                sops,
                params,
                dynamic_snn_j: op_energy(sops, Regime::Snn, &constants),
                dynamic_ann_j: op_energy(total_flops as f64, Regime::Ann, &constants),
                static_j,
                bit_seconds_per_param: bit_seconds,
                calibrated: reference.is_some(),
            },
            layers,
            constants,
        })
    }

    /// Re-derives the dynamic totals in a second pass, pricing each layer
    /// separately, and reports the largest relative disagreement.
    pub fn recheck(&self) -> f64 {
        let snn: f64 = self
            .layers
            .iter()
            .rev()
            .map(|l| l.firerate * self.timesteps as f64 * l.flops as f64 * self.constants.e_ac)
            .sum();
        let ann: f64 = self.layers.iter().rev().map(|l| l.flops as f64 * self.constants.e_mac).sum();
        let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        rel(snn, self.totals.dynamic_snn_j).max(rel(ann, self.totals.dynamic_ann_j))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("name,flops,firerate,sops\n");
        for l in &self.layers {
            let _ = writeln!(s, "{},{},{:.6},{:.3}", l.name, l.flops, l.firerate, l.sops);
        }
        let _ = writeln!(s, "total,{},,{:.3}", self.totals.flops, self.totals.sops);
        s
    }
}

/// Counts, measures and prices `net` on `samples`.
pub fn report<S: Real>(
    net: &Network<S>,
    samples: &[GroupedInput],
    constants: EnergyConstants,
    reference: Option<(f64, f64)>,
    seed: u64,
) -> Result<EnergyReport> {
    let rates = measure_firerate(net, samples, seed)?;
    EnergyReport::build(
        &count_flops(&net.config),
        &rates,
        net.config.timesteps,
        net.param_count(),
        constants,
        reference,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flop_examples() {
        assert_eq!(pointwise_flops(1, 4, 3), 12);
        assert_eq!(pointwise_flops(64 * 24, 6, 32), 294_912);
        let mut cfg = NetworkConfig::default();
        let local = |c: &NetworkConfig| -> u64 {
            count_flops(c).iter().filter(|(n, _)| n.starts_with("local.")).map(|x| x.1).sum()
        };
        let before = local(&cfg);
        cfg.grouping.k *= 2;
        assert_eq!(local(&cfg), 2 * before);
    }

    #[test]
    fn zero_cases() {
        let c = EnergyConstants::default();
        assert_eq!(op_energy(0.0, Regime::Snn, &c), 0.0);
        assert_eq!(static_energy(1e6, 32.0, 12.991e-12, 0.0).unwrap(), 0.0);
        assert!(static_energy(-1.0, 32.0, 1.0, 1.0).is_err());
    }
}
