use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EpochMetrics, TrainConfig};
use crate::container::Container;
use crate::error::{CheckpointError, Error, Result};
use crate::snn::{Network, NetworkConfig};

pub const CHECKPOINT_KIND: &str = "checkpoint";

/// A network plus the training context it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: Network,
    pub train: Option<TrainConfig>,
    pub epoch: usize,
    pub metrics: Vec<EpochMetrics>,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    network: NetworkConfig,
    train: Option<TrainConfig>,
    epoch: usize,
    metrics: Vec<EpochMetrics>,
}

fn tensor_names(unit: &str) -> [String; 7] {
    [
        "weight",
        "bias",
        "bn.gamma",
        "bn.beta",
        "bn.running_mean",
        "bn.running_var",
        "neuron.decay_logit",
    ]
    .map(|t| format!("{unit}.{t}"))
}

impl Checkpoint {
    pub fn to_container(&self) -> Result<Container> {
        let meta = serde_json::to_value(Meta {
            network: self.network.config,
            train: self.train,
            epoch: self.epoch,
            metrics: self.metrics.clone(),
        })?;
        let mut c = Container::new(CHECKPOINT_KIND, meta);
        for u in &self.network.units {
            let [w, b, g, be, rm, rv, d] = tensor_names(&u.name);
            let (o, i) = (u.linear.out_dim, u.linear.in_dim);
            c.push(w, vec![o, i], u.linear.weight.clone());
            c.push(b, vec![o], u.linear.bias.clone());
            c.push(g, vec![o], u.bn.gamma.clone());
            c.push(be, vec![o], u.bn.beta.clone());
            c.push(rm, vec![o], u.bn.running_mean.clone());
            c.push(rv, vec![o], u.bn.running_var.clone());
            c.push(d, vec![1], vec![u.decay_logit]);
        }
        Ok(c)
    }

    pub fn from_container(c: &Container) -> Result<Self> {
        c.expect_kind(CHECKPOINT_KIND)?;
        let meta: Meta = serde_json::from_value(c.meta.clone())?;
        let mut network = Network::new(meta.network, 0)?;
        for u in &mut network.units {
            let [w, b, g, be, rm, rv, d] = tensor_names(&u.name);
            let (o, i) = (u.linear.out_dim, u.linear.in_dim);
            u.linear.weight = c.expect(&w, &[o, i])?.to_vec();
            u.linear.bias = c.expect(&b, &[o])?.to_vec();
            u.bn.gamma = c.expect(&g, &[o])?.to_vec();
            u.bn.beta = c.expect(&be, &[o])?.to_vec();
            u.bn.running_mean = c.expect(&rm, &[o])?.to_vec();
            u.bn.running_var = c.expect(&rv, &[o])?.to_vec();
            if let Some(bad) = u.bn.running_var.iter().position(|v| !(*v > 0.0)) {
                return Err(Error::Checkpoint(CheckpointError::InvalidValue {
                    name: rv,
                    message: format!("running variance at index {bad} is not positive"),
                }));
            }
            u.decay_logit = c.expect(&d, &[1])?[0];
        }
        Ok(Checkpoint {
            network,
            train: meta.train,
            epoch: meta.epoch,
            metrics: meta.metrics,
        })
    }
}

pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    ck.to_container()?.save(path)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::from_container(&Container::load(path)?)
}
