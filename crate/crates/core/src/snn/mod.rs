//! Spiking network with a small reverse-mode engine for BPTT.

pub mod config;
pub mod gradcheck;
pub mod network;
pub mod neuron;
pub mod params;
pub mod real;
pub mod tape;
pub mod tensor;

pub use config::{ModelSize, NetworkConfig, ResidualMode, Structure, UnitSpec};
pub use network::{argmax, batch_mse, mse_loss, ForwardOutput, Network, Scores, VOTE_BLOCK};
pub use neuron::{
    heaviside_spike, neuron_step, sigmoid, surrogate, surrogate_grad, NeuronConfig, NeuronKind, NeuronState, SpikeFn,
};
pub use params::{Gradients, SpikingUnit, UnitGrad};
pub use real::Real;
pub use tape::{Graph, Mode, NodeId};
pub use tensor::Tensor;
