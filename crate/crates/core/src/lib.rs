//! Spiking point-cloud recognition for event cameras.
//!
//! The crate covers the whole pipeline from raw sensor events to a class
//! label:
//!
//! * [`event_io`] parses, synthesizes, denoises and windows event streams,
//!   and maps each window into the unit cube (time becomes the z axis).
//! * [`pointcloud`] samples a fixed-size point set, picks group centroids by
//!   farthest-point sampling, gathers K-nearest-neighbour groups and builds
//!   the two-channel, non-negative grouped representation.
//! * [`spike_coding`] is the stateless Poisson rate coder plus the relative
//!   error and coefficient-of-variation analysis of rate coding.
//! * [`snn`] holds the spiking network: PLIF/LIF/IF neurons, the arctan
//!   surrogate gradient, identity-mapping residual blocks, local and global
//!   extractors, the voting classifier, and a reverse-mode tape for BPTT.
//! * [`training`] runs Adam with a cosine schedule, stream-level voting,
//!   checkpointing and the ablation suites.
//! * [`energy`] counts MACs, measures fire rates and prices dynamic and
//!   static energy.
//!
//! The `spikecloud` binary wraps [`cli::run`]; the `examples/` directory has
//! one runnable program per capability.

pub mod cli;
pub mod config;
pub mod container;
pub mod energy;
pub mod error;
pub mod event_io;
pub mod pointcloud;
pub mod rng;
pub mod snn;
pub mod spike_coding;
pub mod training;

pub use error::{CheckpointError, Error, Result};
