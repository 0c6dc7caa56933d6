//! Optimization loop, stream-level voting, checkpoints and ablation suites.

pub mod ablation;
pub mod checkpoint;
pub mod dataset;
pub mod optim;

use std::fmt::Write as _;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use ablation::{ablate, ablation_csv, AblationRow, Suite};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use dataset::{
    build_dataset, load_manifest, prepare_stream, split_indices, Dataset, DenoiseConfig, PreparedStream, Preprocess,
    StreamSet, WindowConfig,
};
pub use optim::{cosine_lr, Adam, AdamConfig};

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::event_io::{synth_generate, EventStream};
use crate::pointcloud::GroupedInput;
use crate::rng::{derive, seeded};
use crate::snn::{batch_mse, mse_loss, Graph, Mode, Network};

const TRAIN_TAG: u64 = 0x7472_6169_6e;
const NET_TAG: u64 = 0x6e65_74;
const DATA_TAG: u64 = 0x6461_7461;
const EVAL_TAG: u64 = 0x6576_616c;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Global gradient-norm limit; off when `None`.
    pub clip: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 1e-3,
            epochs: 300,
            batch_size: 12,
            adam: AdamConfig::default(),
            clip: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0) {
            return Err(Error::key("train.lr", "learning rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::key("train.batch_size", "batch size must be at least 1"));
        }
        if self.clip.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::key("train.clip", "clip norm must be positive"));
        }
        Ok(())
    }
}

/// One row of the metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub split: String,
    pub loss: f64,
    pub accuracy: f64,
    pub lr: f64,
    pub mean_fire_rate: f64,
}

pub const METRICS_HEADER: &str = "epoch,split,loss,accuracy,lr,mean_fire_rate";

pub fn metrics_csv(rows: &[EpochMetrics]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:.9},{:.6},{:.9e},{:.6}",
            r.epoch, r.split, r.loss, r.accuracy, r.lr, r.mean_fire_rate
        );
    }
    out
}

/// Stream label from window predictions: the majority class, ties broken
/// by the larger summed mean score and then by the lower class index.
pub fn vote(predictions: &[usize], mean_scores: &[Vec<f64>], classes: usize) -> Result<usize> {
    if predictions.is_empty() {
        return Err(Error::Degenerate("no windows to vote over".into()));
    }
    let mut counts = vec![0usize; classes];
    let mut score = vec![0.0f64; classes];
    for (&p, s) in predictions.iter().zip(mean_scores) {
        counts[p] += 1;
        for (acc, v) in score.iter_mut().zip(s) {
            *acc += v;
        }
    }
    let mut best = 0;
    for c in 1..classes {
        if counts[c] > counts[best] || (counts[c] == counts[best] && score[c] > score[best]) {
            best = c;
        }
    }
    Ok(best)
}

/// Outcome of classifying one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamVerdict {
    pub label: usize,
    pub window_predictions: Vec<usize>,
    pub window_scores: Vec<Vec<f64>>,
    pub window_losses: Vec<f64>,
    pub fire_rate: f64,
}

fn classify_windows(net: &Network, id: usize, windows: &[GroupedInput], truth: usize, seed: u64) -> Result<StreamVerdict> {
    if windows.is_empty() {
        return Err(Error::Degenerate(format!("stream {id} has no windows")));
    }
    let batch: Vec<&GroupedInput> = windows.iter().collect();
    let seeds: Vec<u64> = (0..windows.len() as u64).map(|w| derive(seed, &[EVAL_TAG, id as u64, w])).collect();
    let out = net.forward_batch(&batch, &seeds, Mode::Eval)?;
    let classes = net.config.classes;
    let window_scores: Vec<Vec<f64>> = (0..windows.len()).map(|b| out.scores.mean(b)).collect();
    let window_losses = (0..windows.len())
        .map(|b| mse_loss(&out.scores.per_timestep(b), truth.min(classes - 1), classes))
        .collect::<Result<Vec<_>>>()?;
    let fire_rate = mean_rate(&out.fire_rates);
    Ok(StreamVerdict {
        label: vote(&out.predictions, &window_scores, classes)?,
        window_predictions: out.predictions,
        window_scores,
        window_losses,
        fire_rate,
    })
}

fn mean_rate(rates: &[(String, f64)]) -> f64 {
    if rates.is_empty() {
        0.0
    } else {
        rates.iter().map(|r| r.1).sum::<f64>() / rates.len() as f64
    }
}

/// Windows, groups and classifies a raw stream by majority vote.
pub fn evaluate_stream(net: &Network, stream: &EventStream, id: usize, pre: &Preprocess, seed: u64) -> Result<StreamVerdict> {
    let mut s = stream.clone();
    let truth = *s.label.get_or_insert(0) as usize;
    let prepared = prepare_stream(&s, id, pre, derive(seed, &[1]))?;
    classify_windows(net, id, &prepared.windows, truth, seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub loss: f64,
    pub window_accuracy: f64,
    pub stream_accuracy: f64,
    pub mean_fire_rate: f64,
    /// `(stream id, true label, voted label)`.
    pub streams: Vec<(usize, usize, usize)>,
}

/// Voted evaluation over prepared streams.
pub fn evaluate(net: &Network, streams: &[PreparedStream], seed: u64) -> Result<EvalResult> {
    let mut loss = 0.0;
    let mut windows = 0usize;
    let mut window_hits = 0usize;
    let mut hits = 0usize;
    let mut rate = 0.0;
    let mut verdicts = Vec::with_capacity(streams.len());
    for s in streams {
        let v = classify_windows(net, s.id, &s.windows, s.label, seed)?;
        loss += v.window_losses.iter().sum::<f64>();
        windows += v.window_predictions.len();
        window_hits += v.window_predictions.iter().filter(|&&p| p == s.label).count();
        hits += usize::from(v.label == s.label);
        rate += v.fire_rate;
        verdicts.push((s.id, s.label, v.label));
    }
    let n = streams.len().max(1) as f64;
    Ok(EvalResult {
        loss: loss / windows.max(1) as f64,
        window_accuracy: window_hits as f64 / windows.max(1) as f64,
        stream_accuracy: hits as f64 / n,
        mean_fire_rate: rate / n,
        streams: verdicts,
    })
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    pub metrics: Vec<EpochMetrics>,
    /// Evaluation on the test streams after the last epoch.
    pub test: Option<EvalResult>,
    pub wall_time_s: f64,
}

/// One optimizer step on a batch; returns the batch loss, the number of
/// correct window predictions and the mean input fire rate.
pub fn train_step(
    net: &mut Network,
    adam: &mut Adam,
    batch: &[&GroupedInput],
    labels: &[usize],
    seeds: &[u64],
    lr: f64,
    clip: Option<f64>,
) -> Result<(f64, usize, f64)> {
    let steps = net.config.timesteps;
    let (loss, correct, rate, mut grads, updates) = {
        let mut g = Graph::new(&net.units, net.config.neuron, Mode::Train, steps);
        let out = net.build(&mut g, batch, seeds)?;
        let scores = g.value(out);
        let (loss, dy) = batch_mse(scores, labels, steps)?;
        let classes = scores.cols();
        let correct = (0..batch.len())
            .filter(|&b| {
                let mut mean = vec![0.0; classes];
                for t in 0..steps {
                    for (c, m) in mean.iter_mut().enumerate() {
                        *m += f64::from(scores.data[(t * batch.len() + b) * classes + c]);
                    }
                }
                crate::snn::argmax(&mean) == labels[b]
            })
            .count();
        let rates = g.input_rates();
        let rate = rates.iter().map(|r| r.1).sum::<f64>() / rates.len().max(1) as f64;
        let grads = g.backward(out, dy)?;
        (loss, correct, rate, grads, g.running_updates().to_vec())
    };
    if !loss.is_finite() || !grads.is_finite() {
        return Err(Error::Numeric(format!("non-finite loss or gradient (loss = {loss})")));
    }
    net.apply_running(&updates);
    if let Some(limit) = clip {
        let norm = grads.global_norm();
        if norm > limit {
            grads.scale((limit / norm) as f32);
        }
    }
    adam.step(&mut net.units, &grads, lr);
    Ok((loss, correct, rate))
}

/// Trains `net` for `cfg.epochs` epochs. `on_epoch` sees the metric rows of
/// every finished epoch.
pub fn train(
    mut net: Network,
    data: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&[EpochMetrics]),
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut adam = Adam::new(cfg.adam, &net.units);
    let windows = data.train_windows();
    let mut metrics = Vec::new();
    let mut last_test = None;
    for epoch in 0..cfg.epochs {
        let lr = cosine_lr(cfg.lr, epoch, cfg.epochs);
        let mut order = windows.clone();
        order.shuffle(&mut seeded(derive(cfg.seed, &[TRAIN_TAG, epoch as u64])));
        let (mut loss_sum, mut correct, mut rate_sum, mut batches) = (0.0, 0usize, 0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&GroupedInput> = chunk.iter().map(|&(s, w)| &data.train[s].windows[w]).collect();
            let labels: Vec<usize> = chunk.iter().map(|&(s, _)| data.train[s].label).collect();
            let seeds: Vec<u64> = chunk
                .iter()
                .map(|&(s, w)| derive(cfg.seed, &[TRAIN_TAG, epoch as u64, data.train[s].id as u64, w as u64]))
                .collect();
            let (loss, hits, rate) = match train_step(&mut net, &mut adam, &batch, &labels, &seeds, lr, cfg.clip) {
                Err(Error::Numeric(_)) => return Err(Error::Diverged { epoch, loss: f64::NAN }),
                other => other?,
            };
            loss_sum += loss * chunk.len() as f64;
            correct += hits;
            rate_sum += rate;
            batches += 1;
        }
        let n = windows.len() as f64;
        let row = EpochMetrics {
            epoch,
            split: "train".into(),
            loss: loss_sum / n,
            accuracy: correct as f64 / n,
            lr,
            mean_fire_rate: rate_sum / batches.max(1) as f64,
        };
        if !row.loss.is_finite() {
            return Err(Error::Diverged { epoch, loss: row.loss });
        }
        let first = metrics.len();
        metrics.push(row);
        if !data.test.is_empty() {
            let r = evaluate(&net, &data.test, cfg.seed)?;
            metrics.push(EpochMetrics {
                epoch,
                split: "test".into(),
                loss: r.loss,
                accuracy: r.stream_accuracy,
                lr,
                mean_fire_rate: r.mean_fire_rate,
            });
            metrics.push(EpochMetrics {
                epoch,
                split: "test_window".into(),
                loss: r.loss,
                accuracy: r.window_accuracy,
                lr,
                mean_fire_rate: r.mean_fire_rate,
            });
            last_test = Some(r);
        }
        on_epoch(&metrics[first..]);
    }
    Ok(TrainOutcome {
        network: net,
        metrics,
        test: last_test,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// The configured streams: the manifest's, or freshly generated synthetic
/// ones.
pub fn load_streams(cfg: &ExperimentConfig) -> Result<StreamSet> {
    match &cfg.data.manifest {
        Some(path) => load_manifest(path),
        None => Ok(StreamSet {
            streams: synth_generate(&cfg.data.synth, derive(cfg.seed, &[DATA_TAG]))?,
            splits: None,
        }),
    }
}

pub fn prepare_data(cfg: &ExperimentConfig) -> Result<Dataset> {
    build_dataset(&load_streams(cfg)?, &cfg.preprocess(), cfg.data.test_fraction, cfg.seed)
}

/// A freshly initialized network sized for `classes`.
pub fn init_network(cfg: &ExperimentConfig, classes: usize) -> Result<Network> {
    let mut net = cfg.net;
    net.classes = classes;
    Network::new(net, derive(cfg.seed, &[NET_TAG]))
}

/// Data preparation, initialization and training in one call.
pub fn run_experiment(cfg: &ExperimentConfig, on_epoch: impl FnMut(&[EpochMetrics])) -> Result<(Dataset, TrainOutcome)> {
    cfg.validate()?;
    let data = prepare_data(cfg)?;
    let net = init_network(cfg, data.classes)?;
    let out = train(net, &data, &cfg.train_config(), on_epoch)?;
    Ok((data, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn voting_rules() {
        let s = |v: &[f64]| v.to_vec();
        assert_eq!(vote(&[1, 1, 1], &vec![s(&[0.0, 1.0]); 3], 2).unwrap(), 1);
        assert_eq!(vote(&[0, 0, 1], &[s(&[0.6, 0.4]), s(&[0.6, 0.4]), s(&[0.1, 0.9])], 2).unwrap(), 0);
        // Tie: class 1 has the larger summed mean score.
        assert_eq!(vote(&[0, 1], &[s(&[0.5, 0.4]), s(&[0.1, 0.9])], 2).unwrap(), 1);
        assert!(vote(&[], &[], 2).is_err());
    }
}
