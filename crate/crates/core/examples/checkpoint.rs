//! Trains briefly, saves a checkpoint, reloads it and confirms the restored
//! network makes identical predictions.
//!
//! ```text
//! cargo run --release --example checkpoint -- [path]
//! ```

use spikecloud::config::ExperimentConfig;
use spikecloud::training::{evaluate, load_checkpoint, run_experiment, save_checkpoint, Checkpoint};

fn main() -> spikecloud::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map_or_else(|| std::env::temp_dir().join("spikecloud_example.ckpt"), Into::into);

    let mut cfg = ExperimentConfig::default();
    cfg.apply_text(
        "data.streams_per_class = 4\n\
         group.N = 128\ngroup.M = 16\ngroup.K = 8\n\
         net.T = 4\ntrain.epochs = 2\ntrain.batch_size = 4\n",
    )?;
    let (data, outcome) = run_experiment(&cfg, |_| {})?;
    let ck = Checkpoint {
        network: outcome.network,
        train: Some(cfg.train_config()),
        epoch: cfg.train.epochs,
        metrics: outcome.metrics,
    };
    save_checkpoint(&ck, &path)?;
    let restored = load_checkpoint(&path)?;

    let before = evaluate(&ck.network, &data.test, cfg.seed)?;
    let after = evaluate(&restored.network, &data.test, cfg.seed)?;
    println!("saved {} ({} metric rows)", path.display(), restored.metrics.len());
    println!(
        "voted accuracy before {:.3}, after {:.3}; predictions identical: {}",
        before.stream_accuracy,
        after.stream_accuracy,
        before.streams == after.streams
    );
    Ok(())
}
