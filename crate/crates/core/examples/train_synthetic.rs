//! Trains the small network on the synthetic four-class event set and
//! prints per-epoch metrics.
//!
//! ```text
//! cargo run --release --example train_synthetic -- [epochs] [key=value ...]
//! ```

use spikecloud::config::ExperimentConfig;
use spikecloud::training::run_experiment;

fn main() -> spikecloud::Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_text(include_str!("../../../configs/desk.conf"))?;
    let mut args = std::env::args().skip(1);
    if let Some(e) = args.next() {
        cfg.set("train.epochs", &e)?;
    }
    for a in args {
        cfg.set_assignment(&a)?;
    }
    let start = std::time::Instant::now();
    let (data, out) = run_experiment(&cfg, |rows| {
        for r in rows {
            println!(
                "epoch {:>3} {:<11} loss {:.4} acc {:.3} lr {:.2e} rate {:.3}  [{:.0}s]",
                r.epoch,
                r.split,
                r.loss,
                r.accuracy,
                r.lr,
                r.mean_fire_rate,
                start.elapsed().as_secs_f64()
            );
        }
    })?;
    let windows: usize = data.train.iter().map(|s| s.windows.len()).sum();
    println!(
        "{} training streams ({windows} windows), {} test streams",
        data.train.len(),
        data.test.len()
    );
    if let Some(t) = out.test {
        println!("final voted test accuracy {:.3} after {:.1}s", t.stream_accuracy, out.wall_time_s);
    }
    Ok(())
}
