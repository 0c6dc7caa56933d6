//! Command-line front end.
//!
//! Every subcommand resolves an [`ExperimentConfig`] from defaults, an
//! optional `--config` file and command-line overrides (in that order),
//! writes the result to `<out>/config.resolved` and keeps all of its
//! artifacts under `--out`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::container::Container;
use crate::energy;
use crate::error::{Error, Result};
use crate::event_io::{write_events, write_manifest, EventFormat, ManifestEntry, Split};
use crate::rng::derive;
use crate::spike_coding::coding_report;
use crate::training::{
    ablate, ablation_csv, evaluate, init_network, load_checkpoint, load_streams, metrics_csv, prepare_data,
    save_checkpoint, split_indices, train, Checkpoint, Suite,
};

#[derive(Debug, Parser)]
#[command(name = "spikecloud", version, about = "Spiking point-cloud recognition for event streams")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// Master seed for data, initialization, sampling and spike coding.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory receiving every artifact.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override a configuration key (repeatable), e.g. `--set group.M=32`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Grouping variant: row1..row10 or centroid_shifted.
    #[arg(long, global = true)]
    grouping_variant: Option<String>,
    /// Number of training epochs.
    #[arg(long, global = true)]
    epochs: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DataFormat {
    Packed,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StatsSource {
    /// Folded-normal offsets with the calibrated spread.
    Synthetic,
    /// Group offsets of the configured dataset.
    Data,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate the synthetic event set with a manifest.
    GenData {
        #[arg(long, value_enum, default_value = "packed")]
        format: DataFormat,
    },
    /// Window and group the dataset into a tensor cache.
    Preprocess,
    /// Rate-coding error and variability statistics.
    EncodeStats {
        #[arg(long, value_enum, default_value = "synthetic")]
        source: StatsSource,
        /// Spread of the synthetic offsets.
        #[arg(long, default_value_t = 0.052)]
        sd: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Train and write metrics plus a checkpoint.
    Train,
    /// Voted evaluation of a checkpoint on the test streams.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Operation counts, fire rates and energy estimates.
    Energy {
        /// Checkpoint to measure; a freshly initialized network otherwise.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Finite-difference check of the gradient engine.
    Gradcheck,
    /// Run an ablation suite.
    Ablate {
        /// timestep, grouping, structure or resf.
        #[arg(long)]
        suite: String,
    },
}

fn resolve(g: &Global) -> Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let mut c = ExperimentConfig::default();
            c.apply_text(&text)?;
            c
        }
        None => ExperimentConfig::default(),
    };
    for a in &g.overrides {
        cfg.set_assignment(a)?;
    }
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(v) = &g.grouping_variant {
        cfg.set("group.variant", v)?;
    }
    if let Some(e) = g.epochs {
        cfg.train.epochs = e;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(out: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<PathBuf> {
    let path = out.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn json_pretty<T: serde::Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(cli: &Cli) -> Result<i32> {
    let cfg = resolve(&cli.global)?;
    let out = &cli.global.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write(out, "config.resolved", cfg.to_text())?;
    match &cli.command {
        Command::GenData { format } => gen_data(&cfg, out, *format),
        Command::Preprocess => preprocess(&cfg, out),
        Command::EncodeStats { source, sd, trials } => encode_stats(&cfg, out, *source, *sd, *trials),
        Command::Train => train_cmd(&cfg, out),
        Command::Eval { checkpoint } => eval_cmd(&cfg, out, checkpoint.as_deref()),
        Command::Energy { checkpoint } => energy_cmd(&cfg, out, checkpoint.as_deref()),
        Command::Gradcheck => gradcheck_cmd(&cfg, out),
        Command::Ablate { suite } => ablate_cmd(&cfg, out, suite),
    }
}

fn gen_data(cfg: &ExperimentConfig, out: &Path, format: DataFormat) -> Result<i32> {
    let set = load_streams(&ExperimentConfig {
        data: crate::config::DataConfig {
            manifest: None,
            ..cfg.data.clone()
        },
        ..cfg.clone()
    })?;
    let (_, test) = split_indices(set.streams.len(), cfg.data.test_fraction, derive(cfg.seed, &[0]));
    let mut entries = Vec::with_capacity(set.streams.len());
    for (i, s) in set.streams.iter().enumerate() {
        let label = s.label.unwrap_or(0);
        let (name, bytes) = match format {
            DataFormat::Packed => (format!("data/stream_{i:04}.evs"), write_events(s, EventFormat::Packed)),
            DataFormat::Csv => (
                format!("data/stream_{i:04}.csv"),
                write_events(
                    s,
                    EventFormat::Csv {
                        width: s.width,
                        height: s.height,
                    },
                ),
            ),
        };
        write(out, &name, bytes)?;
        entries.push(ManifestEntry {
            path: name.trim_start_matches("data/").to_string(),
            label,
            split: if test.binary_search(&i).is_ok() { Split::Test } else { Split::Train },
        });
    }
    let manifest = out.join("data/manifest.json");
    write_manifest(&manifest, &entries)?;
    println!("wrote {} streams and {}", entries.len(), manifest.display());
    Ok(0)
}

fn preprocess(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let data = prepare_data(cfg)?;
    let g = cfg.net.grouping;
    let mut c = Container::new(
        "grouped",
        json!({
            "grouping": g,
            "window": cfg.window,
            "classes": data.classes,
        }),
    );
    let mut summary = Vec::new();
    for (split, streams) in [("train", &data.train), ("test", &data.test)] {
        for s in streams {
            for (w, gi) in s.windows.iter().enumerate() {
                let base = format!("{split}.stream{}.window{w}", s.id);
                let ch1: Vec<f32> = gi.channel1.iter().flatten().map(|&v| v as f32).collect();
                let ch2: Vec<f32> = gi.channel2.iter().flatten().map(|&v| v as f32).collect();
                c.push(format!("{base}.channel1"), vec![g.m, g.k, 6], ch1);
                c.push(format!("{base}.channel2"), vec![g.m, 3], ch2);
                c.push(format!("{base}.label"), vec![1], vec![s.label as f32]);
            }
            summary.push(json!({
                "stream": s.id,
                "split": split,
                "label": s.label,
                "windows": s.windows.len(),
                "empty_windows": s.empty_windows,
                "sd": s.windows.iter().map(|w| w.sd).collect::<Vec<_>>(),
            }));
        }
    }
    c.save(&out.join("grouped.bin"))?;
    write(out, "preprocess.json", json_pretty(&summary)?)?;
    println!(
        "{} train / {} test streams grouped into {}",
        data.train.len(),
        data.test.len(),
        out.join("grouped.bin").display()
    );
    Ok(0)
}

fn encode_stats(cfg: &ExperimentConfig, out: &Path, source: StatsSource, sd: f64, trials: usize) -> Result<i32> {
    let steps = cfg.net.timesteps;
    let report = match source {
        StatsSource::Synthetic => coding_report(None, sd, steps, trials, &[0.2, 0.5, 0.8], cfg.seed)?,
        StatsSource::Data => {
            let data = prepare_data(cfg)?;
            let mut distances = Vec::new();
            let mut sds = Vec::new();
            for w in data.train.iter().flat_map(|s| &s.windows) {
                for (&c, members) in w.centroid_idx.iter().zip(&w.member_idx) {
                    let cp = w.points[c];
                    for &i in members {
                        let p = w.points[i];
                        distances.extend((0..3).map(|a| (p[a] - cp[a]).abs()));
                    }
                }
                sds.push(w.sd);
            }
            let mean_sd = sds.iter().sum::<f64>() / sds.len().max(1) as f64;
            coding_report(Some(&distances), mean_sd, steps, trials, &[0.2, 0.5, 0.8], cfg.seed)?
        }
    };
    write(out, "encode_stats.csv", report.to_csv())?;
    write(out, "encode_stats.json", json_pretty(&report)?)?;
    print!("{}", report.to_csv());
    Ok(0)
}

fn train_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let data = prepare_data(cfg)?;
    let net = init_network(cfg, data.classes)?;
    let tcfg = cfg.train_config();
    let outcome = train(net, &data, &tcfg, |rows| {
        for r in rows {
            eprintln!(
                "epoch {:>3} {:<11} loss {:.5} accuracy {:.4}",
                r.epoch, r.split, r.loss, r.accuracy
            );
        }
    })?;
    write(out, "metrics.csv", metrics_csv(&outcome.metrics))?;
    let ck = Checkpoint {
        network: outcome.network,
        train: Some(tcfg),
        epoch: cfg.train.epochs,
        metrics: outcome.metrics,
    };
    save_checkpoint(&ck, &out.join("checkpoint.bin"))?;
    if let Some(t) = outcome.test {
        println!("voted test accuracy {:.4}", t.stream_accuracy);
    }
    Ok(0)
}

fn eval_cmd(cfg: &ExperimentConfig, out: &Path, checkpoint: Option<&Path>) -> Result<i32> {
    let path = checkpoint.map_or_else(|| out.join("checkpoint.bin"), Path::to_path_buf);
    let ck = load_checkpoint(&path)?;
    let mut run_cfg = cfg.clone();
    run_cfg.net = ck.network.config;
    let data = prepare_data(&run_cfg)?;
    let r = evaluate(&ck.network, &data.test, cfg.seed)?;
    let mut csv = String::from("stream,label,predicted\n");
    for (id, label, pred) in &r.streams {
        csv += &format!("{id},{label},{pred}\n");
    }
    write(out, "eval_streams.csv", csv)?;
    write(
        out,
        "eval.json",
        json_pretty(&json!({
            "checkpoint": path.strip_prefix(out).unwrap_or(&path).display().to_string(),
            "stream_accuracy": r.stream_accuracy,
            "window_accuracy": r.window_accuracy,
            "loss": r.loss,
            "mean_fire_rate": r.mean_fire_rate,
            "streams": r.streams.len(),
        }))?,
    )?;
    println!("voted accuracy {:.4} over {} streams", r.stream_accuracy, r.streams.len());
    Ok(0)
}

fn energy_cmd(cfg: &ExperimentConfig, out: &Path, checkpoint: Option<&Path>) -> Result<i32> {
    let (net, run_cfg) = match checkpoint {
        Some(p) => {
            let ck = load_checkpoint(p)?;
            let mut c = cfg.clone();
            c.net = ck.network.config;
            (ck.network, c)
        }
        None => {
            let classes = cfg.data.synth.classes.len().max(2);
            (init_network(cfg, classes)?, cfg.clone())
        }
    };
    let data = prepare_data(&run_cfg)?;
    let samples: Vec<_> = data
        .test
        .iter()
        .chain(&data.train)
        .flat_map(|s| s.windows.iter().cloned())
        .take(cfg.energy.samples.max(1))
        .collect();
    let report = energy::report(&net, &samples, cfg.energy.constants, cfg.energy.reference, cfg.seed)?;
    write(out, "energy.json", json_pretty(&report)?)?;
    write(out, "energy.csv", report.to_csv())?;
    println!(
        "SOPs {:.4e}  dynamic SNN {:.4e} J  dynamic ANN {:.4e} J  static {:.4e} J",
        report.totals.sops, report.totals.dynamic_snn_j, report.totals.dynamic_ann_j, report.totals.static_j
    );
    Ok(0)
}

fn gradcheck_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<i32> {
    let report = crate::snn::gradcheck::run(cfg.seed)?;
    write(out, "gradcheck.json", json_pretty(&report)?)?;
    println!(
        "max relative gradient error {:.3e} over {} parameters; surrogate error {:.3e}; {}",
        report.max_rel_error(),
        report.checked_parameters,
        report.surrogate_max_abs_error,
        if report.passed() { "PASS" } else { "FAIL" }
    );
    Ok(if report.passed() { 0 } else { 1 })
}

fn ablate_cmd(cfg: &ExperimentConfig, out: &Path, suite: &str) -> Result<i32> {
    let suite: Suite = suite.parse()?;
    let rows = ablate(suite, cfg, |r| {
        eprintln!("{:<14} accuracy {:.4} ({:.1}s)", r.variant, r.accuracy, r.wall_time_s)
    })?;
    let name = format!("ablation_{}.csv", suite_name(suite));
    write(out, &name, ablation_csv(&rows))?;
    println!("wrote {} rows to {}", rows.len(), out.join(name).display());
    Ok(0)
}

fn suite_name(s: Suite) -> &'static str {
    match s {
        Suite::Timestep => "timestep",
        Suite::Grouping => "grouping",
        Suite::Structure => "structure",
        Suite::Resf => "resf",
    }
}
