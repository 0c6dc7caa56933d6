use std::fs;
use std::path::Path;

use spikecloud::cli::run;

const SMALL: &[&str] = &[
    "--set",
    "data.streams_per_class=2",
    "--set",
    "group.N=64",
    "--set",
    "group.M=8",
    "--set",
    "group.K=8",
    "--set",
    "net.T=4",
    "--set",
    "train.batch_size=4",
    "--epochs",
    "1",
];

fn cli<A: AsRef<str>>(out: &Path, args: &[A]) -> i32 {
    let mut argv = vec!["spikecloud".to_string()];
    argv.extend(args.iter().map(|s| s.as_ref().to_string()));
    argv.push("--out".into());
    argv.push(out.display().to_string());
    run(argv)
}

fn with_small(cmd: &[&str]) -> Vec<String> {
    cmd.iter().chain(SMALL).map(|s| s.to_string()).collect()
}

#[test]
fn unknown_subcommand_and_flag_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert_ne!(cli(dir.path(), &["frobnicate"]), 0);
    assert_ne!(cli(dir.path(), &["train", "--no-such-flag"]), 0);
    assert_ne!(cli(dir.path(), &["train", "--set", "net.nope=1"]), 0);
    assert!(fs::read_dir(dir.path()).unwrap().next().is_none(), "nothing written on usage errors");
}

#[test]
fn precedence_is_defaults_then_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("x.conf");
    fs::write(&conf, "seed = 5\ngroup.M = 16\ntrain.epochs = 9\n").unwrap();
    let out = dir.path().join("out");
    let code = cli(
        &out,
        &["gen-data", "--config", conf.to_str().unwrap(), "--seed", "6", "--set", "data.streams_per_class=1"],
    );
    assert_eq!(code, 0);
    let resolved = fs::read_to_string(out.join("config.resolved")).unwrap();
    assert!(resolved.contains("seed = 6"), "{resolved}");
    assert!(resolved.contains("group.M = 16"), "{resolved}");
    assert!(resolved.contains("train.epochs = 9"), "{resolved}");
    assert!(resolved.contains("data.streams_per_class = 1"), "{resolved}");
    assert!(out.join("data/manifest.json").exists());
}

#[test]
fn train_eval_energy_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(cli(out, &with_small(&["train"])), 0);
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("epoch,split,loss,accuracy"), "{metrics}");
    assert!(out.join("checkpoint.bin").exists());

    assert_eq!(cli(out, &with_small(&["eval"])), 0);
    let eval: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("eval.json")).unwrap()).unwrap();
    let acc = eval["stream_accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));

    let ck = out.join("checkpoint.bin").display().to_string();
    assert_eq!(cli(out, &with_small(&["energy", "--checkpoint", &ck])), 0);
    let energy: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("energy.json")).unwrap()).unwrap();
    assert!(energy["totals"]["dynamic_ann_j"].as_f64().unwrap() > 0.0);
    assert!(fs::read_to_string(out.join("energy.csv")).unwrap().starts_with("name,flops,firerate,sops"));

    assert_ne!(cli(out, &with_small(&["eval", "--checkpoint", "/nonexistent/ck.bin"])), 0);
}

#[test]
fn preprocess_and_encode_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    assert_eq!(cli(out, &with_small(&["preprocess"])), 0);
    let grouped = spikecloud::container::Container::load(&out.join("grouped.bin")).unwrap();
    assert_eq!(grouped.kind, "grouped");
    assert!(!grouped.tensors.is_empty());

    assert_eq!(cli(out, &["encode-stats", "--trials", "2"]), 0);
    let csv = fs::read_to_string(out.join("encode_stats.csv")).unwrap();
    assert!(csv.contains("mre_reduction"));
    assert_eq!(cli(out, &with_small(&["encode-stats", "--source", "data", "--trials", "1"])), 0);
}

#[test]
fn gradcheck_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cli(dir.path(), &["gradcheck"]), 0);
    assert!(dir.path().join("gradcheck.json").exists());
}

#[test]
fn ablation_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = with_small(&["ablate", "--suite", "resf"]);
    assert_eq!(cli(&a, &args), 0);
    assert_eq!(cli(&b, &args), 0);
    let strip = |p: &Path| -> Vec<String> {
        fs::read_to_string(p.join("ablation_resf.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect()
    };
    let rows = strip(&a);
    assert_eq!(rows[0], "variant,accuracy,epochs");
    assert_eq!(rows.len(), 4);
    assert_eq!(rows, strip(&b));
    assert_ne!(cli(dir.path(), &["ablate", "--suite", "bogus"]), 0);
}
