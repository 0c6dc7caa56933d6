use spikecloud::config::ExperimentConfig;
use spikecloud::container::Container;
use spikecloud::error::{CheckpointError, Error};
use spikecloud::snn::SpikeFn;
use spikecloud::training::{
    init_network, load_checkpoint, metrics_csv, prepare_data, run_experiment, save_checkpoint, train, Checkpoint,
    Dataset, TrainConfig,
};

fn small_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.apply_text(
        "seed = 3\n\
         data.streams_per_class = 3\n\
         group.N = 64\ngroup.M = 8\ngroup.K = 8\n\
         net.T = 4\n\
         train.epochs = 2\ntrain.batch_size = 4\n",
    )
    .unwrap();
    cfg
}

/// The training loop drives the loss of a single sample towards zero.
///
/// The sample's channel values are rounded to 0 or 1 so that every epoch
/// sees the same spike trains, and the smooth spike function makes the loss
/// a continuous function of the parameters. Together they make strict
/// epoch-over-epoch decrease a meaningful assertion.
#[test]
fn one_sample_is_overfit() {
    let mut cfg = small_config();
    cfg.net.neuron.spike_fn = SpikeFn::Smooth;
    let full = prepare_data(&cfg).unwrap();
    let mut one = full.train[0].clone();
    one.windows.truncate(1);
    let w = &mut one.windows[0];
    let round = |v: &mut f64| *v = if *v > 0.5 { 1.0 } else { 0.0 };
    w.channel1.iter_mut().flatten().for_each(round);
    w.channel2.iter_mut().flatten().for_each(round);
    let data = Dataset {
        classes: full.classes,
        train: vec![one],
        test: Vec::new(),
    };
    let net = init_network(&cfg, data.classes).unwrap();
    let mut tcfg = TrainConfig {
        lr: 0.2,
        epochs: 50,
        batch_size: 1,
        ..cfg.train_config()
    };
    tcfg.adam.beta1 = 0.5;
    let out = train(net, &data, &tcfg, |_| {}).unwrap();
    let losses: Vec<f64> = out.metrics.iter().filter(|m| m.split == "train").map(|m| m.loss).collect();
    assert_eq!(losses.len(), 50);
    for (e, w) in losses.windows(2).enumerate() {
        assert!(w[1] < w[0], "loss rose at epoch {}: {} -> {}", e + 1, w[0], w[1]);
    }
    assert!(*losses.last().unwrap() < 1e-2, "final loss {}", losses.last().unwrap());
}

#[test]
fn checkpoint_round_trip_is_bitwise() {
    let cfg = small_config();
    let (_, out) = run_experiment(&cfg, |_| {}).unwrap();
    let ck = Checkpoint {
        network: out.network,
        train: Some(cfg.train_config()),
        epoch: 2,
        metrics: out.metrics,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.bin");
    save_checkpoint(&ck, &path).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back.network.config, ck.network.config);
    assert_eq!(back.metrics, ck.metrics);
    for (a, b) in ck.network.units.iter().zip(&back.network.units) {
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.linear.weight), bits(&b.linear.weight));
        assert_eq!(bits(&a.linear.bias), bits(&b.linear.bias));
        assert_eq!(bits(&a.bn.gamma), bits(&b.bn.gamma));
        assert_eq!(bits(&a.bn.beta), bits(&b.bn.beta));
        assert_eq!(bits(&a.bn.running_mean), bits(&b.bn.running_mean));
        assert_eq!(bits(&a.bn.running_var), bits(&b.bn.running_var));
        assert_eq!(a.decay_logit.to_bits(), b.decay_logit.to_bits());
    }
}

#[test]
fn corrupt_checkpoints_are_rejected() {
    let cfg = small_config();
    let net = init_network(&cfg, 4).unwrap();
    let ck = Checkpoint {
        network: net,
        train: None,
        epoch: 0,
        metrics: Vec::new(),
    };
    let good = ck.to_container().unwrap();

    let mut wrong_shape = good.clone();
    let t = wrong_shape
        .tensors
        .iter_mut()
        .find(|t| t.name == "local.conv.weight")
        .unwrap();
    t.shape = vec![t.data.len(), 1];
    match Checkpoint::from_container(&wrong_shape) {
        Err(Error::Checkpoint(CheckpointError::ShapeMismatch { name, .. })) => assert_eq!(name, "local.conv.weight"),
        other => panic!("{other:?}"),
    }

    let mut missing = good.clone();
    missing.tensors.retain(|t| t.name != "classifier.fc2.bias");
    assert!(matches!(
        Checkpoint::from_container(&missing),
        Err(Error::Checkpoint(CheckpointError::MissingTensor { .. }))
    ));

    let mut bad_var = good.clone();
    bad_var
        .tensors
        .iter_mut()
        .find(|t| t.name == "classifier.fc1.bn.running_var")
        .unwrap()
        .data[0] = 0.0;
    assert!(matches!(
        Checkpoint::from_container(&bad_var),
        Err(Error::Checkpoint(CheckpointError::InvalidValue { .. }))
    ));

    let other_kind = Container { kind: "grouped".into(), ..good.clone() };
    assert!(matches!(
        Checkpoint::from_container(&other_kind),
        Err(Error::Checkpoint(CheckpointError::Kind { .. }))
    ));

    let bytes = good.to_bytes().unwrap();
    assert!(Container::from_bytes(&bytes[..bytes.len() - 3]).is_err());
}

#[test]
fn identical_seeds_give_identical_runs() {
    let cfg = small_config();
    let (_, a) = run_experiment(&cfg, |_| {}).unwrap();
    let (_, b) = run_experiment(&cfg, |_| {}).unwrap();
    assert_eq!(metrics_csv(&a.metrics), metrics_csv(&b.metrics));
    let bytes = |n| {
        Checkpoint {
            network: n,
            train: None,
            epoch: 0,
            metrics: Vec::new(),
        }
        .to_container()
        .unwrap()
        .to_bytes()
        .unwrap()
    };
    assert_eq!(bytes(a.network), bytes(b.network));

    let mut other = cfg.clone();
    other.seed = 4;
    let (_, c) = run_experiment(&other, |_| {}).unwrap();
    assert_ne!(metrics_csv(&a.metrics), metrics_csv(&c.metrics));
}
