use spikecloud::pointcloud::{GroupedInput, GroupingConfig, GroupingVariant};
use spikecloud::snn::{
    mse_loss, Graph, Mode, ModelSize, Network, NetworkConfig, NeuronConfig, SpikingUnit, Tensor,
};

fn silenced(name: &str, in_dim: usize, out_dim: usize) -> SpikingUnit<f32> {
    let mut u = SpikingUnit::new(name, in_dim, out_dim, 0.0, 1);
    u.linear.weight.iter_mut().for_each(|w| *w = 0.0);
    u.bn.gamma.iter_mut().for_each(|g| *g = 0.0);
    u.bn.beta.iter_mut().for_each(|b| *b = -5.0);
    u
}

fn skip_input(t: usize, rows: usize, dim: usize) -> Tensor<f32> {
    let data = (0..t * rows * dim).map(|i| ((i * 7919) % 13) as f32 * 0.25 - 1.0).collect();
    Tensor::matrix(t * rows, dim, data)
}

/// A block whose spiking branch never fires returns its input unchanged,
/// and the gradient reaching the input is exactly the upstream gradient.
fn check_silenced_block(units: &[SpikingUnit<f32>], mode: Mode) {
    let (t, rows, dim) = (3, 5, 4);
    let x = skip_input(t, rows, dim);
    let mut g = Graph::new(units, NeuronConfig::default(), mode, t);
    let xin = g.leaf(x.clone());
    let mut h = xin;
    for u in 0..units.len() {
        h = g.spiking(h, u).unwrap();
    }
    let y = g.add(h, xin).unwrap();
    let out: Vec<u32> = g.value(y).data.iter().map(|v| v.to_bits()).collect();
    let inp: Vec<u32> = x.data.iter().map(|v| v.to_bits()).collect();
    assert_eq!(out, inp);

    let upstream: Vec<f32> = (0..x.len()).map(|i| (i as f32 * 0.37).sin()).collect();
    let (_, nodes) = g.backward_with_nodes(y, upstream.clone()).unwrap();
    let dx = nodes[xin].as_ref().expect("leaf gradient");
    let a: Vec<u32> = dx.iter().map(|v| v.to_bits()).collect();
    let b: Vec<u32> = upstream.iter().map(|v| v.to_bits()).collect();
    assert_eq!(a, b);
}

#[test]
fn resf_identity_when_branch_silenced() {
    let units = [silenced("resf", 4, 4)];
    check_silenced_block(&units, Mode::Eval);
    check_silenced_block(&units, Mode::Train);
}

#[test]
fn resfb_identity_when_branch_silenced() {
    let reduce = SpikingUnit::new("reduce", 4, 2, 0.0, 3);
    let expand = silenced("expand", 2, 4);
    let units = [reduce, expand];
    check_silenced_block(&units, Mode::Eval);
    check_silenced_block(&units, Mode::Train);
}

fn tiny_config() -> NetworkConfig {
    NetworkConfig {
        size: ModelSize::Small,
        classes: 3,
        timesteps: 4,
        grouping: GroupingConfig {
            n: 12,
            m: 4,
            k: 3,
            variant: GroupingVariant::default(),
        },
        ..NetworkConfig::default()
    }
}

/// A grouped input whose channel values are all 0 or 1, so rate coding is
/// deterministic regardless of which counter each value is drawn from.
fn binary_input(m: usize, k: usize, salt: usize) -> GroupedInput {
    let bit = |i: usize| (((i + salt) * 2654435761) >> 7) % 3 == 0;
    let channel1 = (0..m * k)
        .map(|r| std::array::from_fn(|c| f64::from(u8::from(bit(r * 6 + c)))))
        .collect();
    let channel2 = (0..m)
        .map(|r| std::array::from_fn(|c| f64::from(u8::from(bit(1000 + r * 3 + c)))))
        .collect();
    GroupedInput {
        points: vec![[0.5; 3]; m * k],
        centroid_idx: (0..m).map(|i| i * k).collect(),
        centroids: vec![[0.5; 3]; m],
        member_idx: (0..m).map(|i| (i * k..(i + 1) * k).collect()).collect(),
        channel1,
        channel2,
        sd: 1.0,
        variant: GroupingVariant::default(),
    }
}

fn permuted(s: &GroupedInput, group_order: &[usize], member_order: &[usize]) -> GroupedInput {
    let k = s.k();
    let mut out = s.clone();
    out.channel1.clear();
    out.channel2.clear();
    for &gi in group_order {
        out.channel2.push(s.channel2[gi]);
        for &mi in member_order {
            out.channel1.push(s.channel1[gi * k + mi]);
        }
    }
    out
}

#[test]
fn output_is_invariant_to_group_and_member_order() {
    let cfg = tiny_config();
    let net: Network = Network::new(cfg, 21).unwrap();
    let s = binary_input(4, 3, 0);
    let p = permuted(&s, &[2, 0, 3, 1], &[1, 2, 0]);
    let a = net.forward(&s, 5).unwrap();
    let b = net.forward(&p, 5).unwrap();
    assert_eq!(a.scores, b.scores);
    assert_eq!(a.predictions, b.predictions);
}

#[test]
fn batched_equals_sequential_in_eval_mode() {
    let net: Network = Network::new(tiny_config(), 8).unwrap();
    let samples: Vec<GroupedInput> = (0..3).map(|i| binary_input(4, 3, 17 * i + 1)).collect();
    let refs: Vec<&GroupedInput> = samples.iter().collect();
    let seeds = [11, 12, 13];
    let batched = net.forward_batch(&refs, &seeds, Mode::Eval).unwrap();
    for (b, (s, &seed)) in samples.iter().zip(&seeds).enumerate() {
        let single = net.forward(s, seed).unwrap();
        assert_eq!(single.scores.per_timestep(0), batched.scores.per_timestep(b));
        assert_eq!(single.predictions[0], batched.predictions[b]);
    }
}

#[test]
fn mse_examples() {
    // Perfect one-hot scores cost nothing.
    let perfect = vec![vec![0.0, 1.0, 0.0]; 4];
    assert_eq!(mse_loss(&perfect, 1, 3).unwrap(), 0.0);
    // All-zero scores miss exactly one unit per timestep.
    let silent = vec![vec![0.0; 4]; 2];
    assert!((mse_loss(&silent, 2, 4).unwrap() - 0.25).abs() < 1e-15);
    // Mixed rows averaged over T x classes.
    let rows = vec![vec![0.5, 0.5], vec![1.0, 0.0]];
    let expect = (0.25 + 0.25 + 0.0 + 0.0) / 4.0;
    assert!((mse_loss(&rows, 0, 2).unwrap() - expect).abs() < 1e-15);
    assert!(mse_loss(&rows, 2, 2).is_err());
}

#[test]
fn parameter_counts_follow_the_plan() {
    for size in [ModelSize::Small, ModelSize::Large] {
        let cfg = NetworkConfig {
            size,
            ..tiny_config()
        };
        let net: Network = Network::new(cfg.clone(), 1).unwrap();
        let by_hand: usize = cfg
            .plan()
            .iter()
            .map(|u| u.in_dim * u.out_dim + 3 * u.out_dim + 1)
            .sum();
        assert_eq!(net.param_count(), by_hand);
        assert_eq!(cfg.param_count(), by_hand);
    }
}
