//! Counts per-layer operations of the small and large networks, measures
//! fire rates on synthetic windows and prices both the spiking and the
//! conventional execution.
//!
//! ```text
//! cargo run --release --example energy_report
//! ```

use spikecloud::energy::{report, EnergyConstants};
use spikecloud::event_io::SynthSpec;
use spikecloud::pointcloud::GroupingConfig;
use spikecloud::snn::{ModelSize, Network, NetworkConfig};
use spikecloud::training::{build_dataset, Preprocess, StreamSet, WindowConfig};

fn main() -> spikecloud::Result<()> {
    let spec = SynthSpec {
        streams_per_class: 2,
        ..SynthSpec::default()
    };
    let streams = spikecloud::event_io::synth_generate(&spec, 5)?;
    let grouping = GroupingConfig {
        n: 256,
        m: 32,
        k: 16,
        ..GroupingConfig::default()
    };
    let pre = Preprocess {
        window: WindowConfig::default(),
        grouping,
        denoise: None,
    };
    let data = build_dataset(&StreamSet { streams, splits: None }, &pre, 0.25, 5)?;
    let samples: Vec<_> = data.train.iter().flat_map(|s| s.windows.iter().cloned()).take(4).collect();

    for size in [ModelSize::Small, ModelSize::Large] {
        let cfg = NetworkConfig {
            size,
            grouping,
            ..NetworkConfig::default()
        };
        let net: Network = Network::new(cfg, 9)?;
        let r = report(&net, &samples, EnergyConstants::default(), None, 9)?;
        println!("{size:?}: {} parameters", r.totals.params);
        print!("{}", r.to_csv());
        println!(
            "dynamic: spiking {:.3e} J, conventional {:.3e} J; static {:.3e} J\n",
            r.totals.dynamic_snn_j, r.totals.dynamic_ann_j, r.totals.static_j
        );
    }
    Ok(())
}
