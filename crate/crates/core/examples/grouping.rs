//! Samples a window, picks group centroids by farthest point sampling,
//! gathers nearest neighbours and compares the grouping variants.
//!
//! ```text
//! cargo run --example grouping
//! ```

use spikecloud::event_io::{normalize_window, slice_windows, synth_generate, SynthSpec};
use spikecloud::pointcloud::{group_stats, group_window, GroupingConfig, GroupingVariant};

fn main() -> spikecloud::Result<()> {
    let spec = SynthSpec {
        streams_per_class: 1,
        ..SynthSpec::default()
    };
    let stream = &synth_generate(&spec, 3)?[2];
    let clip = &slice_windows(stream, 500_000, 250_000, 0)?[0];
    let sample = normalize_window(clip, stream.width, stream.height)?;

    let base = GroupingConfig {
        n: 256,
        m: 32,
        k: 16,
        ..GroupingConfig::default()
    };
    let g = group_window(&sample, &base, 11)?;
    println!("{} points -> {} groups of {}", g.points.len(), g.m(), g.k());
    println!("first centroid {:?}", g.centroids[0]);
    println!("its first member offsets / sd: {:?}", &g.channel1[..2]);

    println!("\nrow  sd       mean|rel|  mean raw offset");
    for row in 1..=10 {
        let cfg = GroupingConfig {
            variant: GroupingVariant::table_row(row).expect("rows 1..=10 exist"),
            ..base
        };
        let s = group_stats(&group_window(&sample, &cfg, 11)?);
        println!("{row:>3}  {:.5}  {:.4}     {:.5}", s.sd, s.mean_abs_rel, s.mean_raw_offset);
    }
    Ok(())
}
