//! Generates one synthetic stream per motion class, round-trips it through
//! the packed binary format, denoises it and slices it into overlapping
//! windows normalized to the unit cube.
//!
//! ```text
//! cargo run --example event_windows
//! ```

use spikecloud::event_io::{
    denoise, normalize_window, parse_events, slice_windows, synth_generate, write_events, EventFormat, SynthSpec,
};

fn main() -> spikecloud::Result<()> {
    let spec = SynthSpec {
        streams_per_class: 1,
        ..SynthSpec::default()
    };
    let streams = synth_generate(&spec, 7)?;
    for (id, stream) in streams.iter().enumerate() {
        let bytes = write_events(stream, EventFormat::Packed);
        let back = parse_events(&bytes, EventFormat::Packed)?;
        assert_eq!(back.events, stream.events);

        let clean = denoise(stream, 1, 5_000, 1);
        let windows = slice_windows(&clean, 500_000, 250_000, id)?;
        println!(
            "{:<16} {:>6} events ({} bytes packed), {:>6} after denoise, {} windows",
            spec.classes[id].name(),
            stream.len(),
            bytes.len(),
            clean.len(),
            windows.len()
        );
        for w in &windows {
            let pts = normalize_window(w, stream.width, stream.height)?;
            let mean_z = pts.points.iter().map(|p| p[2]).sum::<f64>() / pts.len() as f64;
            println!(
                "    [{:>7}, {:>7}) us  {:>5} points  mean t {:.3}",
                w.t_start,
                w.t_end,
                pts.len(),
                mean_z
            );
        }
    }
    Ok(())
}
