//! Drives single neurons of each kind with a constant current and prints
//! membrane traces, then shows the surrogate derivative used for training.
//!
//! ```text
//! cargo run --example neuron_dynamics
//! ```

use spikecloud::snn::{neuron_step, surrogate, surrogate_grad, NeuronConfig, NeuronKind, NeuronState};

fn main() -> spikecloud::Result<()> {
    for kind in [NeuronKind::If, NeuronKind::Lif, NeuronKind::Plif] {
        let cfg = NeuronConfig {
            kind,
            ..NeuronConfig::default()
        };
        let decay = cfg.initial_decay();
        let mut state = NeuronState::default();
        let mut spikes = String::new();
        let mut trace = Vec::new();
        for _ in 0..16 {
            let (s, next) = neuron_step(&cfg, decay, state, 0.6)?;
            spikes.push(if s > 0.0 { '|' } else { '.' });
            trace.push(format!("{:.2}", next.v));
            state = next;
        }
        println!("{kind:?} (decay {decay:.3}): {spikes}");
        println!("    v: {}", trace.join(" "));
    }

    println!("\nx      sigma(x)  sigma'(x)");
    for x in [-1.0, -0.25, 0.0, 0.25, 1.0] {
        println!("{x:>5.2}  {:.4}    {:.4}", surrogate(x), surrogate_grad(x));
    }
    Ok(())
}
