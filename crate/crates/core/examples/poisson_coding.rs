//! Rate coding: encode values as Bernoulli spike trains, decode them back,
//! and measure how dividing small offsets by their spread lowers the
//! reconstruction error.
//!
//! ```text
//! cargo run --release --example poisson_coding
//! ```

use spikecloud::spike_coding::{
    cv_closed_form, cv_empirical, decode_rate, folded_normal_distances, mre, poisson_encode,
};

fn main() -> spikecloud::Result<()> {
    let values = [0.05, 0.3, 0.7, 1.0];
    let train = poisson_encode(&values, 16, 1)?;
    for t in 0..4 {
        println!("t={t}: {:?}", train.row(t));
    }
    println!("decoded rates {:?}\n", decode_rate(&train));

    let sd = 0.052;
    let distances = folded_normal_distances(20_000, sd, 2);
    let r = mre(&distances, sd, 16, 4, 3)?;
    println!(
        "mean relative error: raw {:.3}, rescaled {:.3} ({:.0}% lower)\n",
        r.delta_raw,
        r.delta_rescaled,
        100.0 * r.reduction()
    );

    println!("d     cv (measured)  cv (closed form)  alpha");
    for d in [0.2, 0.5, 0.8] {
        let e = cv_empirical(d, 10_000, 16, 4)?;
        println!("{d:.1}   {:.4}         {:.4}            {:.4}", e.cv, cv_closed_form(d)?, e.alpha);
    }
    Ok(())
}
