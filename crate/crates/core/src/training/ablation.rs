use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;

use super::{build_dataset, load_streams, train, Dataset, Preprocess};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::pointcloud::GroupingVariant;
use crate::rng::derive;
use crate::snn::{Network, ResidualMode, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// T in {2, 4, 8, 12, 16, 24, 32}.
    Timestep,
    /// The ten grouping variants.
    Grouping,
    /// Full, local only, global only, PointNet-style.
    Structure,
    /// Residual block styles.
    Resf,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "timestep" => Ok(Suite::Timestep),
            "grouping" => Ok(Suite::Grouping),
            "structure" => Ok(Suite::Structure),
            "resf" => Ok(Suite::Resf),
            _ => Err(Error::config(format!(
                "unknown ablation suite `{s}` (expected timestep, grouping, structure or resf)"
            ))),
        }
    }
}

pub const TIMESTEPS: [usize; 7] = [2, 4, 8, 12, 16, 24, 32];

/// Variant names of a suite with the configuration change each one makes.
pub fn variants(suite: Suite, base: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
    let with = |f: &dyn Fn(&mut ExperimentConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    match suite {
        Suite::Timestep => TIMESTEPS
            .iter()
            .map(|&t| (format!("T={t}"), with(&|c| c.net.timesteps = t)))
            .collect(),
        Suite::Grouping => GroupingVariant::ROWS
            .map(|r| {
                let v = GroupingVariant::table_row(r).expect("row in range");
                (format!("row{r}"), with(&|c| c.net.grouping.variant = v))
            })
            .collect(),
        Suite::Structure => [
            Structure::Full,
            Structure::LocalOnly,
            Structure::GlobalOnly,
            Structure::PointNet,
        ]
        .into_iter()
        .map(|s| (s.to_string(), with(&|c| c.net.structure = s)))
        .collect(),
        Suite::Resf => [ResidualMode::Identity, ResidualMode::AnnStyle, ResidualMode::Plain]
            .into_iter()
            .map(|r| (r.to_string(), with(&|c| c.net.residual = r)))
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub variant: String,
    /// Stream-level voted test accuracy after the last epoch.
    pub accuracy: f64,
    pub epochs: usize,
    pub wall_time_s: f64,
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("variant,accuracy,epochs,wall_time\n");
    for r in rows {
        let _ = writeln!(s, "{},{:.6},{},{:.3}", r.variant, r.accuracy, r.epochs, r.wall_time_s);
    }
    s
}

/// Trains every variant of `suite` from the same seeds and data.
pub fn ablate(suite: Suite, base: &ExperimentConfig, mut on_row: impl FnMut(&AblationRow)) -> Result<Vec<AblationRow>> {
    let streams = load_streams(base)?;
    let mut cache: Option<(Preprocess, Dataset)> = None;
    let mut rows = Vec::new();
    for (name, cfg) in variants(suite, base) {
        cfg.validate()?;
        let pre = cfg.preprocess();
        if cache.as_ref().is_none_or(|(p, _)| *p != pre) {
            cache = Some((pre, build_dataset(&streams, &pre, cfg.data.test_fraction, cfg.seed)?));
        }
        let data = &cache.as_ref().expect("filled above").1;
        let mut net_cfg = cfg.net;
        net_cfg.classes = data.classes;
        let net = Network::new(net_cfg, derive(cfg.seed, &[super::NET_TAG]))?;
        let out = train(net, data, &cfg.train_config(), |_| {})?;
        let row = AblationRow {
            variant: name,
            accuracy: out.test.map_or(0.0, |t| t.stream_accuracy),
            epochs: cfg.train.epochs,
            wall_time_s: out.wall_time_s,
        };
        on_row(&row);
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_sizes() {
        let base = ExperimentConfig::default();
        assert_eq!(variants(Suite::Timestep, &base).len(), 7);
        assert_eq!(variants(Suite::Grouping, &base).len(), 10);
        assert_eq!(variants(Suite::Structure, &base).len(), 4);
        assert_eq!(variants(Suite::Resf, &base).len(), 3);
        assert!("bogus".parse::<Suite>().is_err());
    }
}
