//! Experiment configuration and its text form.
//!
//! The file format is line oriented: `key = value`, with dotted section
//! prefixes (`data.`, `window.`, `group.`, `net.`, `train.`, `energy.`) and
//! `#` starting a comment. Keys are matched case-insensitively. Later lines
//! override earlier ones and unknown keys are rejected. Optional values
//! accept `none`.
//!
//! [`ExperimentConfig::to_text`] writes every key (the denoise parameters
//! only when denoising is on), so its output read back
//! through [`ExperimentConfig::parse`] reproduces the configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::energy::EnergyConstants;
use crate::error::{Error, Result};
use crate::event_io::{MotionClass, SynthSpec};
use crate::pointcloud::GroupingVariant;
use crate::snn::{ModelSize, NetworkConfig, NeuronKind, ResidualMode, SpikeFn, Structure};
use crate::training::{DenoiseConfig, Preprocess, TrainConfig, WindowConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DataConfig {
    pub synth: SynthSpec,
    /// Dataset manifest; synthetic data is generated when unset.
    pub manifest: Option<PathBuf>,
    pub test_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            synth: SynthSpec::default(),
            manifest: None,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyConfig {
    pub constants: EnergyConstants,
    /// Windows used to measure fire rates.
    pub samples: usize,
    /// `(params, static joules)` of a reference model for calibration.
    pub reference: Option<(f64, f64)>,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        EnergyConfig {
            constants: EnergyConstants::default(),
            samples: 8,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub data: DataConfig,
    pub window: WindowConfig,
    pub denoise: Option<DenoiseConfig>,
    /// `net.classes` is filled in from the data when a run starts.
    pub net: NetworkConfig,
    pub train: TrainConfig,
    pub energy: EnergyConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            data: DataConfig::default(),
            window: WindowConfig::default(),
            denoise: None,
            net: NetworkConfig::default(),
            train: TrainConfig::default(),
            energy: EnergyConfig::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e: T::Err| Error::key(key, format!("cannot parse `{value}`: {e}")))
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if value.eq_ignore_ascii_case("none") || value.is_empty() {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::key(key, format!("expected true or false, got `{value}`"))),
    }
}

fn opt_text<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(|| "none".to_string(), |v| v.to_string())
}

fn neuron_kind_text(k: NeuronKind) -> &'static str {
    match k {
        NeuronKind::Lif => "lif",
        NeuronKind::If => "if",
        NeuronKind::Plif => "plif",
    }
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let k = key.trim().to_ascii_lowercase();
        let key = k.as_str();
        match key {
            "seed" => self.seed = parse(key, value)?,

            "data.classes" => {
                self.data.synth.classes = value
                    .split(',')
                    .map(|c| c.trim().parse::<MotionClass>().map_err(|e| Error::key(key, e.to_string())))
                    .collect::<Result<_>>()?
            }
            "data.streams_per_class" => self.data.synth.streams_per_class = parse(key, value)?,
            "data.duration_us" => self.data.synth.duration_us = parse(key, value)?,
            "data.event_rate_hz" => self.data.synth.event_rate_hz = parse(key, value)?,
            "data.noise_rate_hz" => self.data.synth.noise_rate_hz = parse(key, value)?,
            "data.width" => self.data.synth.width = parse(key, value)?,
            "data.height" => self.data.synth.height = parse(key, value)?,
            "data.manifest" => self.data.manifest = parse_opt(key, value)?,
            "data.test_fraction" => self.data.test_fraction = parse(key, value)?,
            "data.denoise" => {
                let on = parse_bool(key, value)?;
                self.denoise = on.then(|| self.denoise.unwrap_or_default());
            }
            "data.denoise_radius" | "data.denoise_dt_us" | "data.denoise_k" => {
                let d = self.denoise.get_or_insert_with(DenoiseConfig::default);
                match key {
                    "data.denoise_radius" => d.radius_px = parse(key, value)?,
                    "data.denoise_dt_us" => d.dt_us = parse(key, value)?,
                    _ => d.k_min = parse(key, value)?,
                }
            }

            "window.length_us" => self.window.length_us = parse(key, value)?,
            "window.overlap_us" => self.window.overlap_us = parse(key, value)?,

            "group.n" => self.net.grouping.n = parse(key, value)?,
            "group.m" => self.net.grouping.m = parse(key, value)?,
            "group.k" => self.net.grouping.k = parse(key, value)?,
            "group.variant" => self.net.grouping.variant = parse::<GroupingVariant>(key, value)?,

            "net.variant" => self.net.size = parse::<ModelSize>(key, value)?,
            "net.t" => self.net.timesteps = parse(key, value)?,
            "net.structure" => self.net.structure = parse::<Structure>(key, value)?,
            "net.residual" => self.net.residual = parse::<ResidualMode>(key, value)?,
            "net.neuron" => self.net.neuron.kind = parse::<NeuronKind>(key, value)?,
            "net.v_th" => self.net.neuron.v_th = parse(key, value)?,
            "net.tau_mem" => self.net.neuron.tau_mem = parse(key, value)?,
            "net.tau_syn" => self.net.neuron.tau_syn = parse_opt(key, value)?,
            "net.delta_t" => self.net.neuron.delta_t = parse(key, value)?,
            "net.spike_fn" => {
                self.net.neuron.spike_fn = match value {
                    "heaviside" => SpikeFn::Heaviside,
                    "smooth" => SpikeFn::Smooth,
                    _ => return Err(Error::key(key, format!("expected heaviside or smooth, got `{value}`"))),
                }
            }

            "train.lr" => self.train.lr = parse(key, value)?,
            "train.epochs" => self.train.epochs = parse(key, value)?,
            "train.batch_size" => self.train.batch_size = parse(key, value)?,
            "train.beta1" => self.train.adam.beta1 = parse(key, value)?,
            "train.beta2" => self.train.adam.beta2 = parse(key, value)?,
            "train.eps" => self.train.adam.eps = parse(key, value)?,
            "train.clip" => self.train.clip = parse_opt(key, value)?,

            "energy.e_mac" => self.energy.constants.e_mac = parse(key, value)?,
            "energy.e_ac" => self.energy.constants.e_ac = parse(key, value)?,
            "energy.spp_bit" => self.energy.constants.spp_bit = parse(key, value)?,
            "energy.bits_per_param" => self.energy.constants.bits_per_param = parse(key, value)?,
            "energy.l_sample_s" => self.energy.constants.l_sample_s = parse(key, value)?,
            "energy.samples" => self.energy.samples = parse(key, value)?,
            "energy.reference" => {
                self.energy.reference = match parse_opt::<String>(key, value)? {
                    None => None,
                    Some(pair) => {
                        let (p, j) = pair
                            .split_once(',')
                            .ok_or_else(|| Error::key(key, "expected `params,static_joules`"))?;
                        Some((parse(key, p.trim())?, parse(key, j.trim())?))
                    }
                }
            }
            _ => return Err(Error::key(key, "unknown key")),
        }
        Ok(())
    }

    /// Applies a `key=value` assignment as given on the command line.
    pub fn set_assignment(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(format!("expected key=value, got `{assignment}`")))?;
        self.set(k, v)
    }

    /// Applies every setting of a configuration text on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut offset = 0;
        for line in text.lines() {
            let content = line.split('#').next().unwrap_or("").trim();
            if !content.is_empty() {
                let (k, v) = content.split_once('=').ok_or_else(|| Error::Parse {
                    offset,
                    message: format!("expected key = value, got `{content}`"),
                })?;
                self.set(k, v)?;
            }
            offset += line.len() + 1;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn preprocess(&self) -> Preprocess {
        Preprocess {
            window: self.window,
            grouping: self.net.grouping,
            denoise: self.denoise,
        }
    }

    /// Training settings with the experiment seed.
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window.length_us == 0 {
            return Err(Error::key("window.length_us", "must be positive"));
        }
        if self.window.overlap_us >= self.window.length_us {
            return Err(Error::key("window.overlap_us", "must be smaller than window.length_us"));
        }
        if !(0.0..1.0).contains(&self.data.test_fraction) {
            return Err(Error::key("data.test_fraction", "must lie in [0, 1)"));
        }
        if self.manifest_free() {
            self.data.synth.validate()?;
        }
        let mut net = self.net;
        net.classes = net.classes.max(2);
        net.validate()?;
        self.train.validate()?;
        self.energy.constants.validate()
    }

    fn manifest_free(&self) -> bool {
        self.data.manifest.is_none()
    }

    /// Every key with its current value.
    pub fn to_text(&self) -> String {
        let d = &self.data.synth;
        let n = &self.net;
        let t = &self.train;
        let e = &self.energy.constants;
        let classes: Vec<&str> = d.classes.iter().map(|c| c.name()).collect();
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("seed", self.seed.to_string());
        kv("data.classes", classes.join(","));
        kv("data.streams_per_class", d.streams_per_class.to_string());
        kv("data.duration_us", d.duration_us.to_string());
        kv("data.event_rate_hz", d.event_rate_hz.to_string());
        kv("data.noise_rate_hz", d.noise_rate_hz.to_string());
        kv("data.width", d.width.to_string());
        kv("data.height", d.height.to_string());
        kv("data.manifest", opt_text(self.data.manifest.as_ref().map(|p| p.display())));
        kv("data.test_fraction", self.data.test_fraction.to_string());
        kv("data.denoise", self.denoise.is_some().to_string());
        if let Some(den) = self.denoise {
            kv("data.denoise_radius", den.radius_px.to_string());
            kv("data.denoise_dt_us", den.dt_us.to_string());
            kv("data.denoise_k", den.k_min.to_string());
        }
        kv("window.length_us", self.window.length_us.to_string());
        kv("window.overlap_us", self.window.overlap_us.to_string());
        kv("group.N", n.grouping.n.to_string());
        kv("group.M", n.grouping.m.to_string());
        kv("group.K", n.grouping.k.to_string());
        kv("group.variant", n.grouping.variant.to_string());
        kv("net.variant", n.size.to_string());
        kv("net.T", n.timesteps.to_string());
        kv("net.structure", n.structure.to_string());
        kv("net.residual", n.residual.to_string());
        kv("net.neuron", neuron_kind_text(n.neuron.kind).to_string());
        kv("net.v_th", n.neuron.v_th.to_string());
        kv("net.tau_mem", n.neuron.tau_mem.to_string());
        kv("net.tau_syn", opt_text(n.neuron.tau_syn));
        kv("net.delta_t", n.neuron.delta_t.to_string());
        kv(
            "net.spike_fn",
            match n.neuron.spike_fn {
                SpikeFn::Heaviside => "heaviside",
                SpikeFn::Smooth => "smooth",
            }
            .to_string(),
        );
        kv("train.lr", t.lr.to_string());
        kv("train.epochs", t.epochs.to_string());
        kv("train.batch_size", t.batch_size.to_string());
        kv("train.beta1", t.adam.beta1.to_string());
        kv("train.beta2", t.adam.beta2.to_string());
        kv("train.eps", t.adam.eps.to_string());
        kv("train.clip", opt_text(t.clip));
        kv("energy.e_mac", e.e_mac.to_string());
        kv("energy.e_ac", e.e_ac.to_string());
        kv("energy.spp_bit", e.spp_bit.to_string());
        kv("energy.bits_per_param", e.bits_per_param.to_string());
        kv("energy.l_sample_s", e.l_sample_s.to_string());
        kv("energy.samples", self.energy.samples.to_string());
        kv(
            "energy.reference",
            opt_text(self.energy.reference.map(|(p, j)| format!("{p},{j}"))),
        );
        s
    }
}
