use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::neuron::NeuronConfig;
use crate::error::{Error, Result};
use crate::pointcloud::{Branches, Fusion, GroupingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelSize {
    #[default]
    Small,
    Large,
}

/// Which feature extractors are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    /// Local extractor on groups, then the global extractor.
    #[default]
    Full,
    /// Local extractor followed directly by pooling over groups.
    LocalOnly,
    /// Global extractor on the raw sampled points, no grouping.
    GlobalOnly,
    /// Like `GlobalOnly` with wider stages up to 1024 channels.
    PointNet,
}

/// How residual blocks combine the skip input with the inner branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualMode {
    /// `neuron(branch) + skip`; the sum is passed on unthresholded.
    #[default]
    Identity,
    /// `neuron(branch_preactivation + skip)`, as in a conventional ANN block.
    AnnStyle,
    /// The inner branch alone.
    Plain,
}

macro_rules! text_enum {
    ($ty:ty, $what:literal, $($name:literal => $v:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($v),)+
                    _ => Err(Error::config(format!(
                        concat!("unknown ", $what, " `{}` (expected one of: {})"),
                        s,
                        [$($name),+].join(", ")
                    ))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $v { return f.write_str($name); })+
                unreachable!()
            }
        }
    };
}

text_enum!(ModelSize, "model size", "small" => ModelSize::Small, "large" => ModelSize::Large);
text_enum!(
    Structure,
    "structure",
    "full" => Structure::Full,
    "local_only" => Structure::LocalOnly,
    "global_only" => Structure::GlobalOnly,
    "pointnet" => Structure::PointNet,
);
text_enum!(
    ResidualMode,
    "residual mode",
    "identity" => ResidualMode::Identity,
    "ann" => ResidualMode::AnnStyle,
    "none" => ResidualMode::Plain,
);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub size: ModelSize,
    pub classes: usize,
    pub timesteps: usize,
    pub grouping: GroupingConfig,
    pub structure: Structure,
    pub residual: ResidualMode,
    pub neuron: NeuronConfig,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            size: ModelSize::Small,
            classes: 4,
            timesteps: 16,
            grouping: GroupingConfig::default(),
            structure: Structure::Full,
            residual: ResidualMode::Identity,
            neuron: NeuronConfig::default(),
        }
    }
}

/// One conv/FC unit of the network: `positions` rows per sample and
/// timestep, each mapped from `in_dim` to `out_dim` channels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UnitSpec {
    pub name: String,
    pub in_dim: usize,
    pub out_dim: usize,
    pub positions: usize,
}

impl UnitSpec {
    /// Multiply-accumulates per sample and timestep.
    pub fn macs(&self) -> u64 {
        (self.positions * self.in_dim * self.out_dim) as u64
    }
}

impl NetworkConfig {
    pub fn local_dim(&self) -> usize {
        match self.size {
            ModelSize::Small => 32,
            ModelSize::Large => 64,
        }
    }

    /// Output widths of the global extractor's convolutions.
    pub fn global_dims(&self) -> Vec<usize> {
        match (self.structure, self.size) {
            (Structure::Full | Structure::LocalOnly, ModelSize::Small) => vec![64, 128, 256],
            (Structure::Full | Structure::LocalOnly, ModelSize::Large) => vec![128, 256, 512],
            (Structure::GlobalOnly, ModelSize::Small) => vec![32, 64, 128, 256],
            (Structure::GlobalOnly, ModelSize::Large) => vec![64, 128, 256, 512],
            (Structure::PointNet, _) => vec![64, 128, 256, 512, 1024],
        }
    }

    pub fn hidden_dim(&self) -> usize {
        match self.size {
            ModelSize::Small => 256,
            ModelSize::Large => 512,
        }
    }

    pub fn output_dim(&self) -> usize {
        10 * self.classes
    }

    fn double_branch(&self) -> bool {
        self.grouping.variant.branches == Branches::Double
    }

    /// Width entering the global extractor (or the pooling head).
    pub fn fused_dim(&self) -> usize {
        let ld = self.local_dim();
        if self.double_branch() && self.grouping.variant.fusion == Fusion::Concat {
            2 * ld
        } else {
            ld
        }
    }

    /// Rejects configurations whose layers cannot be built.
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::key("net.classes", "at least 2 classes are required"));
        }
        if self.timesteps == 0 {
            return Err(Error::key("net.T", "timesteps must be positive"));
        }
        let g = &self.grouping;
        if g.n == 0 || g.m == 0 || g.k == 0 {
            return Err(Error::key("group", "N, M and K must be positive"));
        }
        if g.m > g.n || g.k > g.n {
            return Err(Error::key("group", format!("M = {} and K = {} must not exceed N = {}", g.m, g.k, g.n)));
        }
        if self.local_dim() % 2 != 0 {
            return Err(Error::key("net.variant", "local dimension must be even for the bottleneck"));
        }
        let dims = self.global_dims();
        if dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::key("net.variant", "global dimensions must increase"));
        }
        self.neuron.validate()
    }

    /// The units in execution order.
    pub fn plan(&self) -> Vec<UnitSpec> {
        let g = &self.grouping;
        let mut units = Vec::new();
        let mut push = |name: &str, in_dim, out_dim, positions| {
            units.push(UnitSpec {
                name: name.to_string(),
                in_dim,
                out_dim,
                positions,
            })
        };
        let global_in;
        let global_positions;
        match self.structure {
            Structure::Full | Structure::LocalOnly => {
                let ld = self.local_dim();
                let mk = g.m * g.k;
                push("local.conv", 6, ld, mk);
                push("local.resfb.reduce", ld, ld / 2, mk);
                push("local.resfb.expand", ld / 2, ld, mk);
                if self.double_branch() {
                    push("centroid.conv", 3, ld, g.m);
                    push("centroid.resfb.reduce", ld, ld / 2, g.m);
                    push("centroid.resfb.expand", ld / 2, ld, g.m);
                }
                global_in = self.fused_dim();
                global_positions = g.m;
            }
            Structure::GlobalOnly | Structure::PointNet => {
                global_in = 3;
                global_positions = g.n;
            }
        }
        let feature = if self.structure == Structure::LocalOnly {
            global_in
        } else {
            let dims = self.global_dims();
            let mut c = global_in;
            for (i, &d) in dims.iter().enumerate() {
                push(&format!("global.conv{i}"), c, d, global_positions);
                if i + 1 < dims.len() {
                    push(&format!("global.resf{i}"), d, d, global_positions);
                }
                c = d;
            }
            c
        };
        push("classifier.fc1", feature, self.hidden_dim(), 1);
        push("classifier.fc2", self.hidden_dim(), self.output_dim(), 1);
        units
    }

    pub fn param_count(&self) -> usize {
        // weight + bias + gamma + beta + decay logit
        self.plan()
            .iter()
            .map(|u| u.in_dim * u.out_dim + 3 * u.out_dim + 1)
            .sum()
    }
}
