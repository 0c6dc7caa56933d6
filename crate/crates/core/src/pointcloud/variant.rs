use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How signed group offsets are made non-negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeHandling {
    /// `|offset| / sd`.
    Absolute,
    /// `offset / sd`, then min-max scaled to `[0, 1]` over the sample.
    UnitNormalize,
    /// `offset / sd` unchanged. Negative values cannot be rate coded; the
    /// network encoder silences them.
    Raw,
}

/// Which anchor fills the last three columns of the point channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corner {
    /// Element-wise minimum of the group's member coordinates.
    MinCorner,
    Centroid,
    /// `centroid - sqrt(2/pi) * sd`, the analytic correction for the mean
    /// shift introduced by the absolute value.
    CentroidShifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branches {
    /// Point channel only.
    Single,
    /// Point channel plus a separate centroid branch.
    Double,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fusion {
    Add,
    Concat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupingVariant {
    pub negative_handling: NegativeHandling,
    pub corner: Corner,
    pub branches: Branches,
    pub fusion: Fusion,
}

impl Default for GroupingVariant {
    /// Absolute offsets, minimum corner, two branches fused by addition.
    fn default() -> Self {
        GroupingVariant::table_row(6).unwrap()
    }
}

impl GroupingVariant {
    pub const ROWS: std::ops::RangeInclusive<usize> = 1..=10;

    /// The ten configurations of the grouping ablation, numbered 1..=10.
    pub fn table_row(row: usize) -> Option<Self> {
        use Branches::*;
        use Corner::*;
        use NegativeHandling::*;
        let (negative_handling, corner, branches, fusion) = match row {
            1 => (Raw, Centroid, Single, Fusion::Add),
            2 => (UnitNormalize, Centroid, Single, Fusion::Add),
            3 => (UnitNormalize, MinCorner, Single, Fusion::Add),
            4 => (Absolute, MinCorner, Single, Fusion::Add),
            5 => (Absolute, Centroid, Single, Fusion::Add),
            6 => (Absolute, MinCorner, Double, Fusion::Add),
            7 => (Absolute, MinCorner, Double, Fusion::Concat),
            8 => (Absolute, Centroid, Double, Fusion::Add),
            9 => (Raw, Centroid, Double, Fusion::Add),
            10 => (UnitNormalize, Centroid, Double, Fusion::Add),
            _ => return None,
        };
        Some(GroupingVariant {
            negative_handling,
            corner,
            branches,
            fusion,
        })
    }

    pub fn row_number(&self) -> Option<usize> {
        Self::ROWS.clone().find(|&r| Self::table_row(r) == Some(*self))
    }

    /// The shifted-centroid alternative to the minimum corner.
    pub fn centroid_shifted() -> Self {
        GroupingVariant {
            corner: Corner::CentroidShifted,
            ..GroupingVariant::default()
        }
    }
}

impl fmt::Display for GroupingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.row_number() {
            Some(r) => write!(f, "row{r}"),
            None if *self == Self::centroid_shifted() => f.write_str("centroid_shifted"),
            None => write!(
                f,
                "{:?}/{:?}/{:?}/{:?}",
                self.negative_handling, self.corner, self.branches, self.fusion
            ),
        }
    }
}

impl FromStr for GroupingVariant {
    type Err = Error;

    /// Accepts `row1` .. `row10` and `centroid_shifted`.
    fn from_str(s: &str) -> Result<Self> {
        if s == "centroid_shifted" {
            return Ok(Self::centroid_shifted());
        }
        s.strip_prefix("row")
            .and_then(|n| n.parse().ok())
            .and_then(Self::table_row)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown grouping variant `{s}` (expected row1..row10 or centroid_shifted)"
                ))
            })
    }
}
