//! Sampling and grouping of event point clouds.
//!
//! A window's points are resampled to a fixed count, `M` centroids are
//! picked by farthest-point sampling, each centroid gathers its `K` nearest
//! points, and the group offsets are standardized by one pooled standard
//! deviation. Taking the absolute value of the standardized offsets makes
//! them rate-codable; the sign loss is compensated by pairing them with the
//! group's minimum corner instead of its centroid.

mod grouping;
mod sampling;
mod variant;

pub use grouping::{group_stats, standardize_groups, GroupStats, GroupedInput};
pub use sampling::{fps, knn, random_sample, squared_distance};
pub use variant::{Branches, Corner, Fusion, GroupingVariant, NegativeHandling};

use crate::error::Result;
use crate::event_io::PointSample;
use crate::rng::derive;

/// A fixed-size point set in the unit cube.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSet {
    pub points: Vec<[f64; 3]>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Sample size and group geometry.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GroupingConfig {
    /// Points kept after random sampling.
    pub n: usize,
    /// Number of groups (FPS centroids).
    pub m: usize,
    /// Members per group.
    pub k: usize,
    pub variant: GroupingVariant,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        GroupingConfig {
            n: 1024,
            m: 64,
            k: 24,
            variant: GroupingVariant::default(),
        }
    }
}

/// Random sampling, FPS, KNN and standardization of one normalized window.
pub fn group_window(sample: &PointSample, cfg: &GroupingConfig, seed: u64) -> Result<GroupedInput> {
    let set = random_sample(&sample.points, cfg.n, derive(seed, &[0]))?;
    let centroids = fps(&set.points, cfg.m, derive(seed, &[1]))?;
    let members = knn(&set.points, &centroids, cfg.k)?;
    standardize_groups(&set.points, &centroids, &members, cfg.variant)
}
