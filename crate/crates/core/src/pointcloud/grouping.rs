use std::f64::consts::FRAC_2_PI;

use super::variant::{Corner, GroupingVariant, NegativeHandling};
use crate::error::{Error, Result};

/// The network-ready form of one window.
///
/// `channel1` holds one row `[dx, dy, dz, ax, ay, az]` per group member
/// (group-major, `m * k` rows): the transformed standardized offset and the
/// group anchor selected by the variant. `channel2` holds the centroids.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedInput {
    /// The sampled point set that the index matrices refer to.
    pub points: Vec<[f64; 3]>,
    pub centroid_idx: Vec<usize>,
    pub centroids: Vec<[f64; 3]>,
    pub member_idx: Vec<Vec<usize>>,
    pub channel1: Vec<[f64; 6]>,
    pub channel2: Vec<[f64; 3]>,
    /// Pooled standard deviation used as the divisor.
    pub sd: f64,
    pub variant: GroupingVariant,
}

impl GroupedInput {
    pub fn m(&self) -> usize {
        self.centroids.len()
    }

    pub fn k(&self) -> usize {
        self.member_idx.first().map_or(0, Vec::len)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupStats {
    pub sd: f64,
    /// Mean of the first three point-channel columns.
    pub mean_abs_rel: f64,
    /// Mean absolute member-minus-centroid offset before division.
    pub mean_raw_offset: f64,
}

fn raw_offsets<'a>(
    points: &'a [[f64; 3]],
    centroid_idx: &'a [usize],
    member_idx: &'a [Vec<usize>],
) -> impl Iterator<Item = [f64; 3]> + 'a {
    centroid_idx.iter().zip(member_idx).flat_map(move |(&c, row)| {
        let cp = points[c];
        row.iter().map(move |&i| {
            let p = points[i];
            [p[0] - cp[0], p[1] - cp[1], p[2] - cp[2]]
        })
    })
}

/// Sample standard deviation of every offset value pooled over all groups
/// and all three coordinates.
fn pooled_sd(offsets: &[[f64; 3]]) -> f64 {
    let n = offsets.len() * 3;
    if n < 2 {
        return 0.0;
    }
    let mean = offsets.iter().flatten().sum::<f64>() / n as f64;
    let ss: f64 = offsets.iter().flatten().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Builds the two-channel grouped input from index matrices.
pub fn standardize_groups(
    points: &[[f64; 3]],
    centroid_idx: &[usize],
    member_idx: &[Vec<usize>],
    variant: GroupingVariant,
) -> Result<GroupedInput> {
    if centroid_idx.len() != member_idx.len() {
        return Err(Error::Shape(format!(
            "{} centroids but {} member rows",
            centroid_idx.len(),
            member_idx.len()
        )));
    }
    let k = member_idx.first().map_or(0, Vec::len);
    for (g, row) in member_idx.iter().enumerate() {
        if row.len() != k {
            return Err(Error::Shape(format!("group {g} has {} members, expected {k}", row.len())));
        }
        if let Some(&bad) = row.iter().find(|&&i| i >= points.len()) {
            return Err(Error::Shape(format!("group {g} member index {bad} out of range")));
        }
    }
    if let Some(&bad) = centroid_idx.iter().find(|&&c| c >= points.len()) {
        return Err(Error::Shape(format!("centroid index {bad} out of range")));
    }

    let offsets: Vec<[f64; 3]> = raw_offsets(points, centroid_idx, member_idx).collect();
    let sd = pooled_sd(&offsets);
    if !(sd > 0.0) || !sd.is_finite() {
        let first = member_idx
            .iter()
            .zip(centroid_idx)
            .position(|(row, &c)| row.iter().all(|&i| points[i] == points[c]))
            .unwrap_or(0);
        return Err(Error::Degenerate(format!(
            "pooled offset standard deviation is {sd}; group {first} has every member on its centroid"
        )));
    }

    let mut rel: Vec<[f64; 3]> = offsets.iter().map(|o| o.map(|v| v / sd)).collect();
    match variant.negative_handling {
        NegativeHandling::Absolute => rel.iter_mut().flatten().for_each(|v| *v = v.abs()),
        NegativeHandling::UnitNormalize => {
            let (lo, hi) = rel
                .iter()
                .flatten()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
            let range = hi - lo;
            rel.iter_mut().flatten().for_each(|v| *v = (*v - lo) / range);
        }
        NegativeHandling::Raw => {}
    }

    let centroids: Vec<[f64; 3]> = centroid_idx.iter().map(|&c| points[c]).collect();
    let shift = FRAC_2_PI.sqrt() * sd;
    let mut channel1 = Vec::with_capacity(rel.len());
    for (g, row) in member_idx.iter().enumerate() {
        let anchor = match variant.corner {
            Corner::MinCorner => row.iter().fold([f64::INFINITY; 3], |acc, &i| {
                let p = points[i];
                [acc[0].min(p[0]), acc[1].min(p[1]), acc[2].min(p[2])]
            }),
            Corner::Centroid => centroids[g],
            // Clamped at zero so the anchor stays rate-codable.
            Corner::CentroidShifted => centroids[g].map(|c| (c - shift).max(0.0)),
        };
        for r in &rel[g * k..(g + 1) * k] {
            channel1.push([r[0], r[1], r[2], anchor[0], anchor[1], anchor[2]]);
        }
    }

    Ok(GroupedInput {
        points: points.to_vec(),
        centroid_idx: centroid_idx.to_vec(),
        channel2: centroids.clone(),
        centroids,
        member_idx: member_idx.to_vec(),
        channel1,
        sd,
        variant,
    })
}

pub fn group_stats(grouped: &GroupedInput) -> GroupStats {
    let n = grouped.channel1.len() * 3;
    let mean_abs_rel = if n == 0 {
        0.0
    } else {
        grouped.channel1.iter().flat_map(|r| &r[..3]).sum::<f64>() / n as f64
    };
    let mean_raw_offset = if n == 0 {
        0.0
    } else {
        raw_offsets(&grouped.points, &grouped.centroid_idx, &grouped.member_idx)
            .flatten()
            .map(f64::abs)
            .sum::<f64>()
            / n as f64
    };
    GroupStats {
        sd: grouped.sd,
        mean_abs_rel,
        mean_raw_offset,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pointcloud::Branches;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn variant(neg: NegativeHandling, corner: Corner) -> GroupingVariant {
        GroupingVariant {
            negative_handling: neg,
            corner,
            branches: Branches::Double,
            fusion: crate::pointcloud::Fusion::Add,
        }
    }

    #[test]
    fn hand_instance() {
        let pts = [[0.5, 0.5, 0.5], [0.6, 0.5, 0.5], [0.4, 0.5, 0.5]];
        let g = standardize_groups(&pts, &[0], &[vec![1, 2]], GroupingVariant::default()).unwrap();
        // Independent sd: six values {0.1, 0, 0, -0.1, 0, 0} with mean 0.
        let vals = [0.6 - 0.5, 0.0, 0.0, 0.4 - 0.5, 0.0, 0.0];
        let mean = vals.iter().sum::<f64>() / 6.0;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 5.0).sqrt();
        assert!((g.sd - sd).abs() < 1e-15);
        assert!((g.channel1[0][0] - 0.1 / sd).abs() < 1e-12);
        assert_eq!(&g.channel1[0][1..3], &[0.0, 0.0]);
        assert_eq!(&g.channel1[0][3..], &[0.4, 0.5, 0.5]);
        assert_eq!(&g.channel1[1][3..], &[0.4, 0.5, 0.5]);
        assert_eq!(g.channel2, vec![[0.5, 0.5, 0.5]]);
    }

    #[test]
    fn all_on_centroid_is_degenerate() {
        let pts = [[0.2; 3], [0.2; 3], [0.2; 3], [0.7; 3]];
        let r = standardize_groups(&pts, &[0, 3], &[vec![0, 1], vec![3, 3]], GroupingVariant::default());
        match r {
            Err(Error::Degenerate(msg)) => assert!(msg.contains("group 0")),
            other => panic!("{other:?}"),
        }
    }

    fn gaussian_groups(m: usize, k: usize, sigma: f64, seed: u64) -> (Vec<[f64; 3]>, Vec<usize>, Vec<Vec<usize>>) {
        let mut rng = crate::rng::seeded(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let mut pts = Vec::new();
        let mut cent = Vec::new();
        let mut members = Vec::new();
        for _ in 0..m {
            let c: [f64; 3] = [rng.random_range(0.3..0.7), rng.random_range(0.3..0.7), rng.random_range(0.3..0.7)];
            cent.push(pts.len());
            pts.push(c);
            let mut row = Vec::new();
            for _ in 0..k {
                row.push(pts.len());
                pts.push(c.map(|v| v + noise.sample(&mut rng)));
            }
            members.push(row);
        }
        (pts, cent, members)
    }

    #[test]
    fn gaussian_offsets_fold_to_sqrt_two_over_pi() {
        // 1000 groups x 34 members x 3 coords ~ 1e5 values.
        let (pts, cent, members) = gaussian_groups(1000, 34, 0.05, 3);
        let g = standardize_groups(&pts, &cent, &members, GroupingVariant::default()).unwrap();
        let s = group_stats(&g);
        assert!((s.mean_abs_rel - FRAC_2_PI.sqrt()).abs() < 0.01, "{}", s.mean_abs_rel);
    }

    #[test]
    fn stats_at_calibrated_sigma() {
        let sigma = 0.052;
        let (pts, cent, members) = gaussian_groups(400, 24, sigma, 8);
        let g = standardize_groups(&pts, &cent, &members, GroupingVariant::default()).unwrap();
        let s = group_stats(&g);
        assert!((s.sd - sigma).abs() < 0.05 * sigma, "{}", s.sd);
        let folded = sigma * FRAC_2_PI.sqrt();
        assert!((s.mean_raw_offset - folded).abs() < 0.05 * folded, "{}", s.mean_raw_offset);
        assert!((0.75..=0.80).contains(&s.mean_abs_rel), "{}", s.mean_abs_rel);
    }

    #[test]
    fn variants_shape_values() {
        let (pts, cent, members) = gaussian_groups(20, 8, 0.05, 11);
        let raw = standardize_groups(&pts, &cent, &members, variant(NegativeHandling::Raw, Corner::Centroid)).unwrap();
        let vals: Vec<f64> = raw.channel1.iter().flat_map(|r| r[..3].to_vec()).collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        assert!((sd - 1.0).abs() < 1e-6);
        assert!(vals.iter().any(|&v| v < 0.0));
        assert_eq!(&raw.channel1[0][3..], &raw.centroids[0]);

        let unit = standardize_groups(&pts, &cent, &members, variant(NegativeHandling::UnitNormalize, Corner::MinCorner)).unwrap();
        let u: Vec<f64> = unit.channel1.iter().flat_map(|r| r[..3].to_vec()).collect();
        assert!(u.iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(u.contains(&0.0) && u.contains(&1.0));

        let shifted = standardize_groups(&pts, &cent, &members, GroupingVariant::centroid_shifted()).unwrap();
        let expect = (shifted.centroids[0][0] - FRAC_2_PI.sqrt() * shifted.sd).max(0.0);
        assert!((shifted.channel1[0][3] - expect).abs() < 1e-15);
    }
}
