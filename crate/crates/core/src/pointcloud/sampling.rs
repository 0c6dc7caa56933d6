use rand::seq::index;
use rand::Rng;

use super::PointSet;
use crate::error::{Error, Result};
use crate::rng::seeded;

#[inline]
pub fn squared_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

/// Draws exactly `n` rows: without replacement when the source has at least
/// `n` points, with replacement otherwise.
pub fn random_sample(points: &[[f64; 3]], n: usize, seed: u64) -> Result<PointSet> {
    if points.is_empty() {
        return Err(Error::Degenerate("cannot sample from an empty point set".into()));
    }
    let mut rng = seeded(seed);
    let out = if points.len() >= n {
        index::sample(&mut rng, points.len(), n)
            .into_iter()
            .map(|i| points[i])
            .collect()
    } else {
        (0..n)
            .map(|_| points[rng.random_range(0..points.len())])
            .collect()
    };
    Ok(PointSet { points: out })
}

/// Farthest-point sampling. The first index is drawn from `seed`; each next
/// index maximizes the distance to the nearest already-chosen point, ties
/// going to the lowest index.
pub fn fps(points: &[[f64; 3]], m: usize, seed: u64) -> Result<Vec<usize>> {
    let n = points.len();
    if m > n {
        return Err(Error::config(format!("cannot pick {m} centroids from {n} points")));
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut chosen = Vec::with_capacity(m);
    let mut nearest = vec![f64::INFINITY; n];
    let mut current = seeded(seed).random_range(0..n);
    for _ in 0..m {
        chosen.push(current);
        let c = points[current];
        let mut best = 0usize;
        let mut best_d = f64::NEG_INFINITY;
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p, &c);
            if d < nearest[i] {
                nearest[i] = d;
            }
            if nearest[i] > best_d {
                best_d = nearest[i];
                best = i;
            }
        }
        current = best;
    }
    Ok(chosen)
}

/// For each centroid, the `k` nearest points by Euclidean distance in
/// ascending order (ties by index). The centroid itself is a candidate.
pub fn knn(points: &[[f64; 3]], centroids: &[usize], k: usize) -> Result<Vec<Vec<usize>>> {
    let n = points.len();
    if k > n {
        return Err(Error::config(format!("cannot take {k} neighbours from {n} points")));
    }
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n);
    centroids
        .iter()
        .map(|&c| {
            let cp = *points
                .get(c)
                .ok_or_else(|| Error::Shape(format!("centroid index {c} out of range")))?;
            scratch.clear();
            scratch.extend(points.iter().enumerate().map(|(i, p)| (squared_distance(p, &cp), i)));
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < n && k > 0 {
                scratch.select_nth_unstable_by(k - 1, cmp);
            }
            let head = &mut scratch[..k];
            head.sort_unstable_by(cmp);
            Ok(head.iter().map(|&(_, i)| i).collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud(n: usize, seed: u64) -> Vec<[f64; 3]> {
        let mut rng = seeded(seed);
        (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect()
    }

    #[test]
    fn full_size_sample_is_a_permutation() {
        let pts = cloud(50, 1);
        let s = random_sample(&pts, 50, 3).unwrap();
        let mut a: Vec<_> = pts.iter().map(|p| p.map(f64::to_bits)).collect();
        let mut b: Vec<_> = s.points.iter().map(|p| p.map(f64::to_bits)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn oversampling_uses_replacement() {
        let pts = cloud(10, 2);
        let s = random_sample(&pts, 1024, 3).unwrap();
        assert_eq!(s.len(), 1024);
        assert!(s.points.iter().all(|p| pts.contains(p)));
        assert_eq!(s, random_sample(&pts, 1024, 3).unwrap());
    }

    #[test]
    fn empty_source_is_degenerate() {
        assert!(matches!(random_sample(&[], 4, 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn fps_three_points() {
        let pts = [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.5, 0.5, 0.5]];
        // Find a seed whose first pick is index 0.
        let seed = (0..).find(|&s| fps(&pts, 1, s).unwrap()[0] == 0).unwrap();
        assert_eq!(fps(&pts, 2, seed).unwrap(), vec![0, 1]);
    }

    #[test]
    fn fps_all_points() {
        let pts = cloud(20, 4);
        let mut idx = fps(&pts, 20, 7).unwrap();
        idx.sort_unstable();
        assert_eq!(idx, (0..20).collect::<Vec<_>>());
        assert!(fps(&pts, 21, 7).is_err());
    }

    #[test]
    fn knn_k1_is_self() {
        let pts = cloud(30, 5);
        let rows = knn(&pts, &[3, 17, 29], 1).unwrap();
        assert_eq!(rows, vec![vec![3], vec![17], vec![29]]);
        assert!(knn(&pts, &[0], 31).is_err());
    }

    #[test]
    fn knn_duplicate_points_order_by_index() {
        let pts = vec![[0.5; 3]; 6];
        assert_eq!(knn(&pts, &[4], 6).unwrap(), vec![vec![0, 1, 2, 3, 4, 5]]);
    }
}
