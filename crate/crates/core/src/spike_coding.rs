//! Stateless Poisson rate coding and its error analysis.
//!
//! A value `v >= 0` fires at every timestep independently with probability
//! `min(v, 1)`. Draws come from [`crate::rng::counter_uniform`], so bit
//! `(t, d)` is a pure function of `(seed, t, d)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rng::{counter_uniform, derive};

/// Row-major `timesteps x width` binary tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeTrain {
    pub timesteps: usize,
    pub width: usize,
    pub bits: Vec<u8>,
}

impl SpikeTrain {
    pub fn zeros(timesteps: usize, width: usize) -> Self {
        SpikeTrain {
            timesteps,
            width,
            bits: vec![0; timesteps * width],
        }
    }

    pub fn row(&self, t: usize) -> &[u8] {
        &self.bits[t * self.width..(t + 1) * self.width]
    }

    pub fn get(&self, t: usize, d: usize) -> u8 {
        self.bits[t * self.width + d]
    }
}

#[inline]
pub fn fires(value: f64, seed: u64, t: usize, d: usize) -> bool {
    counter_uniform(seed, t as u64, d as u64) < value
}

/// Encodes `values` into a `timesteps x values.len()` spike train.
///
/// Values above one saturate (always fire). Negative or NaN values are
/// rejected: signed offsets must be made non-negative before coding.
pub fn poisson_encode(values: &[f64], timesteps: usize, seed: u64) -> Result<SpikeTrain> {
    if timesteps == 0 {
        return Err(Error::config("spike trains need at least one timestep"));
    }
    if let Some((d, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::Encoding(format!(
            "value {v} at index {d} is not a non-negative rate; apply the absolute-value transform first"
        )));
    }
    let width = values.len();
    let mut bits = vec![0u8; timesteps * width];
    for t in 0..timesteps {
        for (d, &v) in values.iter().enumerate() {
            bits[t * width + d] = u8::from(fires(v, seed, t, d));
        }
    }
    Ok(SpikeTrain {
        timesteps,
        width,
        bits,
    })
}

/// Per-column firing rate.
pub fn decode_rate(train: &SpikeTrain) -> Vec<f64> {
    let mut sums = vec![0u32; train.width];
    for t in 0..train.timesteps {
        for (s, &b) in sums.iter_mut().zip(train.row(t)) {
            *s += u32::from(b);
        }
    }
    let inv = 1.0 / train.timesteps as f64;
    sums.into_iter().map(|s| f64::from(s) * inv).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MreReport {
    /// Mean relative error coding the raw distances directly.
    pub delta_raw: f64,
    /// Mean relative error coding `d / sd` and rescaling the decoded rate by `sd`.
    pub delta_rescaled: f64,
    /// Distances that entered the mean (zeros are excluded).
    pub count: usize,
}

impl MreReport {
    pub fn reduction(&self) -> f64 {
        1.0 - self.delta_rescaled / self.delta_raw
    }
}

/// Mean relative reconstruction error of rate coding, before and after
/// dividing the distances by `sd`, averaged over `trials` independent
/// encodings.
pub fn mre(raw_distances: &[f64], sd: f64, timesteps: usize, trials: usize, seed: u64) -> Result<MreReport> {
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::Domain(format!("sd must be positive, got {sd}")));
    }
    if trials == 0 {
        return Err(Error::config("mre needs at least one trial"));
    }
    let d: Vec<f64> = raw_distances.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    if d.is_empty() {
        return Err(Error::Degenerate("no non-zero distances".into()));
    }
    let scaled: Vec<f64> = d.iter().map(|v| v / sd).collect();
    let mut raw_sum = 0.0;
    let mut res_sum = 0.0;
    for trial in 0..trials {
        let s_raw = derive(seed, &[trial as u64, 0]);
        let s_res = derive(seed, &[trial as u64, 1]);
        let dec_raw = decode_rate(&poisson_encode(&d, timesteps, s_raw)?);
        let dec_res = decode_rate(&poisson_encode(&scaled, timesteps, s_res)?);
        for i in 0..d.len() {
            raw_sum += (dec_raw[i] - d[i]).abs() / d[i];
            res_sum += (sd * dec_res[i] - d[i]).abs() / d[i];
        }
    }
    let n = (d.len() * trials) as f64;
    Ok(MreReport {
        delta_raw: raw_sum / n,
        delta_rescaled: res_sum / n,
        count: d.len(),
    })
}

/// Closed-form coefficient of variation of a rate-coded value: `sqrt(1/d - 1)`.
pub fn cv_closed_form(d: f64) -> Result<f64> {
    if !(d > 0.0 && d <= 1.0) {
        return Err(Error::Domain(format!("cv needs 0 < d <= 1, got {d}")));
    }
    Ok((1.0 / d - 1.0).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CvEstimate {
    pub cv: f64,
    /// `mean(decoded) / d`.
    pub alpha: f64,
}

/// Encodes `d` in `n` independent trials of `timesteps` steps.
///
/// The spread is measured per emitted bit around the true value,
/// `sqrt((1-d)^2 p + d^2 (1-p))` with `p` the observed firing rate, and the
/// coefficient of variation divides it by the observed mean `alpha * d`.
pub fn cv_empirical(d: f64, n: usize, timesteps: usize, seed: u64) -> Result<CvEstimate> {
    cv_closed_form(d)?;
    if n == 0 {
        return Err(Error::config("cv needs at least one trial"));
    }
    let mut fired = 0usize;
    for trial in 0..n {
        let s = derive(seed, &[trial as u64]);
        fired += (0..timesteps).filter(|&t| fires(d, s, t, 0)).count();
    }
    let p = fired as f64 / (n * timesteps) as f64;
    if p == 0.0 {
        return Err(Error::Degenerate(format!("value {d} never fired in {n} trials")));
    }
    let sd = ((1.0 - d).powi(2) * p + d * d * (1.0 - p)).sqrt();
    Ok(CvEstimate {
        cv: sd / p,
        alpha: p / d,
    })
}

/// Mean and standard deviation of `alpha` over `reps` repetitions of
/// [`cv_empirical`].
pub fn alpha_distribution(d: f64, n: usize, timesteps: usize, reps: usize, seed: u64) -> Result<(f64, f64)> {
    let alphas = (0..reps)
        .map(|r| cv_empirical(d, n, timesteps, derive(seed, &[r as u64])).map(|e| e.alpha))
        .collect::<Result<Vec<_>>>()?;
    let mean = alphas.iter().sum::<f64>() / reps as f64;
    let var = alphas.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (reps.max(2) - 1) as f64;
    Ok((mean, var.sqrt()))
}

/// Folded-normal distances `|N(0, sd^2)|`, the offset model of standardized
/// point groups.
pub fn folded_normal_distances(count: usize, sd: f64, seed: u64) -> Vec<f64> {
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(0.0, sd).expect("finite sd");
    let mut rng = crate::rng::seeded(seed);
    (0..count).map(|_| normal.sample(&mut rng).abs()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CodingReport {
    pub mre: MreReport,
    /// `(d, empirical cv, closed-form cv)` triples.
    pub cv: Vec<(f64, f64, f64)>,
    pub alpha_mean: f64,
    pub alpha_std: f64,
}

impl CodingReport {
    /// `metric,value` rows.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,value\n");
        s += &format!("mre_raw,{}\n", self.mre.delta_raw);
        s += &format!("mre_rescaled,{}\n", self.mre.delta_rescaled);
        s += &format!("mre_reduction,{}\n", self.mre.reduction());
        for (d, emp, closed) in &self.cv {
            s += &format!("cv_empirical_d{d},{emp}\n");
            s += &format!("cv_closed_d{d},{closed}\n");
        }
        s += &format!("alpha_mean,{}\n", self.alpha_mean);
        s += &format!("alpha_std,{}\n", self.alpha_std);
        s
    }
}

/// Runs the coding analysis on `distances` (or on folded-normal distances
/// with the given `sd` when `distances` is `None`).
pub fn coding_report(
    distances: Option<&[f64]>,
    sd: f64,
    timesteps: usize,
    trials: usize,
    cv_points: &[f64],
    seed: u64,
) -> Result<CodingReport> {
    let owned;
    let dist = match distances {
        Some(d) => d,
        None => {
            owned = folded_normal_distances(24 * 1024 * 3, sd, derive(seed, &[0]));
            &owned
        }
    };
    let mre = mre(dist, sd, timesteps, trials, derive(seed, &[1]))?;
    let cv = cv_points
        .iter()
        .map(|&d| {
            let e = cv_empirical(d, 10_000, timesteps, derive(seed, &[2, d.to_bits()]))?;
            Ok((d, e.cv, cv_closed_form(d)?))
        })
        .collect::<Result<Vec<_>>>()?;
    // Trials per resolution level: 1024 * 24 * 6 values spread over 128 levels.
    let (alpha_mean, alpha_std) = alpha_distribution(0.5, 1152, timesteps, 200, derive(seed, &[3]))?;
    Ok(CodingReport {
        mre,
        cv,
        alpha_mean,
        alpha_std,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_and_saturated_columns() {
        let tr = poisson_encode(&[0.0, 1.0, 3.5], 16, 1).unwrap();
        for t in 0..16 {
            assert_eq!(tr.row(t), &[0, 1, 1]);
        }
        assert_eq!(decode_rate(&tr), vec![0.0, 1.0, 1.0]);
    }

    #[test]
    fn negative_rejected() {
        assert!(matches!(poisson_encode(&[0.2, -0.1], 4, 0), Err(Error::Encoding(_))));
        assert!(poisson_encode(&[f64::NAN], 4, 0).is_err());
    }

    #[test]
    fn half_rate_concentrates() {
        // 10^4 seeds x 16 steps: binomial sd of the pooled mean is 0.5/400.
        let mut sum = 0.0;
        for s in 0..10_000u64 {
            sum += decode_rate(&poisson_encode(&[0.5], 16, s).unwrap())[0];
        }
        let mean = sum / 10_000.0;
        assert!((mean - 0.5).abs() < 0.015, "{mean}");
    }

    #[test]
    fn decode_is_unbiased() {
        for &v in &[0.05, 0.3, 0.77] {
            let trials = 10_000;
            let mean = (0..trials)
                .map(|s| decode_rate(&poisson_encode(&[v], 16, s).unwrap())[0])
                .sum::<f64>()
                / trials as f64;
            let sigma = (v * (1.0 - v) / (16.0 * trials as f64)).sqrt();
            assert!((mean - v).abs() < 3.0 * sigma, "{v}: {mean}");
        }
    }

    #[test]
    fn encoding_is_order_independent() {
        let vals = [0.1, 0.9, 0.4, 0.6];
        let tr = poisson_encode(&vals, 8, 42).unwrap();
        for t in (0..8).rev() {
            for d in (0..4).rev() {
                assert_eq!(tr.get(t, d), u8::from(fires(vals[d], 42, t, d)));
            }
        }
    }

    #[test]
    fn mre_saturated_is_zero() {
        let r = mre(&[1.0; 10], 1.0, 16, 3, 0).unwrap();
        assert_eq!((r.delta_raw, r.delta_rescaled), (0.0, 0.0));
        assert!(mre(&[0.1], 0.0, 16, 1, 0).is_err());
    }

    #[test]
    fn mre_shrinks_with_more_timesteps() {
        let d = folded_normal_distances(3000, 0.052, 1);
        let short = mre(&d, 0.052, 16, 2, 2).unwrap();
        let long = mre(&d, 0.052, 4096, 2, 2).unwrap();
        assert!(long.delta_raw < short.delta_raw);
        assert!(long.delta_rescaled < short.delta_rescaled);
        assert!(long.delta_raw < 0.2);
    }

    #[test]
    fn cv_closed_form_values() {
        assert_eq!(cv_closed_form(1.0).unwrap(), 0.0);
        assert!((cv_closed_form(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((cv_closed_form(0.8).unwrap() - 0.5).abs() < 1e-15);
        assert!(cv_closed_form(0.0).is_err());
        assert!(cv_closed_form(1.5).is_err());
    }

    #[test]
    fn cv_empirical_matches() {
        let e = cv_empirical(0.5, 1152, 16, 3).unwrap();
        assert!((e.cv - 1.0).abs() < 0.05, "{}", e.cv);
        assert_eq!(cv_empirical(1.0, 10, 16, 0).unwrap().cv, 0.0);
    }

    #[test]
    fn csv_report_lists_metrics() {
        let r = coding_report(None, 0.052, 16, 1, &[0.5], 0).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("metric,value\n"));
        for key in ["mre_raw", "mre_rescaled", "cv_empirical_d0.5", "alpha_mean"] {
            assert!(csv.contains(key), "{key}");
        }
    }
}
