use std::f64::consts::TAU;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{Event, EventStream};
use crate::error::{Error, Result};
use crate::rng::{derive, seeded, SeededRng};

/// Motion primitives of the synthetic generator. Each class has a distinct
/// spatio-temporal shape in the (x, y, t) cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionClass {
    TranslatingBlob,
    RotatingDipole,
    ExpandingRing,
    Zigzag,
}

impl MotionClass {
    pub const ALL: [MotionClass; 4] = [
        MotionClass::TranslatingBlob,
        MotionClass::RotatingDipole,
        MotionClass::ExpandingRing,
        MotionClass::Zigzag,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MotionClass::TranslatingBlob => "translating_blob",
            MotionClass::RotatingDipole => "rotating_dipole",
            MotionClass::ExpandingRing => "expanding_ring",
            MotionClass::Zigzag => "zigzag",
        }
    }
}

impl FromStr for MotionClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MotionClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::config(format!("unknown motion class `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: Vec<MotionClass>,
    pub streams_per_class: usize,
    pub duration_us: u64,
    /// Mean signal event rate in events per second.
    pub event_rate_hz: f64,
    /// Mean rate of uniformly scattered background events per second.
    pub noise_rate_hz: f64,
    pub width: u16,
    pub height: u16,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            classes: MotionClass::ALL.to_vec(),
            streams_per_class: 30,
            duration_us: 1_000_000,
            event_rate_hz: 20_000.0,
            noise_rate_hz: 200.0,
            width: 128,
            height: 128,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes.len() < 2 {
            return Err(Error::config("synthetic data needs at least two classes"));
        }
        if self.duration_us == 0 {
            return Err(Error::config("synthetic duration must be positive"));
        }
        if !(self.event_rate_hz > 0.0) {
            return Err(Error::config("synthetic event rate must be positive"));
        }
        if !(self.noise_rate_hz >= 0.0) {
            return Err(Error::config("noise rate must be non-negative"));
        }
        if self.width < 2 || self.height < 2 {
            return Err(Error::config("sensor must be at least 2x2"));
        }
        Ok(())
    }
}

/// Per-stream geometry, drawn once and then sampled at normalized phase `tau`.
#[derive(Debug, Clone)]
enum Trajectory {
    Blob { start: [f64; 2], end: [f64; 2], sigma: f64 },
    Dipole { center: [f64; 2], radius: f64, turns: f64, phase: f64, sigma: f64 },
    Ring { center: [f64; 2], r0: f64, r1: f64, sigma: f64 },
    Zigzag { x0: f64, x1: f64, yc: f64, amp: f64, periods: f64, sigma: f64 },
}

const TRUNCATE: f64 = 3.0;

fn truncated(rng: &mut SeededRng, sigma: f64) -> f64 {
    let n = Normal::new(0.0, 1.0).unwrap();
    loop {
        let z: f64 = n.sample(rng);
        if z.abs() <= TRUNCATE {
            return z * sigma;
        }
    }
}

fn triangle(x: f64) -> f64 {
    let f = x - x.floor();
    if f < 0.5 {
        4.0 * f - 1.0
    } else {
        3.0 - 4.0 * f
    }
}

impl Trajectory {
    fn draw(class: MotionClass, rng: &mut SeededRng) -> Self {
        match class {
            MotionClass::TranslatingBlob => loop {
                let start: [f64; 2] = [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)];
                let end = [rng.random_range(0.2..0.8), rng.random_range(0.2..0.8)];
                if (end[0] - start[0]).hypot(end[1] - start[1]) >= 0.3 {
                    break Trajectory::Blob { start, end, sigma: 0.04 };
                }
            },
            MotionClass::RotatingDipole => Trajectory::Dipole {
                center: [rng.random_range(0.35..0.65), rng.random_range(0.35..0.65)],
                radius: rng.random_range(0.15..0.25),
                turns: rng.random_range(1.0..2.0) * if rng.random::<bool>() { 1.0 } else { -1.0 },
                phase: rng.random_range(0.0..TAU),
                sigma: 0.03,
            },
            MotionClass::ExpandingRing => Trajectory::Ring {
                center: [rng.random_range(0.35..0.65), rng.random_range(0.35..0.65)],
                r0: rng.random_range(0.03..0.08),
                r1: rng.random_range(0.25..0.35),
                sigma: 0.015,
            },
            MotionClass::Zigzag => {
                let (x0, x1) = if rng.random::<bool>() { (0.15, 0.85) } else { (0.85, 0.15) };
                Trajectory::Zigzag {
                    x0,
                    x1,
                    yc: rng.random_range(0.35..0.65),
                    amp: rng.random_range(0.1..0.2),
                    periods: rng.random_range(2.0..4.0),
                    sigma: 0.025,
                }
            }
        }
    }

    /// Draws one event position at phase `tau` in `[0, 1)`.
    fn sample(&self, tau: f64, rng: &mut SeededRng) -> [f64; 2] {
        match *self {
            Trajectory::Blob { start, end, sigma } => [
                start[0] + (end[0] - start[0]) * tau + truncated(rng, sigma),
                start[1] + (end[1] - start[1]) * tau + truncated(rng, sigma),
            ],
            Trajectory::Dipole { center, radius, turns, phase, sigma } => {
                let side = if rng.random::<bool>() { 0.0 } else { std::f64::consts::PI };
                let a = phase + TAU * turns * tau + side;
                [
                    center[0] + radius * a.cos() + truncated(rng, sigma),
                    center[1] + radius * a.sin() + truncated(rng, sigma),
                ]
            }
            Trajectory::Ring { center, r0, r1, sigma } => {
                let r = r0 + (r1 - r0) * tau + truncated(rng, sigma);
                let a = rng.random_range(0.0..TAU);
                [center[0] + r * a.cos(), center[1] + r * a.sin()]
            }
            Trajectory::Zigzag { x0, x1, yc, amp, periods, sigma } => [
                x0 + (x1 - x0) * tau + truncated(rng, sigma),
                yc + amp * triangle(periods * tau) + truncated(rng, sigma),
            ],
        }
    }

    #[cfg(test)]
    fn in_support(&self, tau: f64, p: [f64; 2], slack: f64) -> bool {
        let dist = |c: [f64; 2]| (p[0] - c[0]).hypot(p[1] - c[1]);
        match *self {
            Trajectory::Blob { start, end, sigma } => {
                let c = [start[0] + (end[0] - start[0]) * tau, start[1] + (end[1] - start[1]) * tau];
                dist(c) <= TRUNCATE * sigma * std::f64::consts::SQRT_2 + slack
            }
            _ => unimplemented!("support check only used for blobs"),
        }
    }
}

fn to_pixel(u: f64, size: u16) -> u16 {
    let max = f64::from(size - 1);
    (u * max).round().clamp(0.0, max) as u16
}

fn generate_stream(spec: &SynthSpec, class_idx: usize, seed: u64) -> EventStream {
    let mut rng = seeded(seed);
    let class = spec.classes[class_idx];
    let traj = Trajectory::draw(class, &mut rng);
    let dur_s = spec.duration_us as f64 * 1e-6;

    let count = |rate: f64, rng: &mut SeededRng| -> usize {
        let mean = rate * dur_s;
        if mean <= 0.0 {
            0
        } else {
            Poisson::new(mean).unwrap().sample(rng) as usize
        }
    };
    let n_signal = count(spec.event_rate_hz, &mut rng);
    let n_noise = count(spec.noise_rate_hz, &mut rng);

    let mut events = Vec::with_capacity(n_signal + n_noise);
    for _ in 0..n_signal {
        let t = rng.random_range(0..spec.duration_us);
        let tau = t as f64 / spec.duration_us as f64;
        let [u, v] = traj.sample(tau, &mut rng);
        events.push(Event {
            t,
            x: to_pixel(u, spec.width),
            y: to_pixel(v, spec.height),
            p: rng.random_range(0..=1),
        });
    }
    for _ in 0..n_noise {
        events.push(Event {
            t: rng.random_range(0..spec.duration_us),
            x: rng.random_range(0..spec.width),
            y: rng.random_range(0..spec.height),
            p: rng.random_range(0..=1),
        });
    }
    events.sort_by_key(|e| e.t);
    EventStream {
        width: spec.width,
        height: spec.height,
        events,
        label: Some(class_idx as u32),
    }
}

/// Generates `streams_per_class` labeled streams for every class, class-major.
/// Output depends only on `spec` and `seed`.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<Vec<EventStream>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.classes.len() * spec.streams_per_class);
    for c in 0..spec.classes.len() {
        for i in 0..spec.streams_per_class {
            out.push(generate_stream(spec, c, derive(seed, &[c as u64, i as u64])));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event_io::{write_events, EventFormat};

    fn small_spec() -> SynthSpec {
        SynthSpec {
            streams_per_class: 3,
            duration_us: 200_000,
            event_rate_hz: 5_000.0,
            ..SynthSpec::default()
        }
    }

    #[test]
    fn same_seed_same_bytes() {
        let a = synth_generate(&small_spec(), 9).unwrap();
        let b = synth_generate(&small_spec(), 9).unwrap();
        assert_eq!(a.len(), 12);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(write_events(x, EventFormat::Packed), write_events(y, EventFormat::Packed));
        }
        let c = synth_generate(&small_spec(), 10).unwrap();
        assert_ne!(a[0], c[0]);
    }

    #[test]
    fn noiseless_blob_stays_in_support() {
        let spec = SynthSpec {
            classes: vec![MotionClass::TranslatingBlob, MotionClass::Zigzag],
            noise_rate_hz: 0.0,
            ..small_spec()
        };
        for i in 0..3 {
            let seed = derive(4, &[0, i]);
            let stream = generate_stream(&spec, 0, seed);
            let mut rng = seeded(seed);
            let traj = Trajectory::draw(MotionClass::TranslatingBlob, &mut rng);
            let half_px = 0.5 / f64::from(spec.width - 1) * std::f64::consts::SQRT_2;
            for e in &stream.events {
                let tau = e.t as f64 / spec.duration_us as f64;
                let p = [
                    f64::from(e.x) / f64::from(spec.width - 1),
                    f64::from(e.y) / f64::from(spec.height - 1),
                ];
                assert!(traj.in_support(tau, p, half_px + 1e-12), "{e:?}");
            }
        }
    }

    #[test]
    fn event_counts_follow_poisson_mean() {
        let spec = SynthSpec {
            streams_per_class: 30,
            noise_rate_hz: 0.0,
            ..SynthSpec::default()
        };
        let streams = synth_generate(&spec, 1).unwrap();
        assert_eq!(streams.len(), 120);
        // Poisson(20 000): sd ~ 141, so every count sits within 6 sd.
        let mut total = 0usize;
        for s in &streams {
            assert!(s.len().abs_diff(20_000) < 6 * 142, "{}", s.len());
            assert!(s.is_sorted());
            total += s.len();
        }
        let mean = total as f64 / 120.0;
        assert!((mean - 20_000.0).abs() < 3.0 * 141.4 / (120f64).sqrt() + 1.0, "{mean}");
        let labels: Vec<u32> = streams.iter().map(|s| s.label.unwrap()).collect();
        assert_eq!(labels.iter().filter(|&&l| l == 3).count(), 30);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut s = small_spec();
        s.duration_us = 0;
        assert!(synth_generate(&s, 0).is_err());
        let mut s = small_spec();
        s.event_rate_hz = 0.0;
        assert!(synth_generate(&s, 0).is_err());
        let mut s = small_spec();
        s.classes.truncate(1);
        assert!(synth_generate(&s, 0).is_err());
    }

    #[test]
    fn class_names_round_trip() {
        for c in MotionClass::ALL {
            assert_eq!(c.name().parse::<MotionClass>().unwrap(), c);
        }
    }
}
