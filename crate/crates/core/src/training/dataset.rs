use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_io::{
    denoise, normalize_window, parse_events, read_manifest, slice_windows, EventFormat, EventStream, Split,
};
use crate::pointcloud::{group_window, GroupedInput, GroupingConfig};
use crate::rng::{derive, seeded};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowConfig {
    pub length_us: u64,
    pub overlap_us: u64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        WindowConfig {
            length_us: 500_000,
            overlap_us: 250_000,
        }
    }
}

/// Spatio-temporal neighbour filter settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    pub radius_px: u16,
    pub dt_us: u64,
    pub k_min: usize,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig {
            radius_px: 1,
            dt_us: 5_000,
            k_min: 1,
        }
    }
}

/// Everything needed to turn a stream into network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub window: WindowConfig,
    pub grouping: GroupingConfig,
    pub denoise: Option<DenoiseConfig>,
}

/// A stream cut into grouped windows.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedStream {
    pub id: usize,
    pub label: usize,
    pub windows: Vec<GroupedInput>,
    /// Windows dropped because they held no events.
    pub empty_windows: usize,
}

/// Windows of one stream, grouped with seeds derived from `(seed, id, w)`.
/// Empty windows are skipped.
pub fn prepare_stream(stream: &EventStream, id: usize, pre: &Preprocess, seed: u64) -> Result<PreparedStream> {
    let label = stream
        .label
        .ok_or_else(|| Error::Degenerate(format!("stream {id} has no label")))? as usize;
    let cleaned;
    let source = match pre.denoise {
        Some(d) => {
            cleaned = denoise(stream, d.radius_px, d.dt_us, d.k_min);
            &cleaned
        }
        None => stream,
    };
    let clips = slice_windows(source, pre.window.length_us, pre.window.overlap_us, id)?;
    let mut windows = Vec::with_capacity(clips.len());
    let mut empty_windows = 0;
    for (w, clip) in clips.iter().enumerate() {
        if clip.events.is_empty() {
            empty_windows += 1;
            continue;
        }
        let sample = normalize_window(clip, source.width, source.height)?;
        windows.push(group_window(&sample, &pre.grouping, derive(seed, &[id as u64, w as u64]))?);
    }
    Ok(PreparedStream {
        id,
        label,
        windows,
        empty_windows,
    })
}

/// Seeded stream-level split: `round(test_fraction * n)` streams go to the
/// test side. Both index lists are sorted.
pub fn split_indices(n: usize, test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seeded(seed));
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let (test, train) = idx.split_at(n_test.min(n));
    let (mut train, mut test) = (train.to_vec(), test.to_vec());
    train.sort_unstable();
    test.sort_unstable();
    (train, test)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub classes: usize,
    pub train: Vec<PreparedStream>,
    pub test: Vec<PreparedStream>,
}

impl Dataset {
    /// `(stream index, window index)` of every training window.
    pub fn train_windows(&self) -> Vec<(usize, usize)> {
        self.train
            .iter()
            .enumerate()
            .flat_map(|(s, p)| (0..p.windows.len()).map(move |w| (s, w)))
            .collect()
    }
}

/// Streams with an optional fixed split (from a manifest).
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSet {
    pub streams: Vec<EventStream>,
    pub splits: Option<Vec<Split>>,
}

/// Reads every file of a manifest. `.csv` files are parsed as CSV, anything
/// else as the packed binary format.
pub fn load_manifest(path: &Path) -> Result<StreamSet> {
    let entries = read_manifest(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut streams = Vec::with_capacity(entries.len());
    for e in &entries {
        let file = base.join(&e.path);
        let bytes = std::fs::read(&file).map_err(|err| Error::io(&file, err))?;
        let format = if file.extension().is_some_and(|x| x == "csv") {
            EventFormat::Csv { width: 128, height: 128 }
        } else {
            EventFormat::Packed
        };
        let mut s = parse_events(&bytes, format)?;
        s.label = Some(e.label);
        streams.push(s);
    }
    Ok(StreamSet {
        streams,
        splits: Some(entries.iter().map(|e| e.split).collect()),
    })
}

/// Splits and preprocesses a stream set. Streams that yield no window are
/// left out of training; on the test side they are an error, since they
/// could not be evaluated.
pub fn build_dataset(set: &StreamSet, pre: &Preprocess, test_fraction: f64, seed: u64) -> Result<Dataset> {
    let n = set.streams.len();
    let (train_idx, test_idx) = match &set.splits {
        Some(splits) => (
            (0..n).filter(|&i| splits[i] == Split::Train).collect(),
            (0..n).filter(|&i| splits[i] == Split::Test).collect(),
        ),
        None => split_indices(n, test_fraction, derive(seed, &[0])),
    };
    let classes = set
        .streams
        .iter()
        .filter_map(|s| s.label)
        .max()
        .map_or(0, |m| m as usize + 1);
    let group_seed = derive(seed, &[1]);
    let mut train = Vec::new();
    for &i in &train_idx {
        let p = prepare_stream(&set.streams[i], i, pre, group_seed)?;
        if !p.windows.is_empty() {
            train.push(p);
        }
    }
    let test = test_idx
        .iter()
        .map(|&i| {
            let p = prepare_stream(&set.streams[i], i, pre, group_seed)?;
            if p.windows.is_empty() {
                return Err(Error::Degenerate(format!("test stream {i} yields no windows")));
            }
            Ok(p)
        })
        .collect::<Result<Vec<_>>>()?;
    if train.is_empty() {
        return Err(Error::Degenerate("no training windows".into()));
    }
    Ok(Dataset { classes, train, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_seeded_and_disjoint() {
        let (a, b) = split_indices(120, 0.2, 5);
        assert_eq!(b.len(), 24);
        assert_eq!(a.len(), 96);
        assert!(a.iter().all(|i| !b.contains(i)));
        assert_eq!(split_indices(120, 0.2, 5), (a, b.clone()));
        assert_ne!(split_indices(120, 0.2, 6).1, b);
    }
}
