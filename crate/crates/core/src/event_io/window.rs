use super::{Event, EventStream};
use crate::error::{Error, Result};

/// A fixed-length slice `[t_start, t_end)` of a parent stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowClip<'a> {
    pub t_start: u64,
    pub t_end: u64,
    pub events: &'a [Event],
    pub source_id: usize,
}

impl WindowClip<'_> {
    pub fn length_us(&self) -> u64 {
        self.t_end - self.t_start
    }
}

/// Points in the unit cube; columns are x, y and normalized time.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointSample {
    pub points: Vec<[f64; 3]>,
}

impl PointSample {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Cuts a sorted stream into windows of `length_us` with `overlap_us`
/// shared between neighbours.
///
/// Windows start at the first event and advance by `length_us - overlap_us`;
/// a window is produced only when it fits entirely inside the stream's span.
/// Intervals are half-open, so an event on a boundary belongs to the later
/// window.
pub fn slice_windows(
    stream: &EventStream,
    length_us: u64,
    overlap_us: u64,
    source_id: usize,
) -> Result<Vec<WindowClip<'_>>> {
    if length_us == 0 {
        return Err(Error::config("window length must be positive"));
    }
    if overlap_us >= length_us {
        return Err(Error::config(format!(
            "overlap {overlap_us} us must be smaller than window length {length_us} us"
        )));
    }
    debug_assert!(stream.is_sorted());
    let stride = length_us - overlap_us;
    let span = stream.span_us();
    if span < length_us {
        return Ok(Vec::new());
    }
    let t0 = stream.events[0].t;
    let count = (span - length_us) / stride + 1;

    let events = &stream.events;
    let mut clips = Vec::with_capacity(count as usize);
    let mut lo = 0usize;
    for w in 0..count {
        let t_start = t0 + w * stride;
        let t_end = t_start + length_us;
        lo += events[lo..].partition_point(|e| e.t < t_start);
        let hi = lo + events[lo..].partition_point(|e| e.t < t_end);
        clips.push(WindowClip {
            t_start,
            t_end,
            events: &events[lo..hi],
            source_id,
        });
    }
    Ok(clips)
}

/// Maps a clip into the unit cube, dropping polarity.
///
/// `x / (width - 1)`, `y / (height - 1)` and `z = (t - t_start) / L` using the
/// clip's nominal bounds.
pub fn normalize_window(clip: &WindowClip<'_>, width: u16, height: u16) -> Result<PointSample> {
    if clip.events.is_empty() {
        return Err(Error::Degenerate(format!(
            "window [{}, {}) of stream {} has no events",
            clip.t_start, clip.t_end, clip.source_id
        )));
    }
    if width < 2 || height < 2 {
        return Err(Error::config(format!(
            "sensor {width}x{height} is too small to normalize"
        )));
    }
    let sx = 1.0 / f64::from(width - 1);
    let sy = 1.0 / f64::from(height - 1);
    let sz = 1.0 / clip.length_us() as f64;
    let points = clip
        .events
        .iter()
        .map(|e| {
            [
                f64::from(e.x) * sx,
                f64::from(e.y) * sy,
                (e.t - clip.t_start) as f64 * sz,
            ]
        })
        .collect();
    Ok(PointSample { points })
}
