//! Event streams: formats, synthetic generation, denoising and windowing.

mod denoise;
mod format;
mod manifest;
mod synth;
mod window;

pub use denoise::denoise;
pub use format::{parse_events, write_events, EventFormat, PACKED_HEADER_LEN, PACKED_MAGIC, PACKED_RECORD_LEN};
pub use manifest::{read_manifest, write_manifest, ManifestEntry, Split};
pub use synth::{synth_generate, MotionClass, SynthSpec};
pub use window::{normalize_window, slice_windows, PointSample, WindowClip};

use serde::{Deserialize, Serialize};

/// One sensor event: timestamp in microseconds, pixel coordinates and polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub p: u8,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, p: u8) -> Self {
        Event { t, x, y, p }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    pub width: u16,
    pub height: u16,
    pub events: Vec<Event>,
    pub label: Option<u32>,
}

impl EventStream {
    pub fn new(width: u16, height: u16) -> Self {
        EventStream {
            width,
            height,
            events: Vec::new(),
            label: None,
        }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// `t_last - t_first + 1` in microseconds; zero for an empty stream.
    ///
    /// Timestamps are integer microseconds, so a stream whose last event is
    /// at `t_last` occupies `[t_first, t_last + 1)`.
    pub fn span_us(&self) -> u64 {
        match (self.events.first(), self.events.last()) {
            (Some(a), Some(b)) => b.t - a.t + 1,
            _ => 0,
        }
    }

    pub fn is_sorted(&self) -> bool {
        self.events.windows(2).all(|w| w[0].t <= w[1].t)
    }
}
