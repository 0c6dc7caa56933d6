use std::fmt::Write as _;

use super::{Event, EventStream};
use crate::error::{Error, Result};

pub const PACKED_MAGIC: &[u8; 4] = b"EVS1";
pub const PACKED_HEADER_LEN: usize = 16;
/// u64 t, u16 x, u16 y, u8 p.
pub const PACKED_RECORD_LEN: usize = 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    /// `t,x,y,p` lines. The sensor size is taken from a `# width=W,height=H`
    /// comment when present, otherwise from these fields.
    Csv { width: u16, height: u16 },
    /// 16-byte header (`EVS1`, u16 width, u16 height, u64 count) followed by
    /// 13-byte little-endian records.
    Packed,
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

fn check_geometry(width: u16, height: u16) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::config(format!(
            "sensor size {width}x{height} has a zero dimension"
        )));
    }
    Ok(())
}

fn check_event(ev: &Event, width: u16, height: u16, offset: usize) -> Result<()> {
    if ev.x >= width || ev.y >= height {
        return Err(parse_err(
            offset,
            format!(
                "event ({}, {}) outside {width}x{height} sensor",
                ev.x, ev.y
            ),
        ));
    }
    if ev.p > 1 {
        return Err(parse_err(offset, format!("polarity {} not in {{0, 1}}", ev.p)));
    }
    Ok(())
}

/// Parses an event stream. Unsorted input is stable-sorted by timestamp.
pub fn parse_events(bytes: &[u8], format: EventFormat) -> Result<EventStream> {
    let mut stream = match format {
        EventFormat::Csv { width, height } => parse_csv(bytes, width, height)?,
        EventFormat::Packed => parse_packed(bytes)?,
    };
    if !stream.is_sorted() {
        stream.events.sort_by_key(|e| e.t);
    }
    Ok(stream)
}

fn parse_geometry_comment(body: &str) -> Option<(u16, u16)> {
    let mut w = None;
    let mut h = None;
    for part in body.split(',') {
        let (k, v) = part.split_once('=')?;
        match k.trim() {
            "width" => w = v.trim().parse().ok(),
            "height" => h = v.trim().parse().ok(),
            _ => {}
        }
    }
    Some((w?, h?))
}

fn parse_csv(bytes: &[u8], mut width: u16, mut height: u16) -> Result<EventStream> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| parse_err(e.valid_up_to(), "csv is not valid UTF-8"))?;

    let mut offset = 0usize;
    let mut records = Vec::new();
    for raw in text.split_inclusive('\n') {
        let line_start = offset;
        offset += raw.len();
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((w, h)) = parse_geometry_comment(comment) {
                width = w;
                height = h;
            }
            continue;
        }
        if line.eq_ignore_ascii_case("t,x,y,p") {
            continue;
        }
        records.push((line_start, line));
    }
    check_geometry(width, height)?;

    let mut events = Vec::with_capacity(records.len());
    for (line_start, line) in records {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(parse_err(
                line_start,
                format!("expected 4 fields `t,x,y,p`, found {}", fields.len()),
            ));
        }
        let bad = |name: &str, v: &str| parse_err(line_start, format!("bad {name} `{v}`"));
        let ev = Event {
            t: fields[0].parse().map_err(|_| bad("t", fields[0]))?,
            x: fields[1].parse().map_err(|_| bad("x", fields[1]))?,
            y: fields[2].parse().map_err(|_| bad("y", fields[2]))?,
            p: fields[3].parse().map_err(|_| bad("p", fields[3]))?,
        };
        check_event(&ev, width, height, line_start)?;
        events.push(ev);
    }
    Ok(EventStream {
        width,
        height,
        events,
        label: None,
    })
}

fn parse_packed(bytes: &[u8]) -> Result<EventStream> {
    if bytes.len() < PACKED_HEADER_LEN {
        return Err(parse_err(
            bytes.len(),
            format!("header needs {PACKED_HEADER_LEN} bytes, have {}", bytes.len()),
        ));
    }
    if &bytes[0..4] != PACKED_MAGIC {
        return Err(parse_err(0, "missing EVS1 magic"));
    }
    let width = u16::from_le_bytes([bytes[4], bytes[5]]);
    let height = u16::from_le_bytes([bytes[6], bytes[7]]);
    let count = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    check_geometry(width, height)?;

    let body = &bytes[PACKED_HEADER_LEN..];
    let expected = count
        .checked_mul(PACKED_RECORD_LEN)
        .ok_or_else(|| parse_err(8, "event count overflows"))?;
    if body.len() != expected {
        let at = PACKED_HEADER_LEN + (body.len() / PACKED_RECORD_LEN) * PACKED_RECORD_LEN;
        return Err(parse_err(
            at,
            format!(
                "header declares {count} records ({expected} bytes), body has {} bytes",
                body.len()
            ),
        ));
    }

    let mut events = Vec::with_capacity(count);
    for (i, rec) in body.chunks_exact(PACKED_RECORD_LEN).enumerate() {
        let ev = Event {
            t: u64::from_le_bytes(rec[0..8].try_into().unwrap()),
            x: u16::from_le_bytes([rec[8], rec[9]]),
            y: u16::from_le_bytes([rec[10], rec[11]]),
            p: rec[12],
        };
        check_event(&ev, width, height, PACKED_HEADER_LEN + i * PACKED_RECORD_LEN)?;
        events.push(ev);
    }
    Ok(EventStream {
        width,
        height,
        events,
        label: None,
    })
}

/// Serializes a stream. For [`EventFormat::Packed`] this is the exact
/// inverse of [`parse_events`] on sorted input.
pub fn write_events(stream: &EventStream, format: EventFormat) -> Vec<u8> {
    match format {
        EventFormat::Packed => {
            let mut out =
                Vec::with_capacity(PACKED_HEADER_LEN + stream.events.len() * PACKED_RECORD_LEN);
            out.extend_from_slice(PACKED_MAGIC);
            out.extend_from_slice(&stream.width.to_le_bytes());
            out.extend_from_slice(&stream.height.to_le_bytes());
            out.extend_from_slice(&(stream.events.len() as u64).to_le_bytes());
            for ev in &stream.events {
                out.extend_from_slice(&ev.t.to_le_bytes());
                out.extend_from_slice(&ev.x.to_le_bytes());
                out.extend_from_slice(&ev.y.to_le_bytes());
                out.push(ev.p);
            }
            out
        }
        EventFormat::Csv { .. } => {
            let mut s = String::with_capacity(16 * stream.events.len() + 40);
            let _ = writeln!(s, "# width={},height={}", stream.width, stream.height);
            s.push_str("t,x,y,p\n");
            for ev in &stream.events {
                let _ = writeln!(s, "{},{},{},{}", ev.t, ev.x, ev.y, ev.p);
            }
            s.into_bytes()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV128: EventFormat = EventFormat::Csv {
        width: 128,
        height: 128,
    };

    #[test]
    fn empty_csv_body() {
        let s = parse_events(b"t,x,y,p\n", CSV128).unwrap();
        assert_eq!((s.width, s.height, s.len()), (128, 128, 0));
    }

    #[test]
    fn single_csv_line() {
        let s = parse_events(b"5,3,7,1", CSV128).unwrap();
        assert_eq!(s.events, vec![Event::new(5, 3, 7, 1)]);
    }

    #[test]
    fn csv_line_output() {
        let mut s = EventStream::new(128, 128);
        s.events.push(Event::new(5, 3, 7, 1));
        let text = String::from_utf8(write_events(&s, CSV128)).unwrap();
        assert!(text.lines().any(|l| l == "5,3,7,1"));
        assert_eq!(parse_events(text.as_bytes(), CSV128).unwrap(), s);
    }

    #[test]
    fn csv_geometry_comment_wins() {
        let s = parse_events(b"# width=10,height=4\n9,9,3,0\n", CSV128).unwrap();
        assert_eq!((s.width, s.height), (10, 4));
        assert!(parse_events(b"# width=10,height=4\n9,10,3,0\n", CSV128).is_err());
    }

    #[test]
    fn malformed_csv_reports_offset() {
        let err = parse_events(b"1,2,3,0\n5,x,7,1\n", CSV128).unwrap_err();
        match err {
            Error::Parse { offset, .. } => assert_eq!(offset, 8),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn out_of_bounds_rejected() {
        assert!(parse_events(b"1,128,0,0", CSV128).is_err());
        assert!(parse_events(b"1,0,0,2", CSV128).is_err());
    }

    #[test]
    fn zero_geometry_is_config_error() {
        let r = parse_events(b"", EventFormat::Csv { width: 0, height: 5 });
        assert!(matches!(r, Err(Error::Config(_))));
        let mut hdr = Vec::from(&PACKED_MAGIC[..]);
        hdr.extend_from_slice(&0u16.to_le_bytes());
        hdr.extend_from_slice(&8u16.to_le_bytes());
        hdr.extend_from_slice(&0u64.to_le_bytes());
        assert!(matches!(parse_events(&hdr, EventFormat::Packed), Err(Error::Config(_))));
    }

    #[test]
    fn unsorted_input_is_stably_sorted() {
        let s = parse_events(b"9,1,1,0\n3,2,2,1\n3,0,0,0\n", CSV128).unwrap();
        let got: Vec<(u64, u16)> = s.events.iter().map(|e| (e.t, e.x)).collect();
        assert_eq!(got, vec![(3, 2), (3, 0), (9, 1)]);
    }

    #[test]
    fn header_only_packed() {
        let s = EventStream::new(64, 32);
        let bytes = write_events(&s, EventFormat::Packed);
        assert_eq!(bytes.len(), PACKED_HEADER_LEN);
        assert_eq!(parse_events(&bytes, EventFormat::Packed).unwrap(), s);
    }

    #[test]
    fn truncated_packed_is_parse_error() {
        let mut s = EventStream::new(64, 32);
        s.events.push(Event::new(1, 2, 3, 1));
        let bytes = write_events(&s, EventFormat::Packed);
        let r = parse_events(&bytes[..bytes.len() - 1], EventFormat::Packed);
        assert!(matches!(r, Err(Error::Parse { offset: 16, .. })));
        assert!(parse_events(b"EVS0", EventFormat::Packed).is_err());
    }
}
