use proptest::prelude::*;
use spikecloud::event_io::{parse_events, write_events, Event, EventFormat, EventStream};

fn stream_strategy() -> impl Strategy<Value = EventStream> {
    (1u16..300, 1u16..300).prop_flat_map(|(w, h)| {
        prop::collection::vec((0u64..1 << 40, 0..w, 0..h, 0u8..2), 0..200).prop_map(move |raw| {
            let mut events: Vec<Event> = raw.into_iter().map(|(t, x, y, p)| Event::new(t, x, y, p)).collect();
            events.sort_by_key(|e| e.t);
            EventStream {
                width: w,
                height: h,
                events,
                label: None,
            }
        })
    })
}

proptest! {
    #[test]
    fn packed_round_trip(s in stream_strategy()) {
        let back = parse_events(&write_events(&s, EventFormat::Packed), EventFormat::Packed).unwrap();
        prop_assert_eq!(back.width, s.width);
        prop_assert_eq!(back.height, s.height);
        prop_assert_eq!(back.events, s.events);
    }

    #[test]
    fn csv_round_trip(s in stream_strategy()) {
        let fmt = EventFormat::Csv { width: s.width, height: s.height };
        let back = parse_events(&write_events(&s, fmt), fmt).unwrap();
        prop_assert_eq!(back.events, s.events);
    }

    #[test]
    fn truncated_packed_never_panics(s in stream_strategy(), cut in 0usize..4000) {
        let bytes = write_events(&s, EventFormat::Packed);
        let cut = cut.min(bytes.len());
        let r = parse_events(&bytes[..cut], EventFormat::Packed);
        if cut < bytes.len() {
            prop_assert!(r.is_err());
        }
    }
}
