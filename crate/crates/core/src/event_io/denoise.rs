use super::{Event, EventStream};

fn neighbours(a: &Event, b: &Event, radius_px: u16) -> bool {
    a.x.abs_diff(b.x) <= radius_px && a.y.abs_diff(b.y) <= radius_px
}

/// Spatio-temporal density filter.
///
/// An event survives when at least `k_min` *other surviving* events lie
/// within Chebyshev distance `radius_px` and time distance `dt_us`. Removal is
/// repeated until nothing changes, so the result is the largest subset in
/// which every event has `k_min` neighbours and the filter is idempotent.
/// Event order is preserved.
pub fn denoise(stream: &EventStream, radius_px: u16, dt_us: u64, k_min: usize) -> EventStream {
    debug_assert!(stream.is_sorted());
    let mut kept: Vec<Event> = stream.events.clone();
    loop {
        let n = kept.len();
        let mut keep = vec![false; n];
        let mut lo = 0usize;
        let mut hi = 0usize;
        for i in 0..n {
            let t = kept[i].t;
            while kept[lo].t + dt_us < t {
                lo += 1;
            }
            while hi < n && kept[hi].t <= t + dt_us {
                hi += 1;
            }
            let mut count = 0usize;
            for j in lo..hi {
                if j != i && neighbours(&kept[i], &kept[j], radius_px) {
                    count += 1;
                    if count >= k_min {
                        break;
                    }
                }
            }
            keep[i] = count >= k_min;
        }
        if keep.iter().all(|&k| k) {
            break;
        }
        kept = kept
            .into_iter()
            .zip(keep)
            .filter_map(|(e, k)| k.then_some(e))
            .collect();
    }
    EventStream {
        width: stream.width,
        height: stream.height,
        events: kept,
        label: stream.label,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    /// O(n^2) reference: recount every pair among survivors until stable.
    fn brute_force(events: &[Event], r: u16, dt: u64, k: usize) -> Vec<Event> {
        let mut cur = events.to_vec();
        loop {
            let next: Vec<Event> = cur
                .iter()
                .enumerate()
                .filter(|(i, a)| {
                    cur.iter()
                        .enumerate()
                        .filter(|(j, b)| {
                            j != i
                                && a.t.abs_diff(b.t) <= dt
                                && (a.x as i32 - b.x as i32).abs() <= r as i32
                                && (a.y as i32 - b.y as i32).abs() <= r as i32
                        })
                        .count()
                        >= k
                })
                .map(|(_, e)| *e)
                .collect();
            if next.len() == cur.len() {
                return next;
            }
            cur = next;
        }
    }

    fn stream(events: Vec<Event>) -> EventStream {
        EventStream {
            width: 64,
            height: 64,
            events,
            label: None,
        }
    }

    #[test]
    fn isolated_event_removed() {
        let s = stream(vec![Event::new(10, 5, 5, 1)]);
        assert!(denoise(&s, 1, 100, 1).is_empty());
    }

    #[test]
    fn dense_burst_kept() {
        let s = stream((0..10).map(|i| Event::new(100 + i, 20, 20, 0)).collect());
        assert_eq!(denoise(&s, 1, 50, 3).len(), 10);
    }

    #[test]
    fn matches_brute_force_and_is_idempotent() {
        let mut rng = crate::rng::seeded(5);
        for trial in 0..5 {
            let mut evs: Vec<Event> = (0..500)
                .map(|_| {
                    Event::new(
                        rng.random_range(0..20_000),
                        rng.random_range(0..24),
                        rng.random_range(0..24),
                        rng.random_range(0..=1),
                    )
                })
                .collect();
            evs.sort_by_key(|e| e.t);
            let s = stream(evs);
            let (r, dt, k) = (1 + trial % 2, 1_000 + 500 * trial as u64, 1 + trial as usize % 3);
            let out = denoise(&s, r, dt, k);
            assert_eq!(out.events, brute_force(&s.events, r, dt, k), "trial {trial}");
            assert_eq!(denoise(&out, r, dt, k), out);
        }
    }
}
