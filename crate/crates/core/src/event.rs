use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign of a brightness change. Orders `Negative < Positive`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Negative => -1,
            Polarity::Positive => 1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.sign() as f64
    }

    /// Polarity of a nonzero real number; `None` for zero or NaN.
    pub fn of(value: f64) -> Option<Self> {
        if value > 0.0 {
            Some(Polarity::Positive)
        } else if value < 0.0 {
            Some(Polarity::Negative)
        } else {
            None
        }
    }

    pub fn from_sign(sign: i64) -> Result<Self> {
        match sign {
            1 => Ok(Polarity::Positive),
            -1 => Ok(Polarity::Negative),
            other => Err(Error::Domain(format!("polarity must be -1 or 1, got {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub t: f64,
    pub x: u32,
    pub y: u32,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: f64, x: u32, y: u32, p: Polarity) -> Self {
        Self { t, x, y, p }
    }

    /// Canonical order: time, then row, then column, then polarity.
    pub fn canonical_cmp(&self, other: &Event) -> Ordering {
        self.t
            .total_cmp(&other.t)
            .then(self.y.cmp(&other.y))
            .then(self.x.cmp(&other.x))
            .then(self.p.cmp(&other.p))
    }
}

/// Sensor geometry and time span that an event stream refers to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamMeta {
    pub width: u32,
    pub height: u32,
    /// Time between the first and last frame, in seconds.
    pub duration: f64,
    pub frame_count: usize,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    pub events: Vec<Event>,
    pub meta: StreamMeta,
}

impl EventStream {
    pub fn new(events: Vec<Event>, meta: StreamMeta) -> Self {
        Self { events, meta }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn count(&self, p: Polarity) -> usize {
        self.events.iter().filter(|e| e.p == p).count()
    }

    pub fn is_canonical(&self) -> bool {
        self.events
            .windows(2)
            .all(|w| w[0].canonical_cmp(&w[1]) != Ordering::Greater)
    }

    /// Checks that every event lies on the sensor.
    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.events.iter().enumerate() {
            if e.x >= self.meta.width || e.y >= self.meta.height {
                return Err(Error::Input(format!(
                    "event {i} at ({}, {}) outside {}x{} sensor",
                    e.x, e.y, self.meta.width, self.meta.height
                )));
            }
            if !e.t.is_finite() {
                return Err(Error::Input(format!("event {i} has non-finite time")));
            }
        }
        Ok(())
    }
}

/// Stable sort into canonical `(t, y, x, p)` order.
pub fn canonical_sort(mut stream: EventStream) -> EventStream {
    stream.events.sort_by(Event::canonical_cmp);
    stream
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn meta() -> StreamMeta {
        StreamMeta {
            width: 8,
            height: 8,
            duration: 1.0,
            frame_count: 11,
            dt: 0.1,
        }
    }

    #[test]
    fn empty_stream_sorts_to_empty() {
        let s = canonical_sort(EventStream::new(vec![], meta()));
        assert!(s.is_empty());
    }

    #[test]
    fn reversed_stream_sorts_by_time_row_column_polarity() {
        use Polarity::*;
        let sorted = vec![
            Event::new(0.1, 5, 0, Positive),
            Event::new(0.1, 2, 1, Negative),
            Event::new(0.1, 2, 1, Positive),
            Event::new(0.1, 3, 1, Negative),
            Event::new(0.2, 0, 0, Negative),
        ];
        let mut reversed = sorted.clone();
        reversed.reverse();
        let out = canonical_sort(EventStream::new(reversed, meta()));
        assert_eq!(out.events, sorted);
        let again = canonical_sort(out.clone());
        assert_eq!(again, out);
    }

    #[test]
    fn polarity_from_sign() {
        assert_eq!(Polarity::from_sign(1).unwrap(), Polarity::Positive);
        assert_eq!(Polarity::from_sign(-1).unwrap(), Polarity::Negative);
        assert!(Polarity::from_sign(0).is_err());
        assert_eq!(Polarity::of(0.0), None);
    }

    fn arb_event() -> impl Strategy<Value = Event> {
        (0u32..4, 0u32..8, 0u32..8, any::<bool>()).prop_map(|(k, x, y, pos)| {
            Event::new(
                k as f64 * 0.1,
                x,
                y,
                if pos { Polarity::Positive } else { Polarity::Negative },
            )
        })
    }

    proptest! {
        #[test]
        fn canonical_sort_is_idempotent_permutation(events in prop::collection::vec(arb_event(), 0..60)) {
            let once = canonical_sort(EventStream::new(events.clone(), meta()));
            prop_assert!(once.is_canonical());
            let twice = canonical_sort(once.clone());
            prop_assert_eq!(&twice, &once);

            let key = |e: &Event| (e.t.to_bits(), e.x, e.y, e.p);
            let mut a: Vec<_> = events.iter().map(key).collect();
            let mut b: Vec<_> = once.events.iter().map(key).collect();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }
}
