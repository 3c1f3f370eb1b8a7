//! Time source abstraction.
//!
//! Scripted (replay) campaigns must be byte-reproducible, so everything
//! that stamps a persona or a turn takes a [`Clock`] instead of calling
//! `Utc::now()` directly.

use std::sync::Mutex;

use chrono::{DateTime, TimeZone, Utc};

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

/// Wall clock.
#[derive(Debug, Default)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Deterministic clock: starts at a fixed epoch and advances by a fixed
/// step on every call. Used whenever all backends are scripted.
#[derive(Debug)]
pub struct FixedClock {
    next: Mutex<i64>,
    step_secs: i64,
}

impl FixedClock {
    pub fn new(start: DateTime<Utc>, step_secs: i64) -> Self {
        Self {
            next: Mutex::new(start.timestamp()),
            step_secs,
        }
    }

    /// 2025-01-01T00:00:00Z, one second per tick.
    pub fn replay_default() -> Self {
        let start = Utc.with_ymd_and_hms(2025, 1, 1, 0, 0, 0).unwrap();
        Self::new(start, 1)
    }
}

impl Clock for FixedClock {
    fn now(&self) -> DateTime<Utc> {
        let mut next = self.next.lock().unwrap();
        let ts = *next;
        *next += self.step_secs;
        Utc.timestamp_opt(ts, 0).unwrap()
    }
}
