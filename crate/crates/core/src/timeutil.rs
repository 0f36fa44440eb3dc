//! Epoch-second time arithmetic shared by all modules.
//!
//! All intervals are half-open `[start, end)`: an event at exactly `end`
//! belongs to the next scope.

use chrono::{TimeZone, Utc};
use serde::{Deserialize, Serialize};

pub const DAY: i64 = 86_400;
pub const WEEK: i64 = 7 * DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeRange {
    pub start: i64,
    pub end: i64,
}

impl TimeRange {
    pub fn new(start: i64, end: i64) -> Self {
        TimeRange { start, end }
    }

    pub fn contains(&self, ts: i64) -> bool {
        ts >= self.start && ts < self.end
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn duration(&self) -> i64 {
        self.end - self.start
    }
}

/// Format an epoch second as a UTC calendar date (the date of the day it
/// falls in).
pub fn iso_date(ts: i64) -> String {
    Utc.timestamp_opt(ts, 0)
        .single()
        .map(|dt| dt.format("%Y-%m-%d").to_string())
        .unwrap_or_else(|| format!("@{ts}"))
}

/// Parse either an epoch-second integer or a `YYYY-MM-DD` date (midnight
/// UTC) into an epoch second.
pub fn parse_instant(s: &str) -> Option<i64> {
    if let Ok(n) = s.parse::<i64>() {
        return Some(n);
    }
    let date = chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").ok()?;
    Some(date.and_hms_opt(0, 0, 0)?.and_utc().timestamp())
}
