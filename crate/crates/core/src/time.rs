//! Nanosecond timestamps and their ISO 8601 rendering.

use chrono::{DateTime, SecondsFormat, Utc};

/// Units string attached to stored timestamp arrays.
pub const TIME_UNITS: &str = "nanoseconds since 1970-01-01T00:00:00Z";

/// `2017-06-01T00:00:00.000000000Z`
pub fn format_iso_ns(ns: i64) -> String {
    DateTime::<Utc>::from_timestamp_nanos(ns).to_rfc3339_opts(SecondsFormat::Nanos, true)
}

pub fn parse_iso_ns(text: &str) -> Option<i64> {
    DateTime::parse_from_rfc3339(text)
        .ok()
        .and_then(|t| t.with_timezone(&Utc).timestamp_nanos_opt())
}

pub fn seconds_to_ns(seconds: f64) -> i64 {
    (seconds * 1e9).round() as i64
}
