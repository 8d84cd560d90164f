//! The in-memory dataset and its grid types.

mod bits;
mod echodata;
mod grid;

use thiserror::Error;

pub use bits::BitEq;
pub use echodata::{
    build_echodata, Beam, EchoData, Environment, FixSource, GeoTrack, PingSettings, Platform, Provenance, Sonar,
    SourceMeta, TopLevel, Vendor, GROUP_NAMES,
};
pub use grid::{align_ragged, AcquiredPing, ChannelPings, LabeledGrid, Mask, PingLayout, GRID_DIMS};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no channels or a channel without pings")]
    EmptyInput,
    #[error("the file holds no pings")]
    NoPings,
    #[error("ping time {time_ns} appears twice on {frequency_hz} Hz")]
    DuplicatePingTime { frequency_hz: f64, time_ns: i64 },
    #[error("two channels share frequency {0} Hz")]
    DuplicateFrequency(f64),
    #[error("ping on channel {0} has no transducer configuration")]
    ChannelWithoutConfig(i16),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
}

/// dB per raw power count.
pub const POWER_DB_PER_COUNT: f64 = 10.0 * std::f64::consts::LOG10_2 / 256.0;

pub fn power_counts_to_db(count: i16) -> f64 {
    count as f64 * POWER_DB_PER_COUNT
}

/// Electrical angle in degrees for a raw angle count.
pub fn angle_counts_to_deg(count: i8) -> f64 {
    count as f64 * 180.0 / 128.0
}
