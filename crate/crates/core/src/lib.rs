//! Conversion of echosounder raw files into a standardized, labeled and
//! chunked dataset, plus the instrument-agnostic processing chain built on it:
//! calibration to Sv/TS, timestamp repair, MVBS bin-averaging, frequency
//! differencing, vertical-distribution metrics and echogram rasters.
//!
//! The usual flow is
//!
//! ```text
//! raw bytes --convert--> EchoData --store--> Zarr v2 tree
//!                          |
//!                          +--calibrate--> SvGrid --process/metrics/echogram
//! ```

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod convert;
pub mod datagram;
pub mod echogram;
pub mod fixture;
pub mod metrics;
pub mod model;
pub mod parallel;
pub mod process;
pub mod store;
pub mod time;

pub use calibrate::{CalOverrides, CalParams, SvGrid};
pub use convert::{convert_raw, ConvertOptions, GeoTrack};
pub use datagram::{Datagram, NmeaSentence, PingRecord, SonarConfig, TransducerConfig};
pub use model::{EchoData, LabeledGrid, Mask};
pub use process::{MvbsParams, PingBin, TimeRepairReport};

/// Tool name recorded in provenance metadata.
pub const SOFTWARE_NAME: &str = "echograin";
/// Tool version recorded in provenance metadata and printed by `--version`.
pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");
