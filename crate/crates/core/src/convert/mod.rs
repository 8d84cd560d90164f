//! Raw byte stream to [`EchoData`], plus navigation helpers.

mod source;

use std::collections::BTreeMap;
use std::io::Read;

use thiserror::Error;

pub use crate::model::GeoTrack;
pub use source::{is_http, open_byte_source, open_byte_source_with, ByteSource, HttpOptions, SourceError};

use crate::datagram::{
    parse_record, DatagramReader, FrameError, NmeaSentence, Record, RecordError, SonarConfig,
    DEFAULT_MAX_DATAGRAM_BYTES,
};
use crate::model::{build_echodata, AcquiredPing, EchoData, FixSource, LabeledGrid, ModelError, SourceMeta};

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error("RAW0 datagram at byte {offset} precedes any CON0 configuration")]
    NoConfiguration { offset: u64 },
    #[error("byte {offset}: {source}")]
    Parse {
        offset: u64,
        #[source]
        source: RecordError,
    },
    #[error("byte {offset}: timestamp {timestamp_ns} ns cannot be represented after 1970 +/- 292 years")]
    TimestampOutOfRange { offset: u64, timestamp_ns: i128 },
    #[error("byte {offset}: read failed: {source}")]
    Read {
        offset: u64,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PositionError {
    #[error("malformed coordinate {0:?}")]
    MalformedCoordinate(String),
}

#[derive(Debug, Clone)]
pub struct ConvertOptions {
    pub max_datagram_bytes: u32,
    /// Recorded in provenance; defaults to nothing.
    pub source_filename: Option<String>,
    /// ISO 8601 conversion time; see [`conversion_time`] for the default.
    pub conversion_time: Option<String>,
    pub sonar_model: String,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        ConvertOptions {
            max_datagram_bytes: DEFAULT_MAX_DATAGRAM_BYTES,
            source_filename: None,
            conversion_time: None,
            sonar_model: "EK60".into(),
        }
    }
}

/// Current UTC time, or `SOURCE_DATE_EPOCH` when set, for reproducible output.
pub fn conversion_time() -> String {
    let ns = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .map(|s| s.saturating_mul(1_000_000_000))
        .unwrap_or_else(|| chrono::Utc::now().timestamp_nanos_opt().unwrap_or(0));
    crate::time::format_iso_ns(ns)
}

fn parse_coordinate(text: &str, hemi: &str, is_lat: bool) -> Result<Option<f64>, PositionError> {
    let malformed = || PositionError::MalformedCoordinate(format!("{text},{hemi}"));
    if text.is_empty() || hemi.is_empty() {
        return Ok(None);
    }
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    if int.len() < 3 || !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(malformed());
    }
    let split = int.len() - 2;
    let deg: f64 = int[..split].parse().map_err(|_| malformed())?;
    let min: f64 = text[split..].parse().map_err(|_| malformed())?;
    if min >= 60.0 {
        return Err(malformed());
    }
    let v = deg + min / 60.0;
    let (pos, neg) = if is_lat { ("N", "S") } else { ("E", "W") };
    let v = match hemi {
        h if h == pos => v,
        h if h == neg => -v,
        _ => return Err(malformed()),
    };
    let limit = if is_lat { 90.0 } else { 180.0 };
    Ok((v.abs() <= limit).then_some(v))
}

/// Latitude and longitude of a GGA or RMC sentence, in decimal degrees.
///
/// Returns `Ok(None)` for anything that is not a usable fix: bad checksum,
/// other sentence types, empty fields or out-of-range values.
pub fn parse_position(s: &NmeaSentence) -> Result<Option<(f64, f64)>, PositionError> {
    if !s.checksum_valid {
        return Ok(None);
    }
    let first = match s.sentence_type() {
        "GGA" => 2,
        "RMC" => 3,
        _ => return Ok(None),
    };
    let field = |i: usize| s.fields.get(i).map(|f| f.trim()).unwrap_or("");
    let lat = parse_coordinate(field(first), field(first + 1), true)?;
    let lon = parse_coordinate(field(first + 2), field(first + 3), false)?;
    Ok(lat.zip(lon))
}

fn fix_source(s: &NmeaSentence) -> Option<FixSource> {
    match s.sentence_type() {
        "GGA" => Some(FixSource::Gga),
        "RMC" => Some(FixSource::Rmc),
        _ => None,
    }
}

fn configs_match(a: &SonarConfig, b: &SonarConfig) -> bool {
    crate::model::BitEq::bit_eq(a, b)
}

/// Single sequential pass from raw bytes to the seven-group dataset.
pub fn convert_raw<R: Read>(src: R, options: &ConvertOptions) -> Result<EchoData, ConvertError> {
    let mut reader = DatagramReader::with_max_len(src, options.max_datagram_bytes);
    let mut config: Option<SonarConfig> = None;
    let mut pings = Vec::new();
    let mut track = GeoTrack::default();
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut unknown = 0u64;
    let mut invalid_nmea = 0u64;
    let mut warnings = Vec::new();
    let mut seq = 0u64;
    loop {
        let offset = reader.offset();
        let dg = match reader.read_datagram() {
            Ok(Some(dg)) => dg,
            Ok(None) => break,
            Err(FrameError::Io(source)) => return Err(ConvertError::Read { offset, source }),
            Err(e) => {
                return Err(ConvertError::Parse {
                    offset,
                    source: e.into(),
                })
            }
        };
        *counts.entry(dg.type_code.as_str().to_owned()).or_default() += 1;
        let rec = parse_record(&dg).map_err(|source| ConvertError::Parse { offset, source })?;
        let time_ns = i64::try_from(rec.timestamp_ns).map_err(|_| ConvertError::TimestampOutOfRange {
            offset,
            timestamp_ns: rec.timestamp_ns,
        });
        let this_seq = seq;
        seq += 1;
        match rec.record {
            Record::Config(c) => match &config {
                None => config = Some(c),
                Some(first) if !configs_match(first, &c) => {
                    warnings.push(format!("byte {offset}: CON0 differs from the first one and was ignored"))
                }
                Some(_) => {}
            },
            Record::Ping(record) => {
                if config.is_none() {
                    return Err(ConvertError::NoConfiguration { offset });
                }
                pings.push(AcquiredPing {
                    time_ns: time_ns?,
                    seq: this_seq,
                    record,
                });
            }
            Record::Nmea(s) => {
                let Some(kind) = fix_source(&s) else { continue };
                if !s.checksum_valid {
                    invalid_nmea += 1;
                    continue;
                }
                match parse_position(&s) {
                    Ok(Some((lat, lon))) => track.push(time_ns?, lat, lon, kind),
                    Ok(None) => {}
                    Err(e) => warnings.push(format!("byte {offset}: {e}")),
                }
            }
            Record::Unknown(..) => unknown += 1,
        }
    }
    let config = config.ok_or(ConvertError::NoConfiguration { offset: reader.offset() })?;
    track.sort_by_time();
    let meta = SourceMeta {
        source_filenames: options.source_filename.iter().cloned().collect(),
        sonar_model: options.sonar_model.clone(),
        conversion_time: options.conversion_time.clone().unwrap_or_else(conversion_time),
        datagram_counts: counts,
        unknown_datagrams: unknown,
        invalid_nmea,
        warnings,
    };
    Ok(build_echodata(&config, pings, track, meta)?)
}

/// Opens `uri` (path or URL) and converts it.
pub fn convert_uri(uri: &str, options: &ConvertOptions) -> Result<EchoData, ConvertError> {
    let src = open_byte_source(uri)?;
    let mut options = options.clone();
    if options.source_filename.is_none() {
        options.source_filename = Some(uri.rsplit(['/', '\\']).next().unwrap_or(uri).to_owned());
    }
    convert_raw(src, &options)
}

#[derive(Debug, Error)]
pub enum SliceError {
    #[error("position track is empty")]
    EmptyTrack,
}

/// Latitude/longitude bounds, inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        self.lat_min <= lat && lat <= self.lat_max && self.lon_min <= lon && lon <= self.lon_max
    }
}

/// Index of the fix nearest in time to `t`; ties go to the earlier fix.
pub fn nearest_fix(times: &[i64], t: i64) -> usize {
    let i = times.partition_point(|&x| x < t);
    if i == 0 {
        return 0;
    }
    if i == times.len() {
        return times.len() - 1;
    }
    let before = t as i128 - times[i - 1] as i128;
    let after = times[i] as i128 - t as i128;
    if after < before {
        i
    } else {
        // step back to the first of any equal timestamps
        times.partition_point(|&x| x < times[i - 1])
    }
}

/// Pings whose nearest-in-time position lies inside `bbox`, order preserved.
pub fn slice_by_position(grid: &LabeledGrid, track: &GeoTrack, bbox: &BoundingBox) -> Result<LabeledGrid, SliceError> {
    if track.is_empty() {
        return Err(SliceError::EmptyTrack);
    }
    let keep: Vec<usize> = grid
        .ping_time
        .iter()
        .enumerate()
        .filter(|(_, &t)| {
            let j = nearest_fix(&track.location_time, t);
            bbox.contains(track.latitude_deg[j], track.longitude_deg[j])
        })
        .map(|(i, _)| i)
        .collect();
    Ok(grid.select_pings(&keep))
}
