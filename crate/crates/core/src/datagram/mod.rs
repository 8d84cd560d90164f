//! Length-framed raw datagrams and the RAW0 / NME0 / CON0 record profiles.
//!
//! Every frame is `[len u32][type 4 bytes][filetime low u32][filetime high u32][body][len u32]`,
//! little-endian, with `len` counting the type, timestamp and body bytes.

mod con0;
mod frame;
mod nmea;
mod raw0;

pub use con0::{
    decode_fixed_text, parse_con0, Con0Error, SonarConfig, TransducerConfig, CON0_HEADER_BYTES,
    HEADER_SPARE_BYTES, MAX_TRANSDUCERS, NAME_BYTES, TABLE_LEN, TRANSDUCER_BLOCK_BYTES,
    TRANSDUCER_SPARE_BYTES, VERSION_BYTES,
};
pub use frame::{
    filetime_to_unix_ns, unix_ns_to_filetime, write_datagram, Datagram, DatagramReader, FrameError,
    TypeCode, DEFAULT_MAX_DATAGRAM_BYTES, EPOCH_OFFSET_NS,
};
pub use nmea::{checksum, parse_nme0, NmeaError, NmeaSentence};
pub use raw0::{parse_raw0, PingRecord, Raw0Error, MODE_ANGLE, MODE_POWER, RAW0_HEADER_BYTES};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("RAW0: {0}")]
    Raw0(#[from] Raw0Error),
    #[error("NME0: {0}")]
    Nme0(#[from] NmeaError),
    #[error("CON0: {0}")]
    Con0(#[from] Con0Error),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// A decoded datagram body.
#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Config(SonarConfig),
    Nmea(NmeaSentence),
    Ping(PingRecord),
    /// A datagram type this profile does not decode; body kept verbatim.
    Unknown(TypeCode, Vec<u8>),
}

impl Record {
    pub fn type_code(&self) -> TypeCode {
        match self {
            Record::Config(_) => TypeCode::CON0,
            Record::Nmea(_) => TypeCode::NME0,
            Record::Ping(_) => TypeCode::RAW0,
            Record::Unknown(code, _) => *code,
        }
    }

    pub fn to_body(&self) -> Result<Vec<u8>, RecordError> {
        Ok(match self {
            Record::Config(c) => c.to_bytes()?,
            Record::Nmea(s) => s.to_sentence().into_bytes(),
            Record::Ping(p) => p.to_bytes(),
            Record::Unknown(_, body) => body.clone(),
        })
    }
}

/// A record with the timestamp of the datagram that carried it.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedRecord {
    pub timestamp_ns: i128,
    pub record: Record,
}

impl TimedRecord {
    pub fn to_datagram(&self) -> Result<Datagram, RecordError> {
        Ok(Datagram::new(self.record.type_code(), self.timestamp_ns, self.record.to_body()?))
    }
}

pub fn parse_record(dg: &Datagram) -> Result<TimedRecord, RecordError> {
    let record = match dg.type_code {
        TypeCode::RAW0 => Record::Ping(parse_raw0(&dg.body)?),
        TypeCode::NME0 => Record::Nmea(parse_nme0(&dg.body)?),
        TypeCode::CON0 => Record::Config(parse_con0(&dg.body)?),
        other => Record::Unknown(other, dg.body.clone()),
    };
    Ok(TimedRecord {
        timestamp_ns: dg.timestamp_ns,
        record,
    })
}

/// Serializes records into one framed byte stream.
pub fn write_records(records: &[TimedRecord]) -> Result<Vec<u8>, RecordError> {
    let mut out = Vec::new();
    for r in records {
        write_datagram(&mut out, &r.to_datagram()?)?;
    }
    Ok(out)
}

/// Parses a whole in-memory stream into records.
pub fn read_records(bytes: &[u8]) -> Result<Vec<TimedRecord>, RecordError> {
    DatagramReader::new(bytes)
        .map(|dg| parse_record(&dg?))
        .collect()
}
