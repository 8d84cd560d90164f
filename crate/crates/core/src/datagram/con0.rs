use std::io::{Cursor, Read};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

pub const NAME_BYTES: usize = 128;
pub const VERSION_BYTES: usize = 30;
pub const HEADER_SPARE_BYTES: usize = 98;
pub const TRANSDUCER_SPARE_BYTES: usize = 52;
pub const TABLE_LEN: usize = 5;
pub const MAX_TRANSDUCERS: i32 = 64;

/// Fixed CON0 header: three names, version, spare, transducer count.
pub const CON0_HEADER_BYTES: usize = 3 * NAME_BYTES + VERSION_BYTES + HEADER_SPARE_BYTES + 4;
/// One transducer block: channel id, seven scalars, three tables, spare.
pub const TRANSDUCER_BLOCK_BYTES: usize = NAME_BYTES + 7 * 4 + 3 * TABLE_LEN * 4 + TRANSDUCER_SPARE_BYTES;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Con0Error {
    #[error("CON0 body of {0} bytes is shorter than the {CON0_HEADER_BYTES}-byte header")]
    ShortBody(usize),
    #[error("transducer count {0} outside 1..=64")]
    CountOutOfRange(i32),
    #[error("CON0 body is {actual} bytes, {count} transducers need {expected}")]
    BlockLengthMismatch {
        count: i32,
        expected: usize,
        actual: usize,
    },
    #[error("text field {field:?} is {len} bytes, limit {limit}")]
    FieldTooLong {
        field: &'static str,
        len: usize,
        limit: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransducerConfig {
    pub channel_id: String,
    pub frequency_hz: f32,
    pub gain_db: f32,
    pub equivalent_beam_angle_db: f32,
    pub beamwidth_alongship_deg: f32,
    pub beamwidth_athwartship_deg: f32,
    pub angle_sensitivity_alongship: f32,
    pub angle_sensitivity_athwartship: f32,
    pub pulse_length_table_s: [f32; TABLE_LEN],
    pub gain_table_db: [f32; TABLE_LEN],
    pub sa_correction_table_db: [f32; TABLE_LEN],
    /// Vendor bytes this profile does not interpret.
    pub spare: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SonarConfig {
    pub survey_name: String,
    pub transect_name: String,
    pub sounder_name: String,
    pub version: String,
    /// Vendor bytes this profile does not interpret.
    pub spare: Vec<u8>,
    pub transducers: Vec<TransducerConfig>,
}

impl SonarConfig {
    pub fn transducer_count(&self) -> usize {
        self.transducers.len()
    }

    /// Looks up a transducer by its 1-based channel index.
    pub fn channel(&self, channel: i16) -> Option<&TransducerConfig> {
        usize::try_from(channel)
            .ok()
            .and_then(|c| c.checked_sub(1))
            .and_then(|i| self.transducers.get(i))
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, Con0Error> {
        let count = self.transducers.len() as i32;
        if !(1..=MAX_TRANSDUCERS).contains(&count) {
            return Err(Con0Error::CountOutOfRange(count));
        }
        let mut out = Vec::with_capacity(CON0_HEADER_BYTES + self.transducers.len() * TRANSDUCER_BLOCK_BYTES);
        put_text(&mut out, "survey_name", &self.survey_name, NAME_BYTES)?;
        put_text(&mut out, "transect_name", &self.transect_name, NAME_BYTES)?;
        put_text(&mut out, "sounder_name", &self.sounder_name, NAME_BYTES)?;
        put_text(&mut out, "version", &self.version, VERSION_BYTES)?;
        put_spare(&mut out, &self.spare, HEADER_SPARE_BYTES);
        out.write_i32::<LittleEndian>(count).unwrap();
        for t in &self.transducers {
            put_text(&mut out, "channel_id", &t.channel_id, NAME_BYTES)?;
            for v in [
                t.frequency_hz,
                t.gain_db,
                t.equivalent_beam_angle_db,
                t.beamwidth_alongship_deg,
                t.beamwidth_athwartship_deg,
                t.angle_sensitivity_alongship,
                t.angle_sensitivity_athwartship,
            ]
            .iter()
            .chain(&t.pulse_length_table_s)
            .chain(&t.gain_table_db)
            .chain(&t.sa_correction_table_db)
            {
                out.write_f32::<LittleEndian>(*v).unwrap();
            }
            put_spare(&mut out, &t.spare, TRANSDUCER_SPARE_BYTES);
        }
        Ok(out)
    }
}

fn put_text(out: &mut Vec<u8>, field: &'static str, text: &str, width: usize) -> Result<(), Con0Error> {
    let bytes = text.as_bytes();
    if bytes.len() > width {
        return Err(Con0Error::FieldTooLong {
            field,
            len: bytes.len(),
            limit: width,
        });
    }
    out.extend_from_slice(bytes);
    out.resize(out.len() + width - bytes.len(), 0);
    Ok(())
}

fn put_spare(out: &mut Vec<u8>, spare: &[u8], width: usize) {
    let n = spare.len().min(width);
    out.extend_from_slice(&spare[..n]);
    out.resize(out.len() + width - n, 0);
}

/// Decodes a NUL-padded fixed-width field, dropping trailing NULs.
pub fn decode_fixed_text(raw: &[u8]) -> String {
    let end = raw.iter().rposition(|&b| b != 0).map_or(0, |i| i + 1);
    String::from_utf8_lossy(&raw[..end]).into_owned()
}

fn take<'a>(c: &mut Cursor<&'a [u8]>, n: usize) -> &'a [u8] {
    let start = c.position() as usize;
    let slice = &c.get_ref()[start..start + n];
    c.set_position((start + n) as u64);
    slice
}

pub fn parse_con0(body: &[u8]) -> Result<SonarConfig, Con0Error> {
    if body.len() < CON0_HEADER_BYTES {
        return Err(Con0Error::ShortBody(body.len()));
    }
    let mut c = Cursor::new(body);
    let survey_name = decode_fixed_text(take(&mut c, NAME_BYTES));
    let transect_name = decode_fixed_text(take(&mut c, NAME_BYTES));
    let sounder_name = decode_fixed_text(take(&mut c, NAME_BYTES));
    let version = decode_fixed_text(take(&mut c, VERSION_BYTES));
    let spare = take(&mut c, HEADER_SPARE_BYTES).to_vec();
    let count = c.read_i32::<LittleEndian>().unwrap();
    if !(1..=MAX_TRANSDUCERS).contains(&count) {
        return Err(Con0Error::CountOutOfRange(count));
    }
    let expected = CON0_HEADER_BYTES + count as usize * TRANSDUCER_BLOCK_BYTES;
    if body.len() != expected {
        return Err(Con0Error::BlockLengthMismatch {
            count,
            expected,
            actual: body.len(),
        });
    }

    let mut transducers = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let channel_id = decode_fixed_text(take(&mut c, NAME_BYTES));
        let mut scalars = [0f32; 7];
        let mut tables = [[0f32; TABLE_LEN]; 3];
        for v in scalars.iter_mut().chain(tables.iter_mut().flatten()) {
            *v = c.read_f32::<LittleEndian>().unwrap();
        }
        let mut spare = vec![0u8; TRANSDUCER_SPARE_BYTES];
        c.read_exact(&mut spare).unwrap();
        transducers.push(TransducerConfig {
            channel_id,
            frequency_hz: scalars[0],
            gain_db: scalars[1],
            equivalent_beam_angle_db: scalars[2],
            beamwidth_alongship_deg: scalars[3],
            beamwidth_athwartship_deg: scalars[4],
            angle_sensitivity_alongship: scalars[5],
            angle_sensitivity_athwartship: scalars[6],
            pulse_length_table_s: tables[0],
            gain_table_db: tables[1],
            sa_correction_table_db: tables[2],
            spare,
        });
    }

    Ok(SonarConfig {
        survey_name,
        transect_name,
        sounder_name,
        version,
        spare,
        transducers,
    })
}
