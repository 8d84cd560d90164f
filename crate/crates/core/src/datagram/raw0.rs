use std::io::Cursor;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use thiserror::Error;

/// Size of the fixed RAW0 header preceding the sample arrays.
pub const RAW0_HEADER_BYTES: usize = 64;

pub const MODE_POWER: i16 = 0b01;
pub const MODE_ANGLE: i16 = 0b10;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum Raw0Error {
    #[error("RAW0 body of {0} bytes is shorter than the 64-byte header")]
    ShortBody(usize),
    #[error("RAW0 declares {count} samples (mode {mode:#x}) needing {expected} bytes, body has {actual}")]
    SampleLengthMismatch {
        count: i32,
        mode: i16,
        expected: usize,
        actual: usize,
    },
}

/// A parsed RAW0 ping. Floating-point settings keep their wire precision.
#[derive(Debug, Clone, PartialEq)]
pub struct PingRecord {
    pub channel: i16,
    pub mode: i16,
    pub transducer_depth_m: f32,
    pub frequency_hz: f32,
    pub transmit_power_w: f32,
    pub pulse_length_s: f32,
    pub bandwidth_hz: f32,
    pub sample_interval_s: f32,
    pub sound_velocity_m_s: f32,
    pub absorption_db_m: f32,
    pub heave_m: f32,
    pub roll_deg: f32,
    pub pitch_deg: f32,
    pub temperature_c: f32,
    pub spare1: i16,
    pub spare2: i16,
    pub sample_offset: i32,
    pub sample_count: i32,
    pub power_counts: Vec<i16>,
    /// (alongship, athwartship) electrical angle counts.
    pub angle_counts: Vec<(i8, i8)>,
    /// Payload that followed the known sample arrays when unknown mode bits
    /// were set. Kept verbatim.
    pub extra: Vec<u8>,
}

impl PingRecord {
    pub fn has_power(&self) -> bool {
        self.mode & MODE_POWER != 0
    }

    pub fn has_angle(&self) -> bool {
        self.mode & MODE_ANGLE != 0
    }

    /// Mode bits this profile does not understand (anything above bit 1).
    pub fn unknown_mode_bits(&self) -> u16 {
        self.mode as u16 & !0b11
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.power_counts.len() * 2 + self.angle_counts.len() * 2;
        let mut out = Vec::with_capacity(RAW0_HEADER_BYTES + n + self.extra.len());
        // writes into a Vec cannot fail
        let w = &mut out;
        w.write_i16::<LittleEndian>(self.channel).unwrap();
        w.write_i16::<LittleEndian>(self.mode).unwrap();
        for v in [
            self.transducer_depth_m,
            self.frequency_hz,
            self.transmit_power_w,
            self.pulse_length_s,
            self.bandwidth_hz,
            self.sample_interval_s,
            self.sound_velocity_m_s,
            self.absorption_db_m,
            self.heave_m,
            self.roll_deg,
            self.pitch_deg,
            self.temperature_c,
        ] {
            w.write_f32::<LittleEndian>(v).unwrap();
        }
        w.write_i16::<LittleEndian>(self.spare1).unwrap();
        w.write_i16::<LittleEndian>(self.spare2).unwrap();
        w.write_i32::<LittleEndian>(self.sample_offset).unwrap();
        w.write_i32::<LittleEndian>(self.sample_count).unwrap();
        w.extend(self.power_counts.iter().flat_map(|p| p.to_le_bytes()));
        w.extend(self.angle_counts.iter().flat_map(|&(along, athwart)| [along as u8, athwart as u8]));
        w.extend_from_slice(&self.extra);
        out
    }
}

pub fn parse_raw0(body: &[u8]) -> Result<PingRecord, Raw0Error> {
    if body.len() < RAW0_HEADER_BYTES {
        return Err(Raw0Error::ShortBody(body.len()));
    }
    let mut c = Cursor::new(body);
    // the header length was checked above, so these reads cannot fail
    let i16le = |c: &mut Cursor<&[u8]>| c.read_i16::<LittleEndian>().unwrap();
    let channel = i16le(&mut c);
    let mode = i16le(&mut c);
    let mut f = [0f32; 12];
    for v in &mut f {
        *v = c.read_f32::<LittleEndian>().unwrap();
    }
    let spare1 = i16le(&mut c);
    let spare2 = i16le(&mut c);
    let sample_offset = c.read_i32::<LittleEndian>().unwrap();
    let sample_count = c.read_i32::<LittleEndian>().unwrap();

    let per_sample = 2 * (mode & MODE_POWER != 0) as usize + 2 * (mode & MODE_ANGLE != 0) as usize;
    let mismatch = |expected| Raw0Error::SampleLengthMismatch {
        count: sample_count,
        mode,
        expected,
        actual: body.len(),
    };
    if sample_count < 0 {
        return Err(mismatch(RAW0_HEADER_BYTES));
    }
    let n = sample_count as usize;
    let expected = RAW0_HEADER_BYTES + per_sample * n;
    let unknown_bits = mode as u16 & !0b11 != 0;
    if body.len() < expected || (!unknown_bits && body.len() != expected) {
        return Err(mismatch(expected));
    }

    let mut pos = RAW0_HEADER_BYTES;
    let mut power_counts = Vec::new();
    if mode & MODE_POWER != 0 {
        power_counts = body[pos..pos + 2 * n]
            .chunks_exact(2)
            .map(|b| i16::from_le_bytes([b[0], b[1]]))
            .collect();
        pos += 2 * n;
    }
    let mut angle_counts = Vec::new();
    if mode & MODE_ANGLE != 0 {
        angle_counts = body[pos..pos + 2 * n]
            .chunks_exact(2)
            .map(|b| (b[0] as i8, b[1] as i8))
            .collect();
        pos += 2 * n;
    }
    let extra = body[pos..].to_vec();

    Ok(PingRecord {
        channel,
        mode,
        transducer_depth_m: f[0],
        frequency_hz: f[1],
        transmit_power_w: f[2],
        pulse_length_s: f[3],
        bandwidth_hz: f[4],
        sample_interval_s: f[5],
        sound_velocity_m_s: f[6],
        absorption_db_m: f[7],
        heave_m: f[8],
        roll_deg: f[9],
        pitch_deg: f[10],
        temperature_c: f[11],
        spare1,
        spare2,
        sample_offset,
        sample_count,
        power_counts,
        angle_counts,
        extra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample_ping(mode: i16, n: usize) -> PingRecord {
        PingRecord {
            channel: 1,
            mode,
            transducer_depth_m: 5.0,
            frequency_hz: 38_000.0,
            transmit_power_w: 1000.0,
            pulse_length_s: 1.024e-3,
            bandwidth_hz: 2425.0,
            sample_interval_s: 256e-6,
            sound_velocity_m_s: 1480.0,
            absorption_db_m: 0.0098,
            heave_m: 0.1,
            roll_deg: -1.5,
            pitch_deg: 0.25,
            temperature_c: 9.0,
            spare1: 0,
            spare2: 0,
            sample_offset: 0,
            sample_count: n as i32,
            power_counts: if mode & MODE_POWER != 0 { (0..n as i16).collect() } else { vec![] },
            angle_counts: if mode & MODE_ANGLE != 0 {
                (0..n as i8).map(|i| (i, -i)).collect()
            } else {
                vec![]
            },
            extra: vec![],
        }
    }

    #[test]
    fn empty_power_ping() {
        let p = sample_ping(MODE_POWER, 0);
        let bytes = p.to_bytes();
        assert_eq!(bytes.len(), 64);
        let back = parse_raw0(&bytes).unwrap();
        assert!(back.power_counts.is_empty());
        assert_eq!(back, p);
    }

    #[test]
    fn power_and_angle_lengths() {
        let p = sample_ping(MODE_POWER | MODE_ANGLE, 4);
        let bytes = p.to_bytes();
        assert_eq!(bytes.len(), 64 + 8 + 8);
        let back = parse_raw0(&bytes).unwrap();
        assert_eq!(back.power_counts.len(), 4);
        assert_eq!(back.angle_counts.len(), 4);
        assert_eq!(back, p);
    }

    #[test]
    fn short_body_and_count_mismatch() {
        assert_eq!(parse_raw0(&[0u8; 63]), Err(Raw0Error::ShortBody(63)));
        let mut bytes = sample_ping(MODE_POWER, 4).to_bytes();
        bytes.pop();
        assert!(matches!(parse_raw0(&bytes), Err(Raw0Error::SampleLengthMismatch { expected: 72, actual: 71, .. })));
        let mut bytes = sample_ping(MODE_POWER, 4).to_bytes();
        bytes.push(0);
        assert!(matches!(parse_raw0(&bytes), Err(Raw0Error::SampleLengthMismatch { .. })));
    }

    #[test]
    fn negative_count_rejected() {
        let mut p = sample_ping(MODE_POWER, 0);
        p.sample_count = -1;
        assert!(matches!(parse_raw0(&p.to_bytes()), Err(Raw0Error::SampleLengthMismatch { count: -1, .. })));
    }

    #[test]
    fn unknown_mode_bits_keep_remainder() {
        let mut p = sample_ping(MODE_POWER | 0b100, 3);
        p.extra = vec![9, 8, 7, 6];
        let back = parse_raw0(&p.to_bytes()).unwrap();
        assert_eq!(back.unknown_mode_bits(), 0b100);
        assert_eq!(back.extra, vec![9, 8, 7, 6]);
        assert_eq!(back.power_counts, vec![0, 1, 2]);
    }
}
