use std::collections::BTreeMap;

use ndarray::{Array2, Array3};

use super::bits::bit_eq_fields;
use super::grid::{AcquiredPing, ChannelPings, LabeledGrid, PingLayout};
use super::{angle_counts_to_deg, power_counts_to_db, ModelError, POWER_DB_PER_COUNT};
use crate::datagram::{PingRecord, SonarConfig, TransducerConfig};
use crate::store::{ArrayData, StoredArray};

pub const GROUP_NAMES: [&str; 7] = [
    "TopLevel",
    "Environment",
    "Platform",
    "Provenance",
    "Sonar",
    "Beam",
    "Vendor",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixSource {
    Gga,
    Rmc,
}

impl FixSource {
    pub fn code(self) -> i8 {
        match self {
            FixSource::Gga => 0,
            FixSource::Rmc => 1,
        }
    }

    pub fn from_code(code: i8) -> Option<Self> {
        match code {
            0 => Some(FixSource::Gga),
            1 => Some(FixSource::Rmc),
            _ => None,
        }
    }
}

/// Platform positions on their own time axis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GeoTrack {
    pub location_time: Vec<i64>,
    pub latitude_deg: Vec<f64>,
    pub longitude_deg: Vec<f64>,
    pub source: Vec<FixSource>,
}

impl GeoTrack {
    pub fn len(&self) -> usize {
        self.location_time.len()
    }

    pub fn is_empty(&self) -> bool {
        self.location_time.is_empty()
    }

    pub fn push(&mut self, time_ns: i64, lat: f64, lon: f64, source: FixSource) {
        self.location_time.push(time_ns);
        self.latitude_deg.push(lat);
        self.longitude_deg.push(lon);
        self.source.push(source);
    }

    /// Stable sort by time, so fixes sharing a timestamp keep stream order.
    pub fn sort_by_time(&mut self) {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by_key(|&i| self.location_time[i]);
        let take = |v: &[f64]| idx.iter().map(|&i| v[i]).collect::<Vec<_>>();
        self.latitude_deg = take(&self.latitude_deg);
        self.longitude_deg = take(&self.longitude_deg);
        self.location_time = idx.iter().map(|&i| self.location_time[i]).collect();
        self.source = idx.iter().map(|&i| self.source[i]).collect();
    }
}

impl super::BitEq for FixSource {
    fn bit_eq(&self, other: &Self) -> bool {
        self == other
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopLevel {
    pub conventions: String,
    pub title: String,
}

impl Default for TopLevel {
    fn default() -> Self {
        TopLevel {
            conventions: "CF-1.7, SONAR-netCDF4-1.0, ACDD-1.3".into(),
            title: String::new(),
        }
    }
}

/// Indicative seawater properties, one value per frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    pub frequency_hz: Vec<f64>,
    pub sound_speed_m_s: Vec<f64>,
    pub absorption_db_m: Vec<f64>,
    pub temperature_c: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Platform {
    pub track: GeoTrack,
    pub frequency_hz: Vec<f64>,
    pub ping_time: Vec<i64>,
    pub transducer_depth_m: Array2<f64>,
    pub heave_m: Array2<f64>,
    pub roll_deg: Array2<f64>,
    pub pitch_deg: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub source_filenames: Vec<String>,
    pub software_name: String,
    pub software_version: String,
    pub conversion_time: String,
    pub datagram_counts: BTreeMap<String, u64>,
    pub unknown_datagrams: u64,
    pub invalid_nmea: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sonar {
    pub sonar_model: String,
    pub config: SonarConfig,
}

/// Per-(frequency, ping_time) instrument settings; NaN / -1 where no ping.
#[derive(Debug, Clone, PartialEq)]
pub struct PingSettings {
    pub frequency_hz: Array2<f64>,
    pub transmit_power_w: Array2<f64>,
    pub pulse_length_s: Array2<f64>,
    pub bandwidth_hz: Array2<f64>,
    pub sample_interval_s: Array2<f64>,
    pub sound_velocity_m_s: Array2<f64>,
    pub absorption_db_m: Array2<f64>,
    pub temperature_c: Array2<f64>,
    pub mode: Array2<i64>,
    pub sample_offset: Array2<i64>,
    /// -1 marks a (frequency, ping_time) cell with no ping.
    pub sample_count: Array2<i64>,
}

impl PingSettings {
    pub fn float_fields(&self) -> [(&'static str, &Array2<f64>); 8] {
        [
            ("ping_frequency", &self.frequency_hz),
            ("transmit_power", &self.transmit_power_w),
            ("transmit_duration_nominal", &self.pulse_length_s),
            ("transmit_bandwidth", &self.bandwidth_hz),
            ("sample_interval", &self.sample_interval_s),
            ("sound_velocity", &self.sound_velocity_m_s),
            ("absorption", &self.absorption_db_m),
            ("temperature", &self.temperature_c),
        ]
    }

    pub fn float_fields_mut(&mut self) -> [(&'static str, &mut Array2<f64>); 8] {
        [
            ("ping_frequency", &mut self.frequency_hz),
            ("transmit_power", &mut self.transmit_power_w),
            ("transmit_duration_nominal", &mut self.pulse_length_s),
            ("transmit_bandwidth", &mut self.bandwidth_hz),
            ("sample_interval", &mut self.sample_interval_s),
            ("sound_velocity", &mut self.sound_velocity_m_s),
            ("absorption", &mut self.absorption_db_m),
            ("temperature", &mut self.temperature_c),
        ]
    }

    pub fn int_fields(&self) -> [(&'static str, &Array2<i64>); 3] {
        [
            ("sample_mode", &self.mode),
            ("sample_offset", &self.sample_offset),
            ("sample_count", &self.sample_count),
        ]
    }

    pub fn int_fields_mut(&mut self) -> [(&'static str, &mut Array2<i64>); 3] {
        [
            ("sample_mode", &mut self.mode),
            ("sample_offset", &mut self.sample_offset),
            ("sample_count", &mut self.sample_count),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Beam {
    /// Received power in dB, NaN-padded along range_bin.
    pub backscatter_r: LabeledGrid,
    /// Electrical angles in degrees on the same coordinates as `backscatter_r`.
    pub angle_alongship_deg: Array3<f64>,
    pub angle_athwartship_deg: Array3<f64>,
    /// 1-based channel index for each frequency.
    pub channel: Vec<i16>,
    pub settings: PingSettings,
}

/// Arrays that have no home in the other groups, keyed by array name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Vendor {
    pub arrays: BTreeMap<String, StoredArray>,
}

/// The standardized seven-group dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoData {
    pub top_level: TopLevel,
    pub environment: Environment,
    pub platform: Platform,
    pub provenance: Provenance,
    pub sonar: Sonar,
    pub beam: Beam,
    pub vendor: Vendor,
}

bit_eq_fields!(GeoTrack { location_time, latitude_deg, longitude_deg, source });
bit_eq_fields!(TopLevel { conventions, title });
bit_eq_fields!(Environment { frequency_hz, sound_speed_m_s, absorption_db_m, temperature_c });
bit_eq_fields!(Platform { track, frequency_hz, ping_time, transducer_depth_m, heave_m, roll_deg, pitch_deg });
bit_eq_fields!(Provenance {
    source_filenames,
    software_name,
    software_version,
    conversion_time,
    datagram_counts,
    unknown_datagrams,
    invalid_nmea,
    warnings,
});
bit_eq_fields!(PingSettings {
    frequency_hz,
    transmit_power_w,
    pulse_length_s,
    bandwidth_hz,
    sample_interval_s,
    sound_velocity_m_s,
    absorption_db_m,
    temperature_c,
    mode,
    sample_offset,
    sample_count,
});
bit_eq_fields!(LabeledGrid { frequency_hz, ping_time, values });
bit_eq_fields!(Beam { backscatter_r, angle_alongship_deg, angle_athwartship_deg, channel, settings });
bit_eq_fields!(TransducerConfig {
    channel_id,
    frequency_hz,
    gain_db,
    equivalent_beam_angle_db,
    beamwidth_alongship_deg,
    beamwidth_athwartship_deg,
    angle_sensitivity_alongship,
    angle_sensitivity_athwartship,
    pulse_length_table_s,
    gain_table_db,
    sa_correction_table_db,
    spare,
});
bit_eq_fields!(SonarConfig { survey_name, transect_name, sounder_name, version, spare, transducers });
bit_eq_fields!(Sonar { sonar_model, config });
bit_eq_fields!(EchoData { top_level, environment, platform, provenance, sonar, beam, vendor });

impl super::BitEq for Vendor {
    fn bit_eq(&self, other: &Self) -> bool {
        self.arrays.len() == other.arrays.len()
            && self.arrays.iter().zip(&other.arrays).all(|((ka, a), (kb, b))| {
                ka == kb && a.meta == b.meta && a.attrs == b.attrs && a.data.bit_eq(&b.data)
            })
    }
}

/// File-level context for [`build_echodata`].
#[derive(Debug, Clone, Default)]
pub struct SourceMeta {
    pub source_filenames: Vec<String>,
    pub sonar_model: String,
    pub conversion_time: String,
    pub datagram_counts: BTreeMap<String, u64>,
    pub unknown_datagrams: u64,
    pub invalid_nmea: u64,
    pub warnings: Vec<String>,
}

const VENDOR_SPARE1: &str = "raw0_spare1";
const VENDOR_SPARE2: &str = "raw0_spare2";
const VENDOR_EXTRA: &str = "raw0_extra";
const VENDOR_EXTRA_LEN: &str = "raw0_extra_len";

fn relative_differs(a: f32, b: f32) -> bool {
    let (a, b) = (a as f64, b as f64);
    (a - b).abs() > 1e-6 * a.abs().max(b.abs())
}

pub fn build_echodata(
    config: &SonarConfig,
    pings: Vec<AcquiredPing>,
    track: GeoTrack,
    meta: SourceMeta,
) -> Result<EchoData, ModelError> {
    if pings.is_empty() {
        return Err(ModelError::NoPings);
    }
    let mut warnings = meta.warnings;
    let mut by_channel: BTreeMap<i16, Vec<AcquiredPing>> = BTreeMap::new();
    for p in pings {
        by_channel.entry(p.record.channel).or_default().push(p);
    }
    let mut channels = Vec::with_capacity(by_channel.len());
    let mut channel_ids = Vec::with_capacity(by_channel.len());
    for (ch, mut list) in by_channel {
        let cfg = config.channel(ch).ok_or(ModelError::ChannelWithoutConfig(ch))?;
        list.sort_by_key(|p| p.seq);
        let first = &list[0].record;
        if relative_differs(first.frequency_hz, cfg.frequency_hz) {
            warnings.push(format!(
                "channel {ch}: ping frequency {} Hz differs from configured {} Hz",
                first.frequency_hz, cfg.frequency_hz
            ));
        }
        let drift = list.iter().any(|p| {
            relative_differs(p.record.sound_velocity_m_s, first.sound_velocity_m_s)
                || relative_differs(p.record.absorption_db_m, first.absorption_db_m)
        });
        if drift {
            warnings.push(format!(
                "channel {ch}: sound velocity or absorption varies between pings; first ping used"
            ));
        }
        let unknown = list.iter().filter(|p| p.record.unknown_mode_bits() != 0).count();
        if unknown > 0 {
            warnings.push(format!("channel {ch}: {unknown} pings carry unknown mode bits"));
        }
        channels.push(ChannelPings {
            frequency_hz: first.frequency_hz as f64,
            pings: list,
        });
        channel_ids.push(ch);
    }

    let layout = PingLayout::build(&channels)?;
    let rows = &layout.channel_of_row;
    let first_of = |row: usize| &channels[rows[row]].pings[0].record;
    let nf = rows.len();

    let backscatter = layout.gather(&channels, |r| &r.power_counts, power_counts_to_db);
    let along = layout.gather(&channels, |r| &r.angle_counts, |(a, _)| angle_counts_to_deg(a));
    let athwart = layout.gather(&channels, |r| &r.angle_counts, |(_, b)| angle_counts_to_deg(b));
    let f = |value: fn(&PingRecord) -> f32| layout.per_ping(&channels, |r| value(r) as f64, f64::NAN);
    let i = |value: fn(&PingRecord) -> i64| layout.per_ping(&channels, value, -1);

    let settings = PingSettings {
        frequency_hz: f(|r| r.frequency_hz),
        transmit_power_w: f(|r| r.transmit_power_w),
        pulse_length_s: f(|r| r.pulse_length_s),
        bandwidth_hz: f(|r| r.bandwidth_hz),
        sample_interval_s: f(|r| r.sample_interval_s),
        sound_velocity_m_s: f(|r| r.sound_velocity_m_s),
        absorption_db_m: f(|r| r.absorption_db_m),
        temperature_c: f(|r| r.temperature_c),
        mode: i(|r| r.mode as i64),
        sample_offset: i(|r| r.sample_offset as i64),
        sample_count: i(|r| r.sample_count as i64),
    };

    let mut vendor = Vendor::default();
    let spare1 = layout.per_ping(&channels, |r| r.spare1, 0);
    let spare2 = layout.per_ping(&channels, |r| r.spare2, 0);
    for (name, arr) in [(VENDOR_SPARE1, spare1), (VENDOR_SPARE2, spare2)] {
        if arr.iter().any(|&v| v != 0) {
            let shape = arr.shape().to_vec();
            vendor.arrays.insert(
                name.into(),
                StoredArray::new(shape, ArrayData::I2(arr.into_iter().collect()), &["frequency", "ping_time"]),
            );
        }
    }
    let extra_len = layout.per_ping(&channels, |r| r.extra.len() as i64, 0);
    if extra_len.iter().any(|&n| n > 0) {
        let mut bytes = Vec::new();
        for fi in 0..nf {
            for ti in 0..layout.ping_time.len() {
                if let Some(p) = layout.ping(&channels, fi, ti) {
                    bytes.extend(p.record.extra.iter().map(|&b| b as i8));
                }
            }
        }
        let shape = extra_len.shape().to_vec();
        vendor.arrays.insert(
            VENDOR_EXTRA_LEN.into(),
            StoredArray::new(shape, ArrayData::I8(extra_len.into_iter().collect()), &["frequency", "ping_time"]),
        );
        vendor
            .arrays
            .insert(VENDOR_EXTRA.into(), StoredArray::new(vec![bytes.len()], ArrayData::I1(bytes), &["extra_byte"]));
    }

    let frequency_hz = layout.frequency_hz.clone();
    let environment = Environment {
        frequency_hz: frequency_hz.clone(),
        sound_speed_m_s: (0..nf).map(|r| first_of(r).sound_velocity_m_s as f64).collect(),
        absorption_db_m: (0..nf).map(|r| first_of(r).absorption_db_m as f64).collect(),
        temperature_c: (0..nf).map(|r| first_of(r).temperature_c as f64).collect(),
    };
    let platform = Platform {
        track,
        frequency_hz: frequency_hz.clone(),
        ping_time: layout.ping_time.clone(),
        transducer_depth_m: f(|r| r.transducer_depth_m),
        heave_m: f(|r| r.heave_m),
        roll_deg: f(|r| r.roll_deg),
        pitch_deg: f(|r| r.pitch_deg),
    };
    let provenance = Provenance {
        source_filenames: meta.source_filenames,
        software_name: crate::SOFTWARE_NAME.into(),
        software_version: crate::SOFTWARE_VERSION.into(),
        conversion_time: meta.conversion_time,
        datagram_counts: meta.datagram_counts,
        unknown_datagrams: meta.unknown_datagrams,
        invalid_nmea: meta.invalid_nmea,
        warnings,
    };
    let beam = Beam {
        backscatter_r: LabeledGrid::new(frequency_hz, layout.ping_time.clone(), backscatter)?,
        angle_alongship_deg: along,
        angle_athwartship_deg: athwart,
        channel: rows.iter().map(|&r| channel_ids[r]).collect(),
        settings,
    };
    Ok(EchoData {
        top_level: TopLevel {
            title: config.survey_name.clone(),
            ..TopLevel::default()
        },
        environment,
        platform,
        provenance,
        sonar: Sonar {
            sonar_model: meta.sonar_model,
            config: config.clone(),
        },
        beam,
        vendor,
    })
}

impl EchoData {
    pub fn frequency_hz(&self) -> &[f64] {
        &self.beam.backscatter_r.frequency_hz
    }

    pub fn ping_time(&self) -> &[i64] {
        &self.beam.backscatter_r.ping_time
    }

    /// Replaces the ping_time coordinate everywhere it appears.
    pub fn set_ping_time(&mut self, times: Vec<i64>) {
        assert_eq!(times.len(), self.ping_time().len(), "ping_time length must not change");
        self.platform.ping_time = times.clone();
        self.beam.backscatter_r.ping_time = times;
    }

    /// Rebuilds the ping recorded at grid cell (f, t), if any.
    pub fn ping_record(&self, f: usize, t: usize) -> Option<PingRecord> {
        let s = &self.beam.settings;
        let count = s.sample_count[[f, t]];
        if count < 0 {
            return None;
        }
        let mode = s.mode[[f, t]] as i16;
        let n = count as usize;
        let has_power = mode & crate::datagram::MODE_POWER != 0;
        let has_angle = mode & crate::datagram::MODE_ANGLE != 0;
        let power_counts = if has_power {
            self.beam
                .backscatter_r
                .ragged_row(f, t, n)
                .into_iter()
                .map(|db| (db / POWER_DB_PER_COUNT).round() as i16)
                .collect()
        } else {
            Vec::new()
        };
        let angle_counts = if has_angle {
            let deg_to_count = |d: f64| (d * 128.0 / 180.0).round() as i8;
            (0..n)
                .map(|k| {
                    (
                        deg_to_count(self.beam.angle_alongship_deg[[f, t, k]]),
                        deg_to_count(self.beam.angle_athwartship_deg[[f, t, k]]),
                    )
                })
                .collect()
        } else {
            Vec::new()
        };
        let vendor_i2 = |name: &str| match self.vendor.arrays.get(name).map(|a| &a.data) {
            Some(ArrayData::I2(v)) => v[f * self.ping_time().len() + t],
            _ => 0,
        };
        let extra = match (
            self.vendor.arrays.get(VENDOR_EXTRA_LEN).map(|a| &a.data),
            self.vendor.arrays.get(VENDOR_EXTRA).map(|a| &a.data),
        ) {
            (Some(ArrayData::I8(lens)), Some(ArrayData::I1(bytes))) => {
                let idx = f * self.ping_time().len() + t;
                let start: i64 = lens[..idx].iter().sum();
                bytes[start as usize..(start + lens[idx]) as usize]
                    .iter()
                    .map(|&b| b as u8)
                    .collect()
            }
            _ => Vec::new(),
        };
        let p = &self.platform;
        Some(PingRecord {
            channel: self.beam.channel[f],
            mode,
            transducer_depth_m: p.transducer_depth_m[[f, t]] as f32,
            frequency_hz: s.frequency_hz[[f, t]] as f32,
            transmit_power_w: s.transmit_power_w[[f, t]] as f32,
            pulse_length_s: s.pulse_length_s[[f, t]] as f32,
            bandwidth_hz: s.bandwidth_hz[[f, t]] as f32,
            sample_interval_s: s.sample_interval_s[[f, t]] as f32,
            sound_velocity_m_s: s.sound_velocity_m_s[[f, t]] as f32,
            absorption_db_m: s.absorption_db_m[[f, t]] as f32,
            heave_m: p.heave_m[[f, t]] as f32,
            roll_deg: p.roll_deg[[f, t]] as f32,
            pitch_deg: p.pitch_deg[[f, t]] as f32,
            temperature_c: s.temperature_c[[f, t]] as f32,
            spare1: vendor_i2(VENDOR_SPARE1),
            spare2: vendor_i2(VENDOR_SPARE2),
            sample_offset: s.sample_offset[[f, t]] as i32,
            sample_count: count as i32,
            power_counts,
            angle_counts,
            extra,
        })
    }

    /// Checks the structural invariants of the seven groups.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidGrid(m));
        let grid = &self.beam.backscatter_r;
        let dims = grid.values.dim();
        if self.beam.angle_alongship_deg.dim() != dims || self.beam.angle_athwartship_deg.dim() != dims {
            return bad("angle grids do not match backscatter_r".into());
        }
        let plane = (dims.0, dims.1);
        let s = &self.beam.settings;
        let planes = s
            .float_fields()
            .iter()
            .map(|(_, a)| a.dim())
            .chain(s.int_fields().iter().map(|(_, a)| a.dim()))
            .chain([
                self.platform.heave_m.dim(),
                self.platform.roll_deg.dim(),
                self.platform.pitch_deg.dim(),
                self.platform.transducer_depth_m.dim(),
            ])
            .collect::<Vec<_>>();
        if planes.iter().any(|&d| d != plane) {
            return bad("per-ping settings do not match (frequency, ping_time)".into());
        }
        if self.beam.channel.len() != dims.0 {
            return bad("channel vector length".into());
        }
        for &ch in &self.beam.channel {
            if self.sonar.config.channel(ch).is_none() {
                return Err(ModelError::ChannelWithoutConfig(ch));
            }
        }
        if self.platform.ping_time != grid.ping_time || self.environment.frequency_hz != grid.frequency_hz {
            return bad("group coordinates disagree with Beam".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagram::{Record, TypeCode};
    use crate::fixture::{generate_fixture, FixtureSpec};
    use crate::model::BitEq;

    fn pings_and_config(spec: &FixtureSpec) -> (SonarConfig, Vec<AcquiredPing>) {
        let fx = generate_fixture(spec).unwrap();
        let mut config = None;
        let mut pings = Vec::new();
        for (seq, r) in fx.records.iter().enumerate() {
            match &r.record {
                Record::Config(c) => config = Some(c.clone()),
                Record::Ping(p) => pings.push(AcquiredPing {
                    time_ns: r.timestamp_ns as i64,
                    seq: seq as u64,
                    record: p.clone(),
                }),
                _ => {}
            }
        }
        (config.unwrap(), pings)
    }

    #[test]
    fn two_channel_fixture() {
        let spec = FixtureSpec::regular(7, &[38_000.0, 120_000.0], 5, 1_000_000_000, 8);
        let (cfg, pings) = pings_and_config(&spec);
        let ed = build_echodata(&cfg, pings, GeoTrack::default(), SourceMeta::default()).unwrap();
        assert_eq!(ed.beam.backscatter_r.frequency_hz.len(), 2);
        assert!(ed.platform.track.is_empty());
        assert_eq!(ed.environment.frequency_hz.len(), 2);
        ed.validate().unwrap();
    }

    #[test]
    fn every_ping_field_recoverable() {
        for seed in 0..10 {
            let spec = FixtureSpec::random(seed);
            let (cfg, pings) = pings_and_config(&spec);
            let ed = build_echodata(&cfg, pings.clone(), GeoTrack::default(), SourceMeta::default()).unwrap();
            for p in &pings {
                let f = ed.beam.channel.iter().position(|&c| c == p.record.channel).unwrap();
                let t = ed.ping_time().iter().position(|&t| t == p.time_ns).unwrap();
                let back = ed.ping_record(f, t).unwrap();
                assert!(back == p.record, "seed {seed} f {f} t {t}");
            }
            let present = ed.beam.settings.sample_count.iter().filter(|&&c| c >= 0).count();
            assert_eq!(present, pings.len());
        }
    }

    #[test]
    fn unknown_mode_payload_kept_in_vendor() {
        let spec = FixtureSpec::regular(1, &[38_000.0], 2, 1_000_000_000, 3);
        let (cfg, mut pings) = pings_and_config(&spec);
        pings[1].record.mode |= 0b1000;
        pings[1].record.extra = vec![1, 2, 250];
        pings[0].record.spare1 = 7;
        let ed = build_echodata(&cfg, pings.clone(), GeoTrack::default(), SourceMeta::default()).unwrap();
        assert!(ed.vendor.arrays.contains_key(VENDOR_EXTRA));
        assert!(ed.provenance.warnings.iter().any(|w| w.contains("unknown mode")));
        assert_eq!(ed.ping_record(0, 1).unwrap(), pings[1].record);
        assert_eq!(ed.ping_record(0, 0).unwrap(), pings[0].record);
        assert!(ed.bit_eq(&ed.clone()));
    }

    #[test]
    fn errors() {
        let spec = FixtureSpec::regular(1, &[38_000.0], 2, 1_000_000_000, 3);
        let (cfg, mut pings) = pings_and_config(&spec);
        assert!(matches!(
            build_echodata(&cfg, vec![], GeoTrack::default(), SourceMeta::default()),
            Err(ModelError::NoPings)
        ));
        pings[0].record.channel = 2;
        assert!(matches!(
            build_echodata(&cfg, pings, GeoTrack::default(), SourceMeta::default()),
            Err(ModelError::ChannelWithoutConfig(2))
        ));
        let _ = TypeCode::RAW0;
    }
}
