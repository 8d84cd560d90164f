//! Received power to calibrated Sv and TS.

use std::f64::consts::PI;

use ndarray::{concatenate, s, Array2, Array3, Axis};
use serde::Deserialize;
use serde_json::Value;
use thiserror::Error;

use crate::datagram::TABLE_LEN;
use crate::model::{EchoData, LabeledGrid};
use crate::parallel::map_partitions;

#[derive(Debug, Error)]
pub enum CalError {
    #[error("no calibration parameters for {frequency_hz} Hz: {reason}")]
    MissingCalParams { frequency_hz: f64, reason: String },
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("absorption must be non-negative, got {0}")]
    NegativeAbsorption(f64),
    #[error("invalid override file: {0}")]
    InvalidOverrides(String),
}

/// Narrowband calibration inputs for one frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalParams {
    pub frequency_hz: f64,
    pub gain_db: f64,
    pub equivalent_beam_angle_db: f64,
    pub sa_correction_db: f64,
    pub transmit_power_w: f64,
    pub pulse_length_s: f64,
    pub sound_speed_m_s: f64,
    pub absorption_db_m: f64,
    pub sample_interval_s: f64,
    /// Sample index of the first stored sample.
    pub sample_offset: f64,
}

impl CalParams {
    /// Parameters for which every multiplicative term of the offset is 1.
    pub fn unit() -> Self {
        CalParams {
            frequency_hz: 1.0,
            gain_db: 0.0,
            equivalent_beam_angle_db: 0.0,
            sa_correction_db: 0.0,
            transmit_power_w: 1.0,
            pulse_length_s: 1.0,
            sound_speed_m_s: 1.0,
            absorption_db_m: 0.0,
            sample_interval_s: 1.0,
            sample_offset: 0.0,
        }
    }

    pub fn wavelength_m(&self) -> f64 {
        self.sound_speed_m_s / self.frequency_hz
    }

    pub fn validate(&self) -> Result<(), CalError> {
        for (name, value) in [
            ("sound speed", self.sound_speed_m_s),
            ("frequency", self.frequency_hz),
            ("pulse length", self.pulse_length_s),
            ("sample interval", self.sample_interval_s),
            ("transmit power", self.transmit_power_w),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CalError::NonPositive { name, value });
            }
        }
        if !(self.absorption_db_m >= 0.0) {
            return Err(CalError::NegativeAbsorption(self.absorption_db_m));
        }
        Ok(())
    }

    /// Range spacing between consecutive samples, c·Δt/2.
    pub fn range_step_m(&self) -> f64 {
        self.sound_speed_m_s * self.sample_interval_s / 2.0
    }
}

/// Sample-centre ranges `(offset + k + 0.5)·c·Δt/2` for `k` in `0..n`.
pub fn compute_range(sample_interval_s: f64, sound_speed_m_s: f64, n: usize, offset: f64) -> Result<Vec<f64>, CalError> {
    if !(sample_interval_s > 0.0) {
        return Err(CalError::NonPositive {
            name: "sample interval",
            value: sample_interval_s,
        });
    }
    if !(sound_speed_m_s > 0.0) {
        return Err(CalError::NonPositive {
            name: "sound speed",
            value: sound_speed_m_s,
        });
    }
    let step = sound_speed_m_s * sample_interval_s / 2.0;
    Ok((0..n).map(|k| (offset + k as f64 + 0.5) * step).collect())
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Sv calibration offset C_sv in dB.
pub fn sv_offset_db(p: &CalParams) -> f64 {
    let g0 = db_to_linear(p.gain_db);
    let psi = db_to_linear(p.equivalent_beam_angle_db);
    let lambda = p.wavelength_m();
    10.0 * (p.transmit_power_w * g0 * g0 * lambda * lambda * p.sound_speed_m_s * p.pulse_length_s * psi
        / (32.0 * PI * PI))
        .log10()
        + 2.0 * p.sa_correction_db
}

/// TS calibration offset in dB.
pub fn ts_offset_db(p: &CalParams) -> f64 {
    let g0 = db_to_linear(p.gain_db);
    let lambda = p.wavelength_m();
    10.0 * (p.transmit_power_w * g0 * g0 * lambda * lambda / (16.0 * PI * PI)).log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    /// Volume backscattering strength, dB re 1 m^-1.
    Sv,
    /// Target strength, dB re 1 m^2.
    Ts,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::Sv => "Sv",
            Quantity::Ts => "TS",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "Sv" => Some(Quantity::Sv),
            "TS" => Some(Quantity::Ts),
            _ => None,
        }
    }
}

/// A calibrated grid with its physical range coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct SvGrid {
    pub quantity: Quantity,
    pub grid: LabeledGrid,
    /// Range of each bin per frequency, (frequency, range_bin).
    pub range_m: Array2<f64>,
    /// Vertical extent represented by one bin, per frequency.
    pub range_step_m: Vec<f64>,
}

impl SvGrid {
    pub fn new(
        quantity: Quantity,
        grid: LabeledGrid,
        range_m: Array2<f64>,
        range_step_m: Vec<f64>,
    ) -> Result<Self, crate::model::ModelError> {
        let (nf, _, nr) = grid.values.dim();
        if range_m.dim() != (nf, nr) || range_step_m.len() != nf {
            return Err(crate::model::ModelError::InvalidGrid(format!(
                "range_m {:?} / range_step_m {} do not match grid {:?}",
                range_m.dim(),
                range_step_m.len(),
                grid.values.dim()
            )));
        }
        for row in range_m.rows() {
            if row.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || row.iter().zip(row.iter().skip(1)).any(|(a, b)| a >= b) {
                return Err(crate::model::ModelError::InvalidGrid(
                    "range_m must be non-negative and strictly increasing".into(),
                ));
            }
        }
        Ok(SvGrid {
            quantity,
            grid,
            range_m,
            range_step_m,
        })
    }

    pub fn frequency_hz(&self) -> &[f64] {
        &self.grid.frequency_hz
    }

    pub fn ping_time(&self) -> &[i64] {
        &self.grid.ping_time
    }
}

/// Per-frequency calibration overrides as read from a JSON file.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyOverride {
    pub gain_db: Option<f64>,
    pub sa_correction_db: Option<f64>,
    pub equivalent_beam_angle_db: Option<f64>,
    pub sound_speed_m_s: Option<f64>,
    pub absorption_db_m: Option<f64>,
}

/// User-supplied values that take precedence over the file.
///
/// Per-frequency entries win over the global sound speed and absorption.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CalOverrides {
    pub sound_speed_m_s: Option<f64>,
    pub absorption_db_m: Option<f64>,
    pub per_frequency: Vec<(f64, FrequencyOverride)>,
}

impl CalOverrides {
    /// Parses `{"38000": {"gain_db": 26.5, ...}, ...}`.
    pub fn from_json(text: &str) -> Result<Self, CalError> {
        let v: Value = serde_json::from_str(text).map_err(|e| CalError::InvalidOverrides(e.to_string()))?;
        let obj = v
            .as_object()
            .ok_or_else(|| CalError::InvalidOverrides("top level must be an object".into()))?;
        let mut per_frequency = Vec::with_capacity(obj.len());
        for (key, entry) in obj {
            let f: f64 = key
                .trim()
                .parse()
                .map_err(|_| CalError::InvalidOverrides(format!("frequency key {key:?} is not a number")))?;
            let o: FrequencyOverride =
                serde_json::from_value(entry.clone()).map_err(|e| CalError::InvalidOverrides(format!("{key}: {e}")))?;
            per_frequency.push((f, o));
        }
        Ok(CalOverrides {
            per_frequency,
            ..CalOverrides::default()
        })
    }

    fn for_frequency(&self, frequency_hz: f64) -> Option<&FrequencyOverride> {
        self.per_frequency
            .iter()
            .find(|(f, _)| (f - frequency_hz).abs() <= 1e-6 * frequency_hz.abs().max(1.0))
            .map(|(_, o)| o)
    }
}

/// Index of the table entry closest to `pulse_length_s`.
pub fn nearest_table_index(table: &[f32; TABLE_LEN], pulse_length_s: f64) -> usize {
    let mut best = 0;
    for (i, &v) in table.iter().enumerate() {
        if (v as f64 - pulse_length_s).abs() < (table[best] as f64 - pulse_length_s).abs() {
            best = i;
        }
    }
    best
}

/// Calibration parameters per frequency, with any warnings raised on the way.
pub fn resolve_params(ed: &EchoData, overrides: &CalOverrides) -> Result<(Vec<CalParams>, Vec<String>), CalError> {
    let mut warnings = Vec::new();
    let s = &ed.beam.settings;
    let mut out = Vec::new();
    for (f, &frequency_hz) in ed.frequency_hz().iter().enumerate() {
        let missing = |reason: &str| CalError::MissingCalParams {
            frequency_hz,
            reason: reason.into(),
        };
        let t = (0..ed.ping_time().len())
            .find(|&t| s.sample_count[[f, t]] >= 0)
            .ok_or_else(|| missing("no pings"))?;
        let channel = ed.beam.channel[f];
        let tc = ed
            .sonar
            .config
            .channel(channel)
            .ok_or_else(|| missing("channel not in configuration"))?;
        let pulse = s.pulse_length_s[[f, t]];
        let idx = nearest_table_index(&tc.pulse_length_table_s, pulse);
        let table_pulse = tc.pulse_length_table_s[idx] as f64;
        if (table_pulse - pulse).abs() > 1e-3 * pulse.abs() {
            warnings.push(format!(
                "{frequency_hz} Hz: pulse length {pulse} s not in table, using entry {table_pulse} s"
            ));
        }
        let differs = (0..ed.ping_time().len()).any(|u| {
            s.sample_count[[f, u]] >= 0
                && (s.pulse_length_s[[f, u]] != pulse
                    || s.transmit_power_w[[f, u]] != s.transmit_power_w[[f, t]]
                    || s.sample_interval_s[[f, u]] != s.sample_interval_s[[f, t]]
                    || s.sample_offset[[f, u]] != s.sample_offset[[f, t]])
        });
        if differs {
            warnings.push(format!("{frequency_hz} Hz: ping settings vary; first ping used"));
        }
        let first_valid = |env: f64, ping: f64| if env.is_finite() { env } else { ping };
        let o = overrides.for_frequency(frequency_hz).cloned().unwrap_or_default();
        let p = CalParams {
            frequency_hz,
            gain_db: o.gain_db.unwrap_or(tc.gain_table_db[idx] as f64),
            equivalent_beam_angle_db: o.equivalent_beam_angle_db.unwrap_or(tc.equivalent_beam_angle_db as f64),
            sa_correction_db: o.sa_correction_db.unwrap_or(tc.sa_correction_table_db[idx] as f64),
            transmit_power_w: s.transmit_power_w[[f, t]],
            pulse_length_s: pulse,
            sound_speed_m_s: o.sound_speed_m_s.or(overrides.sound_speed_m_s).unwrap_or_else(|| {
                first_valid(ed.environment.sound_speed_m_s[f], s.sound_velocity_m_s[[f, t]])
            }),
            absorption_db_m: o.absorption_db_m.or(overrides.absorption_db_m).unwrap_or_else(|| {
                first_valid(ed.environment.absorption_db_m[f], s.absorption_db_m[[f, t]])
            }),
            sample_interval_s: s.sample_interval_s[[f, t]],
            sample_offset: s.sample_offset[[f, t]] as f64,
        };
        p.validate()?;
        out.push(p);
    }
    Ok((out, warnings))
}

/// Applies `out = P_r + gain(k) - offset` per frequency, partitioned over pings.
fn apply(
    power: &Array3<f64>,
    params: &[CalParams],
    quantity: Quantity,
    workers: usize,
) -> Result<(Array3<f64>, Array2<f64>), CalError> {
    let (nf, nt, nr) = power.dim();
    let mut range_m = Array2::zeros((nf, nr));
    let mut term = Array2::zeros((nf, nr));
    for (f, p) in params.iter().enumerate() {
        let r = compute_range(p.sample_interval_s, p.sound_speed_m_s, nr, p.sample_offset)?;
        let (spread, offset) = match quantity {
            Quantity::Sv => (20.0, sv_offset_db(p)),
            Quantity::Ts => (40.0, ts_offset_db(p)),
        };
        for (k, &rk) in r.iter().enumerate() {
            range_m[[f, k]] = rk;
            term[[f, k]] = spread * rk.log10() + 2.0 * p.absorption_db_m * rk - offset;
        }
    }
    let blocks = map_partitions(nt, workers, |pings| {
        let mut block = power.slice(s![.., pings, ..]).to_owned();
        for f in 0..nf {
            for mut row in block.index_axis_mut(Axis(0), f).rows_mut() {
                for (v, &t) in row.iter_mut().zip(term.row(f)) {
                    *v += t;
                }
            }
        }
        block
    });
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let values = concatenate(Axis(1), &views).expect("blocks share frequency and range extents");
    Ok((values, range_m))
}

fn calibrate_with(ed: &EchoData, params: &[CalParams], quantity: Quantity, workers: usize) -> Result<SvGrid, CalError> {
    let g = &ed.beam.backscatter_r;
    if params.len() != g.frequency_hz.len() {
        return Err(CalError::MissingCalParams {
            frequency_hz: f64::NAN,
            reason: format!("{} parameter sets for {} frequencies", params.len(), g.frequency_hz.len()),
        });
    }
    let (values, range_m) = apply(&g.values, params, quantity, workers)?;
    let grid = LabeledGrid {
        frequency_hz: g.frequency_hz.clone(),
        ping_time: g.ping_time.clone(),
        values,
    };
    Ok(SvGrid {
        quantity,
        grid,
        range_m,
        range_step_m: params.iter().map(CalParams::range_step_m).collect(),
    })
}

/// Sv over the Beam grid using explicit parameters, one set per frequency.
pub fn compute_sv_with(ed: &EchoData, params: &[CalParams], workers: usize) -> Result<SvGrid, CalError> {
    calibrate_with(ed, params, Quantity::Sv, workers)
}

/// TS over the Beam grid using explicit parameters, one set per frequency.
pub fn compute_ts_with(ed: &EchoData, params: &[CalParams], workers: usize) -> Result<SvGrid, CalError> {
    calibrate_with(ed, params, Quantity::Ts, workers)
}

pub fn compute_sv(ed: &EchoData, overrides: &CalOverrides) -> Result<SvGrid, CalError> {
    let (params, _) = resolve_params(ed, overrides)?;
    compute_sv_with(ed, &params, crate::parallel::default_workers())
}

pub fn compute_ts(ed: &EchoData, overrides: &CalOverrides) -> Result<SvGrid, CalError> {
    let (params, _) = resolve_params(ed, overrides)?;
    compute_ts_with(ed, &params, crate::parallel::default_workers())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_example() {
        let r = compute_range(64e-6, 1500.0, 3, 0.0).unwrap();
        assert!((r[0] - 0.024).abs() < 1e-12);
        assert!((r[1] - r[0] - 0.048).abs() < 1e-12);
        assert!(compute_range(64e-6, 1500.0, 0, 0.0).unwrap().is_empty());
        assert!(compute_range(0.0, 1500.0, 3, 0.0).is_err());
        assert!(compute_range(1e-4, -1.0, 3, 0.0).is_err());
    }

    #[test]
    fn range_scales_with_sound_speed() {
        let a = compute_range(1e-4, 1500.0, 10, 3.0).unwrap();
        let b = compute_range(1e-4, 3000.0, 10, 3.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_offsets() {
        let pi2 = PI.powi(2);
        assert!((sv_offset_db(&CalParams::unit()) + 10.0 * (32.0 * pi2).log10()).abs() < 1e-9);
        assert!((sv_offset_db(&CalParams::unit()) + 24.9945).abs() < 1e-4);
        assert!((ts_offset_db(&CalParams::unit()) + 21.9842).abs() < 1e-4);
    }

    #[test]
    fn offset_sensitivities() {
        let base = CalParams::unit();
        let c0 = sv_offset_db(&base);
        let g = CalParams { gain_db: 3.0, ..base };
        assert!((sv_offset_db(&g) - c0 - 6.0).abs() < 1e-12);
        let sa = CalParams { sa_correction_db: 0.7, ..base };
        assert!((sv_offset_db(&sa) - c0 - 1.4).abs() < 1e-12);
    }

    #[test]
    fn overrides_parse() {
        let o = CalOverrides::from_json(r#"{"38000": {"gain_db": 26.5}, " 120000.0 ": {"absorption_db_m": 0.03}}"#)
            .unwrap();
        assert_eq!(o.for_frequency(38_000.0).unwrap().gain_db, Some(26.5));
        assert_eq!(o.for_frequency(120_000.0).unwrap().absorption_db_m, Some(0.03));
        assert!(o.for_frequency(70_000.0).is_none());
        assert!(CalOverrides::from_json(r#"{"x": {}}"#).is_err());
        assert!(CalOverrides::from_json(r#"{"1": {"gain": 1}}"#).is_err());
        assert!(CalOverrides::from_json("[]").is_err());
    }

    #[test]
    fn table_lookup() {
        let t = [2.56e-4, 5.12e-4, 1.024e-3, 2.048e-3, 4.096e-3];
        assert_eq!(nearest_table_index(&t, 1.024e-3), 2);
        assert_eq!(nearest_table_index(&t, 1.0e-3), 2);
        assert_eq!(nearest_table_index(&t, 1.0), 4);
    }

    #[test]
    fn params_validation() {
        assert!(CalParams::unit().validate().is_ok());
        assert!(CalParams { pulse_length_s: 0.0, ..CalParams::unit() }.validate().is_err());
        assert!(CalParams { absorption_db_m: -0.1, ..CalParams::unit() }.validate().is_err());
        assert!(CalParams { absorption_db_m: f64::NAN, ..CalParams::unit() }.validate().is_err());
    }
}
