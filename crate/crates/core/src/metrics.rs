//! Per-ping vertical distribution statistics over Sv.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::calibrate::SvGrid;
use crate::time::format_iso_ns;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Square metres per square nautical mile, times 4π.
pub const NASC_FACTOR: f64 = 4.0 * PI * 1852.0 * 1852.0;

pub const CSV_HEADER: [&str; 8] = [
    "ping_time",
    "frequency_hz",
    "sa",
    "nasc",
    "center_of_mass_m",
    "inertia_m2",
    "equivalent_area_m",
    "aggregation_per_m",
];

/// Statistics of one ping; `None` when the ping has no finite cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub ping_time: i64,
    pub frequency_hz: f64,
    pub sa: Option<f64>,
    pub nasc: Option<f64>,
    pub center_of_mass_m: Option<f64>,
    pub inertia_m2: Option<f64>,
    pub equivalent_area_m: Option<f64>,
    pub aggregation_per_m: Option<f64>,
}

/// The five statistics of a single profile of (depth, s_v) pairs with
/// constant spacing `dz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileStats {
    pub sa: f64,
    pub center_of_mass_m: f64,
    pub inertia_m2: f64,
    pub equivalent_area_m: f64,
    pub aggregation_per_m: f64,
}

pub fn profile_stats(depth_m: &[f64], sv_linear: &[f64], dz: f64) -> Option<ProfileStats> {
    let mut sum = 0.0;
    let mut moment = 0.0;
    let mut sq = 0.0;
    let mut any = false;
    for (&z, &s) in depth_m.iter().zip(sv_linear) {
        if s.is_finite() {
            any = true;
            sum += s * dz;
            moment += z * s * dz;
            sq += s * s * dz;
        }
    }
    if !any {
        return None;
    }
    let cm = moment / sum;
    let mut spread = 0.0;
    for (&z, &s) in depth_m.iter().zip(sv_linear) {
        if s.is_finite() {
            spread += (z - cm) * (z - cm) * s * dz;
        }
    }
    let ea = sum * sum / sq;
    Some(ProfileStats {
        sa: sum,
        center_of_mass_m: cm,
        inertia_m2: spread / sum,
        equivalent_area_m: ea,
        aggregation_per_m: 1.0 / ea,
    })
}

fn defined(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

/// One row per (frequency, ping), ordered by frequency then ping time.
pub fn compute_metrics(sv: &SvGrid) -> Vec<MetricsRow> {
    let (nf, nt, _) = sv.grid.values.dim();
    let mut rows = Vec::with_capacity(nf * nt);
    for f in 0..nf {
        let depth: Vec<f64> = sv.range_m.row(f).to_vec();
        let dz = sv.range_step_m[f];
        for t in 0..nt {
            let lin: Vec<f64> = sv
                .grid
                .values
                .slice(ndarray::s![f, t, ..])
                .iter()
                .map(|&v| 10f64.powf(v / 10.0))
                .collect();
            let stats = profile_stats(&depth, &lin, dz);
            let sa = stats.map(|s| s.sa);
            rows.push(MetricsRow {
                ping_time: sv.grid.ping_time[t],
                frequency_hz: sv.grid.frequency_hz[f],
                sa,
                nasc: sa.map(|v| NASC_FACTOR * v),
                // An all-zero profile leaves the ratios undefined.
                center_of_mass_m: stats.and_then(|s| defined(s.center_of_mass_m)),
                inertia_m2: stats.and_then(|s| defined(s.inertia_m2)),
                equivalent_area_m: stats.and_then(|s| defined(s.equivalent_area_m)),
                aggregation_per_m: stats.and_then(|s| defined(s.aggregation_per_m)),
            });
        }
    }
    rows.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz).then(a.ping_time.cmp(&b.ping_time)));
    rows
}

/// `%.9g`: nine significant digits, exponent form outside [1e-4, 1e9).
pub fn format_sig9(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let exp = format!("{v:.8e}");
    let (mantissa, e) = exp.split_once('e').expect("exponent form");
    let e: i32 = e.parse().expect("integer exponent");
    if !(-4..9).contains(&e) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{}{:02}", if e < 0 { '-' } else { '+' }, e.abs());
    }
    let decimals = (8 - e).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_owned()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn field(v: Option<f64>) -> String {
    v.map(format_sig9).unwrap_or_default()
}

pub fn write_metrics<W: Write>(rows: &[MetricsRow], out: W) -> Result<(), MetricsError> {
    let mut rows = rows.to_vec();
    rows.sort_by(|a, b| a.frequency_hz.total_cmp(&b.frequency_hz).then(a.ping_time.cmp(&b.ping_time)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &rows {
        w.write_record([
            format_iso_ns(r.ping_time),
            format_sig9(r.frequency_hz),
            field(r.sa),
            field(r.nasc),
            field(r.center_of_mass_m),
            field(r.inertia_m2),
            field(r.equivalent_area_m),
            field(r.aggregation_per_m),
        ])?;
    }
    w.flush().map_err(|e| MetricsError::Csv(e.into()))?;
    Ok(())
}

pub fn write_metrics_csv(rows: &[MetricsRow], path: &Path) -> Result<(), MetricsError> {
    let file = std::fs::File::create(path).map_err(|source| MetricsError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_metrics(rows, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig9_matches_printf() {
        // expected strings are what C's printf("%.9g") prints
        let cases = [
            (1.0, "1"),
            (0.1, "0.1"),
            (123456789.0, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (0.000123456789123, "0.000123456789"),
            (0.0000123, "1.23e-05"),
            (-2.5, "-2.5"),
            (38000.0, "38000"),
            (1.0 / 3.0, "0.333333333"),
            (99999999.95, "100000000"),
            (999999999.5, "1e+09"),
        ];
        for (v, want) in cases {
            assert_eq!(format_sig9(v), want, "{v}");
        }
    }

    #[test]
    fn point_mass() {
        let s = profile_stats(&[1.0, 2.0, 3.0], &[0.0, 4.0, 0.0], 0.5).unwrap();
        assert_eq!(s.center_of_mass_m, 2.0);
        assert_eq!(s.inertia_m2, 0.0);
        assert_eq!(s.equivalent_area_m, 0.5);
        assert_eq!(s.aggregation_per_m, 2.0);
    }

    #[test]
    fn no_finite_cells() {
        assert!(profile_stats(&[1.0], &[f64::NAN], 1.0).is_none());
    }

    #[test]
    fn empty_output_is_header_only() {
        let mut buf = Vec::new();
        write_metrics(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "ping_time,frequency_hz,sa,nasc,center_of_mass_m,inertia_m2,equivalent_area_m,aggregation_per_m\n"
        );
    }

    #[test]
    fn undefined_fields_are_empty() {
        let row = MetricsRow {
            ping_time: 0,
            frequency_hz: 38_000.0,
            sa: None,
            nasc: None,
            center_of_mass_m: None,
            inertia_m2: None,
            equivalent_area_m: None,
            aggregation_per_m: None,
        };
        let mut buf = Vec::new();
        write_metrics(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "1970-01-01T00:00:00.000000000Z,38000,,,,,,");
    }
}
