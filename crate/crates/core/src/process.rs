//! Timestamp repair, MVBS bin-averaging and frequency-difference masks.

use ndarray::{Array2, Array3, Axis};
use serde::Serialize;
use thiserror::Error;

use crate::calibrate::SvGrid;
use crate::model::{LabeledGrid, Mask};
use crate::parallel::map_partitions;
use crate::time::seconds_to_ns;

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("frequency {0} Hz not in grid")]
    FrequencyNotFound(f64),
    #[error("grids differ: {0}")]
    GridMismatch(String),
}

pub const DEFAULT_WINDOW_S: f64 = 60.0;
pub const DEFAULT_EPSILON_S: f64 = 0.001;

/// What [`repair_time_reversals`] changed and what it could not.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct TimeRepairReport {
    pub fixed: Vec<usize>,
    pub original_ns: Vec<i64>,
    pub repaired_ns: Vec<i64>,
    pub unfixable: Vec<usize>,
}

impl TimeRepairReport {
    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty() && self.unfixable.is_empty()
    }
}

/// Nudges small backward steps forward so the series keeps increasing.
///
/// Scanning left to right, a time at or before the previous (already
/// repaired) time is moved to `previous + epsilon` when the step back is
/// shorter than `window`; longer reversals are left alone and reported.
pub fn repair_time_reversals(times: &[i64], window_s: f64, epsilon_s: f64) -> (Vec<i64>, TimeRepairReport) {
    let window = seconds_to_ns(window_s);
    let eps = seconds_to_ns(epsilon_s);
    let mut out = times.to_vec();
    let mut report = TimeRepairReport::default();
    for i in 1..out.len() {
        let prev = out[i - 1];
        let t = out[i];
        if t <= prev {
            if (prev as i128 - t as i128) < window as i128 {
                out[i] = prev.saturating_add(eps);
                report.fixed.push(i);
                report.original_ns.push(t);
                report.repaired_ns.push(out[i]);
            } else {
                report.unfixable.push(i);
            }
        }
    }
    (out, report)
}

/// Ping grouping for MVBS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PingBin {
    /// Wall-clock intervals of this many seconds, anchored at the first ping.
    Duration(f64),
    /// Consecutive groups of this many pings.
    Count(usize),
}

impl std::str::FromStr for PingBin {
    type Err = ProcessError;

    /// `"20s"` or `"10c"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ProcessError::InvalidParams(format!("ping bin {s:?}: expected <seconds>s or <count>c"));
        let s = s.trim();
        if let Some(n) = s.strip_suffix('s') {
            let v: f64 = n.parse().map_err(|_| bad())?;
            Ok(PingBin::Duration(v))
        } else if let Some(n) = s.strip_suffix('c') {
            Ok(PingBin::Count(n.parse().map_err(|_| bad())?))
        } else {
            Err(bad())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvbsParams {
    pub range_bin_size_m: f64,
    pub ping_bin: PingBin,
}

impl MvbsParams {
    pub fn validate(&self) -> Result<(), ProcessError> {
        if !(self.range_bin_size_m > 0.0 && self.range_bin_size_m.is_finite()) {
            return Err(ProcessError::InvalidParams(format!(
                "range bin size must be positive, got {}",
                self.range_bin_size_m
            )));
        }
        match self.ping_bin {
            PingBin::Duration(s) if !(s > 0.0 && s.is_finite()) || seconds_to_ns(s) < 1 => Err(
                ProcessError::InvalidParams(format!("ping bin duration must be positive, got {s}")),
            ),
            PingBin::Count(0) => Err(ProcessError::InvalidParams("ping bin count must be at least 1".into())),
            _ => Ok(()),
        }
    }
}

/// Ping groups as (label, member ping indices).
fn ping_groups(times: &[i64], bin: PingBin) -> Vec<(i64, Vec<usize>)> {
    match bin {
        PingBin::Count(n) => times
            .chunks(n)
            .enumerate()
            .map(|(g, c)| (c[0], (g * n..g * n + c.len()).collect()))
            .collect(),
        PingBin::Duration(s) => {
            let width = seconds_to_ns(s) as i128;
            let anchor = *times.iter().min().expect("at least one ping") as i128;
            let idx: Vec<usize> = times.iter().map(|&t| ((t as i128 - anchor) / width) as usize).collect();
            let count = idx.iter().max().map_or(0, |m| m + 1);
            let mut groups: Vec<(i64, Vec<usize>)> =
                (0..count).map(|g| ((anchor + g as i128 * width) as i64, Vec::new())).collect();
            for (i, &g) in idx.iter().enumerate() {
                groups[g].1.push(i);
            }
            groups
        }
    }
}

/// Mean volume backscattering strength on a coarser (ping, range) grid.
///
/// Averages are taken in the linear domain over finite members; range bins
/// are `[j·b, (j+1)·b)` on the physical range of each frequency.
pub fn compute_mvbs(sv: &SvGrid, p: &MvbsParams, workers: usize) -> Result<SvGrid, ProcessError> {
    p.validate()?;
    let (nf, nt, nr) = sv.grid.values.dim();
    if nt == 0 {
        return Err(ProcessError::InvalidParams("MVBS needs at least one ping".into()));
    }
    let b = p.range_bin_size_m;
    let max_range = sv.range_m.iter().copied().fold(0.0f64, f64::max);
    let n_bins = if nr == 0 { 0 } else { (max_range / b).floor() as usize + 1 };
    let bin_of: Array2<usize> = sv.range_m.mapv(|r| (r / b).floor() as usize);
    let groups = ping_groups(&sv.grid.ping_time, p.ping_bin);

    let blocks = map_partitions(groups.len(), workers, |range| {
        let mut sum = Array3::<f64>::zeros((nf, range.len(), n_bins));
        let mut count = Array3::<u32>::zeros((nf, range.len(), n_bins));
        for (gi, (_, members)) in groups[range.clone()].iter().enumerate() {
            for f in 0..nf {
                for &t in members {
                    for k in 0..nr {
                        let v = sv.grid.values[[f, t, k]];
                        if v.is_finite() {
                            let j = bin_of[[f, k]];
                            sum[[f, gi, j]] += 10f64.powf(v / 10.0);
                            count[[f, gi, j]] += 1;
                        }
                    }
                }
            }
        }
        ndarray::Zip::from(&mut sum).and(&count).for_each(|s, &c| {
            *s = if c == 0 { f64::NAN } else { 10.0 * (*s / c as f64).log10() };
        });
        sum
    });
    let views: Vec<_> = blocks.iter().map(|a| a.view()).collect();
    let values = ndarray::concatenate(Axis(1), &views).expect("blocks share frequency and range extents");
    let starts: Vec<f64> = (0..n_bins).map(|j| j as f64 * b).collect();
    let range_m = Array2::from_shape_fn((nf, n_bins), |(_, j)| starts[j]);
    Ok(SvGrid {
        quantity: sv.quantity,
        grid: LabeledGrid {
            frequency_hz: sv.grid.frequency_hz.clone(),
            ping_time: groups.iter().map(|(label, _)| *label).collect(),
            values,
        },
        range_m,
        range_step_m: vec![b; nf],
    })
}

/// True where `d_min <= Sv(a) - Sv(b) <= d_max`; false if either side is NaN.
pub fn frequency_diff_mask(
    sv: &SvGrid,
    frequency_a_hz: f64,
    frequency_b_hz: f64,
    d_min_db: f64,
    d_max_db: f64,
) -> Result<Mask, ProcessError> {
    let fa = sv
        .grid
        .frequency_index(frequency_a_hz)
        .ok_or(ProcessError::FrequencyNotFound(frequency_a_hz))?;
    let fb = sv
        .grid
        .frequency_index(frequency_b_hz)
        .ok_or(ProcessError::FrequencyNotFound(frequency_b_hz))?;
    let (ra, rb) = (sv.range_m.row(fa), sv.range_m.row(fb));
    if ra.iter().zip(rb.iter()).any(|(x, y)| x.to_bits() != y.to_bits()) {
        return Err(ProcessError::GridMismatch(format!(
            "{frequency_a_hz} Hz and {frequency_b_hz} Hz have different range coordinates; run MVBS first"
        )));
    }
    let a = sv.grid.values.index_axis(Axis(0), fa);
    let b = sv.grid.values.index_axis(Axis(0), fb);
    let values = ndarray::Zip::from(&a).and(&b).map_collect(|&x, &y| {
        let d = x - y;
        !d.is_nan() && d_min_db <= d && d <= d_max_db
    });
    Ok(Mask {
        frequency_a_hz: sv.grid.frequency_hz[fa],
        frequency_b_hz: sv.grid.frequency_hz[fb],
        ping_time: sv.grid.ping_time.clone(),
        range_m: ra.to_vec(),
        values,
    })
}
