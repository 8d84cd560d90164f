use std::collections::HashMap;

use ndarray::{Array2, Array3, Axis};

use super::ModelError;
use crate::datagram::PingRecord;

/// Values over (frequency, ping_time, range_bin), NaN where nothing was recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledGrid {
    pub frequency_hz: Vec<f64>,
    pub ping_time: Vec<i64>,
    pub values: Array3<f64>,
}

pub const GRID_DIMS: [&str; 3] = ["frequency", "ping_time", "range_bin"];

impl LabeledGrid {
    pub fn new(frequency_hz: Vec<f64>, ping_time: Vec<i64>, values: Array3<f64>) -> Result<Self, ModelError> {
        let (nf, nt, _) = values.dim();
        if nf != frequency_hz.len() || nt != ping_time.len() {
            return Err(ModelError::InvalidGrid(format!(
                "values {:?} vs coordinates ({}, {})",
                values.dim(),
                frequency_hz.len(),
                ping_time.len()
            )));
        }
        if frequency_hz.iter().any(|f| !f.is_finite()) || frequency_hz.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::InvalidGrid("frequency must be finite and strictly increasing".into()));
        }
        Ok(LabeledGrid {
            frequency_hz,
            ping_time,
            values,
        })
    }

    pub fn range_bin_count(&self) -> usize {
        self.values.dim().2
    }

    pub fn range_bin(&self) -> Vec<i64> {
        (0..self.range_bin_count() as i64).collect()
    }

    /// Index of a frequency, matched to within one part in 10^9.
    pub fn frequency_index(&self, frequency_hz: f64) -> Option<usize> {
        self.frequency_hz
            .iter()
            .position(|&f| (f - frequency_hz).abs() <= 1e-9 * f.abs().max(1.0))
    }

    /// Keeps only the given ping columns, in the given order.
    pub fn select_pings(&self, indices: &[usize]) -> LabeledGrid {
        LabeledGrid {
            frequency_hz: self.frequency_hz.clone(),
            ping_time: indices.iter().map(|&i| self.ping_time[i]).collect(),
            values: self.values.select(Axis(1), indices),
        }
    }

    /// The first `count` samples of one (frequency, ping) row.
    pub fn ragged_row(&self, f: usize, t: usize, count: usize) -> Vec<f64> {
        self.values.slice(ndarray::s![f, t, ..count]).to_vec()
    }
}

/// Boolean classification over (ping_time, range_bin) for a frequency pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub frequency_a_hz: f64,
    pub frequency_b_hz: f64,
    pub ping_time: Vec<i64>,
    pub range_m: Vec<f64>,
    pub values: Array2<bool>,
}

/// A ping together with its datagram timestamp and file position.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquiredPing {
    pub time_ns: i64,
    /// Position in the source stream; orders ping_time rows.
    pub seq: u64,
    pub record: PingRecord,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelPings {
    pub frequency_hz: f64,
    pub pings: Vec<AcquiredPing>,
}

/// Where every ping lands on the shared (frequency, ping_time) grid.
#[derive(Debug, Clone)]
pub struct PingLayout {
    pub frequency_hz: Vec<f64>,
    /// Input channel index for each frequency row.
    pub channel_of_row: Vec<usize>,
    pub ping_time: Vec<i64>,
    /// (frequency, ping_time) -> index into that channel's ping list.
    pub slots: Array2<Option<usize>>,
    pub range_len: usize,
}

impl PingLayout {
    /// Outer join of all channel schedules.
    ///
    /// Rows are the distinct ping times ordered by the earliest stream position
    /// that carries them, which is ascending time for a well-ordered file and
    /// keeps timestamp reversals visible otherwise.
    pub fn build(channels: &[ChannelPings]) -> Result<Self, ModelError> {
        if channels.is_empty() || channels.iter().any(|c| c.pings.is_empty()) {
            return Err(ModelError::EmptyInput);
        }
        let mut channel_of_row: Vec<usize> = (0..channels.len()).collect();
        channel_of_row.sort_by(|&a, &b| channels[a].frequency_hz.total_cmp(&channels[b].frequency_hz));
        for w in channel_of_row.windows(2) {
            if channels[w[0]].frequency_hz == channels[w[1]].frequency_hz {
                return Err(ModelError::DuplicateFrequency(channels[w[0]].frequency_hz));
            }
        }

        let mut first_seq: HashMap<i64, u64> = HashMap::new();
        let mut range_len = 0usize;
        for ch in channels {
            let mut seen = HashMap::with_capacity(ch.pings.len());
            for p in &ch.pings {
                if seen.insert(p.time_ns, ()).is_some() {
                    return Err(ModelError::DuplicatePingTime {
                        frequency_hz: ch.frequency_hz,
                        time_ns: p.time_ns,
                    });
                }
                let e = first_seq.entry(p.time_ns).or_insert(p.seq);
                *e = (*e).min(p.seq);
                range_len = range_len.max(p.record.sample_count.max(0) as usize);
            }
        }
        let mut rows: Vec<(u64, i64)> = first_seq.into_iter().map(|(t, s)| (s, t)).collect();
        rows.sort_unstable();
        let ping_time: Vec<i64> = rows.into_iter().map(|(_, t)| t).collect();
        let row_of: HashMap<i64, usize> = ping_time.iter().enumerate().map(|(i, &t)| (t, i)).collect();

        let mut slots = Array2::from_elem((channels.len(), ping_time.len()), None);
        for (row, &ci) in channel_of_row.iter().enumerate() {
            for (pi, p) in channels[ci].pings.iter().enumerate() {
                slots[[row, row_of[&p.time_ns]]] = Some(pi);
            }
        }
        Ok(PingLayout {
            frequency_hz: channel_of_row.iter().map(|&c| channels[c].frequency_hz).collect(),
            channel_of_row,
            ping_time,
            slots,
            range_len,
        })
    }

    pub fn ping<'a>(&self, channels: &'a [ChannelPings], f: usize, t: usize) -> Option<&'a AcquiredPing> {
        self.slots[[f, t]].map(|i| &channels[self.channel_of_row[f]].pings[i])
    }

    /// Spreads a per-sample vector of each ping along range_bin, NaN-padded.
    pub fn gather<T: Copy>(
        &self,
        channels: &[ChannelPings],
        samples: impl Fn(&PingRecord) -> &[T],
        convert: impl Fn(T) -> f64,
    ) -> Array3<f64> {
        let (nf, nt) = self.slots.dim();
        let mut out = Array3::from_elem((nf, nt, self.range_len), f64::NAN);
        for f in 0..nf {
            for t in 0..nt {
                if let Some(p) = self.ping(channels, f, t) {
                    let src = samples(&p.record);
                    let mut row = out.slice_mut(ndarray::s![f, t, ..src.len().min(self.range_len)]);
                    for (dst, &v) in row.iter_mut().zip(src) {
                        *dst = convert(v);
                    }
                }
            }
        }
        out
    }

    /// One scalar per (frequency, ping), `missing` where no ping exists.
    pub fn per_ping<T: Copy>(&self, channels: &[ChannelPings], value: impl Fn(&PingRecord) -> T, missing: T) -> Array2<T> {
        let (nf, nt) = self.slots.dim();
        Array2::from_shape_fn((nf, nt), |(f, t)| {
            self.ping(channels, f, t).map_or(missing, |p| value(&p.record))
        })
    }
}

/// Restructures per-channel ragged power samples into a padded 3-D grid of
/// raw counts.
pub fn align_ragged(channels: &[ChannelPings]) -> Result<LabeledGrid, ModelError> {
    let layout = PingLayout::build(channels)?;
    let values = layout.gather(channels, |r| &r.power_counts, |c: i16| c as f64);
    LabeledGrid::new(layout.frequency_hz, layout.ping_time, values)
}
