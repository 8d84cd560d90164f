use echograin_core::calibrate::{compute_range, sv_offset_db, CalParams, Quantity};
use echograin_core::convert::{nearest_fix, parse_position, slice_by_position, BoundingBox};
use echograin_core::datagram::{
    checksum, filetime_to_unix_ns, parse_nme0, read_records, write_records, NmeaSentence, Record,
};
use echograin_core::fixture::{generate_fixture, FixtureSpec};
use echograin_core::metrics::profile_stats;
use echograin_core::model::{align_ragged, AcquiredPing, ChannelPings, FixSource, GeoTrack, LabeledGrid};
use echograin_core::process::{compute_mvbs, frequency_diff_mask, repair_time_reversals, MvbsParams, PingBin};
use echograin_core::store::{read_array, write_array, ArrayData, ArrayMeta, Compressor, Dtype, FillValue, StorePath};
use echograin_core::SvGrid;
use ndarray::{Array2, Array3};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn channels_of(spec: &FixtureSpec) -> Vec<ChannelPings> {
    let fx = generate_fixture(spec).unwrap();
    let mut out: Vec<ChannelPings> = Vec::new();
    for (seq, r) in fx.records.into_iter().enumerate() {
        if let Record::Ping(p) = r.record {
            let f = p.frequency_hz as f64;
            let ping = AcquiredPing {
                time_ns: r.timestamp_ns as i64,
                seq: seq as u64,
                record: p,
            };
            match out.iter_mut().find(|c| c.frequency_hz == f) {
                Some(c) => c.pings.push(ping),
                None => out.push(ChannelPings {
                    frequency_hz: f,
                    pings: vec![ping],
                }),
            }
        }
    }
    out
}

fn random_data(rng: &mut ChaCha8Rng, dtype: Dtype, n: usize) -> ArrayData {
    match dtype {
        Dtype::F8 => ArrayData::F8(
            (0..n)
                .map(|_| if rng.random_bool(0.1) { f64::NAN } else { rng.random::<f64>() * 1e6 - 5e5 })
                .collect(),
        ),
        Dtype::F4 => ArrayData::F4(
            (0..n)
                .map(|_| if rng.random_bool(0.1) { f32::NAN } else { rng.random::<f32>() - 0.5 })
                .collect(),
        ),
        Dtype::I8 => ArrayData::I8((0..n).map(|_| rng.random()).collect()),
        Dtype::I2 => ArrayData::I2((0..n).map(|_| rng.random()).collect()),
        Dtype::I1 => ArrayData::I1((0..n).map(|_| rng.random()).collect()),
        Dtype::B1 => ArrayData::B1((0..n).map(|_| rng.random()).collect()),
    }
}

fn fill_for(dtype: Dtype) -> FillValue {
    match dtype {
        Dtype::F8 | Dtype::F4 => FillValue::Float(f64::NAN),
        Dtype::B1 => FillValue::Bool(false),
        _ => FillValue::Int(0),
    }
}

/// A random Sv grid with sample-centre ranges sharing one step per frequency.
fn random_sv(seed: u64, nf: usize, nt: usize, nr: usize) -> SvGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = rng.random_range(0.05..1.0);
    let values = Array3::from_shape_fn((nf, nt, nr), |_| {
        if rng.random_bool(0.1) {
            f64::NAN
        } else {
            rng.random_range(-110.0..-20.0)
        }
    });
    let mut t = 1_000_000_000_000i64;
    let ping_time = (0..nt)
        .map(|_| {
            t += rng.random_range(1..5_000_000_000i64);
            t
        })
        .collect();
    let grid = LabeledGrid::new((0..nf).map(|f| 18_000.0 * (f + 1) as f64).collect(), ping_time, values).unwrap();
    let range_m = Array2::from_shape_fn((nf, nr), |(_, k)| (k as f64 + 0.5) * step);
    SvGrid::new(Quantity::Sv, grid, range_m, vec![step; nf]).unwrap()
}

fn bits3(a: &Array3<f64>) -> Vec<u64> {
    a.iter().map(|v| v.to_bits()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn store_round_trip(
        seed in any::<u64>(),
        dtype in prop::sample::select(vec![Dtype::F8, Dtype::F4, Dtype::I8, Dtype::I2, Dtype::I1, Dtype::B1]),
        shape in prop::collection::vec(0usize..9, 1..4),
        chunk_seed in prop::collection::vec(1usize..11, 3),
        zlib in prop::option::of(0u32..10),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let chunks: Vec<usize> = chunk_seed[..shape.len()].to_vec();
        let n: usize = shape.iter().product();
        let data = random_data(&mut rng, dtype, n);
        let compressor = zlib.map_or(Compressor::None, |level| Compressor::Zlib { level });
        let meta = ArrayMeta::new(shape.clone(), chunks.clone(), dtype, fill_for(dtype)).with_compressor(compressor);
        let dir = tempfile::tempdir().unwrap();
        let path = StorePath::new(dir.path(), "g/sub", "arr").unwrap();
        write_array(&path, &meta, &data, &Default::default()).unwrap();
        let (back_meta, back, _) = read_array(&path).unwrap();
        prop_assert_eq!(back_meta, meta);
        prop_assert!(back.bit_eq(&data));
        let expected: usize = shape.iter().zip(&chunks).map(|(s, c)| s.div_ceil(*c)).product();
        let files = std::fs::read_dir(path.dir()).unwrap()
            .filter(|e| !e.as_ref().unwrap().file_name().to_string_lossy().starts_with('.'))
            .count();
        prop_assert_eq!(files, expected);
    }

    #[test]
    fn ragged_alignment_is_exact_and_lossless(seed in 0u64..10_000) {
        let mut spec = FixtureSpec::random(seed);
        for ch in &mut spec.channels {
            // keep the case small; the acceptance run covers full sizes
            ch.ping_times_ns.truncate(40);
            ch.sample_counts.truncate(40);
        }
        let channels = channels_of(&spec);
        let grid = align_ragged(&channels).unwrap();
        let (nf, nt, nr) = grid.values.dim();
        for f in 0..nf {
            let ch = channels.iter().find(|c| c.frequency_hz == grid.frequency_hz[f]).unwrap();
            for t in 0..nt {
                let ping = ch.pings.iter().find(|p| p.time_ns == grid.ping_time[t]);
                let count = ping.map_or(0, |p| p.record.power_counts.len());
                for k in 0..nr {
                    prop_assert_eq!(grid.values[[f, t, k]].is_nan(), ping.is_none() || k >= count);
                }
                if let Some(p) = ping {
                    let row: Vec<i16> = grid.ragged_row(f, t, count).iter().map(|&v| v as i16).collect();
                    prop_assert_eq!(&row, &p.record.power_counts);
                }
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut shuffled = channels.clone();
        shuffled.shuffle(&mut rng);
        for c in &mut shuffled {
            c.pings.shuffle(&mut rng);
        }
        let again = align_ragged(&shuffled).unwrap();
        prop_assert_eq!(&again.frequency_hz, &grid.frequency_hz);
        prop_assert_eq!(&again.ping_time, &grid.ping_time);
        prop_assert_eq!(bits3(&again.values), bits3(&grid.values));
    }

    #[test]
    fn frame_round_trip(seed in 0u64..10_000) {
        let mut spec = FixtureSpec::random(seed);
        for ch in &mut spec.channels {
            ch.ping_times_ns.truncate(20);
            ch.sample_counts.truncate(20);
        }
        let fx = generate_fixture(&spec).unwrap();
        let parsed = read_records(&fx.bytes).unwrap();
        prop_assert_eq!(&parsed, &fx.records);
        prop_assert_eq!(write_records(&parsed).unwrap(), fx.bytes);
    }

    #[test]
    fn filetime_is_monotone(a in any::<u64>(), b in any::<u64>()) {
        let (lo, hi) = (a.min(b), a.max(b));
        let ns = |v: u64| filetime_to_unix_ns(v as u32, (v >> 32) as u32);
        prop_assert_eq!(ns(lo) < ns(hi), lo < hi);
    }

    #[test]
    fn nmea_checksum_accepts_exactly_matching(payload in "[A-Z0-9,.]{1,60}", claimed in any::<u8>()) {
        let text = format!("${payload}*{claimed:02X}\r\n");
        let s = parse_nme0(text.as_bytes()).unwrap();
        prop_assert_eq!(s.checksum_valid, claimed == checksum(payload.as_bytes()));
    }

    #[test]
    fn positions_respect_hemispheres(lat in -89.99f64..89.99, lon in -179.99f64..179.99) {
        let (lat_txt, ns) = echograin_core::fixture::format_coordinate(lat, true);
        let (lon_txt, ew) = echograin_core::fixture::format_coordinate(lon, false);
        let s = NmeaSentence::from_fields(&["GPGGA", "120000.00", &lat_txt, &ns.to_string(), &lon_txt, &ew.to_string(), "1"]);
        let (plat, plon) = parse_position(&s).unwrap().unwrap();
        prop_assert!((plat - lat).abs() < 1e-5 && (plon - lon).abs() < 1e-5);
        prop_assert!(plat.abs() <= 90.0 && plon.abs() <= 180.0);
        if plat != 0.0 { prop_assert_eq!(plat < 0.0, ns == 'S'); }
        if plon != 0.0 { prop_assert_eq!(plon < 0.0, ew == 'W'); }
    }

    #[test]
    fn slice_matches_brute_force(
        pings in prop::collection::vec(0i64..1_000, 1..40),
        fixes in prop::collection::vec((0i64..1_000, -1.0f64..1.0, -1.0f64..1.0), 1..15),
        lat_lo in -1.0f64..1.0, lat_w in 0.0f64..2.0,
        lon_lo in -1.0f64..1.0, lon_w in 0.0f64..2.0,
    ) {
        let mut times = pings.clone();
        times.sort_unstable();
        times.dedup();
        let mut track = GeoTrack::default();
        for &(t, la, lo) in &fixes {
            track.push(t, la, lo, FixSource::Gga);
        }
        track.sort_by_time();
        let bbox = BoundingBox { lat_min: lat_lo, lat_max: lat_lo + lat_w, lon_min: lon_lo, lon_max: lon_lo + lon_w };
        let values = Array3::from_shape_fn((1, times.len(), 2), |(_, t, k)| (t * 2 + k) as f64);
        let grid = LabeledGrid::new(vec![38_000.0], times.clone(), values).unwrap();
        let out = slice_by_position(&grid, &track, &bbox).unwrap();

        let expect: Vec<i64> = times.iter().copied().filter(|&t| {
            // brute force: smallest distance, earliest fix on ties
            let mut best = 0;
            for j in 0..track.len() {
                let d = (track.location_time[j] - t).abs();
                if d < (track.location_time[best] - t).abs() { best = j; }
            }
            bbox.contains(track.latitude_deg[best], track.longitude_deg[best])
        }).collect();
        prop_assert_eq!(&out.ping_time, &expect);
        for (i, &t) in out.ping_time.iter().enumerate() {
            let src = times.iter().position(|&x| x == t).unwrap();
            prop_assert_eq!(out.values[[0, i, 1]], grid.values[[0, src, 1]]);
        }
        for &t in &times {
            let j = nearest_fix(&track.location_time, t);
            prop_assert!(track.location_time.iter().all(|&x| (x - t).abs() >= (track.location_time[j] - t).abs()));
        }
    }

    #[test]
    fn qc_is_idempotent(steps in prop::collection::vec(-90_000i64..30_000, 1..60)) {
        let mut t = 0i64;
        let times: Vec<i64> = steps.iter().map(|s| { t += s * 1_000_000; t }).collect();
        let (once, report) = repair_time_reversals(&times, 60.0, 0.001);
        let (twice, _) = repair_time_reversals(&once, 60.0, 0.001);
        prop_assert_eq!(&once, &twice);
        for i in 0..times.len() {
            prop_assert_eq!(once[i] != times[i], report.fixed.contains(&i));
        }
        if report.unfixable.is_empty() {
            prop_assert!(once.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn mvbs_bounds_and_partitioning(
        seed in any::<u64>(),
        nf in 1usize..3, nt in 1usize..25, nr in 1usize..30,
        bin_m in 0.1f64..5.0, count in 1usize..6,
    ) {
        let sv = random_sv(seed, nf, nt, nr);
        let p = MvbsParams { range_bin_size_m: bin_m, ping_bin: PingBin::Count(count) };
        let one = compute_mvbs(&sv, &p, 1).unwrap();
        for w in [2, 8] {
            let other = compute_mvbs(&sv, &p, w).unwrap();
            prop_assert_eq!(bits3(&other.grid.values), bits3(&one.grid.values));
        }
        let (_, gt, gr) = one.grid.values.dim();
        for f in 0..nf {
            for g in 0..gt {
                for j in 0..gr {
                    let members: Vec<f64> = (g * count..((g + 1) * count).min(nt))
                        .flat_map(|t| (0..nr).map(move |k| (t, k)))
                        .filter(|&(_, k)| (sv.range_m[[f, k]] / bin_m).floor() as usize == j)
                        .map(|(t, k)| sv.grid.values[[f, t, k]])
                        .filter(|v| v.is_finite())
                        .collect();
                    let m = one.grid.values[[f, g, j]];
                    if members.is_empty() {
                        prop_assert!(m.is_nan());
                    } else {
                        let lo = members.iter().copied().fold(f64::INFINITY, f64::min);
                        let hi = members.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        prop_assert!(lo - 1e-9 <= m && m <= hi + 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn mvbs_identity_binning(seed in any::<u64>(), nt in 1usize..20, nr in 1usize..40) {
        let sv = random_sv(seed, 2, nt, nr);
        let p = MvbsParams { range_bin_size_m: sv.range_step_m[0], ping_bin: PingBin::Count(1) };
        let out = compute_mvbs(&sv, &p, 3).unwrap();
        prop_assert_eq!(out.grid.values.dim(), sv.grid.values.dim());
        for (a, b) in out.grid.values.iter().zip(sv.grid.values.iter()) {
            if b.is_finite() {
                prop_assert!((a - b).abs() < 1e-9);
            } else {
                prop_assert!(a.is_nan());
            }
        }
    }

    #[test]
    fn fdiff_swap_identity(seed in any::<u64>(), dmin in -20.0f64..5.0, width in 0.0f64..20.0) {
        let sv = random_sv(seed, 3, 12, 16);
        let (fa, fb) = (sv.grid.frequency_hz[0], sv.grid.frequency_hz[2]);
        let m = frequency_diff_mask(&sv, fa, fb, dmin, dmin + width).unwrap();
        let swapped = frequency_diff_mask(&sv, fb, fa, -(dmin + width), -dmin).unwrap();
        prop_assert_eq!(m.values, swapped.values);
    }

    #[test]
    fn metric_invariances(
        profile in prop::collection::vec(prop::option::weighted(0.9, 1e-9f64..1e-3), 1..80),
        scale in 1e-3f64..1e3,
        shift in -50.0f64..50.0,
        dz in 0.01f64..2.0,
    ) {
        let s: Vec<f64> = profile.iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        prop_assume!(s.iter().any(|v| v.is_finite()));
        let z: Vec<f64> = (0..s.len()).map(|k| (k as f64 + 0.5) * dz).collect();
        let base = profile_stats(&z, &s, dz).unwrap();
        let rel = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);

        let scaled: Vec<f64> = s.iter().map(|v| v * scale).collect();
        let sc = profile_stats(&z, &scaled, dz).unwrap();
        prop_assert!((sc.sa - base.sa * scale).abs() <= 1e-12 * sc.sa);
        prop_assert!(rel(sc.center_of_mass_m, base.center_of_mass_m) || (sc.center_of_mass_m - base.center_of_mass_m).abs() < 1e-9);
        prop_assert!((sc.inertia_m2 - base.inertia_m2).abs() <= 1e-9 * base.inertia_m2.max(1e-6));
        prop_assert!((sc.equivalent_area_m - base.equivalent_area_m).abs() <= 1e-12 * base.equivalent_area_m);

        let moved: Vec<f64> = z.iter().map(|v| v + shift).collect();
        let tr = profile_stats(&moved, &s, dz).unwrap();
        prop_assert!((tr.center_of_mass_m - (base.center_of_mass_m + shift)).abs() < 1e-9);
        prop_assert!((tr.inertia_m2 - base.inertia_m2).abs() <= 1e-9 * base.inertia_m2.max(1.0));
        prop_assert_eq!(tr.equivalent_area_m, base.equivalent_area_m);

        let n = s.iter().filter(|v| v.is_finite()).count() as f64;
        prop_assert!(base.equivalent_area_m <= n * dz * (1.0 + 1e-12));
    }

    #[test]
    fn gain_sensitivity(gain in 10.0f64..35.0, h in 1e-3f64..0.5) {
        let p = CalParams { gain_db: gain, ..CalParams::unit() };
        let q = CalParams { gain_db: gain + h, ..p };
        // Sv moves by -2 dB per dB of gain because C_sv carries g0 squared
        let d = -(sv_offset_db(&q) - sv_offset_db(&p)) / h;
        prop_assert!((d + 2.0).abs() < 1e-9);
    }

    #[test]
    fn range_is_sample_centred(dt in 1e-6f64..1e-3, c in 1400.0f64..1600.0, n in 1usize..100, off in 0u32..5) {
        let r = compute_range(dt, c, n, off as f64).unwrap();
        for (k, v) in r.iter().enumerate() {
            prop_assert!((v - (off as f64 + k as f64 + 0.5) * c * dt / 2.0).abs() < 1e-12);
        }
    }
}

#[test]
fn uniform_profile_reaches_the_equivalent_area_bound() {
    let z: Vec<f64> = (0..50).map(|k| k as f64 + 0.5).collect();
    let s = vec![3e-5; 50];
    let st = profile_stats(&z, &s, 1.0).unwrap();
    assert!((st.equivalent_area_m - 50.0).abs() <= 1e-12 * 50.0);
    assert!((st.center_of_mass_m - 25.0).abs() <= 1e-12 * 25.0);
}
