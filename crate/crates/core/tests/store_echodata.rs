use std::fs;
use std::path::Path;

use echograin_core::calibrate::{compute_sv, CalOverrides};
use echograin_core::fixture::{generate_fixture, FixtureSpec};
use echograin_core::model::{BitEq, GROUP_NAMES};
use echograin_core::process::frequency_diff_mask;
use echograin_core::store::{
    read_echodata, read_mask, read_sv_grid, write_array, write_echodata, write_mask, write_sv_grid, ArrayData,
    ArrayMeta, ChunkPolicy, Compressor, Dtype, FillValue, StoreError, StorePath,
};
use echograin_core::{convert_raw, ConvertOptions, EchoData};

fn convert(spec: &FixtureSpec) -> EchoData {
    let fx = generate_fixture(spec).unwrap();
    let opts = ConvertOptions {
        source_filename: Some("a.raw".into()),
        conversion_time: Some("2024-01-01T00:00:00Z".into()),
        ..ConvertOptions::default()
    };
    convert_raw(&fx.bytes[..], &opts).unwrap()
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(root).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn random_datasets_round_trip() {
    for seed in 0..8 {
        let ed = convert(&FixtureSpec::random(seed));
        let dir = tempfile::tempdir().unwrap();
        let policy = ChunkPolicy {
            ping_time: 61,
            range_bin: 300,
            compressor: if seed % 2 == 0 { Compressor::None } else { Compressor::Zlib { level: 1 } },
            ..ChunkPolicy::default()
        };
        write_echodata(&ed, dir.path(), &policy).unwrap();
        let back = read_echodata(dir.path()).unwrap();
        assert!(back.bit_eq(&ed), "seed {seed}");
    }
}

#[test]
fn seven_groups_on_disk() {
    let ed = convert(&FixtureSpec::regular(1, &[38_000.0, 120_000.0], 5, 1_000_000_000, 20));
    let dir = tempfile::tempdir().unwrap();
    write_echodata(&ed, dir.path(), &ChunkPolicy::default()).unwrap();
    assert!(dir.path().join(".zgroup").is_file());
    for g in GROUP_NAMES {
        assert!(dir.path().join(g).join(".zgroup").is_file(), "{g}");
    }
    let zarray: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("Beam/backscatter_r/.zarray")).unwrap()).unwrap();
    assert_eq!(zarray["zarr_format"], 2);
    assert_eq!(zarray["fill_value"], "NaN");
    assert_eq!(zarray["order"], "C");
    let attrs: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("Beam/backscatter_r/.zattrs")).unwrap()).unwrap();
    assert_eq!(attrs["_ARRAY_DIMENSIONS"], serde_json::json!(["frequency", "ping_time", "range_bin"]));
}

#[test]
fn writes_are_deterministic() {
    let ed = convert(&FixtureSpec::random(3));
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let policy = ChunkPolicy {
        ping_time: 16,
        range_bin: 64,
        ..ChunkPolicy::default()
    };
    write_echodata(&ed, a.path(), &policy).unwrap();
    write_echodata(&ed, b.path(), &policy).unwrap();
    assert_eq!(tree(a.path()), tree(b.path()));
}

#[test]
fn missing_group_is_reported() {
    let ed = convert(&FixtureSpec::regular(2, &[38_000.0], 3, 1_000_000_000, 8));
    let dir = tempfile::tempdir().unwrap();
    write_echodata(&ed, dir.path(), &ChunkPolicy::default()).unwrap();
    fs::remove_dir_all(dir.path().join("Platform")).unwrap();
    match read_echodata(dir.path()) {
        Err(StoreError::MissingGroup(g)) => assert_eq!(g, "Platform"),
        other => panic!("expected MissingGroup, got {other:?}"),
    }
}

#[test]
fn foreign_arrays_pass_through_vendor() {
    let ed = convert(&FixtureSpec::regular(4, &[38_000.0], 3, 1_000_000_000, 8));
    let dir = tempfile::tempdir().unwrap();
    write_echodata(&ed, dir.path(), &ChunkPolicy::default()).unwrap();
    let meta = ArrayMeta::new(vec![4], vec![4], Dtype::I2, FillValue::Int(0));
    let data = ArrayData::I2(vec![1, -2, 3, -4]);
    write_array(&StorePath::new(dir.path(), "Beam", "annotation").unwrap(), &meta, &data, &Default::default())
        .unwrap();

    let read = read_echodata(dir.path()).unwrap();
    let kept = &read.vendor.arrays["Beam_annotation"];
    assert!(kept.data.bit_eq(&data));

    let again = tempfile::tempdir().unwrap();
    write_echodata(&read, again.path(), &ChunkPolicy::default()).unwrap();
    let twice = read_echodata(again.path()).unwrap();
    assert!(twice.bit_eq(&read));
}

#[test]
fn sv_and_mask_stores_round_trip() {
    let ed = convert(&FixtureSpec::regular(5, &[38_000.0, 120_000.0], 9, 1_000_000_000, 40));
    let sv = compute_sv(&ed, &CalOverrides::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sv_grid(&sv, dir.path(), &ChunkPolicy::default()).unwrap();
    let back = read_sv_grid(dir.path()).unwrap();
    assert_eq!(back.grid.ping_time, sv.grid.ping_time);
    assert!(back.range_m.bit_eq(&sv.range_m));
    for (a, b) in back.grid.values.iter().zip(sv.grid.values.iter()) {
        // values are persisted at single precision
        assert_eq!(a.to_bits(), (*b as f32 as f64).to_bits());
    }

    let mut same_range = sv.clone();
    let row = same_range.range_m.row(0).to_owned();
    same_range.range_m.row_mut(1).assign(&row);
    let mask = frequency_diff_mask(&same_range, 38_000.0, 120_000.0, -5.0, 5.0).unwrap();
    let mdir = tempfile::tempdir().unwrap();
    write_mask(&mask, mdir.path(), &ChunkPolicy::default()).unwrap();
    let m2 = read_mask(mdir.path()).unwrap();
    assert_eq!(m2.values, mask.values);
    assert_eq!(m2.ping_time, mask.ping_time);
}
