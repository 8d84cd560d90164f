use criterion::{criterion_group, criterion_main, BatchSize, Criterion, Throughput};
use echograin_core::calibrate::{compute_sv, CalOverrides};
use echograin_core::fixture::{generate_fixture, FixtureSpec};
use echograin_core::process::{compute_mvbs, MvbsParams, PingBin};
use echograin_core::store::{write_echodata, ChunkPolicy};
use echograin_core::{convert_raw, ConvertOptions};

fn survey() -> Vec<u8> {
    let spec = FixtureSpec::regular(1, &[38_000.0, 120_000.0], 1000, 1_000_000_000, 1000)
        .with_track(100, (45.0, -125.0), (45.2, -124.8));
    generate_fixture(&spec).unwrap().bytes
}

fn pipeline(c: &mut Criterion) {
    let bytes = survey();
    let opts = ConvertOptions::default();
    let ed = convert_raw(&bytes[..], &opts).unwrap();
    let sv = compute_sv(&ed, &CalOverrides::default()).unwrap();
    let cells = sv.grid.values.len() as u64;

    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    g.throughput(Throughput::Bytes(bytes.len() as u64));
    g.bench_function("convert", |b| b.iter(|| convert_raw(&bytes[..], &opts).unwrap()));
    g.throughput(Throughput::Elements(cells));
    g.bench_function("calibrate", |b| b.iter(|| compute_sv(&ed, &CalOverrides::default()).unwrap()));
    let params = MvbsParams {
        range_bin_size_m: 5.0,
        ping_bin: PingBin::Duration(20.0),
    };
    g.bench_function("mvbs", |b| b.iter(|| compute_mvbs(&sv, &params, 4).unwrap()));
    for (name, policy) in [
        ("store_write_zlib", ChunkPolicy::default()),
        (
            "store_write_raw",
            ChunkPolicy {
                compressor: echograin_core::store::Compressor::None,
                ..ChunkPolicy::default()
            },
        ),
    ] {
        g.bench_function(name, |b| {
            b.iter_batched(
                || tempfile::tempdir().unwrap(),
                |dir| write_echodata(&ed, dir.path(), &policy).unwrap(),
                BatchSize::PerIteration,
            )
        });
    }
    g.finish();
}

criterion_group!(benches, pipeline);
criterion_main!(benches);
