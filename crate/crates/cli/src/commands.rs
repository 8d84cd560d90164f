use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use echograin_core::calibrate::{compute_sv_with, compute_ts_with, resolve_params, CalOverrides};
use echograin_core::convert::{convert_raw, open_byte_source, ConvertOptions};
use echograin_core::datagram::{parse_con0, DatagramReader, FrameError, TypeCode};
use echograin_core::echogram::{render, Palette};
use echograin_core::metrics::{compute_metrics, write_metrics_csv};
use echograin_core::parallel::default_workers;
use echograin_core::process::{compute_mvbs, frequency_diff_mask, repair_time_reversals, MvbsParams, PingBin};
use echograin_core::store::{
    read_echodata, read_sv_grid, write_echodata, write_mask, write_sv_grid, ChunkPolicy,
};
use echograin_core::time::format_iso_ns;
use echograin_core::EchoData;
use rayon::prelude::*;

use crate::error::CliError;

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn require_store(path: &Path) -> Result<(), CliError> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::Io(format!("{}: no such store", path.display())))
    }
}

/// Clears a previous store at `path` so stale arrays never survive a rewrite.
fn prepare_out(path: &Path) -> Result<(), CliError> {
    if path.join(".zgroup").is_file() {
        fs::remove_dir_all(path).map_err(|e| io_error(path, e))?;
    } else if path.exists() && fs::read_dir(path).map(|mut d| d.next().is_some()).unwrap_or(true) {
        return Err(CliError::Usage(format!(
            "{}: exists and is not a store; refusing to overwrite",
            path.display()
        )));
    }
    Ok(())
}

fn span(times: &[i64]) -> String {
    match (times.iter().min(), times.iter().max()) {
        (Some(&lo), Some(&hi)) => format!("{} .. {}", format_iso_ns(lo), format_iso_ns(hi)),
        _ => "empty".into(),
    }
}

fn frequencies(f: &[f64]) -> String {
    f.iter().map(|v| format!("{v} Hz")).collect::<Vec<_>>().join(", ")
}

fn file_name(uri: &str) -> &str {
    uri.trim_end_matches(['/', '\\']).rsplit(['/', '\\']).next().unwrap_or(uri)
}

fn convert_one(input: &str, out: &Path, max_datagram_bytes: u32, policy: &ChunkPolicy) -> Result<(), CliError> {
    let src = open_byte_source(input)?;
    let options = ConvertOptions {
        max_datagram_bytes,
        source_filename: Some(file_name(input).to_owned()),
        ..ConvertOptions::default()
    };
    let ed = convert_raw(src, &options)?;
    for w in &ed.provenance.warnings {
        eprintln!("echograin: warning: {input}: {w}");
    }
    prepare_out(out)?;
    write_echodata(&ed, out, policy)?;
    println!(
        "{input} -> {}: {} channels, {} pings, {}",
        out.display(),
        ed.frequency_hz().len(),
        ed.ping_time().len(),
        span(ed.ping_time())
    );
    Ok(())
}

pub fn convert(
    inputs: &[String],
    out: &Path,
    max_datagram_bytes: u32,
    jobs: usize,
    policy: &ChunkPolicy,
) -> Result<(), CliError> {
    if let [input] = inputs {
        return convert_one(input, out, max_datagram_bytes, policy);
    }
    fs::create_dir_all(out).map_err(|e| io_error(out, e))?;
    let targets: Vec<(String, PathBuf)> = inputs
        .iter()
        .map(|i| {
            let name = file_name(i);
            let stem = name.rsplit_once('.').map_or(name, |(s, _)| s);
            (i.clone(), out.join(format!("{stem}.zarr")))
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    if let Some((_, dup)) = targets.iter().find(|(_, p)| !seen.insert(p.clone())) {
        return Err(CliError::Usage(format!("two inputs map to the same store {}", dup.display())));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let results: Vec<Result<(), CliError>> = pool.install(|| {
        targets
            .par_iter()
            .map(|(input, target)| convert_one(input, target, max_datagram_bytes, policy))
            .collect()
    });
    let mut first = None;
    for r in results {
        if let Err(e) = r {
            eprintln!("echograin: {e}");
            first.get_or_insert(e);
        }
    }
    first.map_or(Ok(()), Err)
}

fn load_echodata(path: &Path) -> Result<EchoData, CliError> {
    require_store(path)?;
    Ok(read_echodata(path)?)
}

pub struct CalibrateArgs<'a> {
    pub store: &'a Path,
    pub out: &'a Path,
    pub sound_speed: Option<f64>,
    pub absorption: Option<f64>,
    pub cal_overrides: Option<&'a Path>,
    pub ts: bool,
    pub workers: Option<usize>,
    pub policy: ChunkPolicy,
}

pub fn calibrate(a: CalibrateArgs) -> Result<(), CliError> {
    let ed = load_echodata(a.store)?;
    let mut overrides = match a.cal_overrides {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            CalOverrides::from_json(&text)?
        }
        None => CalOverrides::default(),
    };
    if a.sound_speed.is_some() {
        overrides.sound_speed_m_s = a.sound_speed;
    }
    if a.absorption.is_some() {
        overrides.absorption_db_m = a.absorption;
    }
    let (params, warnings) = resolve_params(&ed, &overrides)?;
    for w in &warnings {
        eprintln!("echograin: warning: {w}");
    }
    let workers = a.workers.unwrap_or_else(default_workers);
    let sv = if a.ts {
        compute_ts_with(&ed, &params, workers)?
    } else {
        compute_sv_with(&ed, &params, workers)?
    };
    prepare_out(a.out)?;
    write_sv_grid(&sv, a.out, &a.policy)?;
    let (nf, nt, nr) = sv.grid.values.dim();
    println!(
        "{} -> {}: {} over {nf} frequencies x {nt} pings x {nr} range bins",
        a.store.display(),
        a.out.display(),
        sv.quantity.name()
    );
    Ok(())
}

pub fn qc(
    store: &Path,
    out: &Path,
    window_s: f64,
    epsilon_s: f64,
    report_path: Option<&Path>,
    policy: &ChunkPolicy,
) -> Result<(), CliError> {
    let mut ed = load_echodata(store)?;
    let (times, report) = repair_time_reversals(ed.ping_time(), window_s, epsilon_s);
    // a repair can land on a time another ping already uses
    let mut sorted = times.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Input(
            "repaired timestamps collide with existing pings; try a smaller --epsilon".into(),
        ));
    }
    ed.set_ping_time(times);
    if let Some(p) = report_path {
        let json = serde_json::json!({
            "fixed": report.fixed,
            "unfixable": report.unfixable,
            "original_ns": report.original_ns,
            "repaired_ns": report.repaired_ns,
            "epsilon_s": epsilon_s,
            "window_s": window_s,
        });
        let text = serde_json::to_string_pretty(&json).expect("report serializes") + "\n";
        fs::write(p, text).map_err(|e| io_error(p, e))?;
    }
    prepare_out(out)?;
    write_echodata(&ed, out, policy)?;
    println!(
        "{} -> {}: {} timestamps repaired, {} unfixable",
        store.display(),
        out.display(),
        report.fixed.len(),
        report.unfixable.len()
    );
    Ok(())
}

fn load_sv(path: &Path) -> Result<echograin_core::SvGrid, CliError> {
    require_store(path)?;
    Ok(read_sv_grid(path)?)
}

pub fn mvbs(
    store: &Path,
    out: &Path,
    range_bin_m: f64,
    ping_bin: PingBin,
    workers: Option<usize>,
    policy: &ChunkPolicy,
) -> Result<(), CliError> {
    let params = MvbsParams {
        range_bin_size_m: range_bin_m,
        ping_bin,
    };
    params.validate()?;
    let sv = load_sv(store)?;
    let m = compute_mvbs(&sv, &params, workers.unwrap_or_else(default_workers))?;
    prepare_out(out)?;
    write_sv_grid(&m, out, policy)?;
    let (nf, nt, nr) = m.grid.values.dim();
    println!(
        "{} -> {}: MVBS over {nf} frequencies x {nt} ping bins x {nr} range bins",
        store.display(),
        out.display()
    );
    Ok(())
}

pub fn fdiff(
    store: &Path,
    out: &Path,
    (fa, fb): (f64, f64),
    d_min: f64,
    d_max: f64,
    policy: &ChunkPolicy,
) -> Result<(), CliError> {
    if !(d_min <= d_max) {
        return Err(CliError::Usage(format!("--min {d_min} must not exceed --max {d_max}")));
    }
    let sv = load_sv(store)?;
    let mask = frequency_diff_mask(&sv, fa, fb, d_min, d_max)?;
    prepare_out(out)?;
    write_mask(&mask, out, policy)?;
    let set = mask.values.iter().filter(|&&v| v).count();
    println!(
        "{} -> {}: {set} of {} cells with {d_min} <= Sv({fa}) - Sv({fb}) <= {d_max} dB",
        store.display(),
        out.display(),
        mask.values.len()
    );
    Ok(())
}

pub fn metrics(store: &Path, out: &Path) -> Result<(), CliError> {
    let sv = load_sv(store)?;
    let rows = compute_metrics(&sv);
    write_metrics_csv(&rows, out)?;
    let defined = rows.iter().filter(|r| r.sa.is_some()).count();
    println!(
        "{} -> {}: {} rows, {defined} with data",
        store.display(),
        out.display(),
        rows.len()
    );
    Ok(())
}

pub fn echogram(
    store: &Path,
    out: &Path,
    frequency_hz: f64,
    vmin: f64,
    vmax: f64,
    palette: Option<&Path>,
) -> Result<(), CliError> {
    if !(vmin < vmax) {
        return Err(CliError::Usage(format!("--vmin {vmin} must be below --vmax {vmax}")));
    }
    let palette = match palette {
        Some(p) => Palette::from_json(&fs::read_to_string(p).map_err(|e| io_error(p, e))?)?,
        None => Palette::ek500(),
    };
    let sv = load_sv(store)?;
    let raster = render(&sv, frequency_hz, vmin, vmax, &palette)?;
    if raster.width == 0 || raster.height == 0 {
        return Err(CliError::Input(format!(
            "nothing to draw: {} pings x {} range bins",
            raster.width, raster.height
        )));
    }
    let file = fs::File::create(out).map_err(|e| io_error(out, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), raster.width, raster.height);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let png_err = |e: png::EncodingError| CliError::Io(format!("{}: {e}", out.display()));
    let mut w = enc.write_header().map_err(png_err)?;
    w.write_image_data(&raster.rgb).map_err(png_err)?;
    w.finish().map_err(png_err)?;
    println!(
        "{} -> {}: {} Hz, {} x {} pixels",
        store.display(),
        out.display(),
        frequency_hz,
        raster.width,
        raster.height
    );
    Ok(())
}

pub fn info(input: &str) -> Result<(), CliError> {
    let src = open_byte_source(input)?;
    let mut reader = DatagramReader::new(src);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut first_last: Option<(i128, i128)> = None;
    let mut channels: Option<Vec<f64>> = None;
    let mut total = 0u64;
    loop {
        let offset = reader.offset();
        let dg = match reader.read_datagram() {
            Ok(Some(dg)) => dg,
            Ok(None) => break,
            Err(FrameError::Io(e)) => return Err(CliError::Io(format!("{input}: byte {offset}: {e}"))),
            Err(e) => return Err(CliError::Input(format!("{input}: byte {offset}: {e}"))),
        };
        total += 1;
        *counts.entry(dg.type_code.as_str().to_owned()).or_default() += 1;
        let t = dg.timestamp_ns;
        first_last = Some(first_last.map_or((t, t), |(lo, hi)| (lo.min(t), hi.max(t))));
        if dg.type_code == TypeCode::CON0 && channels.is_none() {
            let c = parse_con0(&dg.body).map_err(|e| CliError::Input(format!("{input}: byte {offset}: {e}")))?;
            channels = Some(c.transducers.iter().map(|t| t.frequency_hz as f64).collect());
        }
    }
    if total == 0 {
        return Err(CliError::Input(format!("{input}: no datagrams")));
    }
    println!("{input}: {total} datagrams");
    for (code, n) in &counts {
        println!("  {code} {n}");
    }
    if let Some((lo, hi)) = first_last {
        let fmt = |t: i128| i64::try_from(t).map_or_else(|_| format!("{t} ns"), format_iso_ns);
        println!("time span: {} .. {}", fmt(lo), fmt(hi));
    }
    match channels {
        Some(f) => println!("channels: {} ({})", f.len(), frequencies(&f)),
        None => println!("channels: none (no CON0 datagram)"),
    }
    Ok(())
}
