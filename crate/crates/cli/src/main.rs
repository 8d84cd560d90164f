//! `echograin`: convert raw echosounder files and run the processing chain
//! from the command line.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use echograin_core::process::PingBin;
use echograin_core::store::{ChunkPolicy, Compressor};

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "echograin", version, about = "Echosounder raw-file conversion and processing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Compression {
    None,
    Zlib,
}

#[derive(Debug, Args)]
struct StoreArgs {
    /// Chunk compression for written arrays.
    #[arg(long, value_enum, default_value = "zlib")]
    compression: Compression,
    /// zlib level, 0-9.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(0..=9))]
    level: u32,
    /// Pings per chunk.
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u64).range(1..))]
    chunk_pings: u64,
    /// Range bins per chunk.
    #[arg(long, default_value_t = 1024, value_parser = clap::value_parser!(u64).range(1..))]
    chunk_range: u64,
}

impl StoreArgs {
    fn policy(&self) -> ChunkPolicy {
        ChunkPolicy {
            ping_time: self.chunk_pings as usize,
            range_bin: self.chunk_range as usize,
            compressor: match self.compression {
                Compression::None => Compressor::None,
                Compression::Zlib => Compressor::Zlib { level: self.level },
            },
            ..ChunkPolicy::default()
        }
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must not be negative, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

fn frequency_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected fA,fB")?;
    Ok((positive(a.trim())?, positive(b.trim())?))
}

fn ping_bin(s: &str) -> Result<PingBin, String> {
    s.parse().map_err(|e: echograin_core::process::ProcessError| e.to_string())
}

fn workers(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Convert raw files (paths or http(s) URLs) into dataset stores.
    Convert {
        #[arg(required = true)]
        inputs: Vec<String>,
        /// Output store; with several inputs, a directory receiving `<name>.zarr` stores.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = echograin_core::datagram::DEFAULT_MAX_DATAGRAM_BYTES)]
        max_datagram_bytes: u32,
        /// Files converted concurrently.
        #[arg(long, default_value = "1", value_parser = workers)]
        jobs: usize,
        #[command(flatten)]
        store: StoreArgs,
    },
    /// Calibrate a dataset store to Sv (or TS).
    Calibrate {
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sound speed in m/s for every channel.
        #[arg(long, value_parser = positive)]
        sound_speed: Option<f64>,
        /// Absorption in dB/m for every channel.
        #[arg(long, value_parser = non_negative)]
        absorption: Option<f64>,
        /// JSON file with global and per-frequency calibration values.
        #[arg(long)]
        cal_overrides: Option<PathBuf>,
        /// Compute target strength instead of volume backscattering strength.
        #[arg(long)]
        ts: bool,
        #[arg(long, value_parser = workers)]
        workers: Option<usize>,
        #[command(flatten)]
        store_args: StoreArgs,
    },
    /// Repair small timestamp reversals in a dataset store.
    Qc {
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Largest backward step, in seconds, that gets repaired.
        #[arg(long, default_value_t = echograin_core::process::DEFAULT_WINDOW_S, value_parser = positive)]
        window: f64,
        /// Spacing, in seconds, given to repaired timestamps.
        #[arg(long, default_value_t = echograin_core::process::DEFAULT_EPSILON_S, value_parser = positive)]
        epsilon: f64,
        /// Write a JSON report of repaired and unfixable indices.
        #[arg(long)]
        report: Option<PathBuf>,
        #[command(flatten)]
        store_args: StoreArgs,
    },
    /// Mean volume backscattering strength on coarser bins.
    Mvbs {
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Range bin size in metres.
        #[arg(long, value_parser = positive)]
        range_bin: f64,
        /// Ping bin: `<seconds>s` or `<count>c`.
        #[arg(long, value_parser = ping_bin)]
        ping_bin: PingBin,
        #[arg(long, value_parser = workers)]
        workers: Option<usize>,
        #[command(flatten)]
        store_args: StoreArgs,
    },
    /// Mask cells whose Sv difference between two frequencies lies in a range.
    Fdiff {
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Frequencies in Hz as `fA,fB`; the difference is Sv(fA) - Sv(fB).
        #[arg(long, value_parser = frequency_pair)]
        pair: (f64, f64),
        #[arg(long, allow_hyphen_values = true)]
        min: f64,
        #[arg(long, allow_hyphen_values = true)]
        max: f64,
        #[command(flatten)]
        store_args: StoreArgs,
    },
    /// Per-ping vertical distribution metrics as CSV.
    Metrics {
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render one frequency of a calibrated store as a PNG.
    Echogram {
        store: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Frequency in Hz.
        #[arg(long)]
        freq: f64,
        #[arg(long, default_value_t = echograin_core::echogram::DEFAULT_VMIN, allow_hyphen_values = true)]
        vmin: f64,
        #[arg(long, default_value_t = echograin_core::echogram::DEFAULT_VMAX, allow_hyphen_values = true)]
        vmax: f64,
        /// JSON palette `{"colors": [[r,g,b],...], "below": [r,g,b], "nan": [r,g,b]}`.
        #[arg(long)]
        palette: Option<PathBuf>,
    },
    /// Summarize a raw file: datagram types, time span and channels.
    Info { input: String },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Convert {
            inputs,
            out,
            max_datagram_bytes,
            jobs,
            store,
        } => commands::convert(&inputs, &out, max_datagram_bytes, jobs, &store.policy()),
        Command::Calibrate {
            store,
            out,
            sound_speed,
            absorption,
            cal_overrides,
            ts,
            workers,
            store_args,
        } => commands::calibrate(commands::CalibrateArgs {
            store: &store,
            out: &out,
            sound_speed,
            absorption,
            cal_overrides: cal_overrides.as_deref(),
            ts,
            workers,
            policy: store_args.policy(),
        }),
        Command::Qc {
            store,
            out,
            window,
            epsilon,
            report,
            store_args,
        } => commands::qc(&store, &out, window, epsilon, report.as_deref(), &store_args.policy()),
        Command::Mvbs {
            store,
            out,
            range_bin,
            ping_bin,
            workers,
            store_args,
        } => commands::mvbs(&store, &out, range_bin, ping_bin, workers, &store_args.policy()),
        Command::Fdiff {
            store,
            out,
            pair,
            min,
            max,
            store_args,
        } => commands::fdiff(&store, &out, pair, min, max, &store_args.policy()),
        Command::Metrics { store, out } => commands::metrics(&store, &out),
        Command::Echogram {
            store,
            out,
            freq,
            vmin,
            vmax,
            palette,
        } => commands::echogram(&store, &out, freq, vmin, vmax, palette.as_deref()),
        Command::Info { input } => commands::info(&input),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("echograin: {e}");
            ExitCode::from(e.code())
        }
    }
}
