//! The `fec-lab` command line: `run` one point, `sweep` a grid, or emit a
//! named `figure` preset. Exit codes: 0 on success, 2 on configuration
//! errors (including argument parsing), 1 on I/O errors.

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::codec::GeneratorSet;
use crate::harness::{
    figure_grid, render_csv, run_point, run_sweep, write_csv, ChannelGrid, ExperimentPoint,
    FigurePreset, HarnessError, PointResult, SweepGrid,
};
use crate::link::ChannelModel;
use crate::viterbi::TieBreakPolicy;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

/// Default master seed when neither `--seed` nor `FEC_LAB_SEED` is given.
const DEFAULT_SEED: u64 = 0;

const DEFAULT_CODE: &str = "rate=1/2;memory=2;polys=5,7";

#[derive(Parser)]
#[command(
    name = "fec-lab",
    version,
    about = "Convolutional-code laboratory: Viterbi ACS tie-break policies \
             under Monte Carlo link simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a single point and print its CSV row to stdout
    Run(PointArgs),
    /// Simulate a grid over SNR (or BSC p) and PoZ, writing a CSV
    Sweep(SweepArgs),
    /// Run a named preset grid: fig3|fig4|fig5|fig6|fig7
    Figure(FigureArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ChannelKind {
    Awgn,
    Bsc,
}

fn parse_policy(s: &str) -> Result<TieBreakPolicy, String> {
    TieBreakPolicy::from_str(s)
}

fn parse_code(s: &str) -> Result<GeneratorSet, String> {
    GeneratorSet::from_str(s).map_err(|e| e.to_string())
}

fn parse_preset(s: &str) -> Result<FigurePreset, String> {
    FigurePreset::from_str(s)
}

#[derive(Args)]
struct PointArgs {
    /// Code spec: rate=1/n;memory=m;polys=o1,o2,... (octal polynomials)
    #[arg(long, value_parser = parse_code, default_value = DEFAULT_CODE)]
    code: GeneratorSet,
    /// Channel model
    #[arg(long, value_enum, default_value_t = ChannelKind::Awgn)]
    channel: ChannelKind,
    /// Per-symbol SNR (Es/N0) in dB (awgn channel)
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    snr_db: f64,
    /// Bit-flip probability (bsc channel)
    #[arg(long)]
    bsc_p: Option<f64>,
    /// Probability of zero in the source bits
    #[arg(long, default_value_t = 0.5)]
    poz: f64,
    /// ACS tie-break policy: random|zero|one
    #[arg(long, value_parser = parse_policy, default_value = "random")]
    policy: TieBreakPolicy,
    /// Quantizer levels (2 = hard input)
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// Information bits per frame
    #[arg(long, default_value_t = 1024)]
    frame_len: usize,
    /// Minimum information bits per point
    #[arg(long, default_value_t = 1_000_000)]
    min_bits: u64,
    /// Keep running past the bit budget until this many bit errors
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    /// Master seed (also: FEC_LAB_SEED environment variable)
    #[arg(long)]
    seed: Option<u64>,
    /// Write CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    point: PointArgs,
    /// Sweep the SNR axis over a:b:step (inclusive), overriding --snr-db
    #[arg(long, allow_hyphen_values = true)]
    snr_range: Option<String>,
    /// Sweep PoZ over a:b:step (inclusive), overriding --poz
    #[arg(long)]
    poz_range: Option<String>,
}

#[derive(Args)]
struct FigureArgs {
    /// Preset name: fig3|fig4|fig5|fig6|fig7
    #[arg(value_parser = parse_preset)]
    preset: FigurePreset,
    /// Information bits per frame
    #[arg(long, default_value_t = 1024)]
    frame_len: usize,
    /// Minimum information bits per point
    #[arg(long, default_value_t = 1_000_000)]
    min_bits: u64,
    /// Keep running past the bit budget until this many bit errors
    #[arg(long, default_value_t = 100)]
    min_errors: u64,
    /// Master seed (also: FEC_LAB_SEED environment variable)
    #[arg(long)]
    seed: Option<u64>,
    /// Write CSV here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, HarnessError> {
    if let Some(seed) = flag {
        return Ok(seed);
    }
    match std::env::var("FEC_LAB_SEED") {
        Ok(value) => value.trim().parse().map_err(|_| {
            HarnessError::Config(format!("FEC_LAB_SEED must be an integer, got `{value}`"))
        }),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// Parses an inclusive `a:b:step` range into its value list.
fn parse_range(text: &str) -> Result<Vec<f64>, HarnessError> {
    let bad = |reason: &str| HarnessError::Config(format!("bad range `{text}`: {reason}"));
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected a:b:step"));
    }
    let a: f64 = parts[0].parse().map_err(|_| bad("start is not a number"))?;
    let b: f64 = parts[1].parse().map_err(|_| bad("end is not a number"))?;
    let step: f64 = parts[2].parse().map_err(|_| bad("step is not a number"))?;
    if !(a.is_finite() && b.is_finite() && step.is_finite()) {
        return Err(bad("values must be finite"));
    }
    if step <= 0.0 {
        return Err(bad("step must be positive"));
    }
    if b < a {
        return Err(bad("end is below start"));
    }
    let count = ((b - a) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| a + step * i as f64).collect())
}

fn channel_for(args: &PointArgs) -> Result<ChannelModel, HarnessError> {
    match args.channel {
        ChannelKind::Awgn => Ok(ChannelModel::Awgn {
            snr_db: args.snr_db,
            code_rate: args.code.rate(),
        }),
        ChannelKind::Bsc => {
            let p = args
                .bsc_p
                .ok_or_else(|| HarnessError::Config("bsc channel needs --bsc-p".into()))?;
            Ok(ChannelModel::Bsc { p })
        }
    }
}

fn emit(results: &[PointResult], out: &Option<PathBuf>) -> Result<(), HarnessError> {
    match out {
        Some(path) => write_csv(results, path),
        None => {
            print!("{}", render_csv(results));
            Ok(())
        }
    }
}

fn cmd_run(args: PointArgs) -> Result<(), HarnessError> {
    let seed = resolve_seed(args.seed)?;
    let point = ExperimentPoint {
        channel: channel_for(&args)?,
        code: args.code.clone(),
        poz: args.poz,
        policy: args.policy,
        q_levels: args.q,
        frame_len: args.frame_len,
        min_info_bits: args.min_bits,
        min_bit_errors: args.min_errors,
        master_seed: seed,
    };
    let result = run_point(&point)?;
    match &args.out {
        Some(path) => write_csv(&[result], path),
        None => {
            // A bare data row; pipelines prepend the header if they need it.
            println!("{}", crate::harness::csv_row(&result));
            Ok(())
        }
    }
}

fn cmd_sweep(args: SweepArgs) -> Result<(), HarnessError> {
    let seed = resolve_seed(args.point.seed)?;
    let channel = match args.point.channel {
        ChannelKind::Awgn => {
            let snr_dbs = match &args.snr_range {
                Some(range) => parse_range(range)?,
                None => vec![args.point.snr_db],
            };
            ChannelGrid::Awgn { snr_dbs }
        }
        ChannelKind::Bsc => {
            if args.snr_range.is_some() {
                return Err(HarnessError::Config(
                    "--snr-range applies to the awgn channel only".into(),
                ));
            }
            let p = args
                .point
                .bsc_p
                .ok_or_else(|| HarnessError::Config("bsc channel needs --bsc-p".into()))?;
            ChannelGrid::Bsc { ps: vec![p] }
        }
    };
    let pozs = match &args.poz_range {
        Some(range) => parse_range(range)?,
        None => vec![args.point.poz],
    };
    let grid = SweepGrid {
        codes: vec![args.point.code.clone()],
        channel,
        pozs,
        q_levels: vec![args.point.q],
        policies: vec![args.point.policy],
        frame_len: args.point.frame_len,
        min_info_bits: args.point.min_bits,
        min_bit_errors: args.point.min_errors,
        master_seed: seed,
    };
    let results = run_sweep(&grid)?;
    emit(&results, &args.point.out)
}

fn cmd_figure(args: FigureArgs) -> Result<(), HarnessError> {
    let seed = resolve_seed(args.seed)?;
    let grid = figure_grid(args.preset, args.frame_len, args.min_bits, args.min_errors, seed);
    let results = run_sweep(&grid)?;
    emit(&results, &args.out)
}

fn exit_code_for(err: &HarnessError) -> i32 {
    match err {
        HarnessError::Io(_) => EXIT_IO,
        HarnessError::Csv { .. } => EXIT_IO,
        HarnessError::Config(_) => EXIT_CONFIG,
    }
}

/// Parses and executes a full command line (including argv\[0\]); returns
/// the process exit code instead of exiting, so it is testable in-process.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            // clap routes --help/--version to stdout, diagnostics to stderr.
            let _ = err.print();
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_CONFIG,
            };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Figure(args) => cmd_figure(args),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}
