//! Monte Carlo experiment runner: single points, Cartesian sweeps, CSV
//! output, and the named figure presets.
//!
//! Reproducibility contract: a point is fully determined by its
//! configuration and `master_seed`. Sweeps derive each point's seed from a
//! stable hash of the sweep seed and the point's *noise-relevant*
//! coordinates (code, channel, probability of zero, frame length), and
//! deliberately not the tie-break policy or quantizer resolution, so all
//! policies and all Q values are measured on identical source and noise
//! realizations (common random numbers). Only the tie-break substream is
//! consumed differently.

use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::codec::{build_trellis, encode, CodecError, GeneratorSet};
use crate::link::{
    awgn_apply, bernoulli_bits, bpsk_modulate, bsc_apply, hard_levels, quantize, ChannelModel,
    LinkError, RandomStream, StreamLabel,
};
use crate::viterbi::{decode_block, DecodeError, DecoderConfig, TieBreakPolicy};
use crate::{Level, Sample};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },
}

impl From<CodecError> for HarnessError {
    fn from(e: CodecError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<LinkError> for HarnessError {
    fn from(e: LinkError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

impl From<DecodeError> for HarnessError {
    fn from(e: DecodeError) -> Self {
        HarnessError::Config(e.to_string())
    }
}

/// One Monte Carlo grid point: what to simulate and how long.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPoint {
    pub code: GeneratorSet,
    pub channel: ChannelModel,
    /// Probability of zero in the source bits.
    pub poz: f64,
    pub policy: TieBreakPolicy,
    pub q_levels: u32,
    /// Information bits per frame (the zero tail is extra and excluded
    /// from all accounting).
    pub frame_len: usize,
    /// Minimum information bits to simulate.
    pub min_info_bits: u64,
    /// Keep simulating past the bit budget until this many bit errors
    /// accumulate (or the frame cap of 10x the budget is hit).
    pub min_bit_errors: u64,
    pub master_seed: u64,
}

impl ExperimentPoint {
    pub fn validate(&self) -> Result<(), HarnessError> {
        self.channel.validate().map_err(HarnessError::from)?;
        if !(0.0..=1.0).contains(&self.poz) {
            return Err(HarnessError::Config(format!("poz {} outside [0, 1]", self.poz)));
        }
        if self.frame_len == 0 {
            return Err(HarnessError::Config("frame_len must be at least 1".into()));
        }
        if self.min_info_bits < self.frame_len as u64 {
            return Err(HarnessError::Config(format!(
                "min_info_bits {} below one frame of {} bits",
                self.min_info_bits, self.frame_len
            )));
        }
        DecoderConfig {
            q_levels: self.q_levels,
            policy: self.policy,
            terminated: true,
        }
        .validate()
        .map_err(HarnessError::from)?;
        match self.channel {
            ChannelModel::Bsc { .. } if self.q_levels != 2 => Err(HarnessError::Config(
                "BSC output is hard; q_levels must be 2".into(),
            )),
            ChannelModel::Awgn { code_rate, .. }
                if (code_rate - self.code.rate()).abs() > 1e-12 =>
            {
                Err(HarnessError::Config(format!(
                    "channel code_rate {} does not match the code's rate {}",
                    code_rate,
                    self.code.rate()
                )))
            }
            _ => Ok(()),
        }
    }
}

/// Aggregated outcome of one point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub point: ExperimentPoint,
    pub info_bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub compares: u64,
    pub equal_compares: u64,
    pub equality_fraction: f64,
}

/// Simulates one point: Bernoulli source, terminated encoding, channel,
/// quantization, decoding, error counting over the information bits only.
/// Deterministic for a fixed `master_seed`. Hitting the frame cap with
/// zero errors is a valid result (`ber = 0`), not an error.
///
/// The AWGN `snr_db` is read as per-symbol SNR (Es/N0): the noise
/// deviation at a grid value `s` is `sqrt(1 / (2 * 10^(s/10)))`
/// independent of the code rate.
pub fn run_point(pt: &ExperimentPoint) -> Result<PointResult, HarnessError> {
    pt.validate()?;
    let trellis = build_trellis(&pt.code);
    let cfg = DecoderConfig {
        q_levels: pt.q_levels,
        policy: pt.policy,
        terminated: true,
    };
    let mut source = RandomStream::new(pt.master_seed, StreamLabel::Source);
    let mut channel = RandomStream::new(pt.master_seed, StreamLabel::Channel);
    let mut tie = RandomStream::new(pt.master_seed, StreamLabel::TieBreak);

    let budget_frames = pt.min_info_bits.div_ceil(pt.frame_len as u64);
    let frame_cap = budget_frames.saturating_mul(10);

    let mut info_bits = 0u64;
    let mut bit_errors = 0u64;
    let mut compares = 0u64;
    let mut equal_compares = 0u64;
    let mut frames = 0u64;
    loop {
        let msg = bernoulli_bits(pt.frame_len, pt.poz, &mut source)?;
        let coded = encode(&msg, &pt.code, true)?;
        let received: Vec<Level> = match pt.channel {
            ChannelModel::Awgn { snr_db, code_rate } => {
                let samples: Vec<Sample> = bpsk_modulate(&coded);
                // The experiment axis is per-symbol SNR (Es/N0); awgn_apply
                // takes Eb/N0, so shift by the rate before the rate scaling
                // inside it cancels.
                let eb_n0_db = snr_db - 10.0 * code_rate.log10();
                let noisy = awgn_apply(&samples, eb_n0_db, code_rate, &mut channel)?;
                noisy.iter().map(|&x| quantize(x, pt.q_levels)).collect()
            }
            ChannelModel::Bsc { p } => hard_levels(&bsc_apply(&coded, p, &mut channel)?),
        };
        let out = decode_block(&received, &trellis, &cfg, &mut tie)?;
        bit_errors += msg
            .iter()
            .zip(&out.bits)
            .filter(|(sent, decoded)| sent != decoded)
            .count() as u64;
        info_bits += pt.frame_len as u64;
        compares += out.compare_count;
        equal_compares += out.equal_count;
        frames += 1;
        if info_bits >= pt.min_info_bits
            && (bit_errors >= pt.min_bit_errors || frames >= frame_cap)
        {
            break;
        }
    }
    Ok(PointResult {
        point: pt.clone(),
        info_bits,
        bit_errors,
        ber: bit_errors as f64 / info_bits as f64,
        compares,
        equal_compares,
        equality_fraction: equal_compares as f64 / compares as f64,
    })
}

/// Channel axis of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelGrid {
    Awgn { snr_dbs: Vec<f64> },
    Bsc { ps: Vec<f64> },
}

/// A Cartesian grid of experiment points.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub codes: Vec<GeneratorSet>,
    pub channel: ChannelGrid,
    pub pozs: Vec<f64>,
    pub q_levels: Vec<u32>,
    pub policies: Vec<TieBreakPolicy>,
    pub frame_len: usize,
    pub min_info_bits: u64,
    pub min_bit_errors: u64,
    pub master_seed: u64,
}

/// FNV-1a over a byte stream, finished with a splitmix64 diffusion round.
/// Stable across platforms and releases, unlike the std hasher.
struct StableHash(u64);

impl StableHash {
    fn new() -> Self {
        StableHash(0xcbf2_9ce4_8422_2325)
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }

    fn write_u64(&mut self, v: u64) {
        self.write(&v.to_le_bytes());
    }

    fn finish(self) -> u64 {
        let mut z = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

/// Per-point seed for a sweep. Policy and Q are excluded on purpose: every
/// policy and every quantizer resolution at the same (code, channel, poz)
/// coordinate reuses the same source and noise realizations.
pub fn derive_point_seed(
    master_seed: u64,
    code: &GeneratorSet,
    channel: &ChannelModel,
    poz: f64,
    frame_len: usize,
) -> u64 {
    let mut h = StableHash::new();
    h.write_u64(master_seed);
    h.write(code.to_string().as_bytes());
    match *channel {
        ChannelModel::Awgn { snr_db, .. } => {
            h.write_u64(1);
            h.write_u64(snr_db.to_bits());
        }
        ChannelModel::Bsc { p } => {
            h.write_u64(2);
            h.write_u64(p.to_bits());
        }
    }
    h.write_u64(poz.to_bits());
    h.write_u64(frame_len as u64);
    h.finish()
}

/// Executes the full Cartesian product of a grid, in grid order:
/// code, then channel value, then poz, then Q, then policy.
pub fn run_sweep(grid: &SweepGrid) -> Result<Vec<PointResult>, HarnessError> {
    let channel_len = match &grid.channel {
        ChannelGrid::Awgn { snr_dbs } => snr_dbs.len(),
        ChannelGrid::Bsc { ps } => ps.len(),
    };
    if grid.codes.is_empty()
        || channel_len == 0
        || grid.pozs.is_empty()
        || grid.q_levels.is_empty()
        || grid.policies.is_empty()
    {
        return Err(HarnessError::Config("empty sweep grid".into()));
    }
    let mut results = Vec::new();
    for code in &grid.codes {
        let channels: Vec<ChannelModel> = match &grid.channel {
            ChannelGrid::Awgn { snr_dbs } => snr_dbs
                .iter()
                .map(|&snr_db| ChannelModel::Awgn { snr_db, code_rate: code.rate() })
                .collect(),
            ChannelGrid::Bsc { ps } => {
                ps.iter().map(|&p| ChannelModel::Bsc { p }).collect()
            }
        };
        for channel in channels {
            for &poz in &grid.pozs {
                let seed =
                    derive_point_seed(grid.master_seed, code, &channel, poz, grid.frame_len);
                for &q_levels in &grid.q_levels {
                    for &policy in &grid.policies {
                        let pt = ExperimentPoint {
                            code: code.clone(),
                            channel,
                            poz,
                            policy,
                            q_levels,
                            frame_len: grid.frame_len,
                            min_info_bits: grid.min_info_bits,
                            min_bit_errors: grid.min_bit_errors,
                            master_seed: seed,
                        };
                        results.push(run_point(&pt)?);
                    }
                }
            }
        }
    }
    Ok(results)
}

pub const CSV_HEADER: &str = "code,channel,snr_db,bsc_p,poz,policy,q_levels,frame_len,\
info_bits,bit_errors,ber,compares,equal_compares,equality_fraction,master_seed";

fn fmt_f64(v: f64) -> String {
    // Display of f64 is locale-independent and round-trips exactly.
    format!("{v}")
}

/// One CSV data row. The code column is always double-quoted because the
/// code spec format contains commas.
pub fn csv_row(r: &PointResult) -> String {
    let (snr_db, bsc_p) = match r.point.channel {
        ChannelModel::Awgn { snr_db, .. } => (fmt_f64(snr_db), String::new()),
        ChannelModel::Bsc { p } => (String::new(), fmt_f64(p)),
    };
    format!(
        "\"{}\",{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.point.code,
        r.point.channel.name(),
        snr_db,
        bsc_p,
        fmt_f64(r.point.poz),
        r.point.policy.name(),
        r.point.q_levels,
        r.point.frame_len,
        r.info_bits,
        r.bit_errors,
        fmt_f64(r.ber),
        r.compares,
        r.equal_compares,
        fmt_f64(r.equality_fraction),
        r.point.master_seed,
    )
}

/// Renders header plus one row per point, with a trailing newline.
pub fn render_csv(results: &[PointResult]) -> String {
    let mut out = String::with_capacity(64 + results.len() * 128);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

/// Writes the CSV for a result list to `path`.
pub fn write_csv(results: &[PointResult], path: &Path) -> Result<(), HarnessError> {
    let mut file = fs::File::create(path)?;
    file.write_all(render_csv(results).as_bytes())?;
    Ok(())
}

/// The typed content of one CSV data row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRecord {
    pub code: String,
    pub channel: String,
    pub snr_db: Option<f64>,
    pub bsc_p: Option<f64>,
    pub poz: f64,
    pub policy: String,
    pub q_levels: u32,
    pub frame_len: u64,
    pub info_bits: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub compares: u64,
    pub equal_compares: u64,
    pub equality_fraction: f64,
    pub master_seed: u64,
}

impl PointResult {
    /// The record this result serializes to.
    pub fn to_record(&self) -> CsvRecord {
        let (snr_db, bsc_p) = match self.point.channel {
            ChannelModel::Awgn { snr_db, .. } => (Some(snr_db), None),
            ChannelModel::Bsc { p } => (None, Some(p)),
        };
        CsvRecord {
            code: self.point.code.to_string(),
            channel: self.point.channel.name().to_string(),
            snr_db,
            bsc_p,
            poz: self.point.poz,
            policy: self.point.policy.name().to_string(),
            q_levels: self.point.q_levels,
            frame_len: self.point.frame_len as u64,
            info_bits: self.info_bits,
            bit_errors: self.bit_errors,
            ber: self.ber,
            compares: self.compares,
            equal_compares: self.equal_compares,
            equality_fraction: self.equality_fraction,
            master_seed: self.point.master_seed,
        }
    }
}

/// Splits one CSV line into fields, honoring double quotes on the code
/// column. Quotes inside fields are not supported (the schema never
/// produces them).
fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut current = String::new();
    let mut in_quotes = false;
    for c in line.chars() {
        match c {
            '"' => in_quotes = !in_quotes,
            ',' if !in_quotes => fields.push(std::mem::take(&mut current)),
            _ => current.push(c),
        }
    }
    fields.push(current);
    fields
}

/// Parses CSV text produced by [`render_csv`].
pub fn parse_csv(text: &str) -> Result<Vec<CsvRecord>, HarnessError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == CSV_HEADER => {}
        Some((_, other)) => {
            return Err(HarnessError::Csv {
                line: 1,
                reason: format!("unexpected header `{other}`"),
            })
        }
        None => return Err(HarnessError::Csv { line: 1, reason: "empty file".into() }),
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let err = |reason: String| HarnessError::Csv { line: lineno, reason };
        let fields = split_csv_line(line);
        if fields.len() != 15 {
            return Err(err(format!("expected 15 fields, got {}", fields.len())));
        }
        let opt_f64 = |s: &str, name: &str| -> Result<Option<f64>, HarnessError> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>()
                    .map(Some)
                    .map_err(|_| err(format!("bad {name} `{s}`")))
            }
        };
        let req_f64 = |s: &str, name: &str| -> Result<f64, HarnessError> {
            s.parse::<f64>().map_err(|_| err(format!("bad {name} `{s}`")))
        };
        let req_u64 = |s: &str, name: &str| -> Result<u64, HarnessError> {
            s.parse::<u64>().map_err(|_| err(format!("bad {name} `{s}`")))
        };
        records.push(CsvRecord {
            code: fields[0].clone(),
            channel: fields[1].clone(),
            snr_db: opt_f64(&fields[2], "snr_db")?,
            bsc_p: opt_f64(&fields[3], "bsc_p")?,
            poz: req_f64(&fields[4], "poz")?,
            policy: fields[5].clone(),
            q_levels: req_u64(&fields[6], "q_levels")? as u32,
            frame_len: req_u64(&fields[7], "frame_len")?,
            info_bits: req_u64(&fields[8], "info_bits")?,
            bit_errors: req_u64(&fields[9], "bit_errors")?,
            ber: req_f64(&fields[10], "ber")?,
            compares: req_u64(&fields[11], "compares")?,
            equal_compares: req_u64(&fields[12], "equal_compares")?,
            equality_fraction: req_f64(&fields[13], "equality_fraction")?,
            master_seed: req_u64(&fields[14], "master_seed")?,
        });
    }
    Ok(records)
}

/// Reads and parses a CSV file written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<CsvRecord>, HarnessError> {
    let text = fs::read_to_string(path)?;
    parse_csv(&text)
}

/// The five rate-1/2 codes the BSC surface preset sweeps: the standard
/// maximum-free-distance generators for memories 2 through 6.
pub fn standard_codes() -> Vec<GeneratorSet> {
    [
        (vec!["5", "7"], 2),
        (vec!["15", "17"], 3),
        (vec!["23", "35"], 4),
        (vec!["53", "75"], 5),
        (vec!["133", "171"], 6),
    ]
    .into_iter()
    .map(|(polys, m)| {
        let refs: Vec<&str> = polys.iter().map(|s| &**s).collect();
        GeneratorSet::parse_octal(&refs, m).expect("standard codes are valid")
    })
    .collect()
}

/// Named experiment grids reproducible from the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigurePreset {
    /// Metric-equality fraction vs SNR for Q in {2,4,8,16}, zero-oriented.
    Fig3,
    /// Hard-input BER vs PoZ at 0 dB for all three policies.
    Fig4,
    /// 8-level soft-input BER vs PoZ at 0 dB for all three policies.
    Fig5,
    /// BER vs SNR at PoZ = 0 for all policies, hard and 8-level input.
    Fig6,
    /// Zero-oriented hard-input BER surfaces over a BSC for five codes.
    Fig7,
}

impl FigurePreset {
    pub const ALL: [FigurePreset; 5] = [
        FigurePreset::Fig3,
        FigurePreset::Fig4,
        FigurePreset::Fig5,
        FigurePreset::Fig6,
        FigurePreset::Fig7,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigurePreset::Fig3 => "fig3",
            FigurePreset::Fig4 => "fig4",
            FigurePreset::Fig5 => "fig5",
            FigurePreset::Fig6 => "fig6",
            FigurePreset::Fig7 => "fig7",
        }
    }
}

impl std::str::FromStr for FigurePreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig3" => Ok(FigurePreset::Fig3),
            "fig4" => Ok(FigurePreset::Fig4),
            "fig5" => Ok(FigurePreset::Fig5),
            "fig6" => Ok(FigurePreset::Fig6),
            "fig7" => Ok(FigurePreset::Fig7),
            other => Err(format!("unknown preset `{other}` (expected fig3..fig7)")),
        }
    }
}

fn tenths(range: std::ops::RangeInclusive<u32>) -> Vec<f64> {
    range.map(|i| f64::from(i) / 10.0).collect()
}

fn db_steps() -> Vec<f64> {
    (-2..=5).map(f64::from).collect()
}

/// Builds the sweep grid for a preset. Budgets come from the caller so the
/// same grids can run at smoke-test or full resolution.
pub fn figure_grid(
    preset: FigurePreset,
    frame_len: usize,
    min_info_bits: u64,
    min_bit_errors: u64,
    master_seed: u64,
) -> SweepGrid {
    let code_5_7 = vec![standard_codes()[0].clone()];
    let all_policies = TieBreakPolicy::ALL.to_vec();
    let (codes, channel, pozs, q_levels, policies) = match preset {
        FigurePreset::Fig3 => (
            code_5_7,
            ChannelGrid::Awgn { snr_dbs: db_steps() },
            vec![0.5],
            vec![2, 4, 8, 16],
            vec![TieBreakPolicy::ZeroOriented],
        ),
        FigurePreset::Fig4 => (
            code_5_7,
            ChannelGrid::Awgn { snr_dbs: vec![0.0] },
            tenths(0..=10),
            vec![2],
            all_policies,
        ),
        FigurePreset::Fig5 => (
            code_5_7,
            ChannelGrid::Awgn { snr_dbs: vec![0.0] },
            tenths(0..=10),
            vec![8],
            all_policies,
        ),
        FigurePreset::Fig6 => (
            code_5_7,
            ChannelGrid::Awgn { snr_dbs: db_steps() },
            vec![0.0],
            vec![2, 8],
            all_policies,
        ),
        FigurePreset::Fig7 => (
            standard_codes(),
            ChannelGrid::Bsc { ps: (1..=20).map(|i| f64::from(i) / 100.0).collect() },
            tenths(0..=10),
            vec![2],
            vec![TieBreakPolicy::ZeroOriented],
        ),
    };
    SweepGrid {
        codes,
        channel,
        pozs,
        q_levels,
        policies,
        frame_len,
        min_info_bits,
        min_bit_errors,
        master_seed,
    }
}
