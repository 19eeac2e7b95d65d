//! Golden decode vectors: a text format for cross-implementation
//! regression tests of the decoder.
//!
//! One record is six consecutive content lines (blank lines and `#`
//! comments are skipped):
//!
//! ```text
//! rate=1/2;memory=2;polys=5,7      code spec
//! 2                                quantizer levels Q
//! zero                             tie-break policy: random|zero|one
//! 1 1 0 1 1 1 0 0 1 1              received levels, space-separated
//! 1 0 0                            expected decoded bits
//! 1                                expected final path metric
//! ```
//!
//! Vectors always describe terminated frames. No random source is
//! involved, so the files are portable: records using the `random` policy
//! are only valid on frames that decode without a single metric-equality
//! event, and [`GoldenVector::verify`] enforces that.

use std::str::FromStr;

use rand::rngs::mock::StepRng;
use thiserror::Error;

use crate::codec::{build_trellis, GeneratorSet};
use crate::viterbi::{decode_block, DecoderConfig, TieBreakPolicy};
use crate::{Bit, Level};

#[derive(Debug, Error)]
pub enum GoldenError {
    #[error("golden vector line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("record ends early: expected {expected} more line(s)")]
    Truncated { expected: usize },
}

/// One frozen decode case.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenVector {
    pub code: GeneratorSet,
    pub q_levels: u32,
    pub policy: TieBreakPolicy,
    pub received: Vec<Level>,
    pub expected_bits: Vec<Bit>,
    pub expected_metric: u64,
}

impl GoldenVector {
    /// Decodes the frame and checks bits and metric against the record.
    /// Random-policy records are additionally required to be tie-free,
    /// otherwise the vector would depend on a random stream and stop
    /// being portable.
    pub fn verify(&self) -> Result<(), String> {
        let trellis = build_trellis(&self.code);
        let cfg = DecoderConfig {
            q_levels: self.q_levels,
            policy: self.policy,
            terminated: true,
        };
        let mut rng = StepRng::new(0, 0);
        let out = decode_block(&self.received, &trellis, &cfg, &mut rng)
            .map_err(|e| format!("decode failed: {e}"))?;
        if self.policy == TieBreakPolicy::Random && out.equal_count != 0 {
            return Err(format!(
                "random-policy vector is not tie-free ({} equality events)",
                out.equal_count
            ));
        }
        if out.bits != self.expected_bits {
            return Err(format!(
                "decoded bits {:?} != expected {:?}",
                out.bits, self.expected_bits
            ));
        }
        if out.final_metric != self.expected_metric {
            return Err(format!(
                "final metric {} != expected {}",
                out.final_metric, self.expected_metric
            ));
        }
        Ok(())
    }
}

fn join_spaced<T: std::fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Renders records in the file format, one blank line between records.
pub fn render_golden(vectors: &[GoldenVector]) -> String {
    let mut out = String::new();
    out.push_str("# fec-lab golden decode vectors\n");
    out.push_str("# record: code spec / Q / policy / received levels / expected bits / expected metric\n");
    for v in vectors {
        out.push('\n');
        out.push_str(&format!(
            "{}\n{}\n{}\n{}\n{}\n{}\n",
            v.code,
            v.q_levels,
            v.policy.name(),
            join_spaced(&v.received),
            join_spaced(&v.expected_bits),
            v.expected_metric
        ));
    }
    out
}

/// Parses a golden vector file.
pub fn parse_golden(text: &str) -> Result<Vec<GoldenVector>, GoldenError> {
    let content: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect();
    if !content.len().is_multiple_of(6) {
        return Err(GoldenError::Truncated {
            expected: 6 - content.len() % 6,
        });
    }
    let mut vectors = Vec::with_capacity(content.len() / 6);
    for record in content.chunks_exact(6) {
        let err = |idx: usize, reason: String| GoldenError::Parse {
            line: record[idx].0,
            reason,
        };
        let code = GeneratorSet::from_str(record[0].1)
            .map_err(|e| err(0, e.to_string()))?;
        let q_levels: u32 = record[1]
            .1
            .parse()
            .map_err(|_| err(1, format!("bad Q `{}`", record[1].1)))?;
        let policy = TieBreakPolicy::from_str(record[2].1).map_err(|e| err(2, e))?;
        let parse_list = |idx: usize, name: &str| -> Result<Vec<u8>, GoldenError> {
            record[idx]
                .1
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u8>()
                        .map_err(|_| err(idx, format!("bad {name} `{tok}`")))
                })
                .collect()
        };
        let received = parse_list(3, "level")?;
        let expected_bits = parse_list(4, "bit")?;
        let expected_metric: u64 = record[5]
            .1
            .parse()
            .map_err(|_| err(5, format!("bad metric `{}`", record[5].1)))?;
        vectors.push(GoldenVector {
            code,
            q_levels,
            policy,
            received,
            expected_bits,
            expected_metric,
        });
    }
    Ok(vectors)
}
