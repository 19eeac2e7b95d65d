//! Convolutional code definitions, trellis construction, and encoding.
//!
//! A code is a set of feed-forward generator polynomials over a shift
//! register with `m` delay elements. Polynomials are given in octal, as in
//! the usual (5, 7) or (133, 171) notation: bit `i` of a mask (LSB = `i = 0`)
//! taps the input from `i` steps ago, so a mask occupies `m + 1` bits.
//!
//! The trellis state is the register contents `(u_{t-1}, ..., u_{t-m})`
//! with the *oldest* bit in the most significant position of the state
//! index. Under this convention the two predecessors of any state differ
//! only in the oldest register bit, and the predecessor with that bit
//! clear (the "upper" one, the path with more zeros) always has the
//! smaller index.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::Bit;

/// Errors from code construction and encoding.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CodecError {
    #[error("polynomial `{0}` is not valid octal")]
    MalformedOctal(String),
    #[error("polynomial {mask:#o} does not fit in {width} bits (memory {memory})", width = memory + 1)]
    MaskTooWide { mask: u32, memory: usize },
    #[error("polynomial mask must be non-zero")]
    MaskZero,
    #[error("a rate-1/n code needs at least 2 polynomials, got {0}")]
    TooFewPolynomials(usize),
    #[error("memory must be at least 1")]
    MemoryZero,
    #[error("no polynomial taps the oldest register bit; memory {0} is not effective")]
    MemoryNotEffective(usize),
    #[error("message must not be empty")]
    EmptyMessage,
    #[error("bad code spec `{spec}`: {reason}")]
    BadCodeSpec { spec: String, reason: String },
}

/// A rate-1/n feed-forward convolutional code: register memory plus the
/// ordered list of generator polynomial masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSet {
    memory: usize,
    polynomials: Vec<u32>,
}

impl GeneratorSet {
    /// Builds a code from raw polynomial masks, validating width, non-zero
    /// masks, polynomial count, and that the oldest tap is actually used.
    pub fn new(memory: usize, polynomials: Vec<u32>) -> Result<Self, CodecError> {
        if memory == 0 {
            return Err(CodecError::MemoryZero);
        }
        if polynomials.len() < 2 {
            return Err(CodecError::TooFewPolynomials(polynomials.len()));
        }
        let width_limit = 1u32 << (memory + 1);
        for &mask in &polynomials {
            if mask == 0 {
                return Err(CodecError::MaskZero);
            }
            if mask >= width_limit {
                return Err(CodecError::MaskTooWide { mask, memory });
            }
        }
        let oldest_tap = 1u32 << memory;
        if !polynomials.iter().any(|&mask| mask & oldest_tap != 0) {
            return Err(CodecError::MemoryNotEffective(memory));
        }
        Ok(Self { memory, polynomials })
    }

    /// Parses polynomials given as octal strings, e.g. `["133", "171"]`
    /// with memory 6. Order is preserved: the first polynomial produces
    /// the first coded bit of every output symbol.
    pub fn parse_octal(octal: &[&str], memory: usize) -> Result<Self, CodecError> {
        let mut masks = Vec::with_capacity(octal.len());
        for s in octal {
            let mask = u32::from_str_radix(s, 8)
                .map_err(|_| CodecError::MalformedOctal(s.to_string()))?;
            masks.push(mask);
        }
        Self::new(memory, masks)
    }

    /// Number of delay elements `m`.
    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Polynomial masks in output order.
    pub fn polynomials(&self) -> &[u32] {
        &self.polynomials
    }

    /// Coded bits emitted per input bit (the `n` of rate 1/n).
    pub fn num_outputs(&self) -> usize {
        self.polynomials.len()
    }

    /// Code rate 1/n as a float.
    pub fn rate(&self) -> f64 {
        1.0 / self.polynomials.len() as f64
    }

    /// Trellis state count, `2^m`.
    pub fn num_states(&self) -> usize {
        1 << self.memory
    }
}

/// The canonical text form, `rate=1/n;memory=m;polys=o1,o2,…` with octal
/// polynomials. This is what the CLI `--code` flag accepts.
impl FromStr for GeneratorSet {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, CodecError> {
        let bad = |reason: &str| CodecError::BadCodeSpec {
            spec: s.to_string(),
            reason: reason.to_string(),
        };
        let mut rate_n: Option<usize> = None;
        let mut memory: Option<usize> = None;
        let mut polys: Option<Vec<String>> = None;
        for part in s.split(';') {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| bad("expected key=value fields separated by ';'"))?;
            match key.trim() {
                "rate" => {
                    let denom = value
                        .trim()
                        .strip_prefix("1/")
                        .ok_or_else(|| bad("rate must have the form 1/n"))?;
                    rate_n = Some(
                        denom
                            .parse::<usize>()
                            .map_err(|_| bad("rate denominator is not a number"))?,
                    );
                }
                "memory" => {
                    memory = Some(
                        value
                            .trim()
                            .parse::<usize>()
                            .map_err(|_| bad("memory is not a number"))?,
                    );
                }
                "polys" => {
                    polys = Some(value.split(',').map(|p| p.trim().to_string()).collect());
                }
                other => return Err(bad(&format!("unknown field `{other}`"))),
            }
        }
        let memory = memory.ok_or_else(|| bad("missing memory field"))?;
        let polys = polys.ok_or_else(|| bad("missing polys field"))?;
        if let Some(n) = rate_n {
            if n != polys.len() {
                return Err(bad(&format!(
                    "rate says 1/{n} but {} polynomials listed",
                    polys.len()
                )));
            }
        } else {
            return Err(bad("missing rate field"));
        }
        let refs: Vec<&str> = polys.iter().map(String::as_str).collect();
        Self::parse_octal(&refs, memory)
    }
}

impl fmt::Display for GeneratorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rate=1/{};memory={};polys=", self.num_outputs(), self.memory)?;
        for (i, mask) in self.polynomials.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{mask:o}")?;
        }
        Ok(())
    }
}

/// Precomputed trellis tables for one code.
///
/// `predecessors[s]` is the ordered pair `(upper, lower)`: the two states
/// feeding `s`, with `upper < lower` and the upper one having the oldest
/// register bit clear. Both transitions into `s` carry the same input bit,
/// `s & 1`; what distinguishes the merged paths is the input from `m`
/// steps earlier, which is why tie resolution acts retrospectively.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trellis {
    memory: usize,
    num_states: usize,
    symbol_bits: usize,
    next_state: Vec<[usize; 2]>,
    output: Vec<[u32; 2]>,
    predecessors: Vec<[usize; 2]>,
}

/// Builds the state-transition, output, and predecessor tables for a code.
pub fn build_trellis(gs: &GeneratorSet) -> Trellis {
    let m = gs.memory();
    let num_states = gs.num_states();
    let state_mask = (num_states - 1) as u32;
    let mut next_state = vec![[0usize; 2]; num_states];
    let mut output = vec![[0u32; 2]; num_states];
    for state in 0..num_states {
        for input in 0..2u32 {
            // Full register with the new input in the LSB position.
            let reg = ((state as u32) << 1) | input;
            let mut symbol = 0u32;
            for (j, &poly) in gs.polynomials().iter().enumerate() {
                symbol |= ((reg & poly).count_ones() & 1) << j;
            }
            next_state[state][input as usize] = (reg & state_mask) as usize;
            output[state][input as usize] = symbol;
        }
    }
    let half = num_states >> 1;
    let predecessors = (0..num_states)
        .map(|s| [s >> 1, (s >> 1) | half])
        .collect();
    Trellis {
        memory: m,
        num_states,
        symbol_bits: gs.num_outputs(),
        next_state,
        output,
        predecessors,
    }
}

impl Trellis {
    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Coded bits per trellis step.
    pub fn symbol_bits(&self) -> usize {
        self.symbol_bits
    }

    /// Successor of `state` under `input`.
    pub fn next_state(&self, state: usize, input: Bit) -> usize {
        self.next_state[state][input as usize]
    }

    /// Coded symbol emitted on the `state --input-->` transition, with the
    /// first polynomial's bit in the LSB.
    pub fn output(&self, state: usize, input: Bit) -> u32 {
        self.output[state][input as usize]
    }

    /// Ordered `(upper, lower)` predecessor pair of `state`.
    pub fn predecessors(&self, state: usize) -> [usize; 2] {
        self.predecessors[state]
    }

    /// Input bit carried by every transition into `state`.
    pub fn input_bit(&self, state: usize) -> Bit {
        (state & 1) as Bit
    }

    /// Bit `j` of a coded symbol in wire order (polynomial list order).
    pub fn symbol_bit(symbol: u32, j: usize) -> Bit {
        ((symbol >> j) & 1) as Bit
    }
}

/// Encodes a message. `terminated` appends `m` zero tail bits internally,
/// driving the register back to state 0; output length is
/// `n * (L + m)` terminated or `n * L` truncated. The register starts
/// all-zero either way.
pub fn encode(message: &[Bit], gs: &GeneratorSet, terminated: bool) -> Result<Vec<Bit>, CodecError> {
    if message.is_empty() {
        return Err(CodecError::EmptyMessage);
    }
    let m = gs.memory();
    let tail = if terminated { m } else { 0 };
    let mut out = Vec::with_capacity((message.len() + tail) * gs.num_outputs());
    let state_mask = (gs.num_states() - 1) as u32;
    let mut state = 0u32;
    let zeros = [0 as Bit; 64];
    for &bit in message.iter().chain(zeros[..tail].iter()) {
        debug_assert!(bit <= 1);
        let reg = (state << 1) | u32::from(bit);
        for &poly in gs.polynomials() {
            out.push(((reg & poly).count_ones() & 1) as Bit);
        }
        state = reg & state_mask;
    }
    Ok(out)
}
