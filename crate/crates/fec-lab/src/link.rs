//! Everything between information bits and decoder input: Bernoulli
//! source, BPSK mapping, AWGN and BSC channels, uniform quantization, and
//! the seeded random substreams that make runs reproducible.
//!
//! Polarity convention: bit 0 maps to +1.0, bit 1 to -1.0, so larger
//! quantizer levels always mean "more zero-like". SNR is read as Eb/N0
//! with unit-energy symbols; the per-sample noise deviation is
//! `sigma = sqrt(1 / (2 * code_rate * 10^(snr_db/10)))`.
//!
//! Sample processing is generic over the scalar type through
//! [`num_traits::Float`]; the harness instantiates it at [`crate::Sample`].

use num_traits::Float;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::{Bit, Level};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinkError {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("code rate {0} outside (0, 1]")]
    InvalidCodeRate(f64),
    #[error("SNR must be finite, got {0}")]
    NonFiniteSnr(f64),
}

/// Channel selection for one experiment point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelModel {
    /// BPSK over additive white Gaussian noise; `snr_db` is Eb/N0 and
    /// `code_rate` scales the per-coded-bit energy.
    Awgn { snr_db: f64, code_rate: f64 },
    /// Binary symmetric channel with bit-flip probability `p`; decoder
    /// input is hard (Q = 2).
    Bsc { p: f64 },
}

impl ChannelModel {
    pub fn validate(&self) -> Result<(), LinkError> {
        match *self {
            ChannelModel::Awgn { snr_db, code_rate } => {
                if !snr_db.is_finite() {
                    return Err(LinkError::NonFiniteSnr(snr_db));
                }
                if !(code_rate > 0.0 && code_rate <= 1.0) {
                    return Err(LinkError::InvalidCodeRate(code_rate));
                }
                Ok(())
            }
            ChannelModel::Bsc { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(LinkError::InvalidProbability(p));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChannelModel::Awgn { .. } => "awgn",
            ChannelModel::Bsc { .. } => "bsc",
        }
    }
}

/// The three independent substreams an experiment point consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamLabel {
    /// Message bits.
    Source,
    /// Channel noise or bit flips.
    Channel,
    /// ACS tie-break coin tosses.
    TieBreak,
}

impl StreamLabel {
    fn stream_id(self) -> u64 {
        match self {
            StreamLabel::Source => 0,
            StreamLabel::Channel => 1,
            StreamLabel::TieBreak => 2,
        }
    }
}

/// A seedable deterministic generator bound to one substream label.
///
/// The same `(master_seed, label)` always yields the same sequence, and
/// distinct labels select independent keystreams of the same master seed,
/// so source, channel, and tie-break draws never interfere no matter the
/// order they are consumed in.
#[derive(Debug, Clone)]
pub struct RandomStream {
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(master_seed: u64, label: StreamLabel) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
        rng.set_stream(label.stream_id());
        Self { rng }
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.rng.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), rand::Error> {
        self.rng.try_fill_bytes(dest)
    }
}

/// Draws `count` bits that are each 0 with probability `poz`.
pub fn bernoulli_bits<R: Rng + ?Sized>(
    count: usize,
    poz: f64,
    rng: &mut R,
) -> Result<Vec<Bit>, LinkError> {
    if !(0.0..=1.0).contains(&poz) {
        return Err(LinkError::InvalidProbability(poz));
    }
    // gen::<f64>() is in [0, 1), so poz = 1 gives all zeros and poz = 0
    // gives all ones, exactly.
    Ok((0..count)
        .map(|_| if rng.gen::<f64>() < poz { 0 } else { 1 })
        .collect())
}

/// Maps bit 0 to +1 and bit 1 to -1.
pub fn bpsk_modulate<F: Float>(bits: &[Bit]) -> Vec<F> {
    bits.iter()
        .map(|&b| if b == 0 { F::one() } else { -F::one() })
        .collect()
}

/// Per-sample noise deviation for a given Eb/N0 and code rate.
pub fn awgn_sigma(snr_db: f64, code_rate: f64) -> f64 {
    (1.0 / (2.0 * code_rate * 10f64.powf(snr_db / 10.0))).sqrt()
}

/// One standard normal pair by the Box-Muller transform; consumes exactly
/// two uniform draws.
fn gauss_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]: keeps ln finite
    let u2: f64 = rng.gen();
    let radius = (-2.0 * u1.ln()).sqrt();
    let angle = std::f64::consts::TAU * u2;
    (radius * angle.cos(), radius * angle.sin())
}

/// Adds independent zero-mean Gaussian noise scaled for `snr_db` (Eb/N0)
/// at the given code rate.
pub fn awgn_apply<F: Float, R: Rng + ?Sized>(
    samples: &[F],
    snr_db: f64,
    code_rate: f64,
    rng: &mut R,
) -> Result<Vec<F>, LinkError> {
    if !snr_db.is_finite() {
        return Err(LinkError::NonFiniteSnr(snr_db));
    }
    if !(code_rate > 0.0 && code_rate <= 1.0) {
        return Err(LinkError::InvalidCodeRate(code_rate));
    }
    let sigma = awgn_sigma(snr_db, code_rate);
    let mut out = Vec::with_capacity(samples.len());
    for pair in samples.chunks(2) {
        let (z0, z1) = gauss_pair(rng);
        out.push(pair[0] + F::from(sigma * z0).unwrap());
        if let Some(&second) = pair.get(1) {
            out.push(second + F::from(sigma * z1).unwrap());
        }
    }
    Ok(out)
}

/// Uniform quantizer over `[-1, +1]` with clamping: level `Q-1` is the
/// most confident bit 0, level 0 the most confident bit 1. Boundary
/// samples round upward (toward bit 0), so Q = 2 reproduces the
/// sign-based hard decision with 0.0 mapping to level 1.
///
/// Panics if `q` is not a power of two in `[2, 256]`; quantizer choices
/// are validated once at configuration time.
pub fn quantize<F: Float>(sample: F, q: u32) -> Level {
    assert!(
        (2..=256).contains(&q) && q.is_power_of_two(),
        "q_levels must be a power of two in [2, 256], got {q}"
    );
    let half = F::from(0.5).unwrap();
    let t = ((sample + F::one()) * half).max(F::zero()).min(F::one());
    let scaled = (t * F::from(q).unwrap()).floor();
    let level = scaled.to_u32().unwrap_or(0).min(q - 1);
    level as Level
}

/// Flips each bit independently with probability `p`.
pub fn bsc_apply<R: Rng + ?Sized>(
    bits: &[Bit],
    p: f64,
    rng: &mut R,
) -> Result<Vec<Bit>, LinkError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(LinkError::InvalidProbability(p));
    }
    Ok(bits
        .iter()
        .map(|&b| if rng.gen::<f64>() < p { b ^ 1 } else { b })
        .collect())
}

/// Presents hard bits to the decoder as Q = 2 levels: bit 0 becomes
/// level 1, bit 1 becomes level 0.
pub fn hard_levels(bits: &[Bit]) -> Vec<Level> {
    bits.iter().map(|&b| 1 - b).collect()
}
