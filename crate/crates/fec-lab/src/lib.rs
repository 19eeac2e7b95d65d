//! fec-lab: a convolutional-code laboratory.
//!
//! The crate implements a rate-1/n convolutional codec, a Viterbi decoder
//! whose Add-Compare-Select unit supports three metric-equality (tie-break)
//! policies, a BPSK/AWGN/BSC link layer with uniform soft quantization, and
//! a Monte Carlo harness that sweeps configuration grids and writes CSV.
//!
//! Strict tie-break rules (always keep the upper path, or always keep the
//! lower path) make decoding performance depend on the proportion of zeros
//! and ones in the source message; the harness exists to measure that effect
//! against the randomized rule.
//!
//! Layout follows the processing chain:
//!
//! - [`codec`]: generator polynomials, trellis tables, encoding
//! - [`viterbi`]: branch metrics, ACS with tie-break policies, traceback,
//!   and an exhaustive maximum-likelihood oracle for testing
//! - [`link`]: Bernoulli source, BPSK, AWGN/BSC channels, quantizer,
//!   seeded random substreams
//! - [`harness`]: experiment points, sweeps, CSV output, figure presets
//! - [`golden`]: portable decode-vector files for regression testing
//! - [`cli`]: the `fec-lab` command line

pub mod cli;
pub mod codec;
pub mod golden;
pub mod harness;
pub mod link;
pub mod viterbi;

/// A single information or code bit, stored as `0` or `1`.
pub type Bit = u8;

/// A quantizer output level in `[0, Q-1]`; level `Q-1` is the most
/// confident bit 0, level `0` the most confident bit 1.
pub type Level = u8;

/// Concrete scalar used for modulated samples throughout the harness.
/// The link-layer operations are generic over [`num_traits::Float`]; this
/// alias pins the precision the simulator runs at.
pub type Sample = f64;
