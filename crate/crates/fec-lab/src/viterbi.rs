//! Viterbi decoding with configurable ACS tie-break policies.
//!
//! The Add-Compare-Select step compares the two path metrics entering each
//! state. On strict inequality all implementations agree; the interesting
//! case is metric equality. [`TieBreakPolicy::Random`] tosses a fair coin,
//! [`TieBreakPolicy::ZeroOriented`] always keeps the upper path (the one
//! with more zeros), [`TieBreakPolicy::OneOriented`] always keeps the lower
//! path. All three return a path of minimal metric; they differ only in
//! *which* minimal path survives, and because the two merged paths share
//! their final bits the difference shows up retrospectively, in bits
//! decided earlier than the tie step.
//!
//! Branch metrics are integer soft costs over quantizer levels in
//! `[0, Q-1]`: a level costs `(Q-1) - level` against an expected 0 and
//! `level` against an expected 1. At Q = 2 this is Hamming distance.
//!
//! [`ml_decode_bruteforce`] is an exhaustive maximum-likelihood oracle used
//! by the tests to certify minimality of whatever the ACS path search
//! returns.

use rand::Rng;
use thiserror::Error;

use crate::codec::Trellis;
use crate::{Bit, Level};

/// Largest Q the decoder accepts; levels are stored in a byte.
pub const MAX_Q_LEVELS: u32 = 256;

/// Hard upper bound on exhaustive-search message length.
pub const MAX_BRUTEFORCE_LEN: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("received length {len} is not a multiple of the {n}-bit symbol")]
    LengthNotMultiple { len: usize, n: usize },
    #[error("frame of {steps} steps is too short (need at least {min})")]
    FrameTooShort { steps: usize, min: usize },
    #[error("quantizer level {level} out of range for Q={q}")]
    LevelOutOfRange { level: Level, q: u32 },
    #[error("q_levels must be a power of two in [2, {MAX_Q_LEVELS}], got {0}")]
    InvalidQuantizer(u32),
    #[error("received length {received} inconsistent with message length {message}")]
    LengthMismatch { message: usize, received: usize },
    #[error("exhaustive search over {0} bits exceeds the {MAX_BRUTEFORCE_LEN}-bit limit")]
    MessageTooLong(usize),
}

/// How the ACS unit resolves path-metric equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TieBreakPolicy {
    /// Fair coin toss per equality event, drawn from the tie-break stream.
    Random,
    /// Keep the upper path (more zeros) on equality; never draws randomness.
    ZeroOriented,
    /// Keep the lower path (more ones) on equality; never draws randomness.
    OneOriented,
}

impl TieBreakPolicy {
    pub const ALL: [TieBreakPolicy; 3] = [
        TieBreakPolicy::Random,
        TieBreakPolicy::ZeroOriented,
        TieBreakPolicy::OneOriented,
    ];

    /// Short name used by the CLI and CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            TieBreakPolicy::Random => "random",
            TieBreakPolicy::ZeroOriented => "zero",
            TieBreakPolicy::OneOriented => "one",
        }
    }
}

impl std::fmt::Display for TieBreakPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for TieBreakPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(TieBreakPolicy::Random),
            "zero" => Ok(TieBreakPolicy::ZeroOriented),
            "one" => Ok(TieBreakPolicy::OneOriented),
            other => Err(format!("unknown policy `{other}` (expected random|zero|one)")),
        }
    }
}

/// Decoder configuration: quantizer resolution, tie-break policy, and
/// whether the frame carries a zero tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoderConfig {
    pub q_levels: u32,
    pub policy: TieBreakPolicy,
    pub terminated: bool,
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<(), DecodeError> {
        validate_q(self.q_levels)
    }
}

fn validate_q(q: u32) -> Result<(), DecodeError> {
    if !(2..=MAX_Q_LEVELS).contains(&q) || !q.is_power_of_two() {
        return Err(DecodeError::InvalidQuantizer(q));
    }
    Ok(())
}

/// Per-state path metrics. After [`normalize_metrics`] the minimum over
/// states is zero, which keeps the accumulator bounded on long frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateMetrics {
    metric: Vec<u32>,
}

impl StateMetrics {
    /// Metrics at frame start: state 0 at zero, every other state at
    /// `penalty` so unreachable starts never win a traceback.
    pub fn frame_start(num_states: usize, penalty: u32) -> Self {
        let mut metric = vec![penalty; num_states];
        metric[0] = 0;
        Self { metric }
    }

    pub fn from_vec(metric: Vec<u32>) -> Self {
        Self { metric }
    }

    pub fn get(&self, state: usize) -> u32 {
        self.metric[state]
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.metric
    }

    pub fn len(&self) -> usize {
        self.metric.len()
    }

    pub fn is_empty(&self) -> bool {
        self.metric.is_empty()
    }

    pub fn min(&self) -> u32 {
        self.metric.iter().copied().min().unwrap_or(0)
    }
}

/// Which predecessor survived the compare at one state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurvivorChoice {
    Upper,
    Lower,
}

impl SurvivorChoice {
    fn index(self) -> usize {
        match self {
            SurvivorChoice::Upper => 0,
            SurvivorChoice::Lower => 1,
        }
    }
}

/// Result of one ACS step over all states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcsStep {
    pub metrics: StateMetrics,
    pub survivors: Vec<SurvivorChoice>,
    pub compare_count: u64,
    pub equal_count: u64,
}

/// Decoded frame plus the counters the experiments aggregate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    /// Decoded message bits, tail stripped in terminated mode.
    pub bits: Vec<Bit>,
    /// Un-normalized metric of the winning path, recomputed by re-walking it.
    pub final_metric: u64,
    /// Total compare operations: one per state per step.
    pub compare_count: u64,
    /// Compares whose two candidate metrics were equal.
    pub equal_count: u64,
}

#[inline]
fn bit_cost(expected: Bit, level: Level, q: u32) -> u32 {
    if expected == 0 {
        (q - 1) - u32::from(level)
    } else {
        u32::from(level)
    }
}

#[inline]
fn branch_metric_unchecked(expected_symbol: u32, received: &[Level], q: u32) -> u32 {
    let mut sum = 0u32;
    for (j, &level) in received.iter().enumerate() {
        sum += bit_cost(Trellis::symbol_bit(expected_symbol, j), level, q);
    }
    sum
}

/// Integer soft branch metric between an expected coded symbol and one
/// received symbol of quantized levels. Range is `[0, n * (Q-1)]`;
/// at Q = 2 it is the Hamming distance.
pub fn branch_metric(expected_symbol: u32, received: &[Level], q: u32) -> Result<u32, DecodeError> {
    validate_q(q)?;
    for &level in received {
        if u32::from(level) >= q {
            return Err(DecodeError::LevelOutOfRange { level, q });
        }
    }
    Ok(branch_metric_unchecked(expected_symbol, received, q))
}

/// In-place ACS over all states; returns the number of equality events.
/// `next` and `survivors` are cleared and refilled.
#[allow(clippy::too_many_arguments)]
fn acs_step_core<R: Rng + ?Sized>(
    prev: &[u32],
    received: &[Level],
    trellis: &Trellis,
    q: u32,
    policy: TieBreakPolicy,
    tie_rng: &mut R,
    next: &mut Vec<u32>,
    survivors: &mut Vec<SurvivorChoice>,
) -> u64 {
    let num_states = trellis.num_states();
    debug_assert_eq!(prev.len(), num_states);
    debug_assert_eq!(received.len(), trellis.symbol_bits());
    next.clear();
    survivors.clear();
    let mut equal = 0u64;
    for s in 0..num_states {
        let [upper, lower] = trellis.predecessors(s);
        let input = trellis.input_bit(s);
        let metric_upper =
            prev[upper] + branch_metric_unchecked(trellis.output(upper, input), received, q);
        let metric_lower =
            prev[lower] + branch_metric_unchecked(trellis.output(lower, input), received, q);
        let choice = if metric_upper < metric_lower {
            SurvivorChoice::Upper
        } else if metric_upper > metric_lower {
            SurvivorChoice::Lower
        } else {
            equal += 1;
            match policy {
                TieBreakPolicy::ZeroOriented => SurvivorChoice::Upper,
                TieBreakPolicy::OneOriented => SurvivorChoice::Lower,
                // Keep the upper path iff the next tie-stream bit is 0.
                TieBreakPolicy::Random => {
                    if tie_rng.gen::<bool>() {
                        SurvivorChoice::Lower
                    } else {
                        SurvivorChoice::Upper
                    }
                }
            }
        };
        next.push(metric_upper.min(metric_lower));
        survivors.push(choice);
    }
    equal
}

/// One Add-Compare-Select step: extends every state's two incoming paths by
/// their branch metrics, keeps the minimum, and resolves equalities per the
/// policy. `compare_count` increases by the state count, `equal_count` by
/// the number of ties.
pub fn acs_step<R: Rng + ?Sized>(
    prev: &StateMetrics,
    received: &[Level],
    trellis: &Trellis,
    q: u32,
    policy: TieBreakPolicy,
    tie_rng: &mut R,
) -> AcsStep {
    assert_eq!(prev.len(), trellis.num_states());
    assert_eq!(received.len(), trellis.symbol_bits());
    let mut next = Vec::with_capacity(trellis.num_states());
    let mut survivors = Vec::with_capacity(trellis.num_states());
    let equal_count = acs_step_core(
        prev.as_slice(),
        received,
        trellis,
        q,
        policy,
        tie_rng,
        &mut next,
        &mut survivors,
    );
    AcsStep {
        metrics: StateMetrics::from_vec(next),
        survivors,
        compare_count: trellis.num_states() as u64,
        equal_count,
    }
}

/// Subtracts the minimum metric from every state, so the smallest entry is
/// zero. Survivor decisions are shift-invariant, so this never changes the
/// decoded path; it only prevents accumulator growth.
pub fn normalize_metrics(metrics: &StateMetrics) -> StateMetrics {
    let min = metrics.min();
    StateMetrics::from_vec(metrics.as_slice().iter().map(|&v| v - min).collect())
}

fn normalize_in_place(metrics: &mut [u32]) {
    let min = metrics.iter().copied().min().unwrap_or(0);
    if min > 0 {
        for v in metrics.iter_mut() {
            *v -= min;
        }
    }
}

/// Initial metric for states other than 0: one more than the largest
/// possible true-path metric over the first `m + 1` steps, so a start from
/// an unreachable state can never win, without risking overflow.
fn unreachable_start_penalty(trellis: &Trellis, q: u32) -> u32 {
    (trellis.symbol_bits() as u32) * (q - 1) * (trellis.memory() as u32 + 1) + 1
}

/// Sums branch metrics along the path that `inputs` drives through the
/// trellis. The caller guarantees `received.len() == n * inputs.len()`.
fn walk_metric(inputs: &[Bit], received: &[Level], trellis: &Trellis, q: u32) -> u64 {
    let n = trellis.symbol_bits();
    let mut state = 0usize;
    let mut total = 0u64;
    for (&bit, chunk) in inputs.iter().zip(received.chunks_exact(n)) {
        total += u64::from(branch_metric_unchecked(trellis.output(state, bit), chunk, q));
        state = trellis.next_state(state, bit);
    }
    total
}

/// Viterbi-decodes one frame of quantized symbols.
///
/// Metrics start at zero for state 0 and at a penalty for every other
/// state; each symbol triggers one ACS step followed by normalization.
/// Traceback starts from state 0 in terminated mode, otherwise from the
/// minimum-metric end state (end-state ties resolved with the same policy
/// semantics: zero-oriented picks the smallest index, one-oriented the
/// largest, random a uniform draw).
pub fn decode_block<R: Rng + ?Sized>(
    received: &[Level],
    trellis: &Trellis,
    cfg: &DecoderConfig,
    tie_rng: &mut R,
) -> Result<DecodeOutcome, DecodeError> {
    cfg.validate()?;
    let q = cfg.q_levels;
    let n = trellis.symbol_bits();
    let m = trellis.memory();
    if !received.len().is_multiple_of(n) {
        return Err(DecodeError::LengthNotMultiple { len: received.len(), n });
    }
    let steps = received.len() / n;
    let min_steps = if cfg.terminated { m + 1 } else { 1 };
    if steps < min_steps {
        return Err(DecodeError::FrameTooShort { steps, min: min_steps });
    }
    for &level in received {
        if u32::from(level) >= q {
            return Err(DecodeError::LevelOutOfRange { level, q });
        }
    }

    let num_states = trellis.num_states();
    let mut prev = StateMetrics::frame_start(num_states, unreachable_start_penalty(trellis, q))
        .as_slice()
        .to_vec();
    let mut next = Vec::with_capacity(num_states);
    let mut step_survivors = Vec::with_capacity(num_states);
    let mut survivors: Vec<SurvivorChoice> = Vec::with_capacity(steps * num_states);
    let mut equal_count = 0u64;
    for chunk in received.chunks_exact(n) {
        equal_count += acs_step_core(
            &prev,
            chunk,
            trellis,
            q,
            cfg.policy,
            tie_rng,
            &mut next,
            &mut step_survivors,
        );
        normalize_in_place(&mut next);
        survivors.extend_from_slice(&step_survivors);
        std::mem::swap(&mut prev, &mut next);
    }
    let compare_count = (steps as u64) * (num_states as u64);

    let end_state = if cfg.terminated {
        0
    } else {
        let min = prev.iter().copied().min().unwrap();
        let tied: Vec<usize> = (0..num_states).filter(|&s| prev[s] == min).collect();
        match cfg.policy {
            TieBreakPolicy::ZeroOriented => tied[0],
            TieBreakPolicy::OneOriented => *tied.last().unwrap(),
            TieBreakPolicy::Random => tied[tie_rng.gen_range(0..tied.len())],
        }
    };

    let mut path_bits = vec![0 as Bit; steps];
    let mut state = end_state;
    for t in (0..steps).rev() {
        path_bits[t] = trellis.input_bit(state);
        let choice = survivors[t * num_states + state];
        state = trellis.predecessors(state)[choice.index()];
    }

    let final_metric = walk_metric(&path_bits, received, trellis, q);
    if cfg.terminated {
        path_bits.truncate(steps - m);
    }
    Ok(DecodeOutcome {
        bits: path_bits,
        final_metric,
        compare_count,
        equal_count,
    })
}

/// Re-walks the trellis along `message` and sums branch metrics against
/// `received`. Accepts either a bare message (`received` covers exactly
/// `message.len()` symbols) or a terminated frame (`m` extra tail symbols;
/// zero tail bits are appended internally).
pub fn recompute_path_metric(
    message: &[Bit],
    received: &[Level],
    trellis: &Trellis,
    q: u32,
) -> Result<u64, DecodeError> {
    validate_q(q)?;
    for &level in received {
        if u32::from(level) >= q {
            return Err(DecodeError::LevelOutOfRange { level, q });
        }
    }
    let n = trellis.symbol_bits();
    let m = trellis.memory();
    if received.len() == n * message.len() {
        Ok(walk_metric(message, received, trellis, q))
    } else if received.len() == n * (message.len() + m) {
        let mut inputs = Vec::with_capacity(message.len() + m);
        inputs.extend_from_slice(message);
        inputs.resize(message.len() + m, 0);
        Ok(walk_metric(&inputs, received, trellis, q))
    } else {
        Err(DecodeError::LengthMismatch {
            message: message.len(),
            received: received.len(),
        })
    }
}

/// Everything the exhaustive search learned about one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlOutcome {
    /// The first minimum-metric message in enumeration order.
    pub bits: Vec<Bit>,
    /// The minimum path metric over all messages.
    pub metric: u64,
    argmin: Vec<Vec<Bit>>,
}

impl MlOutcome {
    /// Number of messages attaining the minimum metric.
    pub fn argmin_set_size(&self) -> usize {
        self.argmin.len()
    }

    /// All messages attaining the minimum metric, in enumeration order.
    pub fn argmin_set(&self) -> &[Vec<Bit>] {
        &self.argmin
    }

    pub fn argmin_contains(&self, bits: &[Bit]) -> bool {
        self.argmin.iter().any(|b| b == bits)
    }
}

/// Exhaustive maximum-likelihood decoder: enumerates all `2^msg_len`
/// messages and keeps every metric minimizer. Test oracle only; refuses
/// lengths past [`MAX_BRUTEFORCE_LEN`].
pub fn ml_decode_bruteforce(
    received: &[Level],
    trellis: &Trellis,
    q: u32,
    msg_len: usize,
    terminated: bool,
) -> Result<MlOutcome, DecodeError> {
    validate_q(q)?;
    if msg_len == 0 || msg_len > MAX_BRUTEFORCE_LEN {
        return Err(DecodeError::MessageTooLong(msg_len));
    }
    let n = trellis.symbol_bits();
    let m = trellis.memory();
    let steps = msg_len + if terminated { m } else { 0 };
    if received.len() != n * steps {
        return Err(DecodeError::LengthMismatch {
            message: msg_len,
            received: received.len(),
        });
    }
    for &level in received {
        if u32::from(level) >= q {
            return Err(DecodeError::LevelOutOfRange { level, q });
        }
    }
    let mut best_metric = u64::MAX;
    let mut argmin: Vec<Vec<Bit>> = Vec::new();
    let mut inputs = vec![0 as Bit; steps];
    for candidate in 0u32..(1u32 << msg_len) {
        for (i, slot) in inputs[..msg_len].iter_mut().enumerate() {
            *slot = ((candidate >> i) & 1) as Bit;
        }
        let metric = walk_metric(&inputs, received, trellis, q);
        if metric < best_metric {
            best_metric = metric;
            argmin.clear();
            argmin.push(inputs[..msg_len].to_vec());
        } else if metric == best_metric {
            argmin.push(inputs[..msg_len].to_vec());
        }
    }
    Ok(MlOutcome {
        bits: argmin[0].clone(),
        metric: best_metric,
        argmin,
    })
}
