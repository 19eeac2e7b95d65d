//! Regression check over the checked-in golden decode vectors.
//!
//! Regenerate the data file with `UPDATE_GOLDEN=1 cargo test --test
//! golden_vectors` after an intentional decoder change, and review the
//! diff; an unintentional diff here means the decoder's observable
//! behavior moved.

use std::path::PathBuf;

use fec_lab::codec::{build_trellis, encode, GeneratorSet};
use fec_lab::golden::{parse_golden, render_golden, GoldenVector};
use fec_lab::harness::standard_codes;
use fec_lab::link::hard_levels;
use fec_lab::viterbi::{decode_block, DecoderConfig, TieBreakPolicy};
use fec_lab::{Bit, Level};
use rand::rngs::mock::StepRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const MSG_LEN: usize = 12;

fn data_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/golden_vectors.txt")
}

/// Regenerates the data file once per process when UPDATE_GOLDEN is set,
/// before any test reads it.
fn maybe_update() {
    static UPDATED: std::sync::OnceLock<()> = std::sync::OnceLock::new();
    UPDATED.get_or_init(|| {
        if std::env::var_os("UPDATE_GOLDEN").is_some() {
            std::fs::write(data_path(), render_golden(&build_vectors())).unwrap();
        }
    });
}

/// Freezes the current decoder output for a frame into a vector.
fn freeze(
    code: &GeneratorSet,
    q_levels: u32,
    policy: TieBreakPolicy,
    received: Vec<Level>,
) -> GoldenVector {
    let trellis = build_trellis(code);
    let cfg = DecoderConfig { q_levels, policy, terminated: true };
    let out = decode_block(&received, &trellis, &cfg, &mut StepRng::new(0, 0))
        .expect("generator produces valid frames");
    GoldenVector {
        code: code.clone(),
        q_levels,
        policy,
        received,
        expected_bits: out.bits,
        expected_metric: out.final_metric,
    }
}

/// Deterministic vector recipe: per code, two hard frames with two flipped
/// bits each (zero- and one-oriented) and one perturbed soft frame. The
/// two smallest codes also get a random-policy record on a tie-free frame;
/// larger trellises run too many compares per frame for tie-free receptions
/// to exist at realistic quantizer widths.
fn build_vectors() -> Vec<GoldenVector> {
    let mut vectors = Vec::new();
    for (ci, code) in standard_codes().iter().enumerate() {
        let mut rng = ChaCha12Rng::seed_from_u64(9000 + ci as u64);
        let msg: Vec<Bit> = (0..MSG_LEN).map(|_| rng.gen_range(0..2)).collect();
        let coded = encode(&msg, code, true).unwrap();

        for policy in [TieBreakPolicy::ZeroOriented, TieBreakPolicy::OneOriented] {
            let mut levels = hard_levels(&coded);
            let first = rng.gen_range(0..levels.len());
            let mut second = rng.gen_range(0..levels.len());
            if second == first {
                second = (first + 1) % levels.len();
            }
            levels[first] ^= 1;
            levels[second] ^= 1;
            vectors.push(freeze(code, 2, policy, levels));
        }

        let mut soft: Vec<Level> = coded.iter().map(|&b| if b == 0 { 7 } else { 0 }).collect();
        for _ in 0..4 {
            let i = rng.gen_range(0..soft.len());
            soft[i] = rng.gen_range(0..8) as Level;
        }
        vectors.push(freeze(code, 8, TieBreakPolicy::ZeroOriented, soft));
    }

    for (ci, q) in [(0usize, 16u32), (1, 256)] {
        let code = &standard_codes()[ci];
        let trellis = build_trellis(code);
        let levels = (0..4000u64)
            .find_map(|attempt| {
                let mut arng = ChaCha12Rng::seed_from_u64(77_000 + 1000 * ci as u64 + attempt);
                let frame_symbols = MSG_LEN + code.memory();
                let levels: Vec<Level> = (0..code.num_outputs() * frame_symbols)
                    .map(|_| arng.gen_range(0..q) as Level)
                    .collect();
                let cfg = DecoderConfig {
                    q_levels: q,
                    policy: TieBreakPolicy::ZeroOriented,
                    terminated: true,
                };
                let out = decode_block(&levels, &trellis, &cfg, &mut StepRng::new(0, 0)).unwrap();
                (out.equal_count == 0).then_some(levels)
            })
            .expect("a tie-free frame exists in the search budget");
        vectors.push(freeze(code, q, TieBreakPolicy::Random, levels));
    }
    vectors
}

#[test]
fn golden_vectors_verify() {
    maybe_update();
    let text = std::fs::read_to_string(data_path()).expect("golden vector file present");
    let vectors = parse_golden(&text).unwrap();
    assert_eq!(vectors.len(), 17, "5 codes x 3 records plus 2 random-policy records");
    for policy in TieBreakPolicy::ALL {
        assert!(vectors.iter().any(|v| v.policy == policy));
    }
    assert!(vectors.iter().any(|v| v.q_levels == 2));
    assert!(vectors.iter().any(|v| v.q_levels == 8));
    for (i, v) in vectors.iter().enumerate() {
        if let Err(e) = v.verify() {
            panic!("golden vector {i} ({} Q={} {}): {e}", v.code, v.q_levels, v.policy);
        }
    }
}

#[test]
fn golden_file_is_in_canonical_form() {
    maybe_update();
    let text = std::fs::read_to_string(data_path()).expect("golden vector file present");
    let vectors = parse_golden(&text).unwrap();
    assert_eq!(render_golden(&vectors), text);
}

#[test]
fn golden_file_matches_generator_recipe() {
    maybe_update();
    let text = std::fs::read_to_string(data_path()).expect("golden vector file present");
    assert_eq!(
        text,
        render_golden(&build_vectors()),
        "regenerate with UPDATE_GOLDEN=1 and review the diff"
    );
}
