//! EC-SCH reception: soft demodulation, chase combining, Viterbi decoding
//! and the CRC check.

pub mod combine;
pub mod demod;
pub mod viterbi;

use serde::{Deserialize, Serialize};

use crate::params::{ECSCH_BLOCK_BITS, ECSCH_MFS_PER_PERIOD, ECSCH_REPS_PER_MF};
use crate::signal::burst::EcschPayload;

pub use combine::{chase_combine, new_buffers, LlrBuffer};
pub use demod::{equalize, ls_channel_estimate, soft_demod, ChannelEstimate, ChannelStats};
pub use viterbi::viterbi_decode;

/// First repetition count at which decoding is attempted.
pub const FIRST_ATTEMPT_REPS: usize = 4 * ECSCH_REPS_PER_MF;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptSchedule {
    /// After 7N repetitions, N ≥ 4.
    #[default]
    Proposed,
    /// After every repetition; used to show the false-positive cost.
    EveryRep,
}

impl AttemptSchedule {
    pub fn should_attempt(self, reps_seen: usize) -> bool {
        match self {
            AttemptSchedule::Proposed => attempt_schedule(reps_seen),
            AttemptSchedule::EveryRep => reps_seen >= 1,
        }
    }
}

pub fn attempt_schedule(reps_seen: usize) -> bool {
    reps_seen >= FIRST_ATTEMPT_REPS && reps_seen.is_multiple_of(ECSCH_REPS_PER_MF)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeStatus {
    Success,
    CrcFail,
    /// CRC passed with the wrong content; assigned by scoring only.
    FalsePositive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeResult {
    pub status: DecodeStatus,
    pub payload: Option<EcschPayload>,
    pub reps_used: usize,
    pub shift_chosen: Option<usize>,
    pub metric: f64,
}

/// Decodes every hypothesis buffer; among CRC passes the largest path
/// metric wins.
pub fn decode_pipeline(buffers: &[LlrBuffer; ECSCH_MFS_PER_PERIOD]) -> DecodeResult {
    let mut best: Option<(EcschPayload, &LlrBuffer, f64)> = None;
    for buf in buffers.iter().filter(|b| b.reps > 0) {
        let (block, metric): ([u8; ECSCH_BLOCK_BITS], f64) = viterbi_decode(&buf.llrs);
        if let Some(p) = EcschPayload::from_block(&block) {
            if best.as_ref().is_none_or(|b| metric > b.2) {
                best = Some((p, buf, metric));
            }
        }
    }
    match best {
        Some((p, buf, metric)) => DecodeResult {
            status: DecodeStatus::Success,
            payload: Some(p),
            reps_used: buf.reps,
            shift_chosen: Some(buf.shift_hypothesis),
            metric,
        },
        None => DecodeResult {
            status: DecodeStatus::CrcFail,
            payload: None,
            reps_used: buffers.iter().map(|b| b.reps).max().unwrap_or(0),
            shift_chosen: None,
            metric: f64::NEG_INFINITY,
        },
    }
}

/// Labels a successful decode whose payload differs from the truth.
pub fn score(result: &DecodeResult, truth: &EcschPayload) -> DecodeStatus {
    match (result.status, result.payload) {
        (DecodeStatus::Success, Some(p)) if p != *truth => DecodeStatus::FalsePositive,
        (s, _) => s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::burst::{cyclic_shift_apply, gen_ecsch_burst};
    use crate::signal::gmsk::derotate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn schedule_examples() {
        assert!(!attempt_schedule(7));
        assert!(attempt_schedule(28));
        assert!(!attempt_schedule(30));
        assert!(attempt_schedule(35));
        assert!(AttemptSchedule::EveryRep.should_attempt(3));
    }

    #[test]
    fn noiseless_burst_loopback_for_each_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for first_shift in 0..4 {
            let p = EcschPayload::new(rng.random_range(0..1 << 19), rng.random_range(0..64));
            let mut bufs = new_buffers();
            let burst = gen_ecsch_burst(&p, first_shift, 8);
            let l = soft_demod(&derotate(&burst.symbols, 0), 0).unwrap();
            chase_combine(&mut bufs, &l, 0);
            let r = decode_pipeline(&bufs);
            assert_eq!(r.status, DecodeStatus::Success);
            assert_eq!(r.payload, Some(p));
            assert_eq!(r.shift_chosen, Some(first_shift));
            assert_eq!(score(&r, &p), DecodeStatus::Success);
            assert_eq!(
                score(&r, &EcschPayload::new(0, 0)),
                DecodeStatus::FalsePositive
            );
        }
    }

    #[test]
    fn hard_llrs_across_mfs() {
        let p = EcschPayload::new(31337, 42);
        let mut bufs = new_buffers();
        for mf in 0..3 {
            let tx = cyclic_shift_apply(&p.coded_bits(), (mf + 1) % 4);
            let l = tx.map(|c| if c == 0 { 1.0 } else { -1.0 });
            chase_combine(&mut bufs, &l, mf);
        }
        let r = decode_pipeline(&bufs);
        assert_eq!(r.payload, Some(p));
        assert_eq!(r.shift_chosen, Some(1));
        assert_eq!(r.reps_used, 3);
    }
}
