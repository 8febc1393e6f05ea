//! Burst construction: frequency, legacy SCH, EC-SCH and filler bursts.

use num_complex::Complex64;
use rand::Rng;

use super::conv::conv_encode;
use super::crc::{crc10_attach, crc10_check};
use super::gmsk::gmsk_modulate_into;
use crate::params::{
    BURST_LEN, CYCLIC_SHIFT_STEP, ECSCH_BLOCK_BITS, ECSCH_CODED_BITS, ECSCH_INFO_BITS,
    ECSCH_TRAINING, SCH_TRAINING, SYNC_DATA_HALF, TAIL_LEN, TRAINING_LEN, TRAINING_START,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BurstKind {
    Fb,
    Sch,
    Ecsch,
    Filler,
}

/// Modulated burst: `BURST_LEN` active samples followed by the guard ramp.
#[derive(Debug, Clone, PartialEq)]
pub struct Burst {
    pub kind: BurstKind,
    pub symbols: Vec<Complex64>,
    /// Start of the training sequence, for bursts that carry one.
    pub train_start: Option<usize>,
}

/// Guard samples keep decaying amplitude over this many samples, then zero.
const RAMP_LEN: usize = 2;

/// Contents of one EC-SCH block: 25 information bits, carried with their
/// CRC-10.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EcschPayload {
    pub info_bits: [u8; ECSCH_INFO_BITS],
}

/// Bits of the reduced frame number inside the information field.
pub const REDUCED_FN_BITS: usize = 19;
pub const CELL_ID_BITS: usize = ECSCH_INFO_BITS - REDUCED_FN_BITS;

impl EcschPayload {
    pub fn new(reduced_fn: u32, cell_id: u8) -> Self {
        let mut info_bits = [0u8; ECSCH_INFO_BITS];
        for (i, b) in info_bits[..CELL_ID_BITS].iter_mut().enumerate() {
            *b = (cell_id >> (CELL_ID_BITS - 1 - i)) & 1;
        }
        for (i, b) in info_bits[CELL_ID_BITS..].iter_mut().enumerate() {
            *b = ((reduced_fn >> (REDUCED_FN_BITS - 1 - i)) & 1) as u8;
        }
        Self { info_bits }
    }

    pub fn from_bits(info_bits: [u8; ECSCH_INFO_BITS]) -> Self {
        Self { info_bits }
    }

    pub fn reduced_fn(&self) -> u32 {
        self.info_bits[CELL_ID_BITS..]
            .iter()
            .fold(0, |acc, &b| (acc << 1) | u32::from(b))
    }

    pub fn cell_id(&self) -> u8 {
        self.info_bits[..CELL_ID_BITS]
            .iter()
            .fold(0, |acc, &b| (acc << 1) | b)
    }

    pub fn block(&self) -> [u8; ECSCH_BLOCK_BITS] {
        crc10_attach(&self.info_bits)
    }

    /// Recovers the payload from a decoded block whose CRC checks.
    pub fn from_block(block: &[u8; ECSCH_BLOCK_BITS]) -> Option<Self> {
        crc10_check(block).then(|| {
            let mut info_bits = [0u8; ECSCH_INFO_BITS];
            info_bits.copy_from_slice(&block[..ECSCH_INFO_BITS]);
            Self { info_bits }
        })
    }

    pub fn coded_bits(&self) -> [u8; ECSCH_CODED_BITS] {
        conv_encode(&self.block())
    }
}

/// Rotates coded bits left by `CYCLIC_SHIFT_STEP · mf_index` positions.
pub fn cyclic_shift_apply(
    coded: &[u8; ECSCH_CODED_BITS],
    mf_index: usize,
) -> [u8; ECSCH_CODED_BITS] {
    let mut out = *coded;
    out.rotate_left(shift_amount(mf_index));
    out
}

pub fn cyclic_shift_invert<T: Copy>(
    shifted: &[T; ECSCH_CODED_BITS],
    mf_index: usize,
) -> [T; ECSCH_CODED_BITS] {
    let mut out = *shifted;
    out.rotate_right(shift_amount(mf_index));
    out
}

fn shift_amount(mf_index: usize) -> usize {
    (CYCLIC_SHIFT_STEP * (mf_index % 4)) % ECSCH_CODED_BITS
}

/// Lays out a synchronization-type burst: tails, data, training, data, tails.
fn sync_burst_bits(first: &[u8], training: &[u8; TRAINING_LEN], second: &[u8]) -> [u8; BURST_LEN] {
    debug_assert_eq!(first.len(), SYNC_DATA_HALF);
    debug_assert_eq!(second.len(), SYNC_DATA_HALF);
    let mut bits = [0u8; BURST_LEN];
    bits[TAIL_LEN..TRAINING_START].copy_from_slice(first);
    bits[TRAINING_START..TRAINING_START + TRAINING_LEN].copy_from_slice(training);
    let second_start = TRAINING_START + TRAINING_LEN;
    bits[second_start..second_start + SYNC_DATA_HALF].copy_from_slice(second);
    bits
}

/// Bits of an EC-SCH burst for the given multiframe index in the period.
pub fn ecsch_burst_bits(payload: &EcschPayload, mf_index: usize) -> [u8; BURST_LEN] {
    let coded = cyclic_shift_apply(&payload.coded_bits(), mf_index);
    sync_burst_bits(
        &coded[..SYNC_DATA_HALF],
        &ECSCH_TRAINING,
        &coded[SYNC_DATA_HALF..],
    )
}

fn modulate_burst(kind: BurstKind, bits: &[u8], guard: usize, train_start: Option<usize>) -> Burst {
    let mut symbols = Vec::with_capacity(bits.len() + guard);
    gmsk_modulate_into(bits, guard, 0.0, &mut symbols);
    for (g, s) in symbols[bits.len()..].iter_mut().enumerate() {
        let amp = 1.0 - (g + 1) as f64 / (RAMP_LEN + 1) as f64;
        *s *= amp.max(0.0);
    }
    Burst {
        kind,
        symbols,
        train_start,
    }
}

/// Frequency burst: 148 zero bits, a pure tone at a quarter of the sample rate.
pub fn gen_fb_burst(guard: usize) -> Burst {
    modulate_burst(BurstKind::Fb, &[0u8; BURST_LEN], guard, None)
}

pub fn gen_ecsch_burst(payload: &EcschPayload, mf_index: usize, guard: usize) -> Burst {
    modulate_burst(
        BurstKind::Ecsch,
        &ecsch_burst_bits(payload, mf_index),
        guard,
        Some(TRAINING_START),
    )
}

/// Legacy SCH placeholder with random content around the SCH training sequence.
pub fn gen_sch_burst<R: Rng + ?Sized>(rng: &mut R, guard: usize) -> Burst {
    let first: [u8; SYNC_DATA_HALF] = std::array::from_fn(|_| rng.random_range(0..2));
    let second: [u8; SYNC_DATA_HALF] = std::array::from_fn(|_| rng.random_range(0..2));
    modulate_burst(
        BurstKind::Sch,
        &sync_burst_bits(&first, &SCH_TRAINING, &second),
        guard,
        Some(TRAINING_START),
    )
}

/// Normal burst with random data.
pub fn gen_filler_burst<R: Rng + ?Sized>(rng: &mut R, guard: usize) -> Burst {
    let mut bits = [0u8; BURST_LEN];
    let mut word = 0u64;
    for (i, b) in bits[TAIL_LEN..BURST_LEN - TAIL_LEN].iter_mut().enumerate() {
        if i % 64 == 0 {
            word = rng.random();
        }
        *b = ((word >> (i % 64)) & 1) as u8;
    }
    modulate_burst(BurstKind::Filler, &bits, guard, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::FFT_LEN;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn naive_dft_power(x: &[Complex64], n: usize, bin: usize) -> f64 {
        x.iter()
            .enumerate()
            .map(|(k, &s)| {
                s * Complex64::from_polar(
                    1.0,
                    -2.0 * std::f64::consts::PI * (bin * k) as f64 / n as f64,
                )
            })
            .sum::<Complex64>()
            .norm_sqr()
    }

    #[test]
    fn fb_has_unit_magnitude_and_bin_quarter_peak() {
        let fb = gen_fb_burst(9);
        let active = &fb.symbols[..BURST_LEN];
        assert!(active.iter().all(|s| (s.norm() - 1.0).abs() < 1e-12));
        let powers: Vec<f64> = (0..FFT_LEN)
            .map(|b| naive_dft_power(active, FFT_LEN, b))
            .collect();
        let argmax = (0..FFT_LEN)
            .max_by(|&a, &b| powers[a].total_cmp(&powers[b]))
            .unwrap();
        assert_eq!(argmax, FFT_LEN / 4);
    }

    #[test]
    fn guard_ramps_to_zero() {
        let fb = gen_fb_burst(9);
        assert_eq!(fb.symbols.len(), BURST_LEN + 9);
        assert!(fb.symbols[BURST_LEN + RAMP_LEN..]
            .iter()
            .all(|s| s.norm() == 0.0));
        assert!(fb.symbols[BURST_LEN].norm() < 1.0 && fb.symbols[BURST_LEN].norm() > 0.0);
    }

    #[test]
    fn payload_fields_round_trip() {
        let p = EcschPayload::new(0x5_4321, 0x2a);
        assert_eq!(p.reduced_fn(), 0x5_4321);
        assert_eq!(p.cell_id(), 0x2a);
        assert_eq!(EcschPayload::from_block(&p.block()), Some(p));
    }

    #[test]
    fn cyclic_shift_identity_and_inverse() {
        let p = EcschPayload::new(1234, 7);
        let coded = p.coded_bits();
        assert_eq!(cyclic_shift_apply(&coded, 0), coded);
        for m in 0..4 {
            assert_eq!(
                cyclic_shift_invert(&cyclic_shift_apply(&coded, m), m),
                coded
            );
        }
    }

    #[test]
    fn four_shifts_are_pairwise_distinct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = EcschPayload::new(rng.random_range(0..1 << 19), rng.random_range(0..64));
            let coded = p.coded_bits();
            let shifted: Vec<_> = (0..4).map(|m| cyclic_shift_apply(&coded, m)).collect();
            for a in 0..4 {
                for b in a + 1..4 {
                    assert_ne!(shifted[a], shifted[b]);
                }
            }
        }
    }

    #[test]
    fn ecsch_bursts_deterministic_and_share_training() {
        let p = EcschPayload::new(99, 3);
        let a = gen_ecsch_burst(&p, 2, 8);
        assert_eq!(a, gen_ecsch_burst(&p, 2, 8));
        let b0 = ecsch_burst_bits(&p, 0);
        let b1 = ecsch_burst_bits(&p, 1);
        let train = TRAINING_START..TRAINING_START + TRAINING_LEN;
        assert_eq!(b0[train.clone()], b1[train.clone()]);
        assert_ne!(b0, b1);
        // only data halves differ
        for i in 0..BURST_LEN {
            if b0[i] != b1[i] {
                assert!(!train.contains(&i) && (TAIL_LEN..BURST_LEN - TAIL_LEN).contains(&i));
            }
        }
    }
}
